use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::rng::{replica_rng, SimRng};
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Time integration of the particle system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    /// Every event at its exact exponential time.
    Exact,
    /// Diffuse once per window, then apply the window's Poisson number of
    /// events against frozen positions. Biased by O(dt); for profiling only.
    FrozenBatch { dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub dim: usize,
    pub population: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Observation times, strictly increasing and nonnegative.
    pub record: Vec<f64>,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dimension d must be at least 1".into()));
        }
        if self.population == 0 {
            return Err(Error::Config("population N must be at least 1".into()));
        }
        if let Mode::FrozenBatch { dt } = self.mode {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("frozen-batch dt must be positive, got {dt}")));
            }
        }
        if self.record.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("observation times must be finite and nonnegative".into()));
        }
        if self.record.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("observation times must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// One branching event: `removed` takes the position of `branching`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub branching: usize,
    pub removed: usize,
}

/// Adds independent `N(0, 2 dt)` increments to every coordinate and returns
/// the label of the furthest particle afterwards (lowest label on ties).
fn diffuse_and_argmax(positions: &mut [f64], dim: usize, dt: f64, rng: &mut SimRng) -> usize {
    let sd = (2.0 * dt).sqrt();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, p) in positions.chunks_exact_mut(dim).enumerate() {
        let mut sq = 0.0;
        for c in p.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
            sq += *c * *c;
        }
        if sq > best {
            best = sq;
            arg = k;
        }
    }
    arg
}

fn argmax_norm(positions: &[f64], dim: usize) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, p) in positions.chunks_exact(dim).enumerate() {
        let sq: f64 = p.iter().map(|c| c * c).sum();
        if sq > best {
            best = sq;
            arg = k;
        }
    }
    arg
}

fn diffuse(positions: &mut [f64], dt: f64, rng: &mut SimRng) {
    let sd = (2.0 * dt).sqrt();
    for c in positions.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *c += sd * z;
    }
}

fn check_finite(positions: &[f64], event: u64) -> Result<()> {
    if positions.iter().any(|c| !c.is_finite()) {
        return Err(Error::Simulation {
            event,
            detail: "particle position is not finite".into(),
        });
    }
    Ok(())
}

/// Evolves the N-BBM for `duration`. Events are appended to `log` when given.
pub fn advance_nbbm(
    state: &ParticleEnsemble,
    duration: f64,
    mode: Mode,
    rng: &mut SimRng,
    mut log: Option<&mut Vec<Event>>,
) -> Result<ParticleEnsemble> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::domain(format!("duration must be finite and >= 0, got {duration}")));
    }
    let dim = state.dim();
    let n = state.population();
    let mut pos = state.positions().to_vec();
    let start = state.clock();
    let mut events: u64 = 0;
    match mode {
        Mode::Exact => {
            let clock = Exp::new(n as f64).expect("positive rate");
            let mut t = 0.0;
            loop {
                let gap: f64 = clock.sample(rng);
                if t + gap >= duration {
                    diffuse(&mut pos, duration - t, rng);
                    break;
                }
                t += gap;
                let far = diffuse_and_argmax(&mut pos, dim, gap, rng);
                let k = rng.gen_range(0..n);
                if far != k {
                    pos.copy_within(k * dim..(k + 1) * dim, far * dim);
                }
                events += 1;
                if let Some(log) = log.as_deref_mut() {
                    log.push(Event {
                        time: start + t,
                        branching: k,
                        removed: far,
                    });
                }
                if events.is_multiple_of(4096) {
                    check_finite(&pos, events)?;
                }
            }
        }
        Mode::FrozenBatch { dt } => {
            let mut t = 0.0;
            while t < duration {
                let h = dt.min(duration - t);
                diffuse(&mut pos, h, rng);
                t += h;
                let mean = n as f64 * h;
                let count = if mean > 0.0 {
                    Poisson::new(mean).expect("positive mean").sample(rng) as u64
                } else {
                    0
                };
                for _ in 0..count {
                    let far = argmax_norm(&pos, dim);
                    let k = rng.gen_range(0..n);
                    if far != k {
                        pos.copy_within(k * dim..(k + 1) * dim, far * dim);
                    }
                    events += 1;
                    if let Some(log) = log.as_deref_mut() {
                        log.push(Event {
                            time: start + t,
                            branching: k,
                            removed: far,
                        });
                    }
                }
            }
        }
    }
    check_finite(&pos, events)?;
    Ok(ParticleEnsemble::from_raw(dim, pos, start + duration))
}

/// Snapshots of one trajectory at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct NbbmRun {
    pub snapshots: Vec<ParticleEnsemble>,
    pub events: Vec<Event>,
}

/// Runs from `initial` through every observation time, using replica `replica`
/// of the parameter seed.
pub fn simulate(params: &SimParams, initial: &ParticleEnsemble, replica: u64, keep_events: bool) -> Result<NbbmRun> {
    params.validate()?;
    if initial.population() != params.population || initial.dim() != params.dim {
        return Err(Error::Config(format!(
            "initial ensemble has N={}, d={} but parameters ask for N={}, d={}",
            initial.population(),
            initial.dim(),
            params.population,
            params.dim
        )));
    }
    let mut rng = replica_rng(params.seed, replica);
    let mut state = initial.clone();
    let mut snapshots = Vec::with_capacity(params.record.len());
    let mut events = Vec::new();
    for &t in &params.record {
        let dt = t - state.clock();
        if dt < 0.0 {
            return Err(Error::Config(format!("observation time {t} precedes the initial clock")));
        }
        state = advance_nbbm(&state, dt, params.mode, &mut rng, keep_events.then_some(&mut events))?.with_clock(t);
        snapshots.push(state.clone());
    }
    Ok(NbbmRun { snapshots, events })
}
