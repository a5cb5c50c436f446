use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use std::fmt;

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

/// Ulam–Harris label: an initial particle index followed by a path of
/// 1s and 2s; the children of `u` are `u·1` and `u·2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    root: u32,
    path: Vec<u8>,
}

impl Label {
    pub fn root(index: u32) -> Self {
        Label {
            root: index,
            path: Vec::new(),
        }
    }

    pub fn child(&self, which: u8) -> Self {
        debug_assert!(which == 1 || which == 2);
        let mut path = self.path.clone();
        path.push(which);
        Label { root: self.root, path }
    }

    pub fn generation(&self) -> usize {
        self.path.len()
    }

    pub fn is_ancestor_of(&self, other: &Label) -> bool {
        self.root == other.root && other.path.starts_with(&self.path)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for step in &self.path {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

/// Free branching Brownian motion: every particle branches at rate 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BbmForest {
    dim: usize,
    labels: Vec<Label>,
    positions: Vec<f64>,
    clock: f64,
}

impl BbmForest {
    /// One root per particle of the ensemble, labelled by its index.
    pub fn from_ensemble(e: &ParticleEnsemble) -> Self {
        BbmForest {
            dim: e.dim(),
            labels: (0..e.population() as u32).map(Label::root).collect(),
            positions: e.positions().to_vec(),
            clock: e.clock(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn population(&self) -> usize {
        self.labels.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_ensemble(&self) -> ParticleEnsemble {
        ParticleEnsemble::from_raw(self.dim, self.positions.clone(), self.clock)
    }

    fn diffuse(&mut self, dt: f64, rng: &mut SimRng) {
        let sd = (2.0 * dt).sqrt();
        for c in self.positions.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
        }
    }

    /// Splits particle `i`: it becomes `u·1` in place and `u·2` is appended.
    fn branch(&mut self, i: usize) -> usize {
        let parent = std::mem::replace(&mut self.labels[i], Label::root(0));
        self.labels[i] = parent.child(1);
        self.labels.push(parent.child(2));
        self.positions.extend_from_within(i * self.dim..(i + 1) * self.dim);
        self.labels.len() - 1
    }

    fn norm_sq(&self, i: usize) -> f64 {
        self.position(i).iter().map(|c| c * c).sum()
    }
}

/// Evolves the forest for `duration`. The superposition of the per-particle
/// rate-1 clocks is a single clock of rate equal to the population whose
/// rings pick a uniform particle.
pub fn advance_bbm(forest: &BbmForest, duration: f64, rng: &mut SimRng, cap: usize) -> Result<BbmForest> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::domain(format!("duration must be finite and >= 0, got {duration}")));
    }
    let mut f = forest.clone();
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let gap: f64 = Exp::new(f.population() as f64).expect("positive rate").sample(rng);
        if t + gap >= duration {
            f.diffuse(duration - t, rng);
            break;
        }
        t += gap;
        f.diffuse(gap, rng);
        let u = rng.gen_range(0..f.population());
        f.branch(u);
        events += 1;
        if f.population() > cap {
            return Err(Error::Resource(format!(
                "branching population exceeded the cap of {cap} after {events} events"
            )));
        }
    }
    f.clock = forest.clock + duration;
    Ok(f)
}

/// Outcome of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub times: Vec<f64>,
    /// The blue particles, in slot order: an N-BBM trajectory.
    pub nbbm: Vec<ParticleEnsemble>,
    /// Every particle of the branching process.
    pub bbm: Vec<ParticleEnsemble>,
    /// `F^N ≤ C_1 F⁺` at each observation time.
    pub domination: Vec<bool>,
    pub blue_counts: Vec<usize>,
    /// Event times at which the blue set differed from the set of particles
    /// whose ancestry never exceeded the N-BBM maximum.
    pub identity_mismatches: u64,
    pub events: u64,
}

impl CoupledRun {
    pub fn all_dominated(&self) -> bool {
        self.domination.iter().all(|&b| b)
    }
}

struct Coupling {
    forest: BbmForest,
    /// slot → particle index; the blue particles.
    slots: Vec<usize>,
    /// particle index → slot, `None` for red particles.
    slot_of: Vec<Option<usize>>,
    /// Ancestry has exceeded the N-BBM maximum at some event time.
    flagged: Vec<bool>,
}

impl Coupling {
    fn blue_ensemble(&self) -> ParticleEnsemble {
        let d = self.forest.dim;
        let mut pos = Vec::with_capacity(self.slots.len() * d);
        for &i in &self.slots {
            pos.extend_from_slice(self.forest.position(i));
        }
        ParticleEnsemble::from_raw(d, pos, self.forest.clock)
    }

    fn event(&mut self, u: usize) {
        let child = self.forest.branch(u);
        self.slot_of.push(None);
        self.flagged.push(self.flagged[u]);
        if let Some(k) = self.slot_of[u] {
            let mut far = 0;
            let mut best = f64::NEG_INFINITY;
            for (s, &i) in self.slots.iter().enumerate() {
                let r = self.forest.norm_sq(i);
                if r > best {
                    best = r;
                    far = s;
                }
            }
            if far != k {
                let old = self.slots[far];
                self.slot_of[old] = None;
                self.slots[far] = child;
                self.slot_of[child] = Some(far);
            }
        }
    }

    /// Flags particles beyond the current maximum and reports whether the
    /// unflagged set coincides with the blue set. When more than N particles
    /// remain, the surplus sits at the maximum (both children of the furthest
    /// particle) and the lexicographically largest labels there are flagged.
    fn reconstruct(&mut self) -> bool {
        let max = self
            .slots
            .iter()
            .map(|&i| self.forest.norm_sq(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut at_max = Vec::new();
        let mut unflagged = 0usize;
        for i in 0..self.forest.population() {
            if self.flagged[i] {
                continue;
            }
            let r = self.forest.norm_sq(i);
            if r > max {
                self.flagged[i] = true;
            } else {
                unflagged += 1;
                if r == max {
                    at_max.push(i);
                }
            }
        }
        let surplus = unflagged.saturating_sub(self.slots.len());
        at_max.sort_by(|&a, &b| self.forest.labels[b].cmp(&self.forest.labels[a]));
        for &i in at_max.iter().take(surplus) {
            self.flagged[i] = true;
        }
        (0..self.forest.population()).all(|i| self.flagged[i] == self.slot_of[i].is_none())
    }
}

/// `F^N ≤ min(1, F⁺)` with both scaled by `N`, compared by exact counts.
/// Both sides are step functions, so it is enough to test just past each
/// blue norm.
fn dominated(blue: &ParticleEnsemble, all: &ParticleEnsemble) -> bool {
    let n = blue.population();
    let mut b = blue.norms();
    let mut a = all.norms();
    b.sort_by(f64::total_cmp);
    a.sort_by(f64::total_cmp);
    let mut j = 0;
    for (i, &r) in b.iter().enumerate() {
        let blue_le = b[i..].partition_point(|&x| x <= r) + i;
        while j < a.len() && a[j] <= r {
            j += 1;
        }
        if blue_le > n.min(j) {
            return false;
        }
    }
    true
}

/// Runs the red/blue coupling from `initial`: one branching process whose
/// blue subpopulation is an N-BBM.
pub fn coupled_run(initial: &ParticleEnsemble, observe: &[f64], rng: &mut SimRng, cap: usize) -> Result<CoupledRun> {
    if observe.windows(2).any(|w| w[0] >= w[1]) || observe.iter().any(|&t| !(t >= initial.clock())) {
        return Err(Error::Config("observation times must be increasing and not before the start".into()));
    }
    let n = initial.population();
    let forest = BbmForest::from_ensemble(initial);
    let mut c = Coupling {
        slots: (0..n).collect(),
        slot_of: (0..n).map(Some).collect(),
        flagged: vec![false; n],
        forest,
    };
    let mut out = CoupledRun {
        times: Vec::new(),
        nbbm: Vec::new(),
        bbm: Vec::new(),
        domination: Vec::new(),
        blue_counts: Vec::new(),
        identity_mismatches: 0,
        events: 0,
    };
    for &target in observe {
        loop {
            let pop = c.forest.population();
            let gap: f64 = Exp::new(pop as f64).expect("positive rate").sample(rng);
            let now = c.forest.clock;
            if now + gap >= target {
                c.forest.diffuse(target - now, rng);
                c.forest.clock = target;
                break;
            }
            c.forest.diffuse(gap, rng);
            c.forest.clock = now + gap;
            let u = rng.gen_range(0..pop);
            c.event(u);
            out.events += 1;
            if !c.reconstruct() {
                out.identity_mismatches += 1;
            }
            if c.forest.population() > cap {
                return Err(Error::Resource(format!(
                    "branching population exceeded the cap of {cap} after {} events",
                    out.events
                )));
            }
        }
        let blue = c.blue_ensemble();
        let all = c.forest.to_ensemble();
        out.domination.push(dominated(&blue, &all));
        out.blue_counts.push(c.slot_of.iter().filter(|s| s.is_some()).count());
        out.times.push(target);
        out.nbbm.push(blue);
        out.bbm.push(all);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_ulam_harris() {
        let u = Label::root(3);
        let a = u.child(1);
        let b = u.child(2);
        assert!(a < b);
        assert!(u.is_ancestor_of(&b.child(1)));
        assert!(!a.is_ancestor_of(&b));
        assert_eq!(b.child(1).to_string(), "3.2.1");
        assert_eq!(b.child(1).generation(), 2);
    }

    #[test]
    fn domination_counts() {
        let blue = ParticleEnsemble::from_points(1, &[vec![0.5], vec![1.0]]).unwrap();
        let all = ParticleEnsemble::from_points(1, &[vec![0.5], vec![1.0], vec![2.0]]).unwrap();
        assert!(dominated(&blue, &all));
        let fake = ParticleEnsemble::from_points(1, &[vec![1.5], vec![2.5]]).unwrap();
        assert!(!dominated(&blue, &fake));
    }
}
