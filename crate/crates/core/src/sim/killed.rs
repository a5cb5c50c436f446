use crate::ensemble::norm_sq;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::StandardNormal;

/// Killing is tested once per grid step of `t / DEFAULT_GRID_STEPS`.
pub const DEFAULT_GRID_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    /// `e^t` times the fraction of paths alive at `t` and inside the target.
    pub estimate: f64,
    pub std_error: f64,
    pub fraction: f64,
}

fn check_inputs(x: &[f64], t: f64, n_samples: usize, dt: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::domain("starting point needs a positive dimension"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("horizon must be finite and >= 0, got {t}")));
    }
    if n_samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("grid step must be positive, got {dt}")));
    }
    Ok(())
}

/// Estimates `e^t P_x(‖B_s‖ < R_s on the grid, B_t ∈ A)`. Killing is only
/// checked at grid times, so survival is overestimated.
pub fn killed_survival_density(
    x: &[f64],
    boundary: impl Fn(f64) -> f64,
    t: f64,
    n_samples: usize,
    target: impl Fn(&[f64]) -> bool,
    dt: Option<f64>,
    rng: &mut SimRng,
) -> Result<SurvivalEstimate> {
    let steps = if t > 0.0 {
        match dt {
            Some(h) => {
                check_inputs(x, t, n_samples, h)?;
                (t / h).ceil().max(1.0) as usize
            }
            None => DEFAULT_GRID_STEPS,
        }
    } else {
        0
    };
    check_inputs(x, t, n_samples, 1.0)?;
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    let sd = (2.0 * h).sqrt();
    let mut hits = 0u64;
    let mut p = x.to_vec();
    'paths: for _ in 0..n_samples {
        p.copy_from_slice(x);
        for k in 1..=steps {
            for c in p.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *c += sd * z;
            }
            let r = boundary(k as f64 * h);
            if norm_sq(&p) >= r * r {
                continue 'paths;
            }
        }
        if target(&p) {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let frac = hits as f64 / n;
    let scale = t.exp();
    Ok(SurvivalEstimate {
        estimate: scale * frac,
        std_error: scale * (frac * (1.0 - frac) / n).sqrt(),
        fraction: frac,
    })
}

/// Fraction of paths from `x` not killed by the fixed radius `radius` up to
/// each of `times`, simulated on a grid of step `dt`.
pub fn survival_curve(x: &[f64], radius: f64, times: &[f64], n_samples: usize, dt: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    check_inputs(x, horizon, n_samples, dt)?;
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("survival times must be increasing"));
    }
    // grid index at or after each requested time
    let marks: Vec<usize> = times.iter().map(|&s| (s / dt - 1e-9).ceil().max(0.0) as usize).collect();
    let steps = marks.last().copied().unwrap_or(0);
    let sd = (2.0 * dt).sqrt();
    let r_sq = radius * radius;
    let mut alive_at = vec![0u64; times.len()];
    let mut p = x.to_vec();
    for _ in 0..n_samples {
        p.copy_from_slice(x);
        let mut death = usize::MAX;
        if norm_sq(&p) >= r_sq {
            death = 0;
        } else {
            for k in 1..=steps {
                for c in p.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *c += sd * z;
                }
                if norm_sq(&p) >= r_sq {
                    death = k;
                    break;
                }
            }
        }
        for (a, &m) in alive_at.iter_mut().zip(&marks) {
            if death > m {
                *a += 1;
            }
        }
    }
    Ok(alive_at.iter().map(|&a| a as f64 / n_samples as f64).collect())
}
