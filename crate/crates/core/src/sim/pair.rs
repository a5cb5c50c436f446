use crate::ensemble::norm;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::StandardNormal;

/// Meetings are looked for on a grid this much finer than the sample times.
const SUBSTEPS: usize = 512;

/// Two Brownian paths sampled at common times with `‖B‖ ≤ ‖B⁺‖` at each of
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedPaths {
    pub times: Vec<f64>,
    pub inner: Vec<Vec<f64>>,
    pub outer: Vec<Vec<f64>>,
    /// Approximate first time the norms met; from then on the inner path is
    /// an orthogonal image of the outer one.
    pub meeting_time: Option<f64>,
}

fn gaussian_step(p: &mut [f64], dt: f64, rng: &mut SimRng) {
    let sd = (2.0 * dt).sqrt();
    for c in p.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *c += sd * z;
    }
}

/// Reflection taking `from` to `to`; both must have the same norm.
#[derive(Debug, Clone)]
struct Reflection {
    w: Vec<f64>,
    w_sq: f64,
}

impl Reflection {
    fn new(from: &[f64], to: &[f64]) -> Self {
        let w: Vec<f64> = from.iter().zip(to).map(|(a, b)| a - b).collect();
        let w_sq: f64 = w.iter().map(|c| c * c).sum();
        let scale: f64 = from.iter().map(|c| c * c).sum::<f64>().max(f64::MIN_POSITIVE);
        if w_sq <= 1e-30 * scale {
            Reflection { w: Vec::new(), w_sq: 0.0 }
        } else {
            Reflection { w, w_sq }
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.w.is_empty() {
            return x.to_vec();
        }
        let dot: f64 = self.w.iter().zip(x).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / self.w_sq;
        x.iter().zip(&self.w).map(|(c, w)| c - f * w).collect()
    }
}

/// Runs a pair of spherically ordered Brownian motions from `x` (inner) and
/// `x_plus` (outer). The paths move independently until their norms meet on
/// a grid refining the sample times, after which the inner path is the reflection of the
/// outer one through the hyperplane exchanging their positions at the meeting.
pub fn spherically_ordered_pair(x: &[f64], x_plus: &[f64], times: &[f64], rng: &mut SimRng) -> Result<PairedPaths> {
    if x.len() != x_plus.len() || x.is_empty() {
        return Err(Error::domain("starting points must share a positive dimension"));
    }
    if norm(x) > norm(x_plus) {
        return Err(Error::domain(format!(
            "inner start has norm {} above the outer start's {}",
            norm(x),
            norm(x_plus)
        )));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("sample times must be finite, nonnegative and increasing"));
    }
    let mut inner = x.to_vec();
    let mut outer = x_plus.to_vec();
    let mut now = 0.0;
    let mut coupling: Option<Reflection> = None;
    let mut meeting_time = None;
    if norm(x) == norm(x_plus) {
        coupling = Some(Reflection::new(x_plus, x));
        meeting_time = Some(0.0);
    }
    let mut out = PairedPaths {
        times: times.to_vec(),
        inner: Vec::with_capacity(times.len()),
        outer: Vec::with_capacity(times.len()),
        meeting_time: None,
    };
    for &t in times {
        let h = (t - now) / SUBSTEPS as f64;
        for step in 1..=SUBSTEPS {
            gaussian_step(&mut outer, h, rng);
            if coupling.is_some() {
                continue;
            }
            gaussian_step(&mut inner, h, rng);
            let (ni, no) = (norm(&inner), norm(&outer));
            if ni >= no {
                // radial projection onto the outer sphere, then reflect
                if ni > 0.0 {
                    inner.iter_mut().for_each(|c| *c *= no / ni);
                }
                coupling = Some(Reflection::new(&outer, &inner));
                meeting_time = Some(now + step as f64 * h);
            }
        }
        if let Some(h) = &coupling {
            inner = h.apply(&outer);
        }
        now = t;
        out.inner.push(inner.clone());
        out.outer.push(outer.clone());
    }
    out.meeting_time = meeting_time;
    Ok(out)
}
