//! Labelled particle configurations and the empirical statistics read off them.

use crate::error::{Error, Result};
use crate::profile::{default_domain_cap, RadialProfile};

/// Positions of `N` labelled particles in `R^d` together with the simulation clock.
///
/// Label `k` (0-based here, 1-based in every text artifact) owns the slice
/// `positions[k*d .. (k+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    positions: Vec<f64>,
    clock: f64,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, positions: Vec<f64>, clock: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if positions.is_empty() || !positions.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!(
                "coordinate {} of particle {} is not finite",
                i % dim,
                i / dim + 1
            )));
        }
        if !(clock.is_finite() && clock >= 0.0) {
            return Err(Error::domain("clock must be finite and nonnegative"));
        }
        Ok(ParticleEnsemble {
            dim,
            positions,
            clock,
        })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::domain(format!("every point must have {dim} coordinates")));
        }
        Self::new(dim, points.concat(), 0.0)
    }

    /// `n` particles at the origin.
    pub fn at_origin(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * n], 0.0)
    }

    pub(crate) fn from_raw(dim: usize, positions: Vec<f64>, clock: f64) -> Self {
        debug_assert!(dim > 0 && positions.len().is_multiple_of(dim) && !positions.is_empty());
        ParticleEnsemble {
            dim,
            positions,
            clock,
        }
    }

    /// Same positions with the clock set to `t`, which must not move backwards.
    pub(crate) fn with_clock(mut self, t: f64) -> Self {
        debug_assert!(t >= self.clock - 1e-9 * t.abs().max(1.0));
        self.clock = t;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn population(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.points().map(norm).collect()
    }

    /// `F(r) = (1/N)·|{k : ‖X_k‖ < r}|`.
    pub fn empirical_cdf(&self) -> RadialProfile {
        let norms = self.norms();
        let max = norms.iter().copied().fold(0.0, f64::max);
        RadialProfile::from_radii(&norms, default_domain_cap(max, 1.0))
            .expect("norms of a valid ensemble are finite")
    }

    pub fn max_radius(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// Membership in `Γ(K, c)`: at least a fraction `c` of the particles lie in the open ball `B(K)`.
    pub fn in_gamma(&self, k: f64, c: f64) -> bool {
        let inside = self.points().filter(|x| norm(x) < k).count();
        // Relative slack so that e.g. 3 of 10 passes c = 0.3 despite rounding in c.
        inside as f64 >= c * self.population() as f64 * (1.0 - 1e-12)
    }

    /// Fraction of particles satisfying `indicator`.
    pub fn measure_of_set(&self, indicator: impl Fn(&[f64]) -> bool) -> f64 {
        let hits = self.points().filter(|x| indicator(x)).count();
        hits as f64 / self.population() as f64
    }
}

/// Euclidean norm with plain double accumulation (adequate for the supported `d ≤ 12`).
#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_cdf_examples() {
        let e = ParticleEnsemble::at_origin(3, 4).unwrap();
        let f = e.empirical_cdf();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1e-9), 1.0);

        let e = ParticleEnsemble::new(1, vec![0.5, -1.5], 0.0).unwrap();
        let f = e.empirical_cdf();
        assert_eq!(f.jumps().collect::<Vec<_>>(), vec![(0.5, 0.5), (1.5, 1.0)]);
    }

    #[test]
    fn max_radius_examples() {
        assert_eq!(ParticleEnsemble::at_origin(2, 5).unwrap().max_radius(), 0.0);
        let e = ParticleEnsemble::from_points(2, &[vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(e.max_radius(), 5.0);
        let f = e.empirical_cdf();
        assert!(f.eval(5.0) < 1.0);
        assert_eq!(f.eval(5.0 + 1e-12), 1.0);
    }

    #[test]
    fn in_gamma_threshold_arithmetic() {
        assert!(ParticleEnsemble::at_origin(2, 7).unwrap().in_gamma(0.1, 1.0));
        let mut pos = vec![0.1, 0.2, 0.3];
        pos.extend(std::iter::repeat_n(5.0, 7));
        let e = ParticleEnsemble::new(1, pos, 0.0).unwrap();
        assert!(e.in_gamma(1.0, 0.3));
        assert!(!e.in_gamma(1.0, 0.31));
        // monotone in K and c
        assert!(e.in_gamma(6.0, 0.31));
        assert!(e.in_gamma(1.0, 0.2));
    }

    #[test]
    fn measure_of_set_consistency() {
        let e = ParticleEnsemble::new(1, vec![0.5, -1.5, 0.25, 2.0], 0.0).unwrap();
        assert_eq!(e.measure_of_set(|_| true), 1.0);
        let f = e.empirical_cdf();
        for r in [0.1, 0.25, 0.3, 0.5, 1.0, 1.5, 1.6, 3.0] {
            assert_eq!(e.measure_of_set(|x| norm(x) < r), f.eval(r));
        }
        let pos = e.measure_of_set(|x| x[0] > 0.0);
        let neg = e.measure_of_set(|x| x[0] <= 0.0);
        assert_eq!(pos + neg, 1.0);
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(ParticleEnsemble::new(0, vec![1.0], 0.0).is_err());
        assert!(ParticleEnsemble::new(2, vec![1.0, 2.0, 3.0], 0.0).is_err());
        assert!(ParticleEnsemble::new(1, vec![f64::INFINITY], 0.0).is_err());
        assert!(ParticleEnsemble::new(1, vec![], 0.0).is_err());
    }
}
