//! Radial transition objects of d-dimensional Brownian motion with generator Δ.
//!
//! * `w(y, r, t) = P(‖B_t‖ < r | ‖B_0‖ = y)`
//! * `g(y, r, t) = ∂_r w`, the Bessel transition density
//! * `G(y, r, t) = −∂_y w`
//!
//! and the operators `G_t`, `C_m` acting on radial step profiles.

mod grid;
mod ops;
mod series;

pub use grid::{round_nodes, GridPropagator, Jumps, NodeProfile, Rounding};
pub(crate) use grid::NODE_ERROR_PER_MASS;
pub use ops::{apply_gt, cutoff, kernel_table_csv, linear_evolve, ApplyOptions, Applied, GridFunction};

use crate::error::{Error, Result};
use series::{gamma_run, poisson_band};

/// Dimension and target absolute accuracy for kernel evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelContext {
    dim: usize,
    tolerance: f64,
}

impl KernelContext {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    pub fn new(dim: usize) -> Result<Self> {
        Self::with_tolerance(dim, Self::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(dim: usize, tolerance: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(tolerance > 0.0 && tolerance <= 1e-6) {
            return Err(Error::domain(format!(
                "kernel tolerance must lie in (0, 1e-6], got {tolerance}"
            )));
        }
        Ok(Self { dim, tolerance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Half the dimension, the shape parameter of the central gamma law.
    pub(crate) fn half_dim(&self) -> f64 {
        self.dim as f64 / 2.0
    }
}

/// `w`, `g` and `G` at one point, sharing a single series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValues {
    pub w: f64,
    pub g: f64,
    pub big_g: f64,
}

const MAX_TERMS: usize = 50_000_000;

fn check_args(y: f64, r: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive and finite, got {t}")));
    }
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("start radius must be finite and >= 0, got {y}")));
    }
    if !(r >= 0.0) || r.is_nan() {
        return Err(Error::domain(format!("radius must be >= 0, got {r}")));
    }
    Ok(())
}

/// Evaluates `w`, `g`, `G` from the Poisson mixture of gamma laws.
pub fn kernel_values(ctx: &KernelContext, y: f64, r: f64, t: f64) -> Result<KernelValues> {
    check_args(y, r, t)?;
    let a0 = ctx.half_dim();
    let lambda = y * y / (4.0 * t);
    if r == f64::INFINITY {
        return Ok(KernelValues { w: 1.0, g: 0.0, big_g: 0.0 });
    }
    if r == 0.0 {
        let g = if ctx.dim == 1 {
            (-lambda).exp() / (std::f64::consts::PI * t).sqrt()
        } else {
            0.0
        };
        return Ok(KernelValues { w: 0.0, g, big_g: 0.0 });
    }
    let x = r * r / (4.0 * t);
    let r_scale = r / (2.0 * t);
    let y_scale = y / (2.0 * t);
    // Prefactors r/(2t), y/(2t) amplify omitted Poisson mass.
    let amp = 1.0f64.max(r_scale).max(y_scale).max(1.0 / (std::f64::consts::PI * t).sqrt());
    let eps = ctx.tolerance * 1e-3 / amp;
    let band = poisson_band(lambda, eps);
    if band.weights.len() > MAX_TERMS {
        return Err(Error::Evaluation {
            what: "radial kernel",
            detail: format!(
                "Poisson band of {} terms exceeds the limit (y={y}, r={r}, t={t})",
                band.weights.len()
            ),
        });
    }
    let lo = band.start;
    let hi = lo + band.weights.len() - 1;
    let run = gamma_run(a0, x, lo, hi + 1);
    let mut w = 0.0;
    let mut gs = 0.0;
    let mut bg = 0.0;
    for (k, &p) in band.weights.iter().enumerate() {
        w += p * run.cdf[k];
        gs += p * run.density[k];
        bg += p * run.density[k + 1];
    }
    let out = KernelValues {
        w: w.clamp(0.0, 1.0),
        g: r_scale * gs,
        big_g: y_scale * bg,
    };
    if !(out.w.is_finite() && out.g.is_finite() && out.big_g.is_finite()) {
        return Err(Error::Evaluation {
            what: "radial kernel",
            detail: format!("non-finite series value at y={y}, r={r}, t={t}"),
        });
    }
    Ok(out)
}

/// `w(y, r, t)`.
pub fn radial_cdf(ctx: &KernelContext, y: f64, r: f64, t: f64) -> Result<f64> {
    Ok(kernel_values(ctx, y, r, t)?.w)
}

/// `g(y, r, t) = ∂_r w`. At `y = 0` this is the chi density scaled by `√(2t)`.
pub fn bessel_density(ctx: &KernelContext, y: f64, r: f64, t: f64) -> Result<f64> {
    Ok(kernel_values(ctx, y, r, t)?.g)
}

/// `G(y, r, t) = −∂_y w`, from the termwise derivative of the series.
#[allow(non_snake_case)]
pub fn kernel_G(ctx: &KernelContext, y: f64, r: f64, t: f64) -> Result<f64> {
    Ok(kernel_values(ctx, y, r, t)?.big_g)
}

/// `G` by Richardson-extrapolated central differences of `w` in `y`.
#[allow(non_snake_case)]
pub fn kernel_G_richardson(ctx: &KernelContext, y: f64, r: f64, t: f64) -> Result<f64> {
    check_args(y, r, t)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let h = 1e-5f64.max(1e-3 * y).min(y / 2.0);
    let diff = |h: f64| -> Result<f64> {
        let up = radial_cdf(ctx, y + h, r, t)?;
        let dn = radial_cdf(ctx, y - h, r, t)?;
        Ok(-(up - dn) / (2.0 * h))
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_validates_tolerance() {
        assert!(KernelContext::with_tolerance(2, 0.0).is_err());
        assert!(KernelContext::with_tolerance(2, 1e-5).is_err());
        assert!(KernelContext::with_tolerance(0, 1e-10).is_err());
        assert!(KernelContext::new(3).is_ok());
    }

    #[test]
    fn rejects_nonpositive_time() {
        let ctx = KernelContext::new(1).unwrap();
        assert!(radial_cdf(&ctx, 1.0, 1.0, 0.0).is_err());
        assert!(radial_cdf(&ctx, 1.0, 1.0, -1.0).is_err());
        assert!(radial_cdf(&ctx, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn d1_origin_is_error_function() {
        let ctx = KernelContext::new(1).unwrap();
        // erf(r / (2√t)) from an independent reference implementation
        let cases = [
            (2.0, 1.0, 0.8427007929497149),
            (0.3, 0.05, 0.6572182888520886),
            (5.0, 2.0, 0.9875806693484477),
        ];
        for (r, t, exact) in cases {
            let got = radial_cdf(&ctx, 0.0, r, t).unwrap();
            assert!((got - exact).abs() < 1e-13, "r={r} t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn d1_general_start_is_folded_normal() {
        // P(|y + Z| < r) with Z ~ N(0, 2t)
        let ctx = KernelContext::new(1).unwrap();
        let phi = |z: f64| 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
        for &(y, r, t) in &[(0.5f64, 1.0f64, 0.1f64), (2.0, 1.5, 0.7), (3.0, 3.2, 0.01)] {
            let s = (2.0 * t).sqrt();
            let exact = phi((r - y) / s) - phi((-r - y) / s);
            let kv = kernel_values(&ctx, y, r, t).unwrap();
            assert!((kv.w - exact).abs() < 1e-11, "{y} {r} {t}: {} vs {exact}", kv.w);
            let dens = |z: f64| (-z * z / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt();
            assert!((kv.g - (dens(r - y) + dens(r + y))).abs() < 1e-11);
            assert!((kv.big_g - (dens(r - y) - dens(r + y))).abs() < 1e-11);
        }
    }

    #[test]
    fn small_time_limit_is_a_step() {
        let ctx = KernelContext::new(3).unwrap();
        assert!(radial_cdf(&ctx, 1.0, 1.2, 1e-5).unwrap() > 1.0 - 1e-10);
        assert!(radial_cdf(&ctx, 1.0, 0.8, 1e-5).unwrap() < 1e-10);
    }

    #[test]
    fn vanishes_at_zero_radius() {
        for d in 1..=4 {
            let ctx = KernelContext::new(d).unwrap();
            let kv = kernel_values(&ctx, 0.7, 0.0, 0.3).unwrap();
            assert_eq!(kv.w, 0.0);
            assert_eq!(kv.big_g, 0.0);
        }
    }
}
