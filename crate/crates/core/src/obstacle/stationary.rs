//! Stationary solution: the principal Dirichlet eigenfunction on the ball of
//! radius `R_∞` normalized to a probability density, and its radial mass `V`.

use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use crate::quad::integrate;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

pub const MAX_SUPPORTED_DIM: usize = 12;

/// `x^{−ν} J_ν(x)` by its power series, valid for `ν > −1`.
pub fn scaled_bessel_j(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (-(nu * std::f64::consts::LN_2) - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > x {
            break;
        }
        if k > 500.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `J_ν(x)` for `x > 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    x.powf(nu) * scaled_bessel_j(nu, x)
}

/// First positive zero of `J_ν`, `ν > −1`.
pub fn first_bessel_zero(nu: f64) -> f64 {
    // McMahon's expansion gives the scale; a scan from the origin brackets the
    // first sign change so the seed only sets the search range.
    let beta = (nu / 2.0 + 0.75) * std::f64::consts::PI;
    let mu = 4.0 * nu * nu;
    let seed = beta - (mu - 1.0) / (8.0 * beta);
    let step = 1e-2;
    let mut lo = 0.0;
    let mut f_lo = scaled_bessel_j(nu, lo);
    let limit = 2.0 * seed.max(1.0) + 5.0;
    let mut hi = step;
    while hi < limit {
        let f_hi = scaled_bessel_j(nu, hi);
        if f_hi.signum() != f_lo.signum() {
            break;
        }
        lo = hi;
        f_lo = f_hi;
        hi += step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = scaled_bessel_j(nu, mid);
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// `(U, R_∞, V)` for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryState {
    pub dim: usize,
    pub r_infinity: f64,
    /// Amplitude `A` in `U(x) = A ‖x‖^{−ν} J_ν(‖x‖)`, `ν = d/2 − 1`.
    pub normalizer: f64,
    /// `R^{d/2} J_{d/2}(R)`, the unnormalized mass of the ball.
    mass_scale: f64,
}

/// Builds the stationary state for `1 ≤ d ≤ 12`.
pub fn stationary_state(d: usize) -> Result<StationaryState> {
    if d == 0 || d > MAX_SUPPORTED_DIM {
        return Err(Error::domain(format!(
            "stationary state supported for 1 <= d <= {MAX_SUPPORTED_DIM}, got {d}"
        )));
    }
    let nu = d as f64 / 2.0 - 1.0;
    let r = first_bessel_zero(nu);
    let radial = |s: f64| s.powi(d as i32 - 1) * scaled_bessel_j(nu, s);
    let integral = integrate(radial, 0.0, r, 1e-14)?;
    let normalizer = 1.0 / (unit_sphere_area(d) * integral);
    let mass_scale = r.powi(d as i32) * scaled_bessel_j(d as f64 / 2.0, r);
    Ok(StationaryState {
        dim: d,
        r_infinity: r,
        normalizer,
        mass_scale,
    })
}

impl StationaryState {
    fn nu(&self) -> f64 {
        self.dim as f64 / 2.0 - 1.0
    }

    /// `U` as a function of the radius.
    pub fn u_radial(&self, r: f64) -> f64 {
        if r >= self.r_infinity {
            return 0.0;
        }
        (self.normalizer * scaled_bessel_j(self.nu(), r)).max(0.0)
    }

    /// `U(x)`.
    pub fn u(&self, x: &[f64]) -> f64 {
        self.u_radial(crate::ensemble::norm(x))
    }

    /// `V(r) = ∫_{B(r)} U = r^{d/2} J_{d/2}(r) / (R^{d/2} J_{d/2}(R))`.
    pub fn v(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.r_infinity {
            return 1.0;
        }
        let raw = r.powi(self.dim as i32) * scaled_bessel_j(self.dim as f64 / 2.0, r);
        (raw / self.mass_scale).clamp(0.0, 1.0)
    }

    /// Radial density `V'(r) = S_{d−1} r^{d−1} U(r)`.
    pub fn v_density(&self, r: f64) -> f64 {
        if r <= 0.0 || r >= self.r_infinity {
            return 0.0;
        }
        unit_sphere_area(self.dim) * r.powi(self.dim as i32 - 1) * self.u_radial(r)
    }

    /// `V^{-1}(p)` by bisection.
    pub fn v_inverse(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.r_infinity);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.v(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `|∫ U − 1|` with `∫ U` computed by quadrature.
    pub fn normalization_error(&self) -> Result<f64> {
        let area = unit_sphere_area(self.dim);
        let d = self.dim as i32;
        let total = integrate(|s| area * s.powi(d - 1) * self.u_radial(s), 0.0, self.r_infinity, 1e-14)?;
        Ok((total - 1.0).abs())
    }

    /// Largest `|ΔU + U|` over the points, by second differences with step `h`.
    pub fn eigen_residual(&self, points: &[Vec<f64>], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for x in points {
            let u0 = self.u(x);
            let mut lap = 0.0;
            let mut y = x.clone();
            for i in 0..x.len() {
                y[i] = x[i] + h;
                let up = self.u(&y);
                y[i] = x[i] - h;
                let dn = self.u(&y);
                y[i] = x[i];
                lap += (up - 2.0 * u0 + dn) / (h * h);
            }
            worst = worst.max((lap + u0).abs());
        }
        worst
    }

    /// Deterministic interior test points at radii up to `0.9 R_∞`.
    pub fn interior_points(&self, count: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        (0..count)
            .map(|k| {
                let radius = 0.9 * self.r_infinity * (k as f64 + 0.5) / count as f64;
                // spread directions over coordinate mixes
                let mut dir: Vec<f64> = (0..d).map(|i| ((k * 7 + i * 3) % 5) as f64 - 1.7).collect();
                let n = crate::ensemble::norm(&dir);
                for c in &mut dir {
                    *c *= radius / n;
                }
                dir
            })
            .collect()
    }

    /// `V` as a profile, sampled on `n` equal cells of `[0, R_∞]` and rounded
    /// down (`upper == false`) or up.
    pub fn v_step(&self, n: usize, upper: bool) -> RadialProfile {
        let r = self.r_infinity;
        let (lo, hi) = RadialProfile::enclose_monotone(|x| if x >= r { 1.0 } else { self.v(x) }, r, n, r + 1.0)
            .expect("monotone samples of V");
        if upper {
            hi
        } else {
            lo
        }
    }
}
