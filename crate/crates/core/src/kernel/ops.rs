use super::grid::{round_nodes, GridPropagator, Jumps, NodeProfile, Rounding, NODE_ERROR_PER_MASS};
use super::{kernel_values, KernelContext};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::profile::RadialProfile;

/// Grid used to re-discretize `G_t f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyOptions {
    pub spacing: f64,
    pub rounding: Rounding,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        Self {
            spacing: 1e-3,
            rounding: Rounding::Upper,
        }
    }
}

/// A profile together with a bound on its sup distance to the exact result.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub profile: RadialProfile,
    pub error_bound: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `G_t f(r) = Σ_j c_j w(a_j, r, t)` rounded onto a uniform grid in the
/// requested direction.
pub fn apply_gt(
    ctx: &KernelContext,
    f: &RadialProfile,
    t: f64,
    options: ApplyOptions,
) -> Result<Applied> {
    check_time(t)?;
    let mut prop = GridPropagator::new(ctx, t, options.spacing)?;
    let jumps: Vec<(f64, f64)> = f.jump_sizes();
    let (raw, mass) = prop.apply(Jumps::Free(&jumps), 1e-13)?;
    let (node, err) = round_nodes(&raw, mass, 1.0, 1.0, options.spacing, options.rounding);
    let cap = f.domain_cap().max(f.max_location().unwrap_or(0.0) + prop.reach());
    Ok(Applied {
        profile: node.to_profile(cap)?,
        error_bound: err,
    })
}

/// `C_m f = min(f, m)`.
pub fn cutoff(f: &RadialProfile, m: f64) -> RadialProfile {
    f.cutoff(m)
}

/// Node samples of `e^t G_t f`; unlike profiles the values may exceed 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spacing: f64,
    values: Vec<f64>,
    limit: f64,
    pub error_bound: f64,
}

impl GridFunction {
    /// Always true: this type is never clamped to `[0, 1]`.
    pub fn unclamped(&self) -> bool {
        true
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation between nodes; the limit value past the last node.
    pub fn eval(&self, r: f64) -> f64 {
        if self.values.is_empty() || r <= 0.0 {
            return 0.0;
        }
        let s = r / self.spacing;
        let i = s.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.limit;
        }
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// `sup_r` of the function, reached as `r → ∞`.
    pub fn sup(&self) -> f64 {
        self.limit
    }
}

/// `e^t G_t f0`, the solution of the linear problem without the obstacle.
pub fn linear_evolve(
    ctx: &KernelContext,
    f0: &RadialProfile,
    t: f64,
    spacing: f64,
) -> Result<GridFunction> {
    check_time(t)?;
    let mut prop = GridPropagator::new(ctx, t, spacing)?;
    let jumps = f0.jump_sizes();
    let (raw, mass) = prop.apply(Jumps::Free(&jumps), 1e-13)?;
    let scale = t.exp();
    Ok(GridFunction {
        spacing,
        values: raw.iter().map(|v| v * scale).collect(),
        limit: scale * mass,
        error_bound: scale * (NODE_ERROR_PER_MASS * mass + 1e-13),
    })
}

/// CSV table `d,y,r,t,w,g,G` over the Cartesian product of the inputs.
pub fn kernel_table_csv(ctx: &KernelContext, ys: &[f64], rs: &[f64], ts: &[f64]) -> Result<String> {
    let mut out = String::from("d,y,r,t,w,g,G\n");
    for &t in ts {
        for &y in ys {
            for &r in rs {
                let kv = kernel_values(ctx, y, r, t)?;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    ctx.dim(),
                    num(y),
                    num(r),
                    num(t),
                    num(kv.w),
                    num(kv.g),
                    num(kv.big_g)
                ));
            }
        }
    }
    Ok(out)
}

impl NodeProfile {
    /// Exact node representation of a profile whose jumps all sit on grid nodes.
    pub fn from_profile_on_grid(f: &RadialProfile, spacing: f64) -> Result<NodeProfile> {
        let mut values: Vec<f64> = Vec::new();
        for (a, v) in f.jumps() {
            let i = (a / spacing).round();
            if (i * spacing - a).abs() > 1e-9 * spacing.max(a) {
                return Err(Error::domain(format!("jump at {a} is not on the grid {spacing}")));
            }
            let i = i as usize;
            if i < values.len() {
                return Err(Error::domain(format!("two jumps share the grid node {i}")));
            }
            let prev = values.last().copied().unwrap_or(0.0);
            values.resize(i, prev);
            values.push(v);
        }
        Ok(NodeProfile::from_values(spacing, values))
    }
}
