//! Comparison properties of the obstacle problem, measured with the solver.

use super::sandwich::{
    free_boundary_radius, GridPolicy, Initial, SandwichPair, SandwichSolver, SolveRequest, Stepping,
    DEFAULT_BOUNDARY_TOLERANCE,
};
use super::stationary::StationaryState;
use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `sup |mid(v) − mid(w)|` at time `t`.
    pub solution_distance: f64,
    /// `sup |v₀ − w₀|`.
    pub initial_distance: f64,
    /// `e^t sup|v₀ − w₀|` plus both certified gaps.
    pub bound: f64,
    pub holds: bool,
}

/// Solves from both initial conditions and compares against `e^t`-Lipschitz
/// dependence on the initial condition.
pub fn check_contraction(
    dim: usize,
    v0: &RadialProfile,
    w0: &RadialProfile,
    t: f64,
    step_size: f64,
    grid: GridPolicy,
) -> Result<ContractionReport> {
    let solve = |p: &RadialProfile| -> Result<SandwichPair> {
        let mut req = SolveRequest::new(dim, p.clone(), t, step_size);
        req.grid = grid;
        super::sandwich::solve_sandwich(&req)
    };
    let a = solve(v0)?;
    let b = solve(w0)?;
    let solution_distance = a.midpoint().sup_abs_diff(&b.midpoint());
    let initial_distance = v0.sup_abs_diff(w0);
    let bound = t.exp() * initial_distance + a.certified_gap() + b.certified_gap();
    Ok(ContractionReport {
        solution_distance,
        initial_distance,
        bound,
        holds: solution_distance <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub time: f64,
    /// `sup_r |mid(r) − V(r)|`.
    pub sup_deviation: f64,
    /// Distance from `V` to the bracket (zero when `V` lies inside).
    pub bracket_distance: f64,
    pub certified_gap: f64,
    pub boundary_low: f64,
    pub boundary_high: f64,
    /// Distance from `R_∞` to the boundary interval.
    pub boundary_distance: f64,
}

/// Tracks the solution toward `V` at the scheduled times (rounded to steps).
pub fn converge_to_v(
    state: &StationaryState,
    initial: Initial,
    (k_radius, c_fraction): (f64, f64),
    times: &[f64],
    step_size: f64,
    grid: GridPolicy,
) -> Result<Vec<ConvergenceRow>> {
    let probe = match &initial {
        Initial::Profile(p) => p,
        Initial::Bracket { lower, .. } => lower,
    };
    if !(probe.eval(k_radius) >= c_fraction) {
        return Err(Error::Config(format!(
            "initial condition has v0({k_radius}) = {} < {c_fraction}",
            probe.eval(k_radius)
        )));
    }
    let horizon = times.iter().copied().fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return Err(Error::Config("no positive times scheduled".into()));
    }
    let req = SolveRequest {
        dim: state.dim,
        initial,
        horizon,
        stepping: Stepping::StepSize(step_size),
        grid,
    };
    let mut solver = SandwichSolver::new(&req)?;
    let delta = solver.step_size();
    let mut rows = Vec::new();
    let mut targets: Vec<usize> = times.iter().map(|t| (t / delta).round() as usize).collect();
    targets.sort_unstable();
    for target in targets {
        while solver.steps_taken() < target {
            solver.step()?;
        }
        let pair = solver.pair()?;
        super::sandwich::check_certificate(&pair)?;
        rows.push(convergence_row(state, &pair));
    }
    Ok(rows)
}

pub(crate) fn convergence_row(state: &StationaryState, pair: &SandwichPair) -> ConvergenceRow {
    let v = |r: f64| state.v(r);
    let mid = pair.midpoint();
    let sup_deviation = mid.sup_distance_to_monotone(v, 1.0);
    let below = pair.lower.sup_excess_over_monotone(v);
    let above = pair.upper.sup_deficit_under_monotone(v, 1.0);
    let (lo, hi) = pair.boundary_interval(DEFAULT_BOUNDARY_TOLERANCE);
    let r = state.r_infinity;
    let boundary_distance = if r < lo {
        lo - r
    } else if r > hi {
        r - hi
    } else {
        0.0
    };
    ConvergenceRow {
        time: pair.time(),
        sup_deviation,
        bracket_distance: below.max(above),
        certified_gap: pair.certified_gap(),
        boundary_low: lo,
        boundary_high: hi,
        boundary_distance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassMovementReport {
    pub c: f64,
    pub k_radius: f64,
    /// `(t, lower-branch value at K − 1)`.
    pub samples: Vec<(f64, f64)>,
    /// Smallest scanned time with value `≥ 2c`.
    pub doubling_time: Option<f64>,
}

/// Starts from `c·1{r ≥ K}` and scans for the first time the lower branch
/// carries mass `2c` inside `B(K − 1)`.
pub fn mass_movement_check(
    dim: usize,
    c: f64,
    k_radius: f64,
    times: &[f64],
    step_size: f64,
    grid: GridPolicy,
) -> Result<MassMovementReport> {
    if !(c > 0.0 && c < 0.5) {
        return Err(Error::Config(format!("mass fraction c must lie in (0, 1/2), got {c}")));
    }
    if !(k_radius >= 2.0) {
        return Err(Error::Config(format!("radius K must be at least 2, got {k_radius}")));
    }
    let v0 = RadialProfile::step(k_radius, c, k_radius + 1.0)?;
    let probe = k_radius - 1.0;
    let mut samples = Vec::new();
    let mut doubling_time = None;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut solver = if horizon > 0.0 {
        let mut req = SolveRequest::new(dim, v0.clone(), horizon, step_size);
        req.grid = grid;
        Some(SandwichSolver::new(&req)?)
    } else {
        None
    };
    for t in sorted {
        let value = match solver.as_mut() {
            Some(s) if t > 0.0 => {
                let target = (t / s.step_size()).round() as usize;
                while s.steps_taken() < target {
                    s.step()?;
                }
                s.pair()?.lower.eval(probe)
            }
            _ => v0.eval(probe),
        };
        samples.push((t, value));
        if doubling_time.is_none() && value >= 2.0 * c {
            doubling_time = Some(t);
        }
    }
    Ok(MassMovementReport {
        c,
        k_radius,
        samples,
        doubling_time,
    })
}

/// Free-boundary radius of a profile with the default tolerance.
pub fn boundary_of(v: &RadialProfile) -> f64 {
    free_boundary_radius(v, DEFAULT_BOUNDARY_TOLERANCE)
}
