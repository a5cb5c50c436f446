//! Desk-scale reproductions: hydrodynamic limit, boundary exceedance,
//! selection principle and stationarity diagnostics.

mod report;
mod samplers;

pub use report::{Report, ReportRow, RowHead};
pub use samplers::Sampler;

use crate::ensemble::{norm, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::obstacle::{
    solve_sandwich, stationary_state, GridPolicy, SandwichSolver, SolveRequest, Stepping, DEFAULT_BOUNDARY_TOLERANCE,
    DEFAULT_SPACING,
};
use crate::profile::{distance_to_bracket, RadialProfile};
use crate::rng::replica_rng;
use crate::sim::{advance_nbbm, Mode};
use crate::stats::{mean, quantile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Snapshot resolution for running-maximum statistics.
pub const SNAPSHOT_EVERY: f64 = 0.05;

/// Populations below this are refused by the hydrodynamic report unless
/// explicitly allowed.
pub const MIN_HYDRO_POPULATION: usize = 100;

fn check_common(n: usize, d: usize, replicas: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::Config("N and d must be at least 1".into()));
    }
    if replicas == 0 {
        return Err(Error::Config("at least one replica is needed".into()));
    }
    Ok(())
}

fn grid(spacing: f64) -> GridPolicy {
    GridPolicy {
        spacing,
        ..GridPolicy::default()
    }
}

/// `start, start + step, …` up to and including `end` (within roundoff).
fn time_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
    if end - out[count] > 1e-9 {
        out.push(end);
    } else {
        out[count] = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroConfig {
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub sampler: Sampler,
    pub replicas: usize,
    pub seed: u64,
    pub step_size: f64,
    pub spacing: f64,
    /// Budget for the 90th percentile of the distance to the bracket.
    pub tolerance: f64,
    pub allow_small: bool,
    pub keep_snapshots: bool,
}

impl HydroConfig {
    pub fn new(n: usize, d: usize, t: f64) -> Self {
        HydroConfig {
            n,
            d,
            t,
            sampler: Sampler::UniformBall,
            replicas: 10,
            seed: 0,
            step_size: 0.01,
            spacing: DEFAULT_SPACING,
            tolerance: 0.05,
            allow_small: false,
            keep_snapshots: false,
        }
    }
}

/// Per replica: simulates to `t`, solves the obstacle problem from the
/// realised `F^N(·, 0)` and measures how far `F^N(·, t)` falls outside the
/// certified bracket.
pub fn hydrodynamic_report(cfg: &HydroConfig) -> Result<Report> {
    check_common(cfg.n, cfg.d, cfg.replicas)?;
    if !(cfg.t > 0.0 && cfg.t.is_finite()) {
        return Err(Error::Config(format!("t must be positive, got {}", cfg.t)));
    }
    if cfg.n < MIN_HYDRO_POPULATION && !cfg.allow_small {
        return Err(Error::Config(format!(
            "hydrodynamic comparison needs N ≥ {MIN_HYDRO_POPULATION} (got {}); set allow_small to override",
            cfg.n
        )));
    }
    let results: Vec<_> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = replica_rng(cfg.seed, r);
            let x0 = cfg.sampler.sample(cfg.d, cfg.n, &mut rng)?;
            let xt = advance_nbbm(&x0, cfg.t, Mode::Exact, &mut rng, None)?;
            let mut req = SolveRequest::new(cfg.d, x0.empirical_cdf(), cfg.t, cfg.step_size);
            req.grid = grid(cfg.spacing);
            let pair = solve_sandwich(&req)?;
            let ft = xt.empirical_cdf();
            let to_bracket = distance_to_bracket(&ft, &pair.lower, &pair.upper);
            let to_mid = ft.sup_abs_diff(&pair.midpoint());
            let snaps = if cfg.keep_snapshots { vec![x0, xt] } else { Vec::new() };
            Ok((to_bracket, to_mid, pair.measured_gap, pair.certified_gap(), snaps))
        })
        .collect::<Result<_>>()?;
    let head = RowHead {
        experiment: "hydro",
        n: cfg.n,
        d: cfg.d,
        t: cfg.t,
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let dist: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mid: Vec<f64> = results.iter().map(|r| r.1).collect();
    let mut rows = Vec::new();
    for (i, r) in results.iter().enumerate() {
        rows.push(ReportRow::new(&head, format!("replica{i}.sup_distance_to_bracket"), r.0));
        rows.push(ReportRow::new(&head, format!("replica{i}.sup_distance_to_midpoint"), r.1));
        rows.push(ReportRow::new(&head, format!("replica{i}.measured_gap"), r.2));
    }
    let q90 = quantile(&dist, 0.9);
    rows.push(ReportRow::new(&head, "sup_distance_to_bracket.q50", quantile(&dist, 0.5)));
    rows.push(ReportRow::new(&head, "sup_distance_to_bracket.q90", q90).with_tolerance(cfg.tolerance));
    rows.push(ReportRow::new(&head, "sup_distance_to_bracket.max", dist.iter().copied().fold(0.0, f64::max)));
    rows.push(ReportRow::new(&head, "sup_distance_to_midpoint.q90", quantile(&mid, 0.9)));
    let certified = results.iter().map(|r| r.3).fold(0.0, f64::max);
    rows.push(ReportRow::new(&head, "certified_gap.max", certified));
    Ok(Report {
        experiment: "hydro".into(),
        summary: json!({
            "config": cfg,
            "sup_distance_to_bracket": dist,
            "sup_distance_to_midpoint": mid,
            "q90": q90,
            "certified_gap_max": certified,
            "passed": q90 <= cfg.tolerance,
        }),
        rows,
        snapshots: results.into_iter().map(|r| r.4).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub n: usize,
    pub d: usize,
    pub horizon: f64,
    pub eta: f64,
    pub sampler: Sampler,
    pub replicas: usize,
    pub seed: u64,
    pub step_size: f64,
    pub spacing: f64,
    /// Budget for the fraction of replicas exceeding `R_t + η`.
    pub tolerance: f64,
    pub keep_snapshots: bool,
}

impl BoundaryConfig {
    pub fn new(n: usize, d: usize, horizon: f64, eta: f64) -> Self {
        BoundaryConfig {
            n,
            d,
            horizon,
            eta,
            sampler: Sampler::UniformBall,
            replicas: 10,
            seed: 0,
            step_size: 0.01,
            spacing: DEFAULT_SPACING,
            tolerance: 0.1,
            keep_snapshots: false,
        }
    }
}

/// Upper end of the free-boundary interval at each of `times`.
pub fn boundary_trajectory(
    d: usize,
    sampler: Sampler,
    times: &[f64],
    step_size: f64,
    spacing: f64,
) -> Result<Vec<f64>> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let req = SolveRequest {
        dim: d,
        initial: sampler.initial_condition(d)?,
        horizon,
        stepping: Stepping::StepSize(step_size),
        grid: grid(spacing),
    };
    let mut solver = SandwichSolver::new(&req)?;
    let delta = solver.step_size();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let target = (t / delta).round() as usize;
        while solver.steps_taken() < target {
            solver.step()?;
        }
        out.push(solver.pair()?.boundary_interval(DEFAULT_BOUNDARY_TOLERANCE).1);
    }
    Ok(out)
}

/// Fraction of replicas in which some snapshot in `[η, T]` has
/// `M^N_t > R_t + η`, with `R_t` the upper end of the solver's boundary interval.
pub fn boundary_report(cfg: &BoundaryConfig) -> Result<Report> {
    check_common(cfg.n, cfg.d, cfg.replicas)?;
    if !(cfg.eta > 0.0 && cfg.eta < cfg.horizon) {
        return Err(Error::Config(format!(
            "need 0 < eta < T, got eta = {} and T = {}",
            cfg.eta, cfg.horizon
        )));
    }
    let times = time_grid(cfg.eta, cfg.horizon, SNAPSHOT_EVERY);
    let radius = boundary_trajectory(cfg.d, cfg.sampler, &times, cfg.step_size, cfg.spacing)?;
    let results: Vec<_> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = replica_rng(cfg.seed, r);
            let x0 = cfg.sampler.sample(cfg.d, cfg.n, &mut rng)?;
            let run = run_to_times(&x0, &times, &mut rng)?;
            let excess = run
                .iter()
                .zip(&radius)
                .map(|(s, &rt)| s.max_radius() - rt)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((excess, if cfg.keep_snapshots { run } else { Vec::new() }))
        })
        .collect::<Result<_>>()?;
    let head = RowHead {
        experiment: "boundary",
        n: cfg.n,
        d: cfg.d,
        t: cfg.horizon,
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let mut rows = Vec::new();
    let mut exceeded = 0;
    for (i, (excess, _)) in results.iter().enumerate() {
        rows.push(ReportRow::new(&head, format!("replica{i}.max_excess_over_boundary"), *excess));
        if *excess > cfg.eta {
            exceeded += 1;
        }
    }
    let fraction = exceeded as f64 / cfg.replicas as f64;
    rows.push(ReportRow::new(&head, "exceedance_fraction", fraction).with_tolerance(cfg.tolerance));
    Ok(Report {
        experiment: "boundary".into(),
        summary: json!({
            "config": cfg,
            "times": times,
            "boundary_upper": radius,
            "max_excess": results.iter().map(|r| r.0).collect::<Vec<_>>(),
            "exceedance_fraction": fraction,
            "passed": fraction <= cfg.tolerance,
        }),
        rows,
        snapshots: results.into_iter().map(|r| r.1).collect(),
    })
}

/// Snapshots at `times`, continuing the generator that drew the initial
/// sample so one replica uses one stream.
fn run_to_times(initial: &ParticleEnsemble, times: &[f64], rng: &mut crate::rng::SimRng) -> Result<Vec<ParticleEnsemble>> {
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        state = advance_nbbm(&state, t - state.clock(), Mode::Exact, rng, None)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Test sets `A` for `μ^N(A, t)` against `∫_A U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TestSet {
    /// The open ball `B(radius)`; `None` means `B(R_∞)`.
    Ball { radius: Option<f64> },
    /// `{x : x₁ > 0}`.
    HalfSpace,
}

impl TestSet {
    pub fn name(&self) -> String {
        match self {
            TestSet::Ball { radius: None } => "ball_r_inf".into(),
            TestSet::Ball { radius: Some(r) } => format!("ball_{r}"),
            TestSet::HalfSpace => "half_space".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub k_radius: f64,
    pub c: f64,
    pub sampler: Sampler,
    pub replicas: usize,
    pub seed: u64,
    /// Length of the window after `t` for the running maximum.
    pub window: f64,
    pub sup_tolerance: f64,
    pub max_tolerance: f64,
    pub set_tolerance: f64,
    /// Largest fraction of replicas allowed outside the budgets.
    pub failure_fraction: f64,
    pub sets: Vec<TestSet>,
    pub keep_snapshots: bool,
}

impl SelectionConfig {
    pub fn new(n: usize, d: usize, t: f64) -> Self {
        SelectionConfig {
            n,
            d,
            t,
            k_radius: 1.0,
            c: 1.0,
            sampler: Sampler::Origin,
            replicas: 10,
            seed: 0,
            window: 1.0,
            sup_tolerance: 0.07,
            max_tolerance: 0.15,
            set_tolerance: 0.05,
            failure_fraction: 0.1,
            sets: vec![TestSet::Ball { radius: None }, TestSet::HalfSpace],
            keep_snapshots: false,
        }
    }
}

/// Per replica at time `t`: `sup|F^N − V|`, `|M^N − R_∞|`, the window
/// maximum of `M^N − R_∞`, and `μ^N(A)` against `∫_A U` for each test set.
pub fn selection_report(cfg: &SelectionConfig) -> Result<Report> {
    check_common(cfg.n, cfg.d, cfg.replicas)?;
    if !(cfg.t > 0.0) || !(cfg.window >= 0.0) {
        return Err(Error::Config("need t > 0 and window ≥ 0".into()));
    }
    let state = stationary_state(cfg.d)?;
    let r_inf = state.r_infinity;
    let mut times = vec![cfg.t];
    if cfg.window > 0.0 {
        times.extend(time_grid(cfg.t, cfg.t + cfg.window, SNAPSHOT_EVERY).into_iter().skip(1));
    }
    let set_mass: Vec<f64> = cfg
        .sets
        .iter()
        .map(|s| match s {
            TestSet::Ball { radius } => state.v(radius.unwrap_or(r_inf)),
            TestSet::HalfSpace => 0.5,
        })
        .collect();
    let results: Vec<_> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = replica_rng(cfg.seed, r);
            let x0 = cfg.sampler.sample(cfg.d, cfg.n, &mut rng)?;
            if !x0.in_gamma(cfg.k_radius, cfg.c) {
                return Err(Error::Config(format!(
                    "initial sample of replica {r} is not in Γ(K = {}, c = {})",
                    cfg.k_radius, cfg.c
                )));
            }
            let run = run_to_times(&x0, &times, &mut rng)?;
            let at_t = &run[0];
            let sup = at_t.empirical_cdf().sup_distance_to_monotone(|r| state.v(r), 1.0);
            let m = at_t.max_radius();
            let window_max = run.iter().map(|s| s.max_radius()).fold(f64::NEG_INFINITY, f64::max) - r_inf;
            let masses: Vec<f64> = cfg
                .sets
                .iter()
                .map(|s| match *s {
                    TestSet::Ball { radius } => {
                        let rad = radius.unwrap_or(r_inf);
                        at_t.measure_of_set(|x| norm(x) < rad)
                    }
                    TestSet::HalfSpace => at_t.measure_of_set(|x| x[0] > 0.0),
                })
                .collect();
            Ok((sup, (m - r_inf).abs(), window_max, masses, if cfg.keep_snapshots { run } else { Vec::new() }))
        })
        .collect::<Result<_>>()?;
    let head = RowHead {
        experiment: "selection",
        n: cfg.n,
        d: cfg.d,
        t: cfg.t,
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let mut rows = Vec::new();
    let mut outside = 0;
    let mut set_errors = vec![Vec::new(); cfg.sets.len()];
    for (i, (sup, dm, wmax, masses, _)) in results.iter().enumerate() {
        rows.push(ReportRow::new(&head, format!("replica{i}.sup_f_minus_v"), *sup));
        rows.push(ReportRow::new(&head, format!("replica{i}.abs_max_minus_r_inf"), *dm));
        rows.push(ReportRow::new(&head, format!("replica{i}.window_max_minus_r_inf"), *wmax));
        for (j, (set, mass)) in cfg.sets.iter().zip(masses).enumerate() {
            rows.push(ReportRow::new(&head, format!("replica{i}.mass.{}", set.name()), *mass));
            set_errors[j].push((mass - set_mass[j]).abs());
        }
        if !(*sup <= cfg.sup_tolerance && *dm <= cfg.max_tolerance) {
            outside += 1;
        }
    }
    let fraction = outside as f64 / cfg.replicas as f64;
    rows.push(ReportRow::new(&head, "fraction_outside_budget", fraction).with_tolerance(cfg.failure_fraction));
    for (set, errs) in cfg.sets.iter().zip(&set_errors) {
        rows.push(
            ReportRow::new(&head, format!("mass_error.{}.max", set.name()), errs.iter().copied().fold(0.0, f64::max))
                .with_tolerance(cfg.set_tolerance),
        );
    }
    let sups: Vec<f64> = results.iter().map(|r| r.0).collect();
    rows.push(ReportRow::new(&head, "sup_f_minus_v.mean", mean(&sups)));
    Ok(Report {
        experiment: "selection".into(),
        summary: json!({
            "config": cfg,
            "r_infinity": r_inf,
            "sup_f_minus_v": sups,
            "abs_max_minus_r_inf": results.iter().map(|r| r.1).collect::<Vec<_>>(),
            "window_max_minus_r_inf": results.iter().map(|r| r.2).collect::<Vec<_>>(),
            "set_mass_expected": set_mass,
            "fraction_outside_budget": fraction,
        }),
        rows,
        snapshots: results.into_iter().map(|r| r.4).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub n: usize,
    pub d: usize,
    pub burn_in: f64,
    pub window: f64,
    pub n_windows: usize,
    pub sampler: Sampler,
    pub seed: u64,
    /// Budget for the largest pairwise distance between window averages.
    pub tolerance: f64,
}

impl StationarityConfig {
    pub fn new(n: usize, d: usize, burn_in: f64, window: f64, n_windows: usize) -> Self {
        StationarityConfig {
            n,
            d,
            burn_in,
            window,
            n_windows,
            sampler: Sampler::Origin,
            seed: 0,
            tolerance: 0.05,
        }
    }
}

/// Time-averaged `F^N` over consecutive windows after a burn-in.
pub fn window_averages(cfg: &StationarityConfig) -> Result<Vec<RadialProfile>> {
    check_common(cfg.n, cfg.d, 1)?;
    if !(cfg.burn_in > 0.0 && cfg.window > 0.0) || cfg.n_windows == 0 {
        return Err(Error::Config("need burn_in > 0, window > 0 and at least one window".into()));
    }
    let mut rng = replica_rng(cfg.seed, 0);
    let mut state = cfg.sampler.sample(cfg.d, cfg.n, &mut rng)?;
    state = advance_nbbm(&state, cfg.burn_in, Mode::Exact, &mut rng, None)?;
    let per_window = (cfg.window / SNAPSHOT_EVERY).round().max(1.0) as usize;
    let dt = cfg.window / per_window as f64;
    let mut out = Vec::with_capacity(cfg.n_windows);
    for _ in 0..cfg.n_windows {
        let mut pooled = Vec::with_capacity(per_window * cfg.n);
        for _ in 0..per_window {
            state = advance_nbbm(&state, dt, Mode::Exact, &mut rng, None)?;
            pooled.extend(state.norms());
        }
        let cap = pooled.iter().copied().fold(0.0, f64::max) + 1.0;
        out.push(RadialProfile::from_radii(&pooled, cap)?);
    }
    Ok(out)
}

pub fn stationarity_report(cfg: &StationarityConfig) -> Result<Report> {
    let windows = window_averages(cfg)?;
    let state = stationary_state(cfg.d)?;
    let head = RowHead {
        experiment: "stationarity",
        n: cfg.n,
        d: cfg.d,
        t: cfg.burn_in + cfg.window * cfg.n_windows as f64,
        replicas: 1,
        seed: cfg.seed,
    };
    let mut rows = Vec::new();
    let to_v: Vec<f64> = windows
        .iter()
        .map(|w| w.sup_distance_to_monotone(|r| state.v(r), 1.0))
        .collect();
    for (i, v) in to_v.iter().enumerate() {
        rows.push(ReportRow::new(&head, format!("window{i}.sup_distance_to_v"), *v));
    }
    let mut pairwise = 0.0f64;
    for i in 0..windows.len() {
        for j in i + 1..windows.len() {
            pairwise = pairwise.max(windows[i].sup_abs_diff(&windows[j]));
        }
    }
    rows.push(ReportRow::new(&head, "max_pairwise_window_distance", pairwise).with_tolerance(cfg.tolerance));
    Ok(Report {
        experiment: "stationarity".into(),
        summary: json!({
            "config": cfg,
            "window_distance_to_v": to_v,
            "max_pairwise_window_distance": pairwise,
        }),
        rows,
        snapshots: Vec::new(),
    })
}

