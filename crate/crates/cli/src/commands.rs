//! One function per subcommand. Each writes its artifacts and reports whether
//! every toleranced row passed.

use crate::config::{ConfigError, RunConfig};
use crate::output::OutputDir;
use bees::experiments::{
    boundary_report, hydrodynamic_report, selection_report, stationarity_report, BoundaryConfig, HydroConfig, Report,
    ReportRow, RowHead, Sampler, SelectionConfig, StationarityConfig,
};
use bees::fmt::num;
use bees::kernel::{kernel_table_csv, KernelContext};
use bees::obstacle::{solve_sandwich, stationary_state, GridPolicy, Initial, SolveRequest, Stepping};
use bees::profile::RadialProfile;
use bees::rng::replica_rng;
use bees::sim::{events_to_csv, simulate, snapshots_to_csv, SimParams};
use serde_json::json;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] bees::Error),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "simulate",
    "solve",
    "stationary",
    "hydro",
    "boundary",
    "selection",
    "stationarity",
    "kernel-dump",
];

/// Runs `command` and returns whether all acceptance rows passed.
pub fn execute(command: &str, cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    cfg.validate(command)?;
    out.write("config.txt", cfg.render_section(command))?;
    match command {
        "simulate" => run_simulate(cfg, out),
        "solve" => run_solve(cfg, out),
        "stationary" => run_stationary(cfg, out),
        "hydro" => {
            let s = &cfg.hydro;
            let mut c = HydroConfig::new(s.n, s.d, s.t);
            c.sampler = s.sampler;
            c.replicas = s.replicas;
            c.seed = cfg.common.seed;
            c.step_size = s.delta;
            c.spacing = s.spacing;
            c.tolerance = s.tolerance;
            c.allow_small = s.allow_small;
            c.keep_snapshots = s.keep_snapshots;
            write_report(&hydrodynamic_report(&c)?, out)
        }
        "boundary" => {
            let s = &cfg.boundary;
            let mut c = BoundaryConfig::new(s.n, s.d, s.t, s.eta);
            c.sampler = s.sampler;
            c.replicas = s.replicas;
            c.seed = cfg.common.seed;
            c.step_size = s.delta;
            c.spacing = s.spacing;
            c.tolerance = s.tolerance;
            c.keep_snapshots = s.keep_snapshots;
            write_report(&boundary_report(&c)?, out)
        }
        "selection" => {
            let s = &cfg.selection;
            let mut c = SelectionConfig::new(s.n, s.d, s.t);
            c.k_radius = s.k;
            c.c = s.c;
            c.sampler = s.sampler;
            c.replicas = s.replicas;
            c.seed = cfg.common.seed;
            c.window = s.window;
            c.sup_tolerance = s.sup_tolerance;
            c.max_tolerance = s.max_tolerance;
            c.set_tolerance = s.set_tolerance;
            c.failure_fraction = s.failure_fraction;
            c.keep_snapshots = s.keep_snapshots;
            write_report(&selection_report(&c)?, out)
        }
        "stationarity" => {
            let s = &cfg.stationarity;
            let mut c = StationarityConfig::new(s.n, s.d, s.burn_in, s.window, s.windows);
            c.sampler = s.sampler;
            c.seed = cfg.common.seed;
            c.tolerance = s.tolerance;
            write_report(&stationarity_report(&c)?, out)
        }
        "kernel-dump" => {
            let s = &cfg.kernel_dump;
            let ctx = KernelContext::with_tolerance(s.d, s.tolerance)?;
            out.write("kernel.csv", kernel_table_csv(&ctx, &s.y, &s.r, &s.t)?)?;
            Ok(true)
        }
        other => Err(ConfigError::UnknownSection {
            line: 0,
            name: other.into(),
        }
        .into()),
    }
}

fn write_report(report: &Report, out: &mut OutputDir) -> Result<bool, CliError> {
    out.write("report.csv", report.to_csv())?;
    out.write_json(
        "summary.json",
        &json!({
            "experiment": report.experiment,
            "passed": report.passed(),
            "summary": report.summary,
        }),
    )?;
    for (i, snaps) in report.snapshots.iter().enumerate() {
        out.write(&format!("snapshots/replica{i}.csv"), snapshots_to_csv(snaps))?;
    }
    Ok(report.passed())
}

fn run_simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let s = &cfg.simulate;
    let params = SimParams {
        dim: s.d,
        population: s.n,
        seed: cfg.common.seed,
        mode: s.mode,
        record: s.schedule(),
    };
    // Initial positions come from a stream no replica uses for the dynamics.
    let mut init_rng = replica_rng(cfg.common.seed, u64::MAX - s.replica);
    let initial = s.sampler.sample(s.d, s.n, &mut init_rng)?;
    let run = simulate(&params, &initial, s.replica, s.keep_events)?;
    out.write("snapshots.csv", snapshots_to_csv(&run.snapshots))?;
    if s.keep_events {
        out.write("events.csv", events_to_csv(&run.events))?;
    }
    let last = run.snapshots.last();
    out.write_json(
        "summary.json",
        &json!({
            "n": s.n,
            "d": s.d,
            "t": s.t,
            "seed": cfg.common.seed,
            "replica": s.replica,
            "snapshots": run.snapshots.len(),
            "events": run.events.len(),
            "final_max_radius": last.map(|e| e.max_radius()),
        }),
    )?;
    Ok(true)
}

fn solve_initial(name: &str, d: usize) -> Result<Initial, CliError> {
    if let Ok(sampler) = Sampler::parse(name) {
        return Ok(sampler.initial_condition(d)?);
    }
    let path = name.strip_prefix("file:").unwrap_or(name);
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Constraint {
        section: "solve".into(),
        key: "initial".into(),
        message: format!("not a sampler name and cannot read {path:?}: {e}"),
    })?;
    Ok(Initial::Profile(RadialProfile::from_csv(&text)?))
}

fn run_solve(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let s = &cfg.solve;
    let req = SolveRequest {
        dim: s.d,
        initial: solve_initial(&s.initial, s.d)?,
        horizon: s.t,
        stepping: match s.target_gap {
            Some(g) => Stepping::TargetGap(g),
            None => Stepping::StepSize(s.delta),
        },
        grid: GridPolicy {
            spacing: s.spacing,
            ..GridPolicy::default()
        },
    };
    let pair = solve_sandwich(&req)?;
    let (r_lo, r_hi) = pair.boundary_interval(s.boundary_tol);
    out.write("lower.csv", pair.lower.to_csv())?;
    out.write("upper.csv", pair.upper.to_csv())?;
    out.write_json(
        "summary.json",
        &json!({
            "d": s.d,
            "t": pair.time(),
            "steps": pair.steps_taken,
            "step_size": pair.step_size,
            "analytic_gap": pair.analytic_gap,
            "grid_gap": pair.grid_gap,
            "certified_gap": pair.certified_gap(),
            "measured_gap": pair.measured_gap,
            "grid_dominated": pair.grid_dominated,
            "boundary_interval": [r_lo, r_hi],
        }),
    )?;
    Ok(true)
}

const NORMALIZATION_TOLERANCE: f64 = 1e-10;
const RESIDUAL_TOLERANCE: f64 = 1e-6;

fn run_stationary(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let s = &cfg.stationary;
    let st = stationary_state(s.d)?;
    let head = RowHead {
        experiment: "stationary",
        n: 0,
        d: s.d,
        t: f64::INFINITY,
        replicas: 1,
        seed: cfg.common.seed,
    };
    let norm_err = st.normalization_error()?;
    let residual = st.eigen_residual(&st.interior_points(s.check_points), s.fd_step);
    let rows = vec![
        ReportRow::new(&head, "r_infinity", st.r_infinity),
        ReportRow::new(&head, "normalization_error", norm_err).with_tolerance(NORMALIZATION_TOLERANCE),
        ReportRow::new(&head, "eigen_residual", residual).with_tolerance(RESIDUAL_TOLERANCE),
    ];
    let report = Report {
        experiment: "stationary".into(),
        rows,
        summary: json!({
            "d": s.d,
            "r_infinity": st.r_infinity,
            "normalizer": st.normalizer,
            "normalization_error": norm_err,
            "eigen_residual": residual,
        }),
        snapshots: Vec::new(),
    };
    let mut profile = String::from("r,u,v\n");
    for i in 0..=s.points {
        let r = st.r_infinity * i as f64 / s.points as f64;
        writeln!(profile, "{},{},{}", num(r), num(st.u_radial(r)), num(st.v(r))).unwrap();
    }
    out.write("profile.csv", profile)?;
    write_report(&report, out)
}
