//! Particle systems: the N-BBM, free branching Brownian motion and the
//! coupling between them, spherically ordered pairs and killed Brownian motion.

mod bbm;
mod io;
mod killed;
mod nbbm;
mod pair;

pub use bbm::{advance_bbm, coupled_run, BbmForest, CoupledRun, Label, DEFAULT_POPULATION_CAP};
pub use io::{events_to_csv, snapshots_to_csv};
pub use killed::{killed_survival_density, survival_curve, SurvivalEstimate, DEFAULT_GRID_STEPS};
pub use nbbm::{advance_nbbm, simulate, Event, Mode, NbbmRun, SimParams};
pub use pair::{spherically_ordered_pair, PairedPaths};
