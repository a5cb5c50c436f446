//! Certified two-sided solver for the radial obstacle problem and its
//! stationary state.

mod checks;
mod sandwich;
mod stationary;

pub use checks::{
    boundary_of, check_contraction, converge_to_v, mass_movement_check, ContractionReport,
    ConvergenceRow, MassMovementReport,
};
pub use sandwich::{
    analytic_gap, free_boundary_radius, solve_sandwich, step_minus, step_plus, GridPolicy, Initial, SandwichPair,
    SandwichSolver, SolveRequest, Stepping, DEFAULT_BOUNDARY_TOLERANCE, DEFAULT_SPACING,
};
pub use stationary::{
    bessel_j, first_bessel_zero, scaled_bessel_j, stationary_state, unit_sphere_area, StationaryState,
    MAX_SUPPORTED_DIM,
};
