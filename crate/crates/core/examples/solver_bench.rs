//! Times one sandwich solve per grid spacing and prints the gap budget.

use bees::obstacle::{solve_sandwich, GridPolicy, SolveRequest};
use bees::profile::RadialProfile;
use std::time::Instant;

fn main() {
    let dims: Vec<usize> = vec![1, 2, 3];
    let spacings = [1e-3, 5e-4, 2e-4, 1e-4];
    let initial = RadialProfile::new(vec![(0.3, 0.2), (0.9, 0.5), (1.4, 0.8), (2.0, 1.0)], 5.0).unwrap();
    println!("d,h,seconds,analytic_gap,grid_gap,measured_gap");
    for &d in &dims {
        for &h in &spacings {
            let mut req = SolveRequest::new(d, initial.clone(), 1.0, 0.01);
            req.grid = GridPolicy { spacing: h, ..GridPolicy::default() };
            let start = Instant::now();
            let pair = solve_sandwich(&req).unwrap();
            println!(
                "{d},{h},{:.3},{:.6},{:.6},{:.6}",
                start.elapsed().as_secs_f64(),
                pair.analytic_gap,
                pair.grid_gap,
                pair.measured_gap
            );
        }
    }
}
