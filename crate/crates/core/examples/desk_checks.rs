use bees::experiments::*;
use std::time::Instant;

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |s: &str| which.is_empty() || which.iter().any(|w| w == s);
    if want("hydro") {
        let t0 = Instant::now();
        let r = hydrodynamic_report(&HydroConfig::new(2000, 1, 1.0)).unwrap();
        println!("hydro {:.1}s {}", t0.elapsed().as_secs_f64(), r.summary);
    }
    if want("boundary") {
        let t0 = Instant::now();
        let r = boundary_report(&BoundaryConfig::new(5000, 1, 2.0, 0.2)).unwrap();
        println!("boundary {:.1}s {}", t0.elapsed().as_secs_f64(), r.summary);
    }
    if want("selection") {
        let t0 = Instant::now();
        let r = selection_report(&SelectionConfig::new(2000, 1, 15.0)).unwrap();
        println!("selection {:.1}s {}", t0.elapsed().as_secs_f64(), r.summary);
        for row in r.rows.iter().filter(|r| r.statistic.contains("mass")) {
            println!("  {} {}", row.statistic, row.value);
        }
    }
    if want("stationarity") {
        let t0 = Instant::now();
        let r = stationarity_report(&StationarityConfig::new(1000, 1, 20.0, 5.0, 4)).unwrap();
        println!("stationarity {:.1}s {}", t0.elapsed().as_secs_f64(), r.summary);
    }
}
