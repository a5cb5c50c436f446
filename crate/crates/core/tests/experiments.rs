use bees::experiments::*;
use bees::obstacle::stationary_state;
use bees::rng::replica_rng;
use bees::stats::{ks_pvalue, ks_statistic};
use bees::Error;

#[test]
fn hydro_rows_are_well_formed() {
    let mut cfg = HydroConfig::new(200, 2, 0.5);
    cfg.replicas = 2;
    cfg.spacing = 1e-3;
    cfg.step_size = 0.05;
    let r = hydrodynamic_report(&cfg).unwrap();
    for row in &r.rows {
        assert!(row.value >= 0.0);
        assert_eq!(row.pass.is_some(), row.tolerance.is_some());
        assert_eq!((row.n, row.d, row.replicas), (200, 2, 2));
    }
    let q90 = r.row("sup_distance_to_bracket.q90").unwrap();
    assert_eq!(q90.pass, Some(q90.value <= 0.05));
    assert!(r.to_csv().starts_with("experiment,N,d,t,statistic,value,tolerance,pass,replicas,seed_base\n"));
    assert!(r.snapshots.iter().all(Vec::is_empty));
}

#[test]
fn hydro_refuses_tiny_populations() {
    let cfg = HydroConfig::new(1, 1, 1.0);
    assert!(matches!(hydrodynamic_report(&cfg), Err(Error::Config(_))));
    let mut small = HydroConfig::new(5, 1, 0.2);
    small.allow_small = true;
    small.replicas = 1;
    small.spacing = 1e-3;
    small.step_size = 0.05;
    assert!(hydrodynamic_report(&small).is_ok());
}

#[test]
fn boundary_needs_eta_below_horizon() {
    let cfg = BoundaryConfig::new(100, 1, 1.0, 1.0);
    assert!(matches!(boundary_report(&cfg), Err(Error::Config(_))));
}

#[test]
fn boundary_from_the_origin_is_rarely_crossed() {
    let mut cfg = BoundaryConfig::new(300, 1, 0.5, 0.1);
    cfg.sampler = Sampler::Origin;
    cfg.replicas = 3;
    cfg.spacing = 1e-3;
    let r = boundary_report(&cfg).unwrap();
    let frac = r.row("exceedance_fraction").unwrap();
    assert!(frac.value >= 0.0 && frac.value <= 1.0);
}

#[test]
fn selection_checks_the_initial_class() {
    let mut cfg = SelectionConfig::new(100, 2, 1.0);
    cfg.sampler = Sampler::UniformBall;
    cfg.k_radius = 0.5;
    cfg.c = 1.0;
    assert!(matches!(selection_report(&cfg), Err(Error::Config(_))));
}

#[test]
fn selection_statistics_are_consistent() {
    let mut cfg = SelectionConfig::new(400, 1, 6.0);
    cfg.replicas = 4;
    let r = selection_report(&cfg).unwrap();
    let v = stationary_state(1).unwrap();
    for i in 0..4 {
        let sup = r.row(&format!("replica{i}.sup_f_minus_v")).unwrap().value;
        let dm = r.row(&format!("replica{i}.abs_max_minus_r_inf")).unwrap().value;
        // F^N = 1 just past M, so V(M) ≥ 1 − sup there
        let m_lower = v.v_inverse(1.0 - sup);
        assert!(v.r_infinity + dm >= m_lower - 1e-9);
        let ball = r.row(&format!("replica{i}.mass.ball_r_inf")).unwrap().value;
        assert!((0.0..=1.0).contains(&ball));
    }
}

#[test]
fn uniform_ball_sampler_matches_its_law() {
    let mut within = 0;
    for rep in 0..100 {
        let mut rng = replica_rng(5, rep);
        let e = Sampler::UniformBall.sample(1, 1000, &mut rng).unwrap();
        let d = e.empirical_cdf().sup_distance_to_monotone(|r| r.min(1.0), 1.0);
        if d <= 0.062 {
            within += 1;
        }
    }
    assert!(within >= 95);
    let mut rng = replica_rng(6, 0);
    let e = Sampler::UniformBall.sample(3, 4000, &mut rng).unwrap();
    let d = ks_statistic(&e.norms(), |r| r.min(1.0).powi(3));
    assert!(ks_pvalue(4000, d) > 1e-3);
}

#[test]
fn stationary_sampler_matches_v() {
    for dim in 1..=3 {
        let s = stationary_state(dim).unwrap();
        let mut rng = replica_rng(7, dim as u64);
        let e = Sampler::Stationary.sample(dim, 4000, &mut rng).unwrap();
        let d = ks_statistic(&e.norms(), |r| s.v(r));
        assert!(ks_pvalue(4000, d) > 1e-3, "d={dim}");
    }
    let mut rng = replica_rng(0, 0);
    let o = Sampler::Origin.sample(2, 10, &mut rng).unwrap();
    assert_eq!(o.max_radius(), 0.0);
    assert!(matches!(Sampler::parse("gaussian"), Err(Error::Config(_))));
    assert_eq!(Sampler::parse("uniform-ball").unwrap(), Sampler::UniformBall);
}

#[test]
fn window_averages_settle() {
    let a = stationarity_report(&StationarityConfig::new(1000, 1, 20.0, 5.0, 4)).unwrap();
    assert_eq!(a.row("max_pairwise_window_distance").unwrap().pass, Some(true));
    let mut other = StationarityConfig::new(1000, 1, 20.0, 5.0, 1);
    other.seed = 99;
    let wa = window_averages(&StationarityConfig::new(1000, 1, 20.0, 5.0, 1)).unwrap();
    let wb = window_averages(&other).unwrap();
    assert!(wa[0].sup_abs_diff(&wb[0]) <= 0.05);
    let bad = StationarityConfig::new(10, 1, 0.0, 1.0, 2);
    assert!(matches!(stationarity_report(&bad), Err(Error::Config(_))));
}

#[test]
fn reports_do_not_depend_on_the_worker_count() {
    let mut cfg = SelectionConfig::new(100, 2, 1.0);
    cfg.replicas = 3;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| selection_report(&cfg).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.rows, three.rows);
    assert_eq!(one.to_csv(), three.to_csv());
}
