use bees::ensemble::{norm, ParticleEnsemble};
use bees::rng::replica_rng;
use bees::sim::*;
use bees::stats::{chi2_homogeneity, ks_pvalue, ks_statistic, mean_std};
use bees::Error;
use statrs::distribution::{ContinuousCDF, Normal};

fn params(dim: usize, n: usize, seed: u64, record: Vec<f64>) -> SimParams {
    SimParams {
        dim,
        population: n,
        seed,
        mode: Mode::Exact,
        record,
    }
}

#[test]
fn single_particle_is_brownian() {
    let p = params(2, 1, 11, vec![1.5]);
    let start = ParticleEnsemble::at_origin(2, 1).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in 0..4000 {
        let run = simulate(&p, &start, r, false).unwrap();
        let pos = run.snapshots[0].position(0);
        xs.push(pos[0]);
        ys.push(pos[1]);
    }
    let law = Normal::new(0.0, 3f64.sqrt()).unwrap();
    for sample in [&xs, &ys] {
        let d = ks_statistic(sample, |x| law.cdf(x));
        assert!(ks_pvalue(sample.len(), d) > 1e-3, "KS d={d}");
    }
    let cov: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>() / xs.len() as f64;
    assert!(cov.abs() < 4.0 * 3.0 / (xs.len() as f64).sqrt());
}

#[test]
fn single_particle_event_is_a_no_op() {
    let start = ParticleEnsemble::from_points(1, &[vec![0.3]]).unwrap();
    let mut events = Vec::new();
    let mut rng = replica_rng(2, 0);
    advance_nbbm(&start, 5.0, Mode::Exact, &mut rng, Some(&mut events)).unwrap();
    assert!(!events.is_empty());
    assert!(events.iter().all(|e| e.branching == 0 && e.removed == 0));
}

#[test]
fn event_count_has_mean_n_t() {
    let p = params(1, 100, 5, vec![2.0]);
    let start = ParticleEnsemble::at_origin(1, 100).unwrap();
    let counts: Vec<f64> = (0..60)
        .map(|r| simulate(&p, &start, r, true).unwrap().events.len() as f64)
        .collect();
    let (m, _) = mean_std(&counts);
    assert!((m - 200.0).abs() < 4.0 * (200.0f64 / 60.0).sqrt(), "mean {m}");
    for c in &counts {
        assert!((c - 200.0).abs() < 6.0 * 200f64.sqrt());
    }
}

#[test]
fn population_and_clock_are_preserved() {
    let p = SimParams {
        mode: Mode::FrozenBatch { dt: 0.01 },
        ..params(3, 40, 1, vec![0.5, 1.0, 2.0])
    };
    let start = ParticleEnsemble::at_origin(3, 40).unwrap();
    let run = simulate(&p, &start, 0, false).unwrap();
    for (s, t) in run.snapshots.iter().zip([0.5, 1.0, 2.0]) {
        assert_eq!(s.population(), 40);
        assert_eq!(s.clock(), t);
    }
}

#[test]
fn labels_are_exchangeable() {
    let n = 8;
    let p = params(2, n, 3, vec![1.0]);
    let start = ParticleEnsemble::at_origin(2, n).unwrap();
    let bins = [0.8, 1.3, 1.8];
    let mut table = vec![vec![0u64; bins.len() + 1]; n];
    for r in 0..1500 {
        let run = simulate(&p, &start, r, false).unwrap();
        for (k, x) in run.snapshots[0].points().enumerate() {
            let b = bins.iter().filter(|&&e| norm(x) > e).count();
            table[k][b] += 1;
        }
    }
    let (_, _, pval) = chi2_homogeneity(&table);
    assert!(pval > 1e-3, "p = {pval}");
}

#[test]
fn simulation_is_deterministic() {
    let p = params(2, 30, 99, vec![0.2, 1.0]);
    let start = ParticleEnsemble::at_origin(2, 30).unwrap();
    let a = simulate(&p, &start, 4, true).unwrap();
    let b = simulate(&p, &start, 4, true).unwrap();
    assert_eq!(a, b);
    let c = simulate(&p, &start, 5, true).unwrap();
    assert_ne!(a.snapshots, c.snapshots);
}

#[test]
fn invalid_parameters_are_rejected() {
    let start = ParticleEnsemble::at_origin(1, 3).unwrap();
    let bad = params(1, 3, 0, vec![1.0, 0.5]);
    assert!(matches!(simulate(&bad, &start, 0, false), Err(Error::Config(_))));
    let wrong_n = params(1, 4, 0, vec![1.0]);
    assert!(matches!(simulate(&wrong_n, &start, 0, false), Err(Error::Config(_))));
    let mut rng = replica_rng(0, 0);
    assert!(matches!(
        advance_nbbm(&start, -1.0, Mode::Exact, &mut rng, None),
        Err(Error::Domain(_))
    ));
}

#[test]
fn yule_population_mean() {
    let t: f64 = 2.0;
    let reps = 10_000;
    let root = BbmForest::from_ensemble(&ParticleEnsemble::at_origin(1, 1).unwrap());
    let mut rng = replica_rng(17, 0);
    let pops: Vec<f64> = (0..reps)
        .map(|_| advance_bbm(&root, t, &mut rng, DEFAULT_POPULATION_CAP).unwrap().population() as f64)
        .collect();
    let (m, _) = mean_std(&pops);
    let sd = ((2.0 * t).exp() - t.exp()).sqrt() / (reps as f64).sqrt();
    assert!((m - t.exp()).abs() < 3.0 * sd, "mean {m}");

    let five = BbmForest::from_ensemble(&ParticleEnsemble::at_origin(1, 5).unwrap());
    let pops: Vec<f64> = (0..2000)
        .map(|_| advance_bbm(&five, 1.0, &mut rng, DEFAULT_POPULATION_CAP).unwrap().population() as f64)
        .collect();
    let (m, _) = mean_std(&pops);
    let sd = (5.0 * (2f64.exp() - 1f64.exp())).sqrt() / 2000f64.sqrt();
    assert!((m - 5.0 * 1f64.exp()).abs() < 3.0 * sd, "mean {m}");
}

#[test]
fn bbm_labels_follow_the_tree() {
    let root = BbmForest::from_ensemble(&ParticleEnsemble::at_origin(2, 2).unwrap());
    let mut rng = replica_rng(1, 1);
    let f = advance_bbm(&root, 1.5, &mut rng, DEFAULT_POPULATION_CAP).unwrap();
    let mut labels = f.labels().to_vec();
    labels.sort();
    labels.dedup();
    assert_eq!(labels.len(), f.population());
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            assert!(!a.is_ancestor_of(b) && !b.is_ancestor_of(a));
        }
    }
    let same = advance_bbm(&root, 0.0, &mut rng, DEFAULT_POPULATION_CAP).unwrap();
    assert_eq!(same.to_ensemble(), root.to_ensemble());
}

#[test]
fn bbm_cap_is_enforced() {
    let root = BbmForest::from_ensemble(&ParticleEnsemble::at_origin(1, 10).unwrap());
    let mut rng = replica_rng(0, 0);
    assert!(matches!(advance_bbm(&root, 5.0, &mut rng, 50), Err(Error::Resource(_))));
}

#[test]
fn coupled_runs_dominate_and_keep_n_blue() {
    for (seed, dim) in [(1u64, 1usize), (2, 2), (3, 3)] {
        let start = ParticleEnsemble::at_origin(dim, 40).unwrap();
        let mut rng = replica_rng(seed, 0);
        let run = coupled_run(&start, &[0.25, 0.5, 1.0, 1.5], &mut rng, DEFAULT_POPULATION_CAP).unwrap();
        assert!(run.all_dominated());
        assert!(run.blue_counts.iter().all(|&c| c == 40));
        assert_eq!(run.identity_mismatches, 0);
        assert!(run.events > 0);
        for (b, a) in run.nbbm.iter().zip(&run.bbm) {
            assert!(b.max_radius() <= a.max_radius());
        }
    }
}

#[test]
fn coupled_blue_set_is_an_nbbm() {
    // compare the law of the maximum radius with a direct simulation
    let n = 10;
    let start = ParticleEnsemble::at_origin(1, n).unwrap();
    let reps = 600;
    let mut coupled = Vec::new();
    let mut direct = Vec::new();
    let p = params(1, n, 8, vec![1.0]);
    for r in 0..reps {
        let mut rng = replica_rng(7, r);
        coupled.push(coupled_run(&start, &[1.0], &mut rng, DEFAULT_POPULATION_CAP).unwrap().nbbm[0].max_radius());
        direct.push(simulate(&p, &start, r, false).unwrap().snapshots[0].max_radius());
    }
    let (ma, sa) = mean_std(&coupled);
    let (mb, sb) = mean_std(&direct);
    let se = ((sa * sa + sb * sb) / reps as f64).sqrt();
    assert!((ma - mb).abs() < 4.0 * se, "{ma} vs {mb}");
}

#[test]
fn without_events_every_particle_stays_blue() {
    let start = ParticleEnsemble::from_points(2, &[vec![0.1, 0.0], vec![0.0, 0.4]]).unwrap();
    let mut found = false;
    for r in 0..200 {
        let mut rng = replica_rng(4, r);
        let run = coupled_run(&start, &[0.01], &mut rng, DEFAULT_POPULATION_CAP).unwrap();
        if run.events == 0 {
            assert_eq!(run.nbbm[0], run.bbm[0]);
            found = true;
        }
    }
    assert!(found);
}

#[test]
fn ordered_pairs_stay_ordered() {
    let times: Vec<f64> = (1..=40).map(|i| i as f64 * 0.05).collect();
    let mut met = 0;
    for r in 0..500 {
        let mut rng = replica_rng(21, r);
        let p = spherically_ordered_pair(&[0.3, 0.1], &[0.5, -0.2], &times, &mut rng).unwrap();
        for (a, b) in p.inner.iter().zip(&p.outer) {
            assert!(norm(a) <= norm(b) * (1.0 + 1e-12));
        }
        if let Some(t) = p.meeting_time {
            met += 1;
            assert!(t > 0.0 && t <= 2.0);
        }
    }
    assert!(met > 100);
}

#[test]
fn ordered_pair_marginals_are_brownian() {
    let times = [0.25, 0.5, 1.0];
    let (x, xp) = ([0.2, 0.0], [0.0, 0.6]);
    let mut inner = vec![Vec::new(); 2];
    let mut outer = vec![Vec::new(); 2];
    for r in 0..3000 {
        let mut rng = replica_rng(33, r);
        let p = spherically_ordered_pair(&x, &xp, &times, &mut rng).unwrap();
        for i in 0..2 {
            inner[i].push(p.inner[2][i] - x[i]);
            outer[i].push(p.outer[2][i] - xp[i]);
        }
    }
    let law = Normal::new(0.0, 2f64.sqrt()).unwrap();
    for s in inner.iter().chain(&outer) {
        let d = ks_statistic(s, |v| law.cdf(v));
        assert!(ks_pvalue(s.len(), d) > 1e-3, "d = {d}");
    }
}

#[test]
fn equal_starts_give_identical_paths() {
    let mut rng = replica_rng(0, 0);
    let p = spherically_ordered_pair(&[0.4, -0.3], &[0.4, -0.3], &[0.5, 1.0], &mut rng).unwrap();
    assert_eq!(p.meeting_time, Some(0.0));
    assert_eq!(p.inner, p.outer);
    assert!(matches!(
        spherically_ordered_pair(&[1.0], &[0.5], &[1.0], &mut rng),
        Err(Error::Domain(_))
    ));
}

#[test]
fn killed_motion_without_boundary_survives() {
    let mut rng = replica_rng(0, 0);
    let est = killed_survival_density(&[0.0], |_| f64::INFINITY, 1.0, 200, |_| true, None, &mut rng).unwrap();
    assert_eq!(est.estimate, 1f64.exp());
    assert_eq!(est.std_error, 0.0);
    let short = killed_survival_density(&[0.0, 0.0], |_| 1.0, 1e-4, 500, |_| true, None, &mut rng).unwrap();
    assert!((short.estimate - 1.0).abs() < 1e-3);
}

#[test]
fn killed_motion_decays_at_the_principal_rate() {
    let times: Vec<f64> = (0..=8).map(|i| 2.0 + 0.5 * i as f64).collect();
    let mut rng = replica_rng(9, 0);
    let s = survival_curve(&[0.0], std::f64::consts::FRAC_PI_2, &times, 20_000, 2e-3, &mut rng).unwrap();
    let logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let (slope, _) = bees::stats::linear_fit(&times, &logs);
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
}
