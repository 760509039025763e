use macrocap::channel::*;
use macrocap::linalg::ComplexMatrix;

fn quiet(m: usize, users: usize) -> DropGeometry {
    let mut g = DropGeometry::standard(m, 1, users);
    g.calibration_samples = 200;
    g
}

#[test]
fn drops_are_deterministic() {
    let g = DropGeometry::standard(3, 2, 4);
    assert_eq!(random_drop(&g, 11).unwrap(), random_drop(&g, 11).unwrap());
    assert_ne!(random_drop(&g, 11).unwrap(), random_drop(&g, 12).unwrap());
}

#[test]
fn co_located_antennas_share_gain() {
    let p = random_drop(&DropGeometry::standard(2, 3, 2), 5).unwrap();
    for k in 0..2 {
        for b in 0..2 {
            for a in 1..3 {
                assert_eq!(p.get(3 * b + a, k), p.get(3 * b, k));
            }
        }
    }
}

#[test]
fn unshadowed_single_bs_is_pure_path_loss() {
    let mut g = quiet(1, 50);
    g.shadowing_db = 0.0;
    let t = g.calibrate(9);
    let p = random_drop(&g, 9).unwrap();
    for k in 0..50 {
        // distance implied by the path-loss law must lie inside the cell
        let d = (p.get(0, k) / t).powf(-1.0 / g.pathloss_exponent);
        assert!(d >= g.min_distance * (1.0 - 1e-12) && d <= g.cell_radius * (1.0 + 1e-12), "d = {d}");
    }
}

#[test]
fn calibration_hits_target_on_its_own_sample() {
    let g = DropGeometry::standard(3, 1, 1);
    let t = g.calibrate(4);
    let mut snr: Vec<f64> = g.max_gain_samples(4, 0, g.calibration_samples).iter().map(|&x| t * x).collect();
    snr.sort_by(f64::total_cmp);
    assert!((linear_to_db(empirical_quantile(&snr, 1.0 - g.coverage)) - g.target_snr_db).abs() < 1e-9);
}

#[test]
fn calibration_meets_coverage_target() {
    // with 10^4 calibration locations the 5% quantile alone scatters by
    // ~0.15 dB, so the procedure is checked at 10^5 where that drops to ~0.05
    let mut g = DropGeometry::standard(3, 1, 1);
    g.calibration_samples = 100_000;
    for seed in 1..4 {
        let t = g.calibrate(seed);
        let mut snr: Vec<f64> =
            g.max_gain_samples(77 + seed, 3, 100_000).iter().map(|&x| linear_to_db(t * x)).collect();
        snr.sort_by(f64::total_cmp);
        let q = empirical_quantile(&snr, 1.0 - g.coverage);
        assert!((q - g.target_snr_db).abs() <= 0.2, "seed {seed}: 5% quantile {q} dB");
    }
}

#[test]
fn shadowing_spread_matches_configuration() {
    // both BSs at the centre: the log-ratio of the two links isolates the
    // shadowing difference, std = sigma_SF * sqrt(2) / 10 decades
    let mut g = quiet(2, 5);
    g.bs_ring_radius = 0.0;
    let mut x = Vec::new();
    for seed in 0..2000 {
        let p = random_drop(&g, seed).unwrap();
        for k in 0..5 {
            x.push((p.get(0, k) / p.get(1, k)).log10());
        }
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    let want = g.shadowing_db * 2f64.sqrt() / 10.0;
    assert!((sd / want - 1.0).abs() < 0.05, "{sd} vs {want}");
}

#[test]
fn invalid_geometry_is_reported() {
    let mut g = DropGeometry::standard(0, 1, 1);
    g.coverage = 1.5;
    assert_eq!(g.validate().len(), 2);
    assert!(random_drop(&g, 1).is_err());
}

fn corr2(rho: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, rho, rho, 1.0]).unwrap()
}

#[test]
fn correlation_examples() {
    let p = PowerMatrix::new(2, 1, vec![0.4, 0.4]).unwrap();
    let one = vec![ComplexMatrix::identity(1)];
    let same = apply_correlation(&p, &CorrelationSpec { receive: vec![ComplexMatrix::identity(2)], transmit: one.clone() }).unwrap();
    assert_eq!(same, p);
    let q = apply_correlation(&p, &CorrelationSpec { receive: vec![corr2(0.5)], transmit: one.clone() }).unwrap();
    assert!((q.get(0, 0) - 0.6).abs() < 1e-14 && (q.get(1, 0) - 0.2).abs() < 1e-14);
    let q = apply_correlation(&p, &CorrelationSpec { receive: vec![corr2(1.0)], transmit: one.clone() }).unwrap();
    assert!((q.get(0, 0) - 0.8).abs() < 1e-14 && q.get(1, 0).abs() < 1e-14);
    assert!(apply_correlation(&p, &CorrelationSpec { receive: vec![corr2(1.5)], transmit: one.clone() }).is_err());
    let uneven = PowerMatrix::new(2, 1, vec![0.4, 0.3]).unwrap();
    assert!(apply_correlation(&uneven, &CorrelationSpec { receive: vec![corr2(0.5)], transmit: one }).is_err());
}

#[test]
fn correlation_preserves_block_power() {
    let p = PowerMatrix::from_rows(&[
        vec![0.3, 0.3, 0.1],
        vec![0.3, 0.3, 0.1],
        vec![0.05, 0.05, 0.7],
    ])
    .unwrap();
    let c = CorrelationSpec {
        receive: vec![corr2(0.3), ComplexMatrix::identity(1)],
        transmit: vec![corr2(0.8), ComplexMatrix::identity(1)],
    };
    let q = apply_correlation(&p, &c).unwrap();
    let block = |m: &PowerMatrix, r: std::ops::Range<usize>, t: std::ops::Range<usize>| {
        r.flat_map(|u| t.clone().map(move |v| (u, v))).map(|(u, v)| m.get(u, v)).sum::<f64>()
    };
    for (r, t) in [(0..2, 0..2), (0..2, 2..3), (2..3, 0..2), (2..3, 2..3)] {
        let (a, b) = (block(&p, r.clone(), t.clone()), block(&q, r, t));
        assert!((a - b).abs() <= 1e-10 * a);
    }
}

#[test]
fn table_scenarios_meet_snr_definition() {
    for id in TableScenario::ALL {
        for rho in [-10.0, 0.0, 12.5, 30.0] {
            let (p, s2) = scenario_table1(id, rho);
            assert!((p.total_power() / s2 - db_to_linear(rho)).abs() <= 1e-12 * db_to_linear(rho));
        }
        assert_eq!(TableScenario::parse(id.name()).unwrap(), id);
    }
}

#[test]
fn exponential_columns_hit_traces() {
    let p = exponential_profile(&[0.3, 2.0, 1.0], &[1.0, 0.5, 2.0], 4).unwrap();
    for (k, tr) in [1.0, 0.5, 2.0].iter().enumerate() {
        assert!((p.column(k).iter().sum::<f64>() - tr).abs() < 1e-14);
        assert!(p.column(k).iter().all(|&x| x > 0.0));
    }
}
