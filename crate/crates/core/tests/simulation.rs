use abslope::methods::MethodRegistry;
use abslope::rng;
use abslope::simulate::{
    ampute, evaluate, generate_design, generate_response, run_scenario, simulate_data, Mechanism, SimScenario,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn small_scenario() -> SimScenario {
    SimScenario { n: 40, p: 12, k: 3, c0: 3.0, reps: 4, seed: 5, ..SimScenario::default() }
}

#[test]
fn scenario_text_round_trips() {
    let sc = SimScenario { n: 50, p: 20, k: 4, c0: 2.5, rho: 0.3, miss_frac: 0.2, mechanism: Mechanism::Mar, reps: 7, seed: 99, ..SimScenario::default() };
    assert_eq!(SimScenario::parse(&sc.to_text()).unwrap(), sc);
    let parsed = SimScenario::parse("# comment\nn=100\n p = 100 \nmech=mcar\n\nreps=3").unwrap();
    assert_eq!((parsed.n, parsed.p, parsed.reps, parsed.mechanism), (100, 100, 3, Mechanism::Mcar));
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(SimScenario::parse("n=abc").is_err());
    assert!(SimScenario::parse("colour=red").is_err());
    assert!(SimScenario::parse("no equals sign").is_err());
    assert!(SimScenario::parse("k=500").is_err());
    assert!(SimScenario::parse("miss=1.5").is_err());
}

#[test]
fn design_has_unit_norm_centred_columns_and_ar1_correlation() {
    let x = generate_design(4000, 3, 0.5, &mut rng::stream(1, &[])).unwrap();
    for col in x.column_iter() {
        assert!(col.sum().abs() < 1e-9);
        assert!((col.norm() - 1.0).abs() < 1e-12);
    }
    let g = x.transpose() * &x;
    assert!((g[(0, 1)] - 0.5).abs() < 0.05);
    assert!((g[(0, 2)] - 0.25).abs() < 0.05);
}

#[test]
fn response_places_the_signal_first() {
    let x = generate_design(50, 10, 0.0, &mut rng::stream(2, &[])).unwrap();
    let (y, beta) = generate_response(&x, 3, 2.0, 1.0, &mut rng::stream(3, &[])).unwrap();
    let mag = 2.0 * (2.0 * 10f64.ln()).sqrt();
    for j in 0..10 {
        assert_eq!(beta[j], if j < 3 { mag } else { 0.0 });
    }
    assert_eq!(y.len(), 50);
}

#[test]
fn pure_noise_response_has_the_noise_scale() {
    let x = generate_design(20_000, 2, 0.0, &mut rng::stream(4, &[])).unwrap();
    let (y, beta) = generate_response(&x, 0, 3.0, 2.0, &mut rng::stream(5, &[])).unwrap();
    assert!(beta.iter().all(|b| *b == 0.0));
    let m = y.mean();
    let sd = (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (y.len() - 1) as f64).sqrt();
    assert!((sd - 2.0).abs() < 0.05);
}

#[test]
fn amputation_hits_the_target_fraction() {
    let x = generate_design(400, 50, 0.0, &mut rng::stream(6, &[])).unwrap();
    for mech in [Mechanism::Mcar, Mechanism::Mar] {
        let mask = ampute(&x, 0.1, mech, &mut rng::stream(7, &[])).unwrap();
        assert!((mask.fraction() - 0.1).abs() < 0.01, "{mech}: {}", mask.fraction());
        for i in 0..mask.nrows() {
            assert!(mask.row(i).iter().any(|m| !m), "row {i} fully missing");
        }
        for j in 0..mask.ncols() {
            assert!(mask.observed_in_column(j) >= 2);
        }
    }
    assert!(ampute(&x, 0.0, Mechanism::Mcar, &mut rng::stream(8, &[])).unwrap().is_empty());
}

#[test]
fn mar_missingness_depends_on_the_driver_column() {
    let x = generate_design(2000, 4, 0.0, &mut rng::stream(9, &[])).unwrap();
    let mask = ampute(&x, 0.2, Mechanism::Mar, &mut rng::stream(10, &[])).unwrap();
    assert_eq!(mask.observed_in_column(0), 2000);
    let (mut hi, mut lo) = (0usize, 0usize);
    for i in 0..2000 {
        let missing = (1..4).filter(|&j| mask.is_missing(i, j)).count();
        if x[(i, 0)] > 0.0 { hi += missing } else { lo += missing }
    }
    assert!(hi > 2 * lo, "hi={hi} lo={lo}");
}

#[test]
fn metrics_examples() {
    let x = DMatrix::identity(4, 4);
    let truth = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
    let est = DVector::from_vec(vec![1.0, 0.0, 0.5, 0.0]);
    let m = evaluate(&est, &[true, false, true, false], &truth, &x).unwrap();
    assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 1));
    assert_eq!(m.power, 0.5);
    assert_eq!(m.fdr, 0.5);
    assert!((m.mse_beta.unwrap() - 1.25 / 2.0).abs() < 1e-15);
    let none = evaluate(&DVector::zeros(4), &[false; 4], &DVector::zeros(4), &x).unwrap();
    assert_eq!((none.power, none.fdr, none.mse_beta), (0.0, 0.0, None));
}

#[test]
fn replications_are_independent_of_thread_count() {
    let sc = small_scenario();
    let reg = MethodRegistry::default();
    let m = reg.get("slobe").unwrap();
    let mut one = Vec::new();
    run_scenario(&sc, m, Some(1)).unwrap().write_csv(&mut one, false).unwrap();
    let mut two = Vec::new();
    run_scenario(&sc, m, Some(2)).unwrap().write_csv(&mut two, false).unwrap();
    assert_eq!(one, two);
}

#[test]
fn aggregate_row_is_the_mean_of_replications() {
    let sc = small_scenario();
    let reg = MethodRegistry::default();
    let report = run_scenario(&sc, reg.get("slobe").unwrap(), None).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf, false).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), sc.reps + 2);
    assert_eq!(&rows[sc.reps][0], "mean");
    for col in 1..6 {
        let vals: Vec<f64> = rows[..sc.reps].iter().map(|r| r[col].parse::<f64>().unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let reported: f64 = rows[sc.reps][col].parse().unwrap();
        assert!((mean - reported).abs() < 1e-12 * mean.abs().max(1.0), "column {col}");
    }
    assert!(rows.iter().all(|r| &r[6] == "NA"));
}

#[test]
fn data_streams_are_stable_per_replication() {
    let sc = small_scenario();
    let a = simulate_data(&sc, 2).unwrap();
    let b = simulate_data(&sc, 2).unwrap();
    assert_eq!(a.x_true, b.x_true);
    assert_eq!(a.data.mask(), b.data.mask());
    assert_ne!(simulate_data(&sc, 3).unwrap().x_true, a.x_true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn metrics_stay_in_range(truth in prop::collection::vec(prop::bool::ANY, 6),
                             chosen in prop::collection::vec(prop::bool::ANY, 6)) {
        let beta = DVector::from_iterator(6, truth.iter().map(|t| if *t { 1.0 } else { 0.0 }));
        let est = DVector::from_iterator(6, chosen.iter().map(|c| if *c { 1.0 } else { 0.0 }));
        let m = evaluate(&est, &chosen, &beta, &DMatrix::identity(6, 6)).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.power) && (0.0..=1.0).contains(&m.fdr));
        prop_assert_eq!(m.tp + m.fn_, truth.iter().filter(|t| **t).count());
    }
}
