use qhs_core::boolean_fn::gen_random_dnf;
use qhs_core::qhs::{qhs_learn, query_sweep, Mode, QhsConfig, SweepCell};

fn mean_quantum(rows: &[qhs_core::qhs::SweepRow], s: usize) -> f64 {
    let sel: Vec<_> = rows.iter().filter(|r| r.s == s).collect();
    sel.iter().map(|r| r.quantum_queries as f64).sum::<f64>() / sel.len() as f64
}

#[test]
fn quantum_totals_grow_with_s() {
    let grid: Vec<SweepCell> = [1, 2, 4]
        .iter()
        .map(|&s| SweepCell { n: 10, s, epsilon: 0.2 })
        .collect();
    let template = QhsConfig::new(10, 1, 0.2, 0.1, Mode::QuantumSim, 31);
    let table = query_sweep(&grid, 2, &template, 3).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert!(table.rows.iter().all(|r| r.error.is_none()));
    let q: Vec<f64> = [1, 2, 4].iter().map(|&s| mean_quantum(&table.rows, s)).collect();
    assert!(q[0] < q[1] && q[1] < q[2], "{q:?}");

    let again = query_sweep(&grid, 2, &template, 1).unwrap();
    assert_eq!(again, table);
}

#[test]
fn sample_size_scales_as_inverse_epsilon_squared() {
    let sizes: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&e| QhsConfig::new(10, 2, e, 0.1, Mode::ClassicalSampled, 0).sample_size() as f64)
        .collect();
    for w in sizes.windows(2) {
        assert!((w[1] / w[0] - 4.0).abs() <= 0.4, "{sizes:?}");
    }
    // c_R s^2 / eps^2 = 8 * 4 / 0.01
    assert_eq!(sizes[2], 3200.0);
}

#[test]
fn every_mode_learns_a_small_instance() {
    let f = gen_random_dnf(8, 2, 3, 77).unwrap();
    let table = f.truth_table().unwrap();
    for mode in [Mode::ClassicalExact, Mode::ClassicalSampled, Mode::QuantumSim] {
        let cfg = QhsConfig::new(8, 2, 0.2, 0.1, mode, 5);
        let (h, report) = qhs_learn(&f, &cfg).unwrap();
        let err = h.exact_error(&table);
        assert_eq!(Some(err), report.final_error);
        assert!(err < 0.2, "{mode}: {err}");
        assert_eq!(report.totals.quantum > 0, mode == Mode::QuantumSim);
        let stage_sum: u64 = report.stages.iter().map(|s| s.quantum_queries).sum();
        assert_eq!(stage_sum, report.totals.quantum);
    }
}
