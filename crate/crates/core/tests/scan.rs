use hylleraas::precision::BigFloat;
use hylleraas::scan::{emit_table, parse_table, scan_z, BelowCriticalStrategy, Regime, ScanConfig, TableFormat};

fn small_scan(strategy: BelowCriticalStrategy) -> ScanConfig {
    ScanConfig {
        z_from: 0.89,
        z_to: 0.94,
        z_step: 0.01,
        omega: 6,
        strategy,
        budget: 120,
        ..ScanConfig::default()
    }
}

#[test]
fn rows_cross_the_critical_charge() {
    let config = small_scan(BelowCriticalStrategy::Freeze);
    let rows = scan_z::<BigFloat<4>>(&config).unwrap();
    let zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    assert_eq!(zs, [0.94, 0.93, 0.92, 0.91, 0.90, 0.89]);

    for r in &rows {
        let bound = r.z >= config.z_critical;
        assert_eq!(r.regime == Regime::Bound, bound, "Z = {}", r.z);
        assert_eq!(r.is_upper_bound(), bound);
        assert!(r.solver_converged && r.entropy_converged, "Z = {}", r.z);
        assert!(r.norm_residual.abs() < 1e-8);
    }
    let bound: Vec<_> = rows.iter().filter(|r| r.regime == Regime::Bound).collect();
    for w in bound.windows(2) {
        // Descending Z: energy rises, in steps like the published spacing.
        assert!(w[1].energy > w[0].energy);
        assert!(w[1].energy - w[0].energy < 0.02);
    }
    // Frozen exponents below the threshold.
    let last_bound = bound.last().unwrap();
    for r in rows.iter().filter(|r| r.regime == Regime::QuasiBound) {
        assert_eq!((r.alpha, r.beta), (last_bound.alpha, last_bound.beta));
    }
    assert!(rows.windows(2).all(|w| w[1].s_r > w[0].s_r));
}

#[test]
fn identical_configs_give_identical_tables() {
    let config = ScanConfig {
        z_from: 0.90,
        z_to: 0.92,
        ..small_scan(BelowCriticalStrategy::Extrapolate)
    };
    let a = emit_table(&scan_z::<BigFloat<4>>(&config).unwrap(), TableFormat::Csv);
    let b = emit_table(&scan_z::<BigFloat<4>>(&config).unwrap(), TableFormat::Csv);
    assert_eq!(a, b);
    let parsed = parse_table(&a, TableFormat::Csv).unwrap();
    assert_eq!(emit_table(&parsed, TableFormat::Csv), a);
}
