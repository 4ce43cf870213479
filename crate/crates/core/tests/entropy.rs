use hylleraas::density::{radial_profile, shannon_entropy};
use hylleraas::operators::{SystemSpec, Wavefunction};
use hylleraas::precision::{BigFloat, PrecisionPolicy};
use hylleraas::spectral::optimize_parameters;

type F = BigFloat<4>;

fn ground_state(system: SystemSpec, omega: u32) -> Wavefunction<F> {
    let s = system.default_exponent();
    optimize_parameters::<F>(&system, omega, (s, s), 120, &PrecisionPolicy::default())
        .unwrap()
        .wavefunction(&system)
}

#[test]
fn entropy_falls_as_the_system_tightens() {
    let systems = [
        SystemSpec::positronium_anion(),
        SystemSpec::hydrogen_anion(),
        SystemSpec::helium(),
        SystemSpec::lithium_cation(),
    ];
    let values: Vec<f64> = systems
        .iter()
        .map(|s| {
            let e = shannon_entropy(&ground_state(*s, 5), None, None).unwrap();
            assert!(e.converged, "{s}");
            assert!(e.norm_residual.abs() < 1e-8, "{s}: {}", e.norm_residual);
            e.s_r
        })
        .collect();
    assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
}

#[test]
fn converged_entropy_survives_order_doubling() {
    let wf = ground_state(SystemSpec::hydrogen_anion(), 5);
    let first = shannon_entropy(&wf, None, None).unwrap();
    assert!(first.converged);
    let doubled = shannon_entropy(&wf, Some(2 * first.quadrature_order), Some(first.scale)).unwrap();
    assert!((doubled.s_r - first.s_r).abs() <= 1e-6, "{} vs {}", first.s_r, doubled.s_r);
}

#[test]
fn radial_profile_integrates_to_one() {
    let wf = ground_state(SystemSpec::helium(), 4);
    let (r_max, points) = (20.0, 4000);
    let rows = radial_profile(&wf, r_max, points).unwrap();
    let h = r_max / points as f64;
    // Trapezoid rule; the shell density vanishes at r = 0.
    let mut total = 0.0;
    for (i, (_, _, shell)) in rows.iter().enumerate() {
        let w = if i + 1 == rows.len() { 0.5 } else { 1.0 };
        total += w * h * shell.to_f64();
    }
    assert!((total - 1.0).abs() < 1e-5, "{total}");
}
