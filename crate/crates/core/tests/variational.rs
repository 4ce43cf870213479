use hylleraas::basis::BasisSpec;
use hylleraas::operators::SystemSpec;
use hylleraas::precision::{BigFloat, PrecisionPolicy, Real};
use hylleraas::spectral::{energy_lower_bound, optimize_parameters, solve_system};
use proptest::prelude::*;

type F = BigFloat<4>;

/// Nonrelativistic infinite-mass ground-state energies.
const EXACT: [(f64, f64); 3] = [(1.0, -0.527751016544), (2.0, -2.903724377034), (3.0, -7.279913412669)];

fn lowest<R: Real>(system: &SystemSpec, omega: u32, alpha: f64, beta: f64, policy: &PrecisionPolicy) -> R {
    let basis = BasisSpec::new(omega, R::from_f64(alpha), R::from_f64(beta)).unwrap();
    let hint = energy_lower_bound(system) - 0.5;
    solve_system(system, &basis, 1, policy, Some(hint)).unwrap().roots[0].energy
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energies_are_upper_bounds_that_fall_with_omega(
        which in 0usize..3,
        alpha in 0.5f64..3.5,
        beta in 0.5f64..3.5,
        omega in 0u32..4,
    ) {
        let (z, exact) = EXACT[which];
        let system = SystemSpec::nucleus(z);
        let policy = PrecisionPolicy::default();
        let e0 = lowest::<F>(&system, omega, alpha, beta, &policy).to_f64();
        let e1 = lowest::<F>(&system, omega + 1, alpha, beta, &policy).to_f64();
        prop_assert!(e0 >= exact, "omega {omega}: {e0} below {exact}");
        prop_assert!(e1 <= e0 + 1e-12, "omega {omega}: {e1} above {e0}");
    }

    #[test]
    fn exact_product_state_is_reproduced(z in 0.5f64..3.0, omega in 0u32..6) {
        let system = SystemSpec::non_interacting(z);
        let e = lowest::<F>(&system, omega, z, z, &PrecisionPolicy::default()).to_f64();
        prop_assert!((e + z * z).abs() <= 1e-10, "{e} vs {}", -z * z);
    }
}

#[test]
fn ps_minus_is_bound_against_breakup() {
    let system = SystemSpec::positronium_anion();
    let e = lowest::<F>(&system, 6, 0.55, 0.3, &PrecisionPolicy::default()).to_f64();
    assert!(e < -0.25, "{e}");
    assert!(e > -0.2620050702, "{e}");
}

#[test]
fn lowest_root_is_stable_under_wider_mantissa() {
    let system = SystemSpec::helium();
    let narrow = lowest::<BigFloat<4>>(&system, 12, 2.2, 1.9, &PrecisionPolicy::with_bits(256).unwrap());
    let wide = lowest::<BigFloat<8>>(&system, 12, 2.2, 1.9, &PrecisionPolicy::with_bits(512).unwrap());
    let rel = ((narrow.convert::<BigFloat<8>>() - wide) / wide).abs().to_f64();
    assert!(rel <= 1e-12, "relative change {rel:e}");
}

#[test]
fn optimizer_is_deterministic() {
    let system = SystemSpec::helium();
    let policy = PrecisionPolicy::default();
    let run = || optimize_parameters::<F>(&system, 4, (1.6875, 1.6875), 60, &policy).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.energy, b.energy);
    assert_eq!(a.alpha, b.alpha);
    assert_eq!(a.beta, b.beta);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.solution.coefficients, b.solution.coefficients);
}

#[test]
fn helium_optimum_does_not_depend_on_start() {
    let system = SystemSpec::helium();
    let policy = PrecisionPolicy::default();
    let a = optimize_parameters::<F>(&system, 9, (1.6875, 1.6875), 300, &policy).unwrap();
    let b = optimize_parameters::<F>(&system, 9, (2.6, 1.3), 300, &policy).unwrap();
    let (ea, eb) = (a.energy.to_f64(), b.energy.to_f64());
    assert!((ea - eb).abs() <= 1e-9, "{ea} vs {eb}");
    assert!((ea + 2.9037243542).abs() <= 1e-7, "{ea}");
    assert!((a.virial_ratio().to_f64() - 2.0).abs() <= 1e-6);
}
