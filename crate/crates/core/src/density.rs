//! One-electron density and position-space Shannon entropy.
//!
//! At fixed `r₁` every piece of `|Ψ|²` is a polynomial in `r₁₂` and `r₂`
//! times `e^{-a r₁ - b r₂}`. The `r₁₂` integral is elementary and the `r₂`
//! integral splits at `r₂ = r₁` into lower and upper incomplete gammas, so
//! `ρ(r)` is exact up to rounding. Only the outer radial integral of the
//! entropy is done numerically, by scaled Gauss–Laguerre quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::Wavefunction;
use crate::precision::{BigFloat, Real};
use crate::quadrature::{gauss_laguerre_f64, QuadratureError};
use crate::special::{binomial_table, IncompleteGammaTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("quadrature scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("density oracle did not converge (error estimate {0:e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// First quadrature order tried by [`shannon_entropy`].
pub const DEFAULT_START_ORDER: usize = 200;
/// Largest order reached by automatic doubling.
pub const DEFAULT_MAX_ORDER: usize = 1600;
/// Change in `S_r` under order doubling accepted as converged.
pub const ENTROPY_TOLERANCE: f64 = 1e-6;
/// Largest `|∫ρ 4πr² dr - 1|` accepted as converged.
pub const NORM_TOLERANCE: f64 = 1e-8;
/// Densities below this contribute nothing to `-ρ ln ρ`.
pub const DENSITY_FLOOR: f64 = 1e-60;

/// Precision of the density inside the entropy integral. The expansion of
/// `|Ψ|²` for diffuse states cancels by many orders of magnitude, which
/// double precision cannot absorb.
pub type EntropyReal = BigFloat<2>;

/// `e^{-a r₁ - b r₂} Σ coef[K][u][v] r₁₂^K r₁^u r₂^v`.
#[derive(Debug, Clone)]
struct Part<R> {
    a: R,
    b: R,
    coef: Vec<R>,
}

/// Closed-form `ρ(r)` of one wavefunction, with `|Ψ|²` expanded once.
#[derive(Debug, Clone)]
pub struct DensityProfile<R> {
    parts: Vec<Part<R>>,
    /// One past the largest power of `r₁₂`, `r₁` or `r₂` in `|Ψ|²`.
    dim: usize,
    binom: Vec<Vec<R>>,
    effective_decay: R,
}

impl<R: Real> DensityProfile<R> {
    /// Expand `|Ψ|²` in the precision of the wavefunction and round the
    /// expansion coefficients to `R`.
    pub fn new<W: Real>(wf: &Wavefunction<W>) -> Self {
        let basis = &wf.basis;
        let c = &wf.coefficients;
        let dim = 2 * basis.omega as usize + 1;
        let idx = |k: u32, u: u32, v: u32| ((k as usize * dim) + u as usize) * dim + v as usize;
        let (alpha, beta) = (basis.alpha, basis.beta);
        let mut direct = vec![W::zero(); dim * dim * dim];
        let mut swapped = vec![W::zero(); dim * dim * dim];
        let mut cross = vec![W::zero(); dim * dim * dim];
        for (ti, ci) in basis.terms.iter().zip(c) {
            for (tj, cj) in basis.terms.iter().zip(c) {
                let w = *ci * *cj;
                let k = ti.k + tj.k;
                direct[idx(k, ti.m + tj.m, ti.n + tj.n)] += w;
                swapped[idx(k, ti.n + tj.n, ti.m + tj.m)] += w;
                cross[idx(k, ti.m + tj.n, ti.n + tj.m)] += w.mul_pow2(1);
            }
        }
        let mut raw = vec![
            (alpha.mul_pow2(1), beta.mul_pow2(1), direct),
            (beta.mul_pow2(1), alpha.mul_pow2(1), swapped),
            (alpha + beta, alpha + beta, cross),
        ];
        // Equal exponents collapse all three pieces into one.
        if alpha == beta {
            let (a, b, mut acc) = raw.remove(0);
            for (_, _, other) in raw.drain(..) {
                for (x, y) in acc.iter_mut().zip(other) {
                    *x += y;
                }
            }
            raw.push((a, b, acc));
        }
        let parts = raw
            .into_iter()
            .map(|(a, b, coef)| Part {
                a: a.convert(),
                b: b.convert(),
                coef: coef.iter().map(|x| x.convert()).collect(),
            })
            .collect();
        Self {
            parts,
            dim,
            binom: binomial_table(dim + 1),
            effective_decay: alpha.min(beta).mul_pow2(1).convert(),
        }
    }

    /// Slowest exponential decay rate of `ρ`.
    pub fn effective_decay(&self) -> R {
        self.effective_decay
    }

    /// `ρ(r)` for `r > 0`.
    pub fn at(&self, r: R) -> R {
        let dim = self.dim;
        let top = 2 * dim + 1;
        let mut rp = Vec::with_capacity(dim + 2);
        rp.push(R::one());
        for j in 1..dim + 2 {
            let prev = rp[j - 1];
            rp.push(prev * r);
        }
        let mut total = R::zero();
        for part in &self.parts {
            let pre = (-(part.a * r)).exp();
            if pre.is_zero() {
                continue;
            }
            // low[n] = ∫₀^r x^n e^{-bx} dx, up[n] = ∫_r^∞ x^n e^{-bx} dx.
            let table = IncompleteGammaTable::new(top + 1, part.b * r);
            let inv_b = part.b.recip();
            let mut scale = inv_b;
            let mut low = Vec::with_capacity(top + 1);
            let mut up = Vec::with_capacity(top + 1);
            for n in 0..=top {
                low.push(table.lower(n + 1) * scale);
                up.push(table.upper(n + 1) * scale);
                scale *= inv_b;
            }
            let mut acc = R::zero();
            for k in 0..dim {
                let m = k + 2;
                for v in 0..dim {
                    let mut d = R::zero();
                    for u in (0..dim).rev() {
                        d = d * r + part.coef[(k * dim + u) * dim + v];
                    }
                    if d.is_zero() {
                        continue;
                    }
                    // ∫ r₂^{v+1} e^{-b r₂} [(r+r₂)^m - |r-r₂|^m] dr₂, odd binomial terms only.
                    let mut s = R::zero();
                    for t in (1..=m).step_by(2) {
                        s += self.binom[m][t] * (rp[m - t] * low[v + 1 + t] + rp[t] * up[v + 1 + m - t]);
                    }
                    acc += d * s.mul_pow2(1) / R::from_usize(m);
                }
            }
            total += pre * acc;
        }
        R::pi().mul_pow2(1) * total / r
    }
}

/// `ρ(r)` in the precision of the wavefunction.
pub fn density_at<R: Real>(wf: &Wavefunction<R>, r: R) -> Result<R, DensityError> {
    if !(r > R::zero()) {
        return Err(DensityError::NonPositiveRadius(r.to_f64()));
    }
    Ok(DensityProfile::<R>::new(wf).at(r))
}

fn psi_f64(terms: &[(i32, i32, i32, f64)], alpha: f64, beta: f64, r1: f64, r2: f64, r12: f64) -> f64 {
    let e1 = (-alpha * r1 - beta * r2).exp();
    let e2 = (-beta * r1 - alpha * r2).exp();
    terms
        .iter()
        .map(|&(k, m, n, c)| c * r12.powi(k) * (e1 * r1.powi(m) * r2.powi(n) + e2 * r1.powi(n) * r2.powi(m)))
        .sum()
}

/// `∫₀^∞ f` through `x = t / (1 - t)`.
fn half_line(f: impl Fn(f64) -> f64, tol: f64) -> quadrature::Output {
    quadrature::double_exponential::integrate(
        |t| {
            let u = 1.0 - t;
            f(t / u) / (u * u)
        },
        0.0,
        1.0,
        tol,
    )
}

fn oracle(wf: &Wavefunction<f64>, r: f64, tol: f64, integrate_first: bool) -> Result<f64, DensityError> {
    if !(r > 0.0) {
        return Err(DensityError::NonPositiveRadius(r));
    }
    let terms: Vec<_> = wf
        .basis
        .terms
        .iter()
        .zip(&wf.coefficients)
        .map(|(t, c)| (t.k as i32, t.m as i32, t.n as i32, *c))
        .collect();
    let (alpha, beta) = (wf.basis.alpha, wf.basis.beta);
    let inner_tol = tol * 1e-3;
    let g = |s: f64| {
        let (lo, hi) = ((r - s).abs(), r + s);
        let f = |r12: f64| {
            let p = if integrate_first {
                psi_f64(&terms, alpha, beta, s, r, r12)
            } else {
                psi_f64(&terms, alpha, beta, r, s, r12)
            };
            r12 * p * p
        };
        s * quadrature::double_exponential::integrate(f, lo, hi, inner_tol).integral
    };
    let near = quadrature::double_exponential::integrate(g, 0.0, r, inner_tol);
    let far = half_line(|x| g(r + x), tol);
    let err = near.error_estimate + far.error_estimate;
    if err > tol {
        return Err(DensityError::NoConvergence(err));
    }
    Ok(2.0 * std::f64::consts::PI / r * (near.integral + far.integral))
}

/// `ρ(r)` by direct two-dimensional adaptive quadrature of `|Ψ|²` in
/// double precision. Reference implementation for testing.
pub fn density_oracle<R: Real>(wf: &Wavefunction<R>, r: f64, tol: f64) -> Result<f64, DensityError> {
    oracle(&to_f64(wf), r, tol, false)
}

/// As [`density_oracle`] but holding the second electron at `r` and
/// integrating out the first.
pub fn density_oracle_second<R: Real>(wf: &Wavefunction<R>, r: f64, tol: f64) -> Result<f64, DensityError> {
    oracle(&to_f64(wf), r, tol, true)
}

fn to_f64<R: Real>(wf: &Wavefunction<R>) -> Wavefunction<f64> {
    Wavefunction {
        system: wf.system,
        basis: wf.basis.convert(),
        coefficients: wf.coefficients.iter().map(|c| c.to_f64()).collect(),
        energy: wf.energy.to_f64(),
        metadata: wf.metadata.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    #[serde(rename = "S_r")]
    pub s_r: f64,
    /// `∫ρ 4πr² dr - 1` at the reported order.
    pub norm_residual: f64,
    pub quadrature_order: usize,
    pub scale: f64,
    pub converged: bool,
}

/// `(S_r, ∫ρ 4πr² dr)` with one rule.
fn entropy_at_order(profile: &DensityProfile<EntropyReal>, order: usize, scale: f64) -> Result<(f64, f64), DensityError> {
    let rule = gauss_laguerre_f64(order)?;
    let four_pi = 4.0 * std::f64::consts::PI;
    let values: Vec<(f64, f64)> = rule
        .nodes()
        .par_iter()
        .map(|x| {
            let r = x / scale;
            let rho = profile.at(EntropyReal::from_f64(*x) / EntropyReal::from_f64(scale)).to_f64();
            let shell = four_pi * r * r;
            let s = if rho > DENSITY_FLOOR { -rho * rho.ln() * shell } else { 0.0 };
            (s, rho * shell)
        })
        .collect();
    let (mut s, mut n) = (0.0, 0.0);
    for ((vs, vn), w) in values.iter().zip(rule.scaled_weights()) {
        s += w * vs;
        n += w * vn;
    }
    Ok((s / scale, n / scale))
}

/// Shannon entropy `S_r = -∫ρ ln ρ 4πr² dr` of a normalized state.
///
/// Starts at `order` (default 200) and doubles until two successive
/// values agree within [`ENTROPY_TOLERANCE`] with the normalization within
/// [`NORM_TOLERANCE`], up to 1600 or twice the starting order. The
/// quadrature maps `x = s r` with `s = scale_hint` or `2 min(α, β)`.
pub fn shannon_entropy<R: Real>(
    wf: &Wavefunction<R>,
    order: Option<usize>,
    scale_hint: Option<f64>,
) -> Result<EntropyResult, DensityError> {
    let profile = DensityProfile::<EntropyReal>::new(wf);
    entropy_of_profile(&profile, order, scale_hint)
}

pub fn entropy_of_profile(
    profile: &DensityProfile<EntropyReal>,
    order: Option<usize>,
    scale_hint: Option<f64>,
) -> Result<EntropyResult, DensityError> {
    let scale = scale_hint.unwrap_or(profile.effective_decay().to_f64());
    if !(scale > 0.0) {
        return Err(DensityError::NonPositiveScale(scale));
    }
    let start = order.unwrap_or(DEFAULT_START_ORDER);
    if start == 0 {
        return Err(QuadratureError::ZeroOrder.into());
    }
    let cap = DEFAULT_MAX_ORDER.max(2 * start);
    let mut order = start;
    let (mut s, mut n) = entropy_at_order(profile, order, scale)?;
    loop {
        if 2 * order > cap {
            return Ok(EntropyResult {
                s_r: s,
                norm_residual: n - 1.0,
                quadrature_order: order,
                scale,
                converged: false,
            });
        }
        let (s2, n2) = entropy_at_order(profile, 2 * order, scale)?;
        order *= 2;
        let converged = (s2 - s).abs() < ENTROPY_TOLERANCE && (n2 - 1.0).abs() < NORM_TOLERANCE;
        (s, n) = (s2, n2);
        if converged {
            return Ok(EntropyResult {
                s_r: s,
                norm_residual: n - 1.0,
                quadrature_order: order,
                scale,
                converged: true,
            });
        }
    }
}

/// `(r, ρ, 4πr²ρ)` at `points` equally spaced radii in `(0, r_max]`.
pub fn radial_profile<R: Real>(wf: &Wavefunction<R>, r_max: f64, points: usize) -> Result<Vec<(R, R, R)>, DensityError> {
    if !(r_max > 0.0) {
        return Err(DensityError::NonPositiveRadius(r_max));
    }
    let profile = DensityProfile::<R>::new(wf);
    let step = R::from_f64(r_max) / R::from_usize(points.max(1));
    let four_pi = R::pi().mul_pow2(2);
    Ok((1..=points)
        .map(|i| {
            let r = step * R::from_usize(i);
            let rho = profile.at(r);
            (r, rho, four_pi * r * r * rho)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::operators::SystemSpec;
    use crate::precision::{BigFloat, PrecisionPolicy};
    use crate::spectral::solve_system;
    use proptest::prelude::*;

    type F4 = BigFloat<4>;

    fn ground_state(system: SystemSpec, omega: u32, alpha: f64, beta: f64) -> Wavefunction<F4> {
        let basis = BasisSpec::new(omega, F4::from_f64(alpha), F4::from_f64(beta)).unwrap();
        let sol = solve_system(&system, &basis, 1, &PrecisionPolicy::default(), None).unwrap();
        let root = &sol.roots[0];
        Wavefunction {
            system,
            basis,
            coefficients: root.coefficients.clone(),
            energy: root.energy,
            metadata: Default::default(),
        }
    }

    #[test]
    fn hydrogenic_density_closed_form() {
        let wf = ground_state(SystemSpec::non_interacting(1.0), 0, 1.0, 1.0);
        let rho = density_at(&wf, F4::one()).unwrap();
        let want = (F4::pi() * F4::one().exp().powi(2)).recip();
        assert!((rho - want).abs() < F4::from_f64(1e-60));
        let oracle = density_oracle(&wf, 1.0, 1e-12).unwrap();
        assert!((oracle - want.to_f64()).abs() < 1e-10);
        assert!(matches!(density_at(&wf, F4::zero()), Err(DensityError::NonPositiveRadius(_))));
    }

    #[test]
    fn split_exponents_match_oracle() {
        let wf = ground_state(SystemSpec::helium(), 3, 2.1, 1.4);
        let profile = DensityProfile::<F4>::new(&wf);
        for r in [0.05, 0.7, 2.5, 6.0] {
            let closed = profile.at(F4::from_f64(r)).to_f64();
            let first = density_oracle(&wf, r, 1e-13).unwrap();
            let second = density_oracle_second(&wf, r, 1e-13).unwrap();
            assert!((closed - first).abs() <= 1e-9 * closed, "r={r}: {closed} vs {first}");
            assert!((first - second).abs() <= 1e-9 * closed);
        }
    }

    #[test]
    fn entropy_precision_profile_tracks_wide_one() {
        let wf = ground_state(SystemSpec::hydrogen_anion(), 8, 1.2, 0.5);
        let wide = DensityProfile::<F4>::new(&wf);
        let narrow = DensityProfile::<EntropyReal>::new(&wf);
        for r in [0.01, 0.5, 3.0, 20.0, 80.0] {
            let a = wide.at(F4::from_f64(r));
            let b: F4 = narrow.at(EntropyReal::from_f64(r)).convert();
            assert!((a - b).abs() <= F4::from_f64(1e-24) * a, "r={r}");
        }
    }

    #[test]
    fn non_interacting_entropy() {
        for z in [1.0f64, 2.0, 3.0] {
            let wf = ground_state(SystemSpec::non_interacting(z), 0, z, z);
            let res = shannon_entropy(&wf, None, None).unwrap();
            let want = 3.0 + std::f64::consts::PI.ln() - 3.0 * z.ln();
            assert!(res.converged);
            assert!((res.s_r - want).abs() < 1e-8, "Z={z}: {} vs {want}", res.s_r);
            assert!(res.norm_residual.abs() < 1e-12);
        }
    }

    #[test]
    fn unconverged_when_capped() {
        let wf = ground_state(SystemSpec::non_interacting(1.0), 0, 1.0, 1.0);
        // Nodes squeezed far inside the density cannot capture it.
        let profile = DensityProfile::<EntropyReal>::new(&wf);
        let res = entropy_of_profile(&profile, None, Some(1e4)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.quadrature_order, DEFAULT_MAX_ORDER);
        assert!(matches!(
            entropy_of_profile(&profile, Some(0), None),
            Err(DensityError::Quadrature(QuadratureError::ZeroOrder))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn density_is_positive_and_normalized(omega in 0u32..4, a in 0.8f64..2.5, b in 0.8f64..2.5) {
            let wf = ground_state(SystemSpec::helium(), omega, a, b);
            let profile = DensityProfile::<EntropyReal>::new(&wf);
            for r in [0.01, 0.3, 1.0, 4.0, 15.0] {
                prop_assert!(profile.at(EntropyReal::from_f64(r)).to_f64() >= -1e-14);
            }
            let res = entropy_of_profile(&profile, None, None).unwrap();
            prop_assert!(res.norm_residual.abs() < 1e-8);
        }
    }
}
