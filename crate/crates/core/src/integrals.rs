//! The three-body radial integral
//!
//! ```text
//! Γ(l, m, n; a, b) = ∫₀^∞ dr₁ ∫₀^∞ dr₂ ∫_{|r₁-r₂|}^{r₁+r₂} dr₁₂ r₁^l r₂^m r₁₂^n e^{-a r₁ - b r₂}
//! ```
//!
//! that every matrix element reduces to. The `r₁₂` integral is done
//! analytically and the bracket `(r₁+r₂)^N - |r₁-r₂|^N`, `N = n + 1`, is
//! expanded separately on `r₂ < r₁` and `r₂ > r₁`, which leaves only odd
//! binomial terms:
//!
//! ```text
//! Γ = (2/N) Σ_{k odd} C(N, k) [J(l+N-k, m+k; a, b) + J(m+N-k, l+k; b, a)]
//! J(p, q; a, b) = ∫₀^∞ dr₁ r₁^p e^{-a r₁} ∫₀^{r₁} dr₂ r₂^q e^{-b r₂}
//! ```
//!
//! `J` is summed from its positive series
//! `Σ_j q! (p+q+1+j)! b^j / ((q+1+j)! (a+b)^{p+q+2+j})`, so no step cancels.

use thiserror::Error;

use crate::precision::Real;
use crate::special::{binomial_table, factorial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("decay constants must be positive (a = {a}, b = {b})")]
    NonPositiveDecay { a: f64, b: f64 },
    #[error("negative radial power ({l}, {m}, {n})")]
    NegativePower { l: i64, m: i64, n: i64 },
    #[error("adaptive quadrature missed its tolerance (error estimate {estimate:e})")]
    NoConvergence { estimate: f64 },
}

/// Powers of `r₁`, `r₂`, `r₁₂` and the decays of `r₁`, `r₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralKey<R> {
    pub l: u32,
    pub m: u32,
    pub n: u32,
    pub a: R,
    pub b: R,
}

impl<R: Real> IntegralKey<R> {
    pub fn new(l: u32, m: u32, n: u32, a: R, b: R) -> Self {
        Self { l, m, n, a, b }
    }

    fn check(&self) -> Result<(), IntegralError> {
        if !(self.a > R::zero()) || !(self.b > R::zero()) {
            return Err(IntegralError::NonPositiveDecay {
                a: self.a.to_f64(),
                b: self.b.to_f64(),
            });
        }
        Ok(())
    }
}

/// Running reciprocals `1/1, 1/2, …`, extended on demand.
struct Reciprocals<R>(Vec<R>);

impl<R: Real> Reciprocals<R> {
    fn new() -> Self {
        Self(vec![R::zero()])
    }

    fn get(&mut self, k: usize) -> R {
        while self.0.len() <= k {
            let next = R::from_usize(self.0.len()).recip();
            self.0.push(next);
        }
        self.0[k]
    }
}

/// `J(p, q; a, b)` given `c = b / (a + b)` and `(a+b)^{-(p+q+2)}`.
fn j_series<R: Real>(p: usize, q: usize, c: R, lead: R, fact_pq1: R, inv: &mut Reciprocals<R>) -> R {
    // j = 0 term: (p+q+1)! / ((q+1) (a+b)^{p+q+2})
    let mut term = fact_pq1 * lead * inv.get(q + 1);
    let mut sum = term;
    let eps = R::epsilon().mul_pow2(-4);
    let mut j = 0usize;
    loop {
        // term_{j+1} / term_j = c (p+q+2+j) / (q+2+j)
        let num = p + q + 2 + j;
        let den = q + 2 + j;
        term = term * c * R::from_usize(num) * inv.get(den);
        sum += term;
        j += 1;
        // Once the ratio drops below one the tail is bounded by a geometric
        // series with the current ratio.
        let ratio = c.to_f64() * (num + 1) as f64 / (den + 1) as f64;
        if ratio < 1.0 {
            let tail = term * R::from_f64(1.0 / (1.0 - ratio));
            if tail <= sum * eps {
                break;
            }
        }
        assert!(j < 10_000_000, "J series did not converge");
    }
    sum
}

/// All `J(p, q; a, b)` with `p + q <= max_sum`.
struct JTable<R> {
    max_sum: usize,
    values: Vec<R>,
}

impl<R: Real> JTable<R> {
    fn new(a: R, b: R, max_sum: usize, facts: &[R], inv: &mut Reciprocals<R>) -> Self {
        let s = a + b;
        let c = b / s;
        let inv_s = s.recip();
        // (a+b)^{-(t+2)} for t = p + q
        let mut lead = Vec::with_capacity(max_sum + 1);
        lead.push(inv_s * inv_s);
        for t in 1..=max_sum {
            let prev = lead[t - 1];
            lead.push(prev * inv_s);
        }
        let mut values = vec![R::zero(); (max_sum + 1) * (max_sum + 1)];
        for p in 0..=max_sum {
            for q in 0..=(max_sum - p) {
                values[p * (max_sum + 1) + q] = j_series(p, q, c, lead[p + q], facts[p + q + 1], inv);
            }
        }
        Self { max_sum, values }
    }

    fn get(&self, p: usize, q: usize) -> R {
        debug_assert!(p + q <= self.max_sum);
        self.values[p * (self.max_sum + 1) + q]
    }
}

/// Combine the `J` values into `Γ(l, m, n)`.
fn gamma_from_j<R: Real>(
    l: usize,
    m: usize,
    n: usize,
    jab: &JTable<R>,
    jba: &JTable<R>,
    binom: &[Vec<R>],
    inv: &mut Reciprocals<R>,
) -> R {
    let big_n = n + 1;
    let mut acc = R::zero();
    let mut k = 1;
    while k <= big_n {
        let inner = jab.get(l + big_n - k, m + k) + jba.get(m + big_n - k, l + k);
        acc += binom[big_n][k] * inner;
        k += 2;
    }
    acc.mul_pow2(1) * inv.get(big_n)
}

/// Closed-form `Γ(l, m, n; a, b)` at the precision of `R`.
pub fn base_integral<R: Real>(key: &IntegralKey<R>) -> Result<R, IntegralError> {
    key.check()?;
    let (l, m, n) = (key.l as usize, key.m as usize, key.n as usize);
    let max_sum = l + m + n + 1;
    let facts: Vec<R> = (0..=max_sum + 1).map(|k| factorial::<R>(k as u32)).collect();
    let mut inv = Reciprocals::new();
    let jab = JTable::new(key.a, key.b, max_sum, &facts, &mut inv);
    let jba = JTable::new(key.b, key.a, max_sum, &facts, &mut inv);
    let binom = binomial_table::<R>(n + 1);
    Ok(gamma_from_j(l, m, n, &jab, &jba, &binom, &mut inv))
}

/// Every `Γ(l, m, n; a, b)` with `l + m + n <= max_degree` for one decay
/// pair, precomputed for matrix assembly.
#[derive(Debug, Clone)]
pub struct IntegralTable<R> {
    a: R,
    b: R,
    max_degree: usize,
    values: Vec<R>,
}

impl<R: Real> IntegralTable<R> {
    pub fn new(a: R, b: R, max_degree: usize) -> Result<Self, IntegralError> {
        IntegralKey::new(0, 0, 0, a, b).check()?;
        let max_sum = max_degree + 1;
        let facts: Vec<R> = (0..=max_sum + 1).map(|k| factorial::<R>(k as u32)).collect();
        let mut inv = Reciprocals::new();
        let jab = JTable::new(a, b, max_sum, &facts, &mut inv);
        let jba = if a == b {
            JTable {
                max_sum,
                values: jab.values.clone(),
            }
        } else {
            JTable::new(b, a, max_sum, &facts, &mut inv)
        };
        let binom = binomial_table::<R>(max_degree + 1);
        let dim = max_degree + 1;
        let mut values = vec![R::zero(); dim * dim * dim];
        for l in 0..=max_degree {
            for m in 0..=(max_degree - l) {
                for n in 0..=(max_degree - l - m) {
                    values[(l * dim + m) * dim + n] = gamma_from_j(l, m, n, &jab, &jba, &binom, &mut inv);
                }
            }
        }
        Ok(Self {
            a,
            b,
            max_degree,
            values,
        })
    }

    pub fn decays(&self) -> (R, R) {
        (self.a, self.b)
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `Γ(l, m, n)`; negative powers or a degree beyond the table are errors.
    pub fn get(&self, l: i64, m: i64, n: i64) -> Result<R, IntegralError> {
        if l < 0 || m < 0 || n < 0 {
            return Err(IntegralError::NegativePower { l, m, n });
        }
        let (l, m, n) = (l as usize, m as usize, n as usize);
        assert!(
            l + m + n <= self.max_degree,
            "integral ({l}, {m}, {n}) beyond table degree {}",
            self.max_degree
        );
        let dim = self.max_degree + 1;
        Ok(self.values[(l * dim + m) * dim + n])
    }
}

/// `∫₀^∞ f` through `r = t / (1 - t)`.
fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64) -> (f64, f64) {
    let out = quadrature::double_exponential::integrate(
        |t| {
            let u = 1.0 - t;
            f(t / u) / (u * u)
        },
        0.0,
        1.0,
        tol,
    );
    (out.integral, out.error_estimate)
}

/// Brute-force nested quadrature of the same integral in `f64`. The `r₂`
/// range is split at `r₂ = r₁` where the lower `r₁₂` limit has a kink.
pub fn base_integral_oracle(key: &IntegralKey<f64>, abs_tol: f64) -> Result<f64, IntegralError> {
    key.check()?;
    assert!(abs_tol > 0.0);
    let IntegralKey { l, m, n, a, b } = *key;
    let inner_tol = abs_tol * 1e-3;
    let r12_integral = |r1: f64, r2: f64| {
        let lo = (r1 - r2).abs();
        quadrature::double_exponential::integrate(|u| u.powi(n as i32), lo, r1 + r2, inner_tol).integral
    };
    let r2_integral = |r1: f64| {
        let g = |r2: f64| {
            let w = r2.powi(m as i32) * (-b * r2).exp();
            if w == 0.0 {
                0.0
            } else {
                w * r12_integral(r1, r2)
            }
        };
        let near = quadrature::double_exponential::integrate(g, 0.0, r1, inner_tol).integral;
        near + integrate_half_line(|s| g(r1 + s), inner_tol).0
    };
    let (value, err) = integrate_half_line(
        |r1| {
            let w = r1.powi(l as i32) * (-a * r1).exp();
            if w == 0.0 {
                0.0
            } else {
                w * r2_integral(r1)
            }
        },
        abs_tol,
    );
    if err > abs_tol {
        return Err(IntegralError::NoConvergence { estimate: err });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigFloat;
    use proptest::prelude::*;

    type F4 = BigFloat<4>;

    fn key(l: u32, m: u32, n: u32, a: f64, b: f64) -> IntegralKey<F4> {
        IntegralKey::new(l, m, n, F4::from_f64(a), F4::from_f64(b))
    }

    fn oracle(l: u32, m: u32, n: u32, a: f64, b: f64) -> f64 {
        let k = IntegralKey::new(l, m, n, a, b);
        // a coarse pass sets the scale for the absolute tolerance
        let rough = base_integral_oracle(&k, 1e300).unwrap();
        base_integral_oracle(&k, 1e-11 * rough.abs().max(1.0)).unwrap()
    }

    #[test]
    fn hand_reduced_values() {
        let cases = [((0, 0, 0, 2.0, 2.0), 0.125), ((0, 0, 0, 1.0, 1.0), 1.0), ((1, 1, 1, 2.0, 2.0), 0.125)];
        for ((l, m, n, a, b), want) in cases {
            let got = base_integral(&key(l, m, n, a, b)).unwrap();
            assert!((got - F4::from_f64(want)).abs() < F4::from_f64(1e-70), "({l},{m},{n})");
            assert!((oracle(l, m, n, a, b) - want).abs() < 1e-10);
        }
        let got = base_integral(&key(2, 0, 0, 1.0, 3.0)).unwrap().to_f64();
        assert!((got - oracle(2, 0, 0, 1.0, 3.0)).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(matches!(
            base_integral(&key(0, 0, 0, 0.0, 1.0)),
            Err(IntegralError::NonPositiveDecay { .. })
        ));
        let t = IntegralTable::new(F4::one(), F4::one(), 4).unwrap();
        assert!(matches!(t.get(-1, 0, 0), Err(IntegralError::NegativePower { .. })));
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let (a, b) = (F4::from_f64(1.7), F4::from_f64(0.45));
        let t = IntegralTable::new(a, b, 9).unwrap();
        for (l, m, n) in [(0, 0, 0), (3, 1, 5), (0, 9, 0), (2, 2, 2), (9, 0, 0), (0, 0, 9)] {
            let direct = base_integral(&IntegralKey::new(l, m, n, a, b)).unwrap();
            let tab = t.get(l as i64, m as i64, n as i64).unwrap();
            assert!(((direct - tab) / direct).abs() < F4::from_f64(1e-70));
        }
    }

    #[test]
    fn random_keys_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (l, m, n) = (rng.gen_range(0..=6), rng.gen_range(0..=6), rng.gen_range(0..=6));
            let (a, b) = (rng.gen_range(0.3..4.0), rng.gen_range(0.3..4.0));
            let exact = base_integral(&key(l, m, n, a, b)).unwrap().to_f64();
            let o = oracle(l, m, n, a, b);
            assert!((exact - o).abs() <= 1e-8 * o.abs().max(1.0), "({l},{m},{n};{a},{b}) {exact} vs {o}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn positive_and_symmetric(l in 0u32..8, m in 0u32..8, n in 0u32..8, a in 0.2f64..5.0, b in 0.2f64..5.0) {
            let g = base_integral(&key(l, m, n, a, b)).unwrap();
            prop_assert!(g > F4::zero());
            let swapped = base_integral(&key(m, l, n, b, a)).unwrap();
            prop_assert!(((g - swapped) / g).abs() < F4::from_f64(1e-70));
        }

        #[test]
        fn scaling_law(l in 0u32..7, m in 0u32..7, n in 0u32..7, a in 0.3f64..4.0, b in 0.3f64..4.0, s in 0.25f64..4.0) {
            let g = base_integral(&key(l, m, n, a, b)).unwrap();
            let sr = F4::from_f64(s);
            let scaled = IntegralKey::new(l, m, n, sr * F4::from_f64(a), sr * F4::from_f64(b));
            let gs = base_integral(&scaled).unwrap();
            let expect = g * sr.powi(-((l + m + n + 3) as i32));
            prop_assert!(((gs - expect) / expect).abs() < F4::from_f64(1e-70));
        }

        #[test]
        fn derivative_in_a_lowers_to_next_power(l in 0u32..6, m in 0u32..6, n in 0u32..6, a in 0.3f64..4.0, b in 0.3f64..4.0) {
            let h = 1e-6;
            let up = base_integral(&key(l, m, n, a + h, b)).unwrap().to_f64();
            let down = base_integral(&key(l, m, n, a - h, b)).unwrap().to_f64();
            let fd = (up - down) / (2.0 * h);
            let next = base_integral(&key(l + 1, m, n, a, b)).unwrap().to_f64();
            prop_assert!((fd + next).abs() <= 1e-4 * next.abs());
        }
    }
}
