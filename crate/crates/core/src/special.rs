//! Integer-order special functions.

use thiserror::Error;

use crate::precision::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("incomplete gamma needs x >= 0, got {0}")]
    NegativeArgument(f64),
    #[error("incomplete gamma order must be >= 1")]
    ZeroOrder,
}

/// `n!`, exact whenever it fits the mantissa.
pub fn factorial<R: Real>(n: u32) -> R {
    let mut acc: u64 = 1;
    let mut k = 2u32;
    while k <= n.min(20) {
        acc *= k as u64;
        k += 1;
    }
    let mut r = R::from_i64(acc as i64);
    while k <= n {
        r *= R::from_i64(k as i64);
        k += 1;
    }
    r
}

/// `0!, 1!, …, n!`.
pub fn factorial_table<R: Real>(n: usize) -> Vec<R> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(R::one());
    for k in 1..=n {
        let prev = out[k - 1];
        out.push(prev * R::from_usize(k));
    }
    out
}

/// Binomial coefficients `C(n, k)` for `n <= max`, as a triangle.
pub fn binomial_table<R: Real>(max: usize) -> Vec<Vec<R>> {
    let mut rows: Vec<Vec<R>> = Vec::with_capacity(max + 1);
    for n in 0..=max {
        let mut row = vec![R::one(); n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// `e^{-x} sum_{j<n} x^j / j!`
fn truncated_exp_series<R: Real>(n: u32, x: R) -> R {
    let mut term = R::one();
    let mut sum = R::one();
    for j in 1..n {
        term = term * x / R::from_i64(j as i64);
        sum += term;
    }
    sum * (-x).exp()
}

/// Lower incomplete gamma `γ(n, x) = ∫₀ˣ t^{n-1} e^{-t} dt` from the finite
/// closed form `(n-1)! (1 - e^{-x} Σ_{j<n} x^j/j!)`.
///
/// The subtraction loses digits when `x` is small against `n`; callers that
/// need relative accuracy there should use [`IncompleteGammaTable`].
pub fn lower_incomplete_gamma<R: Real>(n: u32, x: R) -> Result<R, SpecialError> {
    check_args(n, x)?;
    let full = factorial::<R>(n - 1);
    Ok(full * (R::one() - truncated_exp_series(n, x)))
}

/// Upper incomplete gamma `Γ(n, x) = (n-1)! e^{-x} Σ_{j<n} x^j/j!`.
pub fn upper_incomplete_gamma<R: Real>(n: u32, x: R) -> Result<R, SpecialError> {
    check_args(n, x)?;
    Ok(factorial::<R>(n - 1) * truncated_exp_series(n, x))
}

fn check_args<R: Real>(n: u32, x: R) -> Result<(), SpecialError> {
    if n == 0 {
        return Err(SpecialError::ZeroOrder);
    }
    if x < R::zero() {
        return Err(SpecialError::NegativeArgument(x.to_f64()));
    }
    Ok(())
}

/// `γ(n, x)` and `Γ(n, x)` for `n = 1..=max_order` at one fixed `x`, each
/// computed without cancellation.
///
/// The upper function follows the upward recurrence
/// `Γ(n+1) = n Γ(n) + x^n e^{-x}` (all terms positive). For `x` up to the
/// top order the lower function starts from its positive power series there
/// and recurs downward with `γ(n) = (γ(n+1) + x^n e^{-x}) / n`; beyond it,
/// `γ(n) = (n-1)! - Γ(n)`.
#[derive(Debug, Clone)]
pub struct IncompleteGammaTable<R> {
    lower: Vec<R>,
    upper: Vec<R>,
}

impl<R: Real> IncompleteGammaTable<R> {
    pub fn new(max_order: usize, x: R) -> Self {
        assert!(max_order >= 1);
        assert!(x >= R::zero());
        let ex = (-x).exp();
        // x^k e^{-x} for k = 0..=max_order
        let mut pow_ex = Vec::with_capacity(max_order + 1);
        pow_ex.push(ex);
        for k in 1..=max_order {
            let prev = pow_ex[k - 1];
            pow_ex.push(prev * x);
        }
        let mut upper = vec![R::zero(); max_order + 1];
        upper[1] = ex;
        for n in 1..max_order {
            upper[n + 1] = R::from_usize(n) * upper[n] + pow_ex[n];
        }
        let mut lower = vec![R::zero(); max_order + 1];
        if x > R::from_usize(max_order) {
            // Γ(n, x) < Γ(n)/2 here, so the complement costs at most a bit.
            let mut fact = R::one();
            for n in 1..=max_order {
                lower[n] = fact - upper[n];
                fact *= R::from_usize(n);
            }
        } else {
            lower[max_order] = Self::lower_series(max_order, x, pow_ex[max_order]);
            for n in (1..max_order).rev() {
                lower[n] = (lower[n + 1] + pow_ex[n]) / R::from_usize(n);
            }
        }
        Self { lower, upper }
    }

    /// `γ(n, x) = x^n e^{-x} Σ_k x^k / (n (n+1) … (n+k))`.
    fn lower_series(n: usize, x: R, xn_ex: R) -> R {
        if x.is_zero() {
            return R::zero();
        }
        let tiny = R::epsilon().mul_pow2(-8);
        let mut term = R::one() / R::from_usize(n);
        let mut sum = term;
        let mut k = 1usize;
        loop {
            term = term * x / R::from_usize(n + k);
            sum += term;
            if term < sum * tiny {
                break;
            }
            k += 1;
            assert!(k < 1_000_000, "incomplete gamma series did not converge");
        }
        sum * xn_ex
    }

    pub fn lower(&self, n: usize) -> R {
        self.lower[n]
    }

    pub fn upper(&self, n: usize) -> R {
        self.upper[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigFloat;

    type F4 = BigFloat<4>;

    #[test]
    fn factorials() {
        assert_eq!(factorial::<F4>(0).to_f64(), 1.0);
        assert_eq!(factorial::<F4>(5).to_f64(), 120.0);
        // repeated multiplication in exact integers
        let mut oracle: u128 = 1;
        for k in 2..=20u128 {
            oracle *= k;
        }
        assert_eq!(oracle, 2432902008176640000);
        assert_eq!(factorial::<F4>(20).to_digits(19), "2432902008176640000");
        let mut big: u128 = 1;
        for k in 2..=30u128 {
            big *= k;
        }
        assert_eq!(factorial::<F4>(30), F4::parse_decimal(&big.to_string()).unwrap());
        assert_eq!(factorial_table::<F4>(30)[30], factorial::<F4>(30));
    }

    #[test]
    fn binomials() {
        let t = binomial_table::<f64>(10);
        assert_eq!(t[10][3], 120.0);
        assert_eq!(t[7][0], 1.0);
        assert_eq!(t[7][7], 1.0);
    }

    #[test]
    fn incomplete_gamma_examples() {
        assert_eq!(lower_incomplete_gamma(1, F4::zero()).unwrap().to_f64(), 0.0);
        assert_eq!(lower_incomplete_gamma(3, F4::zero()).unwrap().to_f64(), 0.0);
        assert_eq!(upper_incomplete_gamma(3, F4::zero()).unwrap().to_f64(), 2.0);
        let g = lower_incomplete_gamma(2, F4::one()).unwrap().to_f64();
        assert!((g - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-15);
        // midpoint-rule oracle for ∫₀¹ t e^{-t} dt
        let m = 200_000;
        let h = 1.0 / m as f64;
        let quad: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                t * (-t).exp() * h
            })
            .sum();
        assert!((g - quad).abs() < 1e-10);
        assert!((g - 0.26424112).abs() < 1e-8);
        assert_eq!(
            lower_incomplete_gamma(2, F4::from_f64(-1.0)),
            Err(SpecialError::NegativeArgument(-1.0))
        );
        assert_eq!(upper_incomplete_gamma(0, F4::one()), Err(SpecialError::ZeroOrder));
    }

    #[test]
    fn lower_plus_upper_is_full_gamma() {
        for n in 1..15u32 {
            for x in [0.0, 0.01, 0.7, 3.0, 12.5, 40.0] {
                let xr = F4::from_f64(x);
                let sum = lower_incomplete_gamma(n, xr).unwrap() + upper_incomplete_gamma(n, xr).unwrap();
                let full = factorial::<F4>(n - 1);
                assert!((sum - full).abs() <= full * F4::from_f64(1e-70), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn lower_is_monotone_in_x() {
        for n in 1..8u32 {
            let mut prev = F4::zero();
            for i in 0..60 {
                let g = lower_incomplete_gamma(n, F4::from_f64(i as f64 * 0.25)).unwrap();
                assert!(g >= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn stable_table_agrees_with_closed_forms() {
        for x in [0.0, 1e-3, 0.5, 4.0, 30.0, 90.0] {
            let xr = F4::from_f64(x);
            let table = IncompleteGammaTable::new(25, xr);
            for n in 1..=25u32 {
                let lo = lower_incomplete_gamma(n, xr).unwrap();
                let up = upper_incomplete_gamma(n, xr).unwrap();
                let full = factorial::<F4>(n - 1);
                let tol = full * F4::from_f64(1e-65);
                assert!((table.lower(n as usize) - lo).abs() <= tol, "lower n={n} x={x}");
                assert!((table.upper(n as usize) - up).abs() <= tol, "upper n={n} x={x}");
            }
        }
        // Where the closed form cancels completely the table keeps relative accuracy.
        let t = IncompleteGammaTable::<f64>::new(30, 1e-3);
        let expect = 1e-3f64.powi(30) / 30.0;
        assert!((t.lower(30) / expect - 1.0).abs() < 1e-3);
        // Far out in double precision everything stays finite.
        let far = IncompleteGammaTable::<f64>::new(40, 2000.0);
        assert_eq!(far.lower(5), 24.0);
        assert_eq!(far.upper(5), 0.0);
    }
}
