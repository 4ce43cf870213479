//! Gauss–Laguerre rules for `∫₀^∞ f(x) e^{-x} dx`.
//!
//! Nodes are the zeros of the Laguerre polynomial `L_n`. Each one is
//! bracketed by Sturm-sequence bisection on the Jacobi matrix, then polished
//! by Newton's method on the three-term recurrence at 128 bits and again at
//! the target precision. Weights are `x_i / (n L_{n-1}(x_i))²`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::precision::{BigFloat, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature order must be at least 1")]
    ZeroOrder,
    #[error("Newton iteration for Laguerre root {index} of order {order} did not converge")]
    NoConvergence { order: usize, index: usize },
    #[error("Laguerre roots of order {0} are not strictly increasing")]
    Misordered(usize),
}

#[derive(Debug, Clone)]
pub struct QuadratureRule<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
    /// `w_i e^{x_i}`, the weights for integrands without the `e^{-x}` factor.
    scaled_weights: Vec<R>,
    scale: R,
}

/// `(L_n(x), L_{n-1}(x))` by the three-term recurrence.
fn laguerre_pair<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p_prev = R::zero();
    let mut p = R::one();
    for k in 0..n {
        let kk = R::from_usize(k);
        let next = ((R::from_usize(2 * k + 1) - x) * p - kk * p_prev) / R::from_usize(k + 1);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Newton step `L_n / L_n'` using `x L_n' = n (L_n - L_{n-1})`.
fn newton_step<R: Real>(n: usize, x: R) -> (R, R) {
    let (p, p1) = laguerre_pair(n, x);
    let dp = R::from_usize(n) * (p - p1) / x;
    (p / dp, p1)
}

/// Eigenvalues of the Jacobi matrix below `x` (diagonal `2k+1`, off-diagonal
/// `k`), counted with a Sturm sequence.
fn sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0 - x;
    if q < 0.0 {
        count += 1;
    }
    for k in 1..n {
        let kf = k as f64;
        let denom = if q == 0.0 { f64::EPSILON * kf } else { q };
        q = (2.0 * kf + 1.0) - x - kf * kf / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Roots of `L_n` to about double precision by bisection on the Sturm count.
fn bracketed_roots(n: usize) -> Vec<f64> {
    let upper = 4.0 * n as f64 + 2.0;
    (0..n)
        .map(|i| {
            let (mut lo, mut hi) = (0.0f64, upper);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(n, mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Newton on `L_n` from `x` until the step reaches round-off. Recurrence noise
/// grows with `n`, so a step that stops shrinking once already below
/// `sqrt(eps)` relative also counts as converged.
fn polish<R: Real>(n: usize, mut x: R, max_iter: usize) -> Option<R> {
    let strict = R::epsilon().mul_pow2(4);
    let loose = R::epsilon().sqrt();
    let mut prev: Option<R> = None;
    for _ in 0..max_iter {
        let (step, _) = newton_step(n, x);
        let size = step.abs();
        if size <= x.abs() * strict {
            return Some(x - step);
        }
        if let Some(p) = prev {
            if size >= p && size <= x.abs() * loose {
                return Some(x);
            }
        }
        x -= step;
        prev = Some(size);
    }
    None
}

type Coarse = BigFloat<2>;

/// Roots of `L_n` at 128 bits, polished from the bracketed estimates.
fn coarse_roots(n: usize) -> Result<Vec<Coarse>, QuadratureError> {
    let mut roots = Vec::with_capacity(n);
    for (i, guess) in bracketed_roots(n).into_iter().enumerate() {
        match polish(n, Coarse::from_f64(guess), 40) {
            Some(x) if x > Coarse::zero() => roots.push(x),
            _ => return Err(QuadratureError::NoConvergence { order: n, index: i }),
        }
    }
    if roots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuadratureError::Misordered(n));
    }
    Ok(roots)
}

impl<R: Real> QuadratureRule<R> {
    pub fn gauss_laguerre(n: usize) -> Result<Self, QuadratureError> {
        if n == 0 {
            return Err(QuadratureError::ZeroOrder);
        }
        let coarse = coarse_roots(n)?;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut scaled_weights = Vec::with_capacity(n);
        for (i, c) in coarse.iter().enumerate() {
            let x: R = if R::BITS <= Coarse::BITS {
                c.convert()
            } else {
                polish(n, c.convert(), 20).ok_or(QuadratureError::NoConvergence { order: n, index: i })?
            };
            let (_, p1) = laguerre_pair(n, x);
            let nn = R::from_usize(n);
            let w = x / (nn * nn * p1 * p1);
            nodes.push(x);
            weights.push(w);
            scaled_weights.push(w * x.exp());
        }
        Ok(Self {
            nodes,
            weights,
            scaled_weights,
            scale: R::one(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[R] {
        &self.scaled_weights
    }

    pub fn scale(&self) -> R {
        self.scale
    }

    /// The same rule applied through `r = x / scale`.
    pub fn with_scale(&self, scale: R) -> Self {
        assert!(scale > R::zero(), "quadrature scale must be positive");
        Self {
            scale,
            ..self.clone()
        }
    }

    /// `∫₀^∞ g(x) e^{-x} dx`.
    pub fn integrate_weighted(&self, g: impl Fn(R) -> R) -> R {
        let mut acc = R::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * g(*x);
        }
        acc
    }

    /// `∫₀^∞ f(r) dr` through the mapping `r = x / scale`, summed in
    /// ascending node order.
    pub fn integrate(&self, f: impl Fn(R) -> R) -> R {
        let mut acc = R::zero();
        for (x, w) in self.nodes.iter().zip(&self.scaled_weights) {
            acc += *w * f(*x / self.scale);
        }
        acc / self.scale
    }

    pub fn to_f64(&self) -> QuadratureRule<f64> {
        QuadratureRule {
            nodes: self.nodes.iter().map(|x| x.to_f64()).collect(),
            weights: self.weights.iter().map(|x| x.to_f64()).collect(),
            scaled_weights: self.scaled_weights.iter().map(|x| x.to_f64()).collect(),
            scale: self.scale.to_f64(),
        }
    }
}

/// Hardware-precision rule of order `n`, generated at 128 bits and cached.
pub fn gauss_laguerre_f64(n: usize) -> Result<Arc<QuadratureRule<f64>>, QuadratureError> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(QuadratureRule::<Coarse>::gauss_laguerre(n)?.to_f64());
    cache.lock().unwrap().insert(n, rule.clone());
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::factorial;

    type F4 = BigFloat<4>;

    #[test]
    fn one_point_rule() {
        let r = QuadratureRule::<F4>::gauss_laguerre(1).unwrap();
        assert_eq!(r.nodes()[0].to_f64(), 1.0);
        assert!((r.weights()[0] - F4::one()).abs() < F4::from_f64(1e-70));
    }

    #[test]
    fn two_point_rule_matches_closed_form() {
        let r = QuadratureRule::<F4>::gauss_laguerre(2).unwrap();
        let s2 = F4::from_i64(2).sqrt();
        let two = F4::from_i64(2);
        let four = F4::from_i64(4);
        let expect_nodes = [two - s2, two + s2];
        let expect_weights = [(two + s2) / four, (two - s2) / four];
        for i in 0..2 {
            assert!((r.nodes()[i] - expect_nodes[i]).abs() < F4::from_f64(1e-70));
            assert!((r.weights()[i] - expect_weights[i]).abs() < F4::from_f64(1e-70));
        }
        let cube = r.integrate_weighted(|x| x * x * x);
        assert!((cube - F4::from_i64(6)).abs() < F4::from_f64(1e-70));
    }

    #[test]
    fn moments_are_exact_up_to_degree_2n_minus_1() {
        for n in [1usize, 2, 3, 5, 8, 16, 40] {
            let r = QuadratureRule::<F4>::gauss_laguerre(n).unwrap();
            for p in 0..2 * n {
                let m = r.integrate_weighted(|x| x.powi(p as i32));
                let exact = factorial::<F4>(p as u32);
                assert!(
                    ((m - exact) / exact).abs() < F4::from_f64(1e-13),
                    "n={n} p={p}"
                );
            }
        }
    }

    #[test]
    fn large_orders_are_well_formed() {
        for n in [200usize, 400] {
            let r = gauss_laguerre_f64(n).unwrap();
            assert_eq!(r.order(), n);
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes()[0] > 0.0);
            let wsum: f64 = r.weights().iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            // ∫₀^∞ e^{-r/2} dr = 2 through the scaled weights
            let half = r.integrate(|x| (-0.5 * x).exp());
            assert!((half - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_order_is_an_error() {
        assert_eq!(
            QuadratureRule::<F4>::gauss_laguerre(0).unwrap_err(),
            QuadratureError::ZeroOrder
        );
    }
}
