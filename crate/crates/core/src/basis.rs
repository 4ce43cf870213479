//! Symmetrized Hylleraas basis.
//!
//! A term `(k, m, n)` stands for
//! `e^{-α r₁ - β r₂} r₁₂^k r₁^m r₂^n + e^{-α r₂ - β r₁} r₁₂^k r₂^m r₁^n`.
//! Only `m <= n` is kept; the swapped triple spans the same function when
//! `α = β` and is redundant otherwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("nonlinear parameters must be positive (alpha = {alpha}, beta = {beta})")]
    NonPositiveExponent { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HylleraasTerm {
    /// Power of `r₁₂`.
    pub k: u32,
    /// Power of `r₁`.
    pub m: u32,
    /// Power of `r₂`.
    pub n: u32,
}

impl HylleraasTerm {
    pub fn new(k: u32, m: u32, n: u32) -> Self {
        Self { k, m, n }
    }

    pub fn degree(&self) -> u32 {
        self.k + self.m + self.n
    }
}

/// All terms with `k + m + n <= omega` and `m <= n`, ordered by `k`, then
/// `m`, then `n`.
pub fn enumerate_basis(omega: u32) -> Vec<HylleraasTerm> {
    let mut out = Vec::new();
    for k in 0..=omega {
        for m in 0..=(omega - k) {
            for n in m..=(omega - k - m) {
                out.push(HylleraasTerm { k, m, n });
            }
        }
    }
    out
}

/// Number of terms in [`enumerate_basis`], counted directly.
pub fn basis_size(omega: u32) -> usize {
    // For each k, pairs m <= n with m + n <= j where j = omega - k.
    (0..=omega as usize)
        .map(|j| {
            let half = j / 2;
            (0..=half).map(|m| j - 2 * m + 1).sum::<usize>()
        })
        .sum()
}

/// Basis terms together with the nonlinear parameters `α`, `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec<R> {
    pub omega: u32,
    pub alpha: R,
    pub beta: R,
    pub terms: Vec<HylleraasTerm>,
}

impl<R: crate::precision::Real> BasisSpec<R> {
    pub fn new(omega: u32, alpha: R, beta: R) -> Result<Self, BasisError> {
        if !(alpha > R::zero()) || !(beta > R::zero()) {
            return Err(BasisError::NonPositiveExponent {
                alpha: alpha.to_f64(),
                beta: beta.to_f64(),
            });
        }
        Ok(Self {
            omega,
            alpha,
            beta,
            terms: enumerate_basis(omega),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same terms with new exponents.
    pub fn with_exponents(&self, alpha: R, beta: R) -> Result<Self, BasisError> {
        Self::new(self.omega, alpha, beta)
    }

    pub fn convert<T: crate::precision::Real>(&self) -> BasisSpec<T> {
        BasisSpec {
            omega: self.omega,
            alpha: self.alpha.convert(),
            beta: self.beta.convert(),
            terms: self.terms.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn sizes_for_published_basis_sets() {
        let expected = [125, 161, 203, 252, 308, 372, 444];
        for (omega, n) in (9..=15).zip(expected) {
            assert_eq!(basis_size(omega), n);
            assert_eq!(enumerate_basis(omega).len(), n);
        }
        assert_eq!(enumerate_basis(0), vec![HylleraasTerm::new(0, 0, 0)]);
        assert_eq!(basis_size(0), 1);
    }

    #[test]
    fn rejects_nonpositive_exponents() {
        assert!(BasisSpec::new(3, 1.0, 0.0).is_err());
        assert!(BasisSpec::new(3, -1.0, 1.0).is_err());
        assert_eq!(BasisSpec::new(3, 1.0, 2.0).unwrap().len(), basis_size(3));
    }

    proptest! {
        #[test]
        fn enumeration_is_canonical(omega in 0u32..20) {
            let terms = enumerate_basis(omega);
            prop_assert_eq!(terms.len(), basis_size(omega));
            prop_assert_eq!(&terms, &enumerate_basis(omega));
            let set: HashSet<_> = terms.iter().copied().collect();
            prop_assert_eq!(set.len(), terms.len());
            for t in &terms {
                prop_assert!(t.degree() <= omega && t.m <= t.n);
                let swapped = HylleraasTerm::new(t.k, t.n, t.m);
                prop_assert_eq!(set.contains(&swapped), t.m == t.n);
            }
            prop_assert!(terms.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
