//! Extended-precision scalar arithmetic.
//!
//! Everything numerical in this crate is generic over [`Real`]. The two
//! implementations are `f64` (fast paths and tests) and [`BigFloat<L>`]
//! with `64 * L` mantissa bits. A [`PrecisionPolicy`] names a bit count;
//! [`with_real!`](crate::with_real) turns it into a concrete type.

mod decimal;
mod float;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decimal::round_trip_digits;
pub use float::{BigFloat, BinaryParts};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecisionError {
    #[error("cannot parse decimal number {0:?}")]
    Parse(String),
    #[error("invalid precision policy: {0}")]
    Policy(String),
}

/// Scalar arithmetic used by every numerical routine.
pub trait Real:
    Copy
    + Send
    + Sync
    + 'static
    + Default
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Mantissa bits.
    const BITS: u32;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    fn to_f64(self) -> f64;
    fn is_zero(self) -> bool;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn mul_pow2(self, k: i64) -> Self;
    fn pi() -> Self;
    fn to_parts(&self) -> BinaryParts;
    fn from_parts(p: &BinaryParts) -> Self;

    /// Unit roundoff, `2^-BITS`.
    fn epsilon() -> Self {
        Self::one().mul_pow2(-(Self::BITS as i64))
    }

    fn from_usize(v: usize) -> Self {
        Self::from_i64(v as i64)
    }

    /// Round into another precision.
    fn convert<T: Real>(self) -> T {
        T::from_parts(&self.to_parts())
    }

    /// Correctly rounded parse of decimal text.
    fn parse_decimal(text: &str) -> Result<Self, PrecisionError> {
        let limbs = (Self::BITS as usize).div_ceil(64);
        decimal::parse(text, limbs).map(|p| Self::from_parts(&p))
    }

    /// Shortest scientific form that parses back to the identical value.
    fn to_decimal(&self) -> String {
        decimal::to_scientific(&self.to_parts(), round_trip_digits(Self::BITS))
    }

    /// `sig` significant digits, positional notation where sensible.
    fn to_digits(&self, sig: usize) -> String {
        decimal::to_plain(&self.to_parts(), sig)
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const BITS: u32 = 53;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn mul_pow2(self, k: i64) -> Self {
        float::ldexp(self, k)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn to_parts(&self) -> BinaryParts {
        BigFloat::<1>::from_f64(*self).to_parts()
    }
    fn from_parts(p: &BinaryParts) -> Self {
        BigFloat::<1>::from_parts(p).to_f64()
    }
    fn parse_decimal(text: &str) -> Result<Self, PrecisionError> {
        text.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| PrecisionError::Parse(text.to_string()))
    }
    fn to_decimal(&self) -> String {
        format!("{self:e}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum ConstantId {
    Ln2,
    Pi,
}

fn constant_cache() -> &'static Mutex<HashMap<(ConstantId, usize), BinaryParts>> {
    static CACHE: OnceLock<Mutex<HashMap<(ConstantId, usize), BinaryParts>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached<const L: usize>(id: ConstantId, compute: fn() -> BigFloat<L>) -> BigFloat<L> {
    if let Some(p) = constant_cache().lock().unwrap().get(&(id, L)) {
        return BigFloat::from_parts(p);
    }
    let v = compute();
    constant_cache()
        .lock()
        .unwrap()
        .insert((id, L), v.to_parts());
    v
}

/// sum_k x^(2k+1) / (2k+1) for small |x| given as 1/q.
fn atanh_inv<const L: usize>(q: i64) -> BigFloat<L> {
    let x = BigFloat::<L>::one() / BigFloat::from_i64(q);
    let x2 = x * x;
    let tiny = BigFloat::<L>::one().mul_pow2(-(BigFloat::<L>::BITS as i64) - 8);
    let mut power = x;
    let mut sum = x;
    let mut k = 1i64;
    loop {
        power *= x2;
        let term = power / BigFloat::from_i64(2 * k + 1);
        if term.abs() < tiny {
            break;
        }
        sum += term;
        k += 1;
    }
    sum
}

/// Alternating arctangent series at 1/q.
fn atan_inv<const L: usize>(q: i64) -> BigFloat<L> {
    let x = BigFloat::<L>::one() / BigFloat::from_i64(q);
    let x2 = x * x;
    let tiny = BigFloat::<L>::one().mul_pow2(-(BigFloat::<L>::BITS as i64) - 8);
    let mut power = x;
    let mut sum = x;
    let mut k = 1i64;
    loop {
        power *= x2;
        let term = power / BigFloat::from_i64(2 * k + 1);
        if term.abs() < tiny {
            break;
        }
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum
}

fn ln2<const L: usize>() -> BigFloat<L> {
    cached(ConstantId::Ln2, || atanh_inv::<L>(3).mul_pow2(1))
}

fn pi_big<const L: usize>() -> BigFloat<L> {
    cached(ConstantId::Pi, || {
        atan_inv::<L>(5).mul_pow2(4) - atan_inv::<L>(239).mul_pow2(2)
    })
}

fn exp_big<const L: usize>(x: BigFloat<L>) -> BigFloat<L> {
    if x.is_zero() {
        return BigFloat::one();
    }
    let k = (x.to_f64() / std::f64::consts::LN_2).round();
    assert!(k.abs() < 1e15, "exp argument out of range");
    let r = x - ln2::<L>() * BigFloat::from_f64(k);
    // e^r = (e^(r/2^m))^(2^m), carried as t = e^s - 1 to keep relative accuracy.
    const HALVINGS: i64 = 12;
    let s = r.mul_pow2(-HALVINGS);
    let tiny = BigFloat::<L>::one().mul_pow2(-(BigFloat::<L>::BITS as i64) - 8);
    let mut term = s;
    let mut t = s;
    let mut n = 2i64;
    loop {
        term = term * s / BigFloat::from_i64(n);
        if term.abs() < tiny {
            break;
        }
        t += term;
        n += 1;
    }
    let two = BigFloat::<L>::from_i64(2);
    for _ in 0..HALVINGS {
        t *= two + t;
    }
    (BigFloat::one() + t).mul_pow2(k as i64)
}

fn ln_big<const L: usize>(x: BigFloat<L>) -> BigFloat<L> {
    assert!(
        !x.is_zero() && !x.is_negative(),
        "ln of non-positive value {x:?}"
    );
    let one = BigFloat::<L>::one();
    if (x - one).abs() < one.mul_pow2(-3) {
        // 2 atanh((x-1)/(x+1)) keeps relative accuracy near 1.
        let u = (x - one) / (x + one);
        if u.is_zero() {
            return u;
        }
        let u2 = u * u;
        let tiny = u.abs().mul_pow2(-(BigFloat::<L>::BITS as i64) - 8);
        let mut power = u;
        let mut sum = u;
        let mut k = 1i64;
        loop {
            power *= u2;
            let term = power / BigFloat::from_i64(2 * k + 1);
            if term.abs() < tiny {
                break;
            }
            sum += term;
            k += 1;
        }
        return sum.mul_pow2(1);
    }
    let e = x.exponent();
    let f = x.mul_pow2(-e);
    let mut y = BigFloat::<L>::from_f64(f.to_f64().ln());
    // Halley steps on exp(y) = f, cubic from a ~20-bit-safe seed.
    let mut bits = 20u32;
    while bits < BigFloat::<L>::BITS + 8 {
        let ey = exp_big(y);
        y += ((f - ey) / (f + ey)).mul_pow2(1);
        bits *= 3;
    }
    y + ln2::<L>() * BigFloat::from_i64(e)
}

impl<const L: usize> Real for BigFloat<L> {
    const BITS: u32 = 64 * L as u32;

    #[inline]
    fn zero() -> Self {
        Self::ZERO
    }
    #[inline]
    fn one() -> Self {
        BigFloat::one()
    }
    fn from_f64(x: f64) -> Self {
        BigFloat::from_f64(x)
    }
    fn from_i64(v: i64) -> Self {
        BigFloat::from_i64(v)
    }
    fn to_f64(self) -> f64 {
        BigFloat::to_f64(&self)
    }
    #[inline]
    fn is_zero(self) -> bool {
        BigFloat::is_zero(&self)
    }
    #[inline]
    fn abs(self) -> Self {
        BigFloat::abs(self)
    }
    fn sqrt(self) -> Self {
        BigFloat::sqrt(&self)
    }
    fn exp(self) -> Self {
        exp_big(self)
    }
    fn ln(self) -> Self {
        ln_big(self)
    }
    fn recip(self) -> Self {
        BigFloat::recip(&self)
    }
    fn powi(self, n: i32) -> Self {
        BigFloat::powi(&self, n)
    }
    #[inline]
    fn mul_pow2(self, k: i64) -> Self {
        BigFloat::mul_pow2(self, k)
    }
    fn pi() -> Self {
        pi_big::<L>()
    }
    fn to_parts(&self) -> BinaryParts {
        BigFloat::to_parts(self)
    }
    fn from_parts(p: &BinaryParts) -> Self {
        BigFloat::from_parts(p)
    }
}

pub const DEFAULT_BITS: u32 = 256;
pub const MAX_BITS: u32 = 4096;
/// Environment variable overriding [`PrecisionPolicy::default`]'s bit count.
pub const PRECISION_ENV: &str = "HYLLERAAS_PRECISION_BITS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub mantissa_bits: u32,
    pub escalation_factor: u32,
    pub max_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            mantissa_bits: DEFAULT_BITS,
            escalation_factor: 2,
            max_bits: MAX_BITS,
        }
    }
}

impl PrecisionPolicy {
    pub fn with_bits(bits: u32) -> Result<Self, PrecisionError> {
        let p = Self {
            mantissa_bits: bits,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Default policy, with the bit count taken from the environment if set.
    pub fn from_env() -> Result<Self, PrecisionError> {
        match std::env::var(PRECISION_ENV) {
            Ok(v) => {
                let bits = v.trim().parse::<u32>().map_err(|_| {
                    PrecisionError::Policy(format!("{PRECISION_ENV}={v:?} is not an integer"))
                })?;
                Self::with_bits(bits)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), PrecisionError> {
        if self.mantissa_bits == 0 {
            return Err(PrecisionError::Policy("mantissa_bits must be positive".into()));
        }
        if self.escalation_factor < 2 {
            return Err(PrecisionError::Policy("escalation_factor must be at least 2".into()));
        }
        if self.max_bits > MAX_BITS {
            return Err(PrecisionError::Policy(format!("max_bits above {MAX_BITS}")));
        }
        if self.mantissa_bits > self.max_bits {
            return Err(PrecisionError::Policy("mantissa_bits exceeds max_bits".into()));
        }
        Ok(())
    }

    /// Bits actually carried: the next supported limb width.
    pub fn effective_bits(&self) -> u32 {
        64 * limbs_for_bits(self.mantissa_bits) as u32
    }

    /// The next rung of the escalation ladder, if any.
    pub fn escalated(&self) -> Option<Self> {
        let bits = self.effective_bits().saturating_mul(self.escalation_factor);
        let bits = 64 * limbs_for_bits(bits.min(MAX_BITS)) as u32;
        (bits <= self.max_bits && bits > self.effective_bits()).then_some(Self {
            mantissa_bits: bits,
            ..*self
        })
    }
}

/// Supported limb counts are powers of two from 2 to 64.
pub fn limbs_for_bits(bits: u32) -> usize {
    (bits as usize).div_ceil(64).next_power_of_two().clamp(2, 64)
}

/// Run `$body` with `$R` bound to the [`BigFloat`] width selected by `$bits`.
#[macro_export]
macro_rules! with_real {
    ($bits:expr, $R:ident => $body:expr) => {{
        match $crate::precision::limbs_for_bits($bits) {
            2 => {
                type $R = $crate::precision::BigFloat<2>;
                $body
            }
            4 => {
                type $R = $crate::precision::BigFloat<4>;
                $body
            }
            8 => {
                type $R = $crate::precision::BigFloat<8>;
                $body
            }
            16 => {
                type $R = $crate::precision::BigFloat<16>;
                $body
            }
            32 => {
                type $R = $crate::precision::BigFloat<32>;
                $body
            }
            _ => {
                type $R = $crate::precision::BigFloat<64>;
                $body
            }
        }
    }};
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type F4 = BigFloat<4>;
    type F8 = BigFloat<8>;

    const PI_60: &str = "3.14159265358979323846264338327950288419716939937510582097494";
    const LN2_60: &str = "0.693147180559945309417232121458176568075500134360255254120680";
    const E_60: &str = "2.71828182845904523536028747135266249775724709369995957496697";

    #[test]
    fn constants_match_reference_digits() {
        let pi = F4::pi();
        assert_eq!(pi.to_digits(60), PI_60[..61]);
        assert_eq!(ln2::<4>().to_digits(60), LN2_60[..62]);
        assert_eq!(F4::one().exp().to_digits(60), E_60[..61]);
        assert!((F8::pi() - F8::parse_decimal(PI_60).unwrap()).abs() < F8::from_f64(1e-58));
    }

    #[test]
    fn exp_and_ln_are_inverse() {
        for x in [-30.0, -2.5, -1e-9, 1e-9, 0.3, 1.0, 7.25, 50.0] {
            let v = F4::from_f64(x);
            let back = v.exp().ln();
            assert!((back - v).abs() <= v.abs().max(F4::one()) * F4::from_f64(1e-74), "x = {x}");
        }
        assert!((F4::from_i64(10).ln().to_f64() - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn policy_ladder() {
        let p = PrecisionPolicy::default();
        assert_eq!(p.effective_bits(), 256);
        let ladder: Vec<u32> = std::iter::successors(Some(p), |q| q.escalated())
            .map(|q| q.effective_bits())
            .collect();
        assert_eq!(ladder, vec![256, 512, 1024, 2048, 4096]);
        assert!(PrecisionPolicy::with_bits(0).is_err());
        assert!(PrecisionPolicy::with_bits(5000).is_err());
        let bad = PrecisionPolicy {
            escalation_factor: 1,
            ..p
        };
        assert!(bad.validate().is_err());
        assert_eq!(limbs_for_bits(100), 2);
        assert_eq!(limbs_for_bits(300), 8);
    }

    #[test]
    fn dispatch_picks_width() {
        let bits = with_real!(300, R => R::BITS);
        assert_eq!(bits, 512);
    }

    proptest! {
        #[test]
        fn decimal_round_trip_is_bit_exact(a in -1e12f64..1e12, s in -200i64..200) {
            let x = (F4::from_f64(a) / F4::from_i64(7)).mul_pow2(s);
            let text = x.to_decimal();
            let back = F4::parse_decimal(&text).unwrap();
            prop_assert_eq!(back.to_parts(), x.to_parts());
        }

        #[test]
        fn doubled_precision_agrees(a in 0.1f64..10.0, b in 0.1f64..10.0) {
            let lo = [(F4::from_f64(a) / F4::from_f64(b)).sqrt(), F4::from_f64(a).exp(), F4::from_f64(a).ln()];
            let hi = [(F8::from_f64(a) / F8::from_f64(b)).sqrt(), F8::from_f64(a).exp(), F8::from_f64(a).ln()];
            for (l, h) in lo.iter().zip(hi.iter()) {
                let diff = (*h - l.convert::<F8>()).abs();
                prop_assert!(diff <= h.abs() * F8::from_f64(1e-74));
            }
        }
    }
}
