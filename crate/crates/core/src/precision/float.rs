//! Fixed-width binary floating point with `64 * L` mantissa bits.
//!
//! A value is `(-1)^neg * 0.mant * 2^exp` with the mantissa held in `L`
//! little-endian limbs and normalized so that the top bit of the most
//! significant limb is set. Zero is the all-zero mantissa. There are no
//! infinities or NaNs: the exponent is an `i64`, so overflow and underflow
//! do not occur for any quantity this crate computes.
//!
//! Addition and multiplication round to nearest, ties to even, using a full
//! guard limb plus a sticky bit. Division and square root are Newton
//! refinements and are faithful to within an ulp or two.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

const HALF: u64 = 1 << 63;

#[derive(Clone, Copy)]
pub struct BigFloat<const L: usize> {
    neg: bool,
    exp: i64,
    mant: [u64; L],
}

/// Precision-independent view of a binary float, used to move values between
/// limb widths and to and from decimal text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryParts {
    pub neg: bool,
    /// Value is `0.limbs * 2^exp`.
    pub exp: i64,
    /// Little-endian limbs, top bit of the last limb set (empty for zero).
    pub limbs: Vec<u64>,
}

impl<const L: usize> BigFloat<L> {
    pub const BITS: u32 = 64 * L as u32;
    pub const ZERO: Self = Self {
        neg: false,
        exp: 0,
        mant: [0; L],
    };

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.mant[L - 1] == 0
    }

    #[inline]
    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    pub fn one() -> Self {
        let mut mant = [0; L];
        mant[L - 1] = HALF;
        Self {
            neg: false,
            exp: 1,
            mant,
        }
    }

    pub fn from_u64(v: u64) -> Self {
        if v == 0 {
            return Self::ZERO;
        }
        let lz = v.leading_zeros();
        let mut mant = [0; L];
        mant[L - 1] = v << lz;
        Self {
            neg: false,
            exp: 64 - lz as i64,
            mant,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        let mut r = Self::from_u64(v.unsigned_abs());
        r.neg = v < 0 && !r.is_zero();
        r
    }

    /// Exact conversion. Panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "BigFloat::from_f64 on non-finite value {x}");
        if x == 0.0 {
            return Self::ZERO;
        }
        let bits = x.to_bits();
        let field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), field - 1075)
        };
        let mut r = Self::from_u64(m);
        r.exp += e;
        r.neg = x < 0.0;
        r
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let top = self.mant[L - 1];
        // Fold the remaining limbs into a sticky bit so the u64 -> f64
        // conversion sees any nonzero tail.
        let rest = self.mant[..L - 1].iter().any(|&w| w != 0);
        let top = if rest && top & 0x7ff == 0x400 { top | 1 } else { top };
        let v = ldexp(top as f64, self.exp - 64);
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// Binary exponent: the value lies in `[2^(e-1), 2^e)` in magnitude.
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Multiply by `2^k` exactly.
    pub fn mul_pow2(mut self, k: i64) -> Self {
        if !self.is_zero() {
            self.exp += k;
        }
        self
    }

    pub fn abs(mut self) -> Self {
        self.neg = false;
        self
    }

    pub fn to_parts(&self) -> BinaryParts {
        if self.is_zero() {
            return BinaryParts {
                neg: false,
                exp: 0,
                limbs: Vec::new(),
            };
        }
        BinaryParts {
            neg: self.neg,
            exp: self.exp,
            limbs: self.mant.to_vec(),
        }
    }

    /// Round a precision-independent value into this width.
    pub fn from_parts(p: &BinaryParts) -> Self {
        let n = p.limbs.len();
        if n == 0 || p.limbs[n - 1] == 0 {
            return Self::ZERO;
        }
        let mut mant = [0u64; L];
        if n <= L {
            mant[L - n..].copy_from_slice(&p.limbs);
            return Self {
                neg: p.neg,
                exp: p.exp,
                mant,
            };
        }
        let drop = n - L;
        mant.copy_from_slice(&p.limbs[drop..]);
        let guard = p.limbs[drop - 1];
        let sticky = p.limbs[..drop - 1].iter().any(|&w| w != 0);
        Self::round_pack(p.neg, p.exp, mant, guard, sticky)
    }

    fn cmp_mag(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in (0..L).rev() {
            match self.mant[i].cmp(&other.mant[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }

    #[inline]
    fn round_pack(neg: bool, mut exp: i64, mut m: [u64; L], guard: u64, sticky: bool) -> Self {
        let up = guard > HALF || (guard == HALF && (sticky || m[0] & 1 == 1));
        if up {
            let mut i = 0;
            loop {
                let (s, c) = m[i].overflowing_add(1);
                m[i] = s;
                if !c {
                    break;
                }
                i += 1;
                if i == L {
                    m[L - 1] = HALF;
                    exp += 1;
                    break;
                }
            }
        }
        Self { neg, exp, mant: m }
    }

    /// Shift a mantissa right by `d` bits into (limbs, guard limb, sticky).
    #[inline]
    fn shift_right_ext(mant: &[u64; L], d: u64) -> ([u64; L], u64, bool) {
        if d == 0 {
            return (*mant, 0, false);
        }
        if d >= 64 * (L as u64 + 1) {
            return ([0; L], 0, true);
        }
        // ext[0] is the (empty) guard slot, ext[i] = mant[i - 1].
        let ext = |i: usize| -> u64 {
            if i == 0 || i > L {
                0
            } else {
                mant[i - 1]
            }
        };
        let q = (d / 64) as usize;
        let s = (d % 64) as u32;
        let mut sticky = false;
        for i in 1..q.min(L + 1) {
            sticky |= ext(i) != 0;
        }
        if s > 0 {
            sticky |= ext(q) << (64 - s) != 0;
        }
        let get = |j: usize| -> u64 {
            let lo = ext(j + q);
            if s == 0 {
                lo
            } else {
                (lo >> s) | (ext(j + q + 1) << (64 - s))
            }
        };
        let guard = get(0);
        let mut m = [0u64; L];
        for (j, w) in m.iter_mut().enumerate() {
            *w = get(j + 1);
        }
        (m, guard, sticky)
    }

    /// |a| + |b| with `a.exp >= b.exp`, both nonzero.
    #[inline]
    fn add_mag(a: &Self, b: &Self, neg: bool) -> Self {
        let d = (a.exp - b.exp) as u64;
        let (bm, mut guard, mut sticky) = Self::shift_right_ext(&b.mant, d);
        let mut m = [0u64; L];
        let mut carry = false;
        for i in 0..L {
            let (s1, c1) = a.mant[i].overflowing_add(bm[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            m[i] = s2;
            carry = c1 | c2;
        }
        let mut exp = a.exp;
        if carry {
            sticky |= guard & 1 != 0;
            guard = (guard >> 1) | (m[0] << 63);
            for i in 0..L - 1 {
                m[i] = (m[i] >> 1) | (m[i + 1] << 63);
            }
            m[L - 1] = (m[L - 1] >> 1) | HALF;
            exp += 1;
        }
        Self::round_pack(neg, exp, m, guard, sticky)
    }

    /// |a| - |b| with |a| > |b|, both nonzero.
    #[inline]
    fn sub_mag(a: &Self, b: &Self, neg: bool) -> Self {
        let d = (a.exp - b.exp) as u64;
        let (bm, bg, sticky) = Self::shift_right_ext(&b.mant, d);
        // The sticky tail of b makes the true difference slightly smaller:
        // subtract one unit in the guard position and keep sticky set.
        let (g0, br0) = 0u64.overflowing_sub(bg);
        let (mut g, br1) = g0.overflowing_sub(sticky as u64);
        let mut borrow = br0 | br1;
        let mut m = [0u64; L];
        for i in 0..L {
            let (s1, b1) = a.mant[i].overflowing_sub(bm[i]);
            let (s2, b2) = s1.overflowing_sub(borrow as u64);
            m[i] = s2;
            borrow = b1 | b2;
        }
        debug_assert!(!borrow);
        let mut exp = a.exp;
        // Normalize.
        let mut top = L;
        while top > 0 && m[top - 1] == 0 {
            top -= 1;
        }
        if top == 0 && g == 0 {
            return Self::ZERO;
        }
        let lz: u64 = if top == 0 {
            64 * L as u64 + g.leading_zeros() as u64
        } else {
            64 * (L - top) as u64 + m[top - 1].leading_zeros() as u64
        };
        if lz > 0 {
            let q = (lz / 64) as usize;
            let s = (lz % 64) as u32;
            // ext[0] = g, ext[i] = m[i-1]; shift left by lz.
            let ext = |i: isize| -> u64 {
                if i < 0 {
                    0
                } else if i == 0 {
                    g
                } else {
                    m[i as usize - 1]
                }
            };
            let get = |j: usize| -> u64 {
                let src = j as isize - q as isize;
                let hi = ext(src);
                if s == 0 {
                    hi
                } else {
                    (hi << s) | (ext(src - 1) >> (64 - s))
                }
            };
            let mut nm = [0u64; L];
            for (j, w) in nm.iter_mut().enumerate() {
                *w = get(j + 1);
            }
            g = get(0);
            m = nm;
            exp -= lz as i64;
        }
        Self::round_pack(neg, exp, m, g, sticky)
    }

    #[inline]
    fn add_signed(&self, other: &Self, flip: bool) -> Self {
        let bneg = other.neg ^ flip;
        if other.is_zero() {
            return *self;
        }
        if self.is_zero() {
            let mut r = *other;
            r.neg = bneg;
            return r;
        }
        if self.neg == bneg {
            if self.exp >= other.exp {
                Self::add_mag(self, other, self.neg)
            } else {
                Self::add_mag(other, self, self.neg)
            }
        } else {
            match self.cmp_mag(other) {
                Ordering::Greater => Self::sub_mag(self, other, self.neg),
                Ordering::Less => Self::sub_mag(other, self, bneg),
                Ordering::Equal => Self::ZERO,
            }
        }
    }

    #[inline]
    fn mul_ref(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        let a = &self.mant;
        let b = &other.mant;
        let mut buf = [[0u64; L]; 2];
        let p = buf.as_flattened_mut();
        for i in 0..L {
            let mut carry: u128 = 0;
            let ai = a[i] as u128;
            for j in 0..L {
                let t = ai * (b[j] as u128) + p[i + j] as u128 + carry;
                p[i + j] = t as u64;
                carry = t >> 64;
            }
            p[i + L] = carry as u64;
        }
        let sticky = p[..L - 1].iter().any(|&w| w != 0);
        let mut guard = p[L - 1];
        let mut m = buf[1];
        let mut exp = self.exp + other.exp;
        if m[L - 1] & HALF == 0 {
            for i in (1..L).rev() {
                m[i] = (m[i] << 1) | (m[i - 1] >> 63);
            }
            m[0] = (m[0] << 1) | (guard >> 63);
            guard <<= 1;
            exp -= 1;
        }
        Self::round_pack(self.neg ^ other.neg, exp, m, guard, sticky)
    }

    /// Number of Newton steps taking a 50-bit seed past the working precision.
    fn newton_steps() -> u32 {
        let mut bits = 50u32;
        let mut n = 0;
        while bits < Self::BITS + 8 {
            bits *= 2;
            n += 1;
        }
        n
    }

    /// Leading 64 bits of the mantissa as an f64 in [0.5, 1).
    fn mant_f64(&self) -> f64 {
        self.mant[L - 1] as f64 / 18446744073709551616.0
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "BigFloat: division by zero");
        let seed = 1.0 / self.mant_f64();
        let mut y = Self::from_f64(seed).mul_pow2(-self.exp);
        y.neg = self.neg;
        let one = Self::one();
        for _ in 0..Self::newton_steps() {
            let e = one - *self * y;
            y += y * e;
        }
        y
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "BigFloat: sqrt of negative value");
        if self.is_zero() {
            return Self::ZERO;
        }
        // Write x = f * 2^(2h) with f in [0.25, 1).
        let (f, h) = if self.exp % 2 == 0 {
            (self.mant_f64(), self.exp / 2)
        } else {
            (self.mant_f64() * 0.5, (self.exp + 1) / 2)
        };
        let mut y = Self::from_f64(1.0 / f.sqrt()).mul_pow2(-h);
        let one = Self::one();
        for _ in 0..Self::newton_steps() {
            let e = one - *self * y * y;
            y += (y * e).mul_pow2(-1);
        }
        let s = *self * y;
        s + (y * (*self - s * s)).mul_pow2(-1)
    }

    pub fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { *self };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn floor(&self) -> Self {
        if self.is_zero() || self.exp >= 64 * L as i64 {
            return *self;
        }
        if self.exp <= 0 {
            return if self.neg { -Self::one() } else { Self::ZERO };
        }
        let keep = self.exp as usize;
        let mut m = self.mant;
        let mut dropped = false;
        let total = 64 * L;
        for bit in 0..(total - keep) {
            let (w, b) = (bit / 64, bit % 64);
            if m[w] >> b & 1 == 1 {
                dropped = true;
                m[w] &= !(1u64 << b);
            }
        }
        let t = Self {
            neg: self.neg,
            exp: self.exp,
            mant: m,
        };
        if self.neg && dropped {
            t - Self::one()
        } else {
            t
        }
    }
}

pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl<const L: usize> Default for BigFloat<L> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<const L: usize> PartialEq for BigFloat<L> {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl<const L: usize> PartialOrd for BigFloat<L> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let sa = self.is_negative();
        let sb = other.is_negative();
        Some(match (sa, sb) {
            (false, true) => {
                if self.is_zero() && other.is_zero() {
                    Ordering::Equal
                } else {
                    Ordering::Greater
                }
            }
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_mag(other),
            (true, true) => other.cmp_mag(self),
        })
    }
}

impl<const L: usize> Neg for BigFloat<L> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        if !self.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $body:expr) => {
        impl<const L: usize> $tr for BigFloat<L> {
            type Output = Self;
            #[inline]
            fn $f(self, rhs: Self) -> Self {
                $body(&self, &rhs)
            }
        }
        impl<'a, const L: usize> $tr<&'a BigFloat<L>> for BigFloat<L> {
            type Output = Self;
            #[inline]
            fn $f(self, rhs: &'a Self) -> Self {
                $body(&self, rhs)
            }
        }
        impl<const L: usize> $atr for BigFloat<L> {
            #[inline]
            fn $af(&mut self, rhs: Self) {
                *self = $body(self, &rhs);
            }
        }
        impl<'a, const L: usize> $atr<&'a BigFloat<L>> for BigFloat<L> {
            #[inline]
            fn $af(&mut self, rhs: &'a Self) {
                *self = $body(self, rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a: &BigFloat<L>, b: &BigFloat<L>| a
    .add_signed(b, false));
binop!(Sub, sub, SubAssign, sub_assign, |a: &BigFloat<L>, b: &BigFloat<L>| a
    .add_signed(b, true));
binop!(Mul, mul, MulAssign, mul_assign, |a: &BigFloat<L>, b: &BigFloat<L>| a
    .mul_ref(b));
binop!(Div, div, DivAssign, div_assign, |a: &BigFloat<L>, b: &BigFloat<L>| {
    let y = b.recip();
    let q = *a * y;
    q + y * (*a - *b * q)
});

impl<const L: usize> fmt::Debug for BigFloat<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::decimal::to_scientific(&self.to_parts(), 20))
    }
}

impl<const L: usize> fmt::Display for BigFloat<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", super::decimal::to_scientific(&self.to_parts(), digits))
    }
}
