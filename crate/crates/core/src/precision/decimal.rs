//! Exact conversion between binary floats and decimal text.
//!
//! Parsing is correctly rounded (round to nearest, ties to even), and
//! [`round_trip_digits`] significant digits are always enough for a printed
//! value to parse back to the identical binary value.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::float::BinaryParts;
use super::PrecisionError;

/// Significant decimal digits guaranteeing an exact round trip for a
/// `bits`-bit binary mantissa.
pub fn round_trip_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

fn mantissa_big(p: &BinaryParts) -> BigUint {
    let mut n = BigUint::zero();
    for &w in p.limbs.iter().rev() {
        n = (n << 64u32) + BigUint::from(w);
    }
    n
}

fn pow10(k: u64) -> BigUint {
    BigUint::from(10u32).pow(k as u32)
}

/// round(num / den), ties to even.
fn div_round(num: &BigUint, den: &BigUint) -> BigUint {
    let q = num / den;
    let r = num - &q * den;
    let twice = &r << 1u32;
    if twice > *den || (twice == *den && q.bit(0)) {
        q + 1u32
    } else {
        q
    }
}

/// Decimal digits of |value| rounded to `digits` significant figures, with
/// the decimal exponent of the leading digit.
pub fn significant_digits(p: &BinaryParts, digits: usize) -> (String, i64) {
    assert!(digits >= 1);
    if p.limbs.is_empty() {
        return ("0".repeat(digits), 0);
    }
    let m = mantissa_big(p);
    let e2 = p.exp - 64 * p.limbs.len() as i64;
    // log10 estimate of the leading digit position.
    let top = *p.limbs.last().unwrap() as f64 / 18446744073709551616.0;
    let mut k = (top.log10() + p.exp as f64 * std::f64::consts::LOG10_2).floor() as i64;
    loop {
        let t = digits as i64 - 1 - k;
        let mut num = m.clone();
        let mut den = BigUint::one();
        if t >= 0 {
            num *= pow10(t as u64);
        } else {
            den *= pow10((-t) as u64);
        }
        if e2 >= 0 {
            num <<= e2 as u64;
        } else {
            den <<= (-e2) as u64;
        }
        let n = div_round(&num, &den);
        let s = n.to_str_radix(10);
        if s.len() > digits {
            // Either the estimate was low or rounding carried into a new digit.
            if s.len() == digits + 1 && s.bytes().skip(1).all(|b| b == b'0') && s.as_bytes()[0] == b'1' {
                return (s[..digits].to_string(), k + 1);
            }
            k += 1;
            continue;
        }
        if s.len() < digits {
            k -= 1;
            continue;
        }
        return (s, k);
    }
}

/// `-d.ddd…e±k` with `digits` significant figures.
pub fn to_scientific(p: &BinaryParts, digits: usize) -> String {
    let (s, k) = significant_digits(p, digits);
    let sign = if p.neg && !p.limbs.is_empty() { "-" } else { "" };
    if digits == 1 {
        format!("{sign}{s}e{k}")
    } else {
        format!("{sign}{}.{}e{k}", &s[..1], &s[1..])
    }
}

/// Positional notation when the exponent is moderate, scientific otherwise.
pub fn to_plain(p: &BinaryParts, digits: usize) -> String {
    let (s, k) = significant_digits(p, digits);
    if !(-6..21).contains(&k) {
        return to_scientific(p, digits);
    }
    let sign = if p.neg && !p.limbs.is_empty() { "-" } else { "" };
    let body = if k < 0 {
        format!("0.{}{}", "0".repeat((-k - 1) as usize), s)
    } else if (k as usize) + 1 >= s.len() {
        format!("{}{}", s, "0".repeat(k as usize + 1 - s.len()))
    } else {
        let split = k as usize + 1;
        format!("{}.{}", &s[..split], &s[split..])
    };
    format!("{sign}{body}")
}

/// Parse decimal text into a value rounded to `limbs * 64` mantissa bits.
pub fn parse(text: &str, limbs: usize) -> Result<BinaryParts, PrecisionError> {
    let bad = || PrecisionError::Parse(text.to_string());
    let t = text.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exp10) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = body[i + 1..].parse().map_err(|_| bad())?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigUint::parse_bytes(digits.as_bytes(), 10).unwrap_or_default();
    if n.is_zero() {
        return Ok(BinaryParts {
            neg: false,
            exp: 0,
            limbs: Vec::new(),
        });
    }
    let p10 = exp10 - frac_part.len() as i64;
    if p10.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let bits = 64 * limbs as u64;
    let (q, scale, sticky) = if p10 >= 0 {
        (n * pow10(p10 as u64), 0i64, false)
    } else {
        let den = pow10((-p10) as u64);
        let s = (bits + 2 + den.bits()).saturating_sub(n.bits());
        let num = n << s;
        let q = &num / &den;
        let sticky = !(num - &q * &den).is_zero();
        (q, s as i64, sticky)
    };
    Ok(round_big(neg, &q, scale, sticky, limbs))
}

/// Round `q * 2^-scale` (plus a sticky tail) to `limbs` limbs.
fn round_big(neg: bool, q: &BigUint, scale: i64, sticky: bool, limbs: usize) -> BinaryParts {
    let bits = 64 * limbs as u64;
    let nb = q.bits();
    let (mut mant, mut exp) = if nb <= bits {
        debug_assert!(!sticky || nb + 2 > bits);
        (q << (bits - nb), nb as i64 - scale)
    } else {
        let shift = nb - bits;
        let mant = q >> shift;
        let rem = q - (&mant << shift);
        let half = BigUint::one() << (shift - 1);
        let up = rem > half || (rem == half && (sticky || mant.bit(0)));
        let mant = if up { mant + 1u32 } else { mant };
        (mant, nb as i64 - scale)
    };
    if mant.bits() > bits {
        mant >>= 1u32;
        exp += 1;
    }
    let mut out = Vec::with_capacity(limbs);
    let mask = BigUint::from(u64::MAX);
    let mut m = mant;
    for _ in 0..limbs {
        out.push((&m & &mask).to_u64().unwrap());
        m >>= 64u32;
    }
    BinaryParts {
        neg,
        exp,
        limbs: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigFloat;

    #[test]
    fn parses_simple_values() {
        let p = parse("0.5", 4).unwrap();
        assert_eq!(BigFloat::<4>::from_parts(&p).to_f64(), 0.5);
        let p = parse("-1.25e2", 4).unwrap();
        assert_eq!(BigFloat::<4>::from_parts(&p).to_f64(), -125.0);
        let p = parse("0.1", 4).unwrap();
        assert_eq!(BigFloat::<4>::from_parts(&p).to_f64(), 0.1);
        assert!(parse("1.2.3", 4).is_err());
        assert!(parse("", 4).is_err());
        assert!(parse("abc", 4).is_err());
    }

    #[test]
    fn prints_rounded_digits() {
        let x = BigFloat::<4>::from_i64(2) / BigFloat::<4>::from_i64(3);
        assert_eq!(to_scientific(&x.to_parts(), 5), "6.6667e-1");
        assert_eq!(to_plain(&x.to_parts(), 5), "0.66667");
        let y = BigFloat::<4>::from_f64(-2.9037243542);
        assert_eq!(to_plain(&y.to_parts(), 11), "-2.9037243542");
        let z = BigFloat::<4>::from_f64(9.99996);
        assert_eq!(to_scientific(&z.to_parts(), 3), "1.00e1");
        assert_eq!(to_plain(&BigFloat::<4>::from_i64(120).to_parts(), 3), "120");
        assert_eq!(to_plain(&BigFloat::<4>::from_i64(120).to_parts(), 5), "120.00");
    }
}
