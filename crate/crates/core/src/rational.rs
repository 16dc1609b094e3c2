//! Exact rational helpers shared by every engine.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `3/4`, `7`, `0.75` or `-1.5`. Decimals are converted exactly;
/// exponents and non-terminating forms are rejected.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = parse_int(n)?;
        let d: BigInt = parse_int(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((whole, fractional)) = text.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if fractional.is_empty() || !fractional.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{}{}", if whole_digits.is_empty() { "0" } else { whole_digits }, fractional);
        let numer: BigInt = digits.parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10u32), fractional.len());
        let value = Rational::new(numer, denom);
        return Some(if negative { -value } else { value });
    }
    Some(Rational::from_integer(parse_int(text)?))
}

fn parse_int(text: &str) -> Option<BigInt> {
    let t = text.trim();
    let digits = t.trim_start_matches(['-', '+']);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

/// `n/d` in lowest terms, or just `n` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale both down before dividing.
        let n = value.numer();
        let d = value.denom();
        let shift = n.bits().max(d.bits()).saturating_sub(900);
        let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Decimal rendering with `digits` significant digits, rounded half-up,
/// computed exactly from the rational.
pub fn format_decimal(value: &Rational, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let v = value.abs();
    let ten = BigInt::from(10u32);
    // Find exponent e with 10^e <= v < 10^(e+1).
    let mut exp: i64 = (v.numer().bits() as i64 - v.denom().bits() as i64) * 30103 / 100000;
    loop {
        let lower = pow10(exp);
        let upper = pow10(exp + 1);
        if v < lower {
            exp -= 1;
        } else if v >= upper {
            exp += 1;
        } else {
            break;
        }
    }
    let shift = digits as i64 - 1 - exp;
    let scaled = &v * pow10(shift);
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut mantissa = q;
    if r * BigInt::from(2u32) >= *scaled.denom() {
        mantissa += BigInt::one();
    }
    let mut shift = shift;
    if mantissa.to_string().len() > digits {
        mantissa /= &ten;
        shift -= 1;
    }
    let mut s = mantissa.to_string();
    let out = if shift <= 0 {
        s.extend(std::iter::repeat_n('0', (-shift) as usize));
        s
    } else {
        let shift = shift as usize;
        if s.len() <= shift {
            let pad = "0".repeat(shift - s.len());
            format!("0.{pad}{s}")
        } else {
            let split = s.len() - shift;
            format!("{}.{}", &s[..split], &s[split..])
        }
    };
    let out = if out.contains('.') {
        out.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        out
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

fn pow10(exp: i64) -> Rational {
    let p = num_traits::pow(BigInt::from(10u32), exp.unsigned_abs() as usize);
    if exp >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// `bits / 2^64`, the uniform sample in `[0,1)` used by the simulator.
pub fn from_u64_fraction(bits: u64) -> Rational {
    Rational::new(BigInt::from(bits), BigInt::from_biguint(Sign::Plus, num_bigint::BigUint::one() << 64u32))
}
