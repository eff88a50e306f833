//! Exact rational scalar and the conversions used at the I/O boundary.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational used by every evaluator in the crate.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or an integer `"p"`. Floats are rejected on purpose.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rat::new(num, den))
}

/// Renders `v` with `sig` significant digits (round half away from zero),
/// trailing zeros trimmed. Positional for moderate exponents, scientific otherwise.
pub fn to_decimal(v: &Rat, sig: u32) -> String {
    if v.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let negative = v.is_negative();
    let a = v.abs();
    let ten = BigInt::from(10);

    // exponent e with 10^e <= a < 10^(e+1)
    let mut e = estimate_exponent(&a);
    loop {
        let lo = pow10(e);
        if a < lo {
            e -= 1;
            continue;
        }
        if a >= pow10(e + 1) {
            e += 1;
            continue;
        }
        break;
    }

    let shift = e - (sig as i64 - 1);
    let scaled = &a / pow10(shift);
    let mut digits = round_half_up(&scaled);
    if digits >= ten.pow(sig) {
        digits /= &ten;
        e += 1;
    }
    let mut text = digits.to_str_radix(10);
    debug_assert_eq!(text.len(), sig as usize);

    let out = if (-7..15).contains(&e) {
        if e >= 0 {
            let int_len = (e + 1) as usize;
            if text.len() <= int_len {
                text.push_str(&"0".repeat(int_len - text.len()));
                text
            } else {
                let frac = text.split_off(int_len);
                let frac = frac.trim_end_matches('0');
                if frac.is_empty() {
                    text
                } else {
                    format!("{text}.{frac}")
                }
            }
        } else {
            let zeros = "0".repeat((-e - 1) as usize);
            format!("0.{zeros}{}", text.trim_end_matches('0'))
        }
    } else {
        let first = &text[..1];
        let rest = text[1..].trim_end_matches('0');
        if rest.is_empty() {
            format!("{first}e{e}")
        } else {
            format!("{first}.{rest}e{e}")
        }
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

fn estimate_exponent(a: &Rat) -> i64 {
    let n = a.numer().to_str_radix(10).len() as i64;
    let d = a.denom().to_str_radix(10).len() as i64;
    n - d
}

fn pow10(e: i64) -> Rat {
    let p = BigInt::from(10).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rat::from_integer(p)
    } else {
        Rat::new(BigInt::one(), p)
    }
}

fn round_half_up(x: &Rat) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    let twice = r * 2;
    if twice >= *x.denom() {
        q + 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rat("1/3"), Some(rat(1, 3)));
        assert_eq!(parse_rat(" -4/6 "), Some(rat(-2, 3)));
        assert_eq!(parse_rat("7"), Some(int(7)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("0.5"), None);
        assert_eq!(parse_rat("a/b"), None);
    }

    #[test]
    fn renders_fifteen_significant_digits() {
        assert_eq!(to_decimal(&rat(5, 6), 15), "0.833333333333333");
        assert_eq!(to_decimal(&rat(2, 3), 15), "0.666666666666667");
        assert_eq!(to_decimal(&rat(1, 4), 15), "0.25");
        assert_eq!(to_decimal(&int(1), 15), "1");
        assert_eq!(to_decimal(&int(0), 15), "0");
        assert_eq!(to_decimal(&rat(-64, 3), 15), "-21.3333333333333");
        assert_eq!(to_decimal(&rat(1, 1_000_000_000), 15), "1e-9");
        assert_eq!(to_decimal(&int(1000), 3), "1000");
        assert_eq!(to_decimal(&rat(9999, 10000), 3), "1");
    }
}
