use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num/den`, always with an explicit denominator.
pub fn fmt_exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `INT` or `INT/INT` with a positive denominator.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let parse_int = |s: &str| -> Option<BigInt> {
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    };
    match text.split_once('/') {
        None => parse_int(text).map(Rational::from_integer),
        Some((n, d)) => {
            if d.starts_with(['-', '+']) {
                return None;
            }
            let n = parse_int(n)?;
            let d = parse_int(d)?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
    }
}

/// Decimal rendering with `digits` fractional digits, rounded half to even.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r * Rational::from_integer(scale.clone());
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut n = floor.to_integer();
    if frac > half || (frac == half && n.is_odd()) {
        n += 1;
    }
    let negative = n.is_negative();
    let digits_str = n.abs().to_string();
    let body = if digits == 0 {
        digits_str
    } else {
        let padded = format!("{:0>width$}", digits_str, width = digits + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - digits);
        format!("{int_part}.{frac_part}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

pub fn floor_to_i64(r: &Rational) -> Option<i64> {
    r.floor().to_integer().to_i64()
}

pub fn ceil_to_i64(r: &Rational) -> Option<i64> {
    r.ceil().to_integer().to_i64()
}

/// Nearest-ish f64; only for diagnostics and numeric warm starts.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators or denominators: scale down by bit length first.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
