//! Exact text encoding of `f64` as C99-style hexadecimal floats
//! (`0x1.8p+1` is 3.0). Used wherever a score or threshold must survive a
//! round trip through text bit for bit.

use std::fmt::Write;

/// Formats `x` as a hex float. Non-finite values render as `inf`, `-inf`, `nan`.
pub fn format(x: f64) -> String {
    let mut out = String::with_capacity(24);
    write_to(&mut out, x);
    out
}

pub fn write_to(out: &mut String, x: f64) {
    if x.is_nan() {
        out.push_str("nan");
        return;
    }
    if x.is_sign_negative() {
        out.push('-');
    }
    if x.is_infinite() {
        out.push_str("inf");
        return;
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        out.push_str("0x0p+0");
        return;
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let _ = write!(out, "0x{lead}");
    if mantissa != 0 {
        let digits = format!("{mantissa:013x}");
        out.push('.');
        out.push_str(digits.trim_end_matches('0'));
    }
    let _ = write!(out, "p{exp:+}");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseHexFloatError(pub String);

impl std::fmt::Display for ParseHexFloatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid hex float {:?}", self.0)
    }
}

impl std::error::Error for ParseHexFloatError {}

/// Parses a hex float. Mantissas of up to 64 significant bits are accepted;
/// values with at most 53 significant bits (everything [`format`] emits)
/// decode exactly.
pub fn parse(text: &str) -> Result<f64, ParseHexFloatError> {
    let err = || ParseHexFloatError(text.to_owned());
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let signed = |v: f64| if negative { -v } else { v };
    match body {
        "inf" | "infinity" => return Ok(signed(f64::INFINITY)),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(err)?;
    let (digits, exp) = body.split_once(['p', 'P']).ok_or_else(err)?;
    let exp: i32 = exp.parse().map_err(|_| err())?;
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let mut mantissa: u64 = 0;
    let mut significant = 0u32;
    for c in int_part.chars().chain(frac_part.chars()) {
        let d = c.to_digit(16).ok_or_else(err)? as u64;
        if mantissa != 0 || d != 0 {
            significant += 4;
        }
        if significant > 64 {
            return Err(err());
        }
        mantissa = (mantissa << 4) | d;
    }
    let scale = exp
        .checked_sub(4 * frac_part.len() as i32)
        .ok_or_else(err)?;
    Ok(signed(ldexp(mantissa as f64, scale)))
}

fn ldexp(mut x: f64, mut k: i32) -> f64 {
    while k > 1023 {
        x *= f64::from_bits(0x7fe << 52);
        k -= 1023;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -1022 {
        x *= f64::from_bits(1 << 52);
        k += 1022;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::from_bits(((k + 1023) as u64) << 52)
}
