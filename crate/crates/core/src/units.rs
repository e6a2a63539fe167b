//! SI-suffixed number parsing (`9.1k`, `100p`, `5u`, `2.5m`, `1M`).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid quantity '{0}'")]
pub struct QuantityError(pub String);

/// Shortest round-tripping text for `x`, in exponent form outside `[1e-3, 1e7)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-3..1e7).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Parses a number with an optional SI multiplier suffix.
///
/// Accepted suffixes: `f p n u µ m k M G` plus the SPICE spelling `meg`.
/// A trailing unit letter (`V`, `s`, `F`, `A`, `Hz`, `ohm`) after the
/// multiplier is ignored, so `100pF` and `5us` work too. Note that `m` is
/// milli and `M`/`meg` is mega.
pub fn parse_si(text: &str) -> Result<f64, QuantityError> {
    let s = text.trim();
    let err = || QuantityError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    let split = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..]
                        .starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let (num, rest) = s.split_at(split);
    let base: f64 = num.parse().map_err(|_| err())?;
    let lower = rest.to_ascii_lowercase();
    let (mult, unit) = if lower.starts_with("meg") {
        (1e6, &rest[3..])
    } else {
        match rest.chars().next() {
            None => (1.0, ""),
            Some('f') => (1e-15, &rest[1..]),
            Some('p') => (1e-12, &rest[1..]),
            Some('n') => (1e-9, &rest[1..]),
            Some('u') => (1e-6, &rest[1..]),
            Some('µ') => (1e-6, &rest['µ'.len_utf8()..]),
            Some('m') => (1e-3, &rest[1..]),
            Some('k') | Some('K') => (1e3, &rest[1..]),
            Some('M') => (1e6, &rest[1..]),
            Some('G') => (1e9, &rest[1..]),
            Some(_) => (1.0, rest),
        }
    };
    const UNITS: [&str; 9] = ["", "v", "s", "f", "a", "hz", "ohm", "ohms", "Ω"];
    if !UNITS.contains(&unit.to_ascii_lowercase().as_str()) && unit != "Ω" {
        return Err(err());
    }
    let value = base * mult;
    if !value.is_finite() {
        return Err(err());
    }
    Ok(value)
}
