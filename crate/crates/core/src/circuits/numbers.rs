//! Numeric literals with engineering suffixes.
//!
//! Suffixes are folded into the decimal exponent before conversion, so
//! `0.15u` parses to the same bits as `0.15e-6` and `format_number` output
//! always reparses to the identical value.

fn suffix_exponent(s: &str) -> Option<i32> {
    let exp = match s.to_ascii_lowercase().as_str() {
        "" => 0,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" => -6,
        "m" => -3,
        "k" => 3,
        "meg" => 6,
        "g" => 9,
        _ => return None,
    };
    Some(exp)
}

/// Splits `text` into (mantissa digits without exponent, explicit exponent, suffix).
fn split(text: &str) -> Option<(&str, i32, &str)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    let mut digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
        digits += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            digits += 1;
        }
    }
    if digits == 0 || i == digits_start {
        return None;
    }
    let mantissa = &text[..i];
    let mut exp = 0i32;
    // An 'e' is an exponent only when followed by digits.
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let ds = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > ds {
            exp = text[i + 1..j].parse::<i32>().ok()?;
            i = j;
        }
    }
    Some((mantissa, exp, &text[i..]))
}

/// Parses a literal, multiplying by `10^shift` exactly.
pub(crate) fn parse_scaled(text: &str, shift: i32) -> Option<f64> {
    let lower = text.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (mantissa, exp, suffix) = split(text)?;
    let total = exp.checked_add(suffix_exponent(suffix)?)?.checked_add(shift)?;
    let v: f64 = format!("{mantissa}e{total}").parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses a numeric literal such as `2u`, `1.8`, `300e-6`, `10meg`.
pub fn parse_number(text: &str) -> Option<f64> {
    parse_scaled(text, 0)
}

/// Shortest representation that reparses to the same value.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_number("2u"), Some(2e-6));
        assert_eq!(parse_number("0.15U"), Some(0.15e-6));
        assert_eq!(parse_number("300u"), Some(300e-6));
        assert_eq!(parse_number("10meg"), Some(10e6));
        assert_eq!(parse_number("1m"), Some(1e-3));
        assert_eq!(parse_number("3k"), Some(3e3));
        assert_eq!(parse_number("5f"), Some(5e-15));
        assert_eq!(parse_number("-1.5e-3"), Some(-1.5e-3));
        assert_eq!(parse_number("1e3k"), Some(1e6));
        assert_eq!(parse_number(".5"), Some(0.5));
        assert_eq!(parse_number("inf"), Some(f64::INFINITY));
    }

    #[test]
    fn rejects_garbage() {
        for t in ["", "u", "1x", "1.2.3", "-", "e5", "1e", "1mm", "nan", "1e999"] {
            assert_eq!(parse_number(t), None, "{t}");
        }
    }

    #[test]
    fn shift_is_exact() {
        assert_eq!(parse_scaled("0.15u", 6), Some(0.15));
        assert_eq!(parse_scaled("2u", 6), Some(2.0));
    }

    proptest! {
        #[test]
        fn format_round_trips(v in proptest::num::f64::NORMAL) {
            prop_assert_eq!(parse_number(&format_number(v)), Some(v));
        }

        #[test]
        fn never_panics(s in "\\PC{0,12}") {
            let _ = parse_number(&s);
        }
    }
}
