//! Number formatting for CSV/JSON artifacts.

use crate::scalar::Scalar;

/// Default number of significant digits in emitted tables.
pub const DEFAULT_PRECISION: usize = 15;

/// Formats `v` with `digits` significant digits, '.' decimal separator,
/// trailing zeros trimmed. Falls back to exponent notation outside
/// `1e-4 ..= 10^digits`.
pub fn fmt_sig<T: Scalar>(v: T, digits: usize) -> String {
    let v = v.as_f64();
    let digits = digits.max(1);
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
