//! Fixed-format float output shared by every CSV/JSON writer.
//!
//! All floats leave the program as C-style `%.12e` strings so that repeated
//! runs produce byte-identical files.

use serde_json::Value;

/// Format like C's `%.12e` (e.g. `1.234500000000e+02`).
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.12e}", x);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// JSON number printed as `%.12e`. Non-finite values become the strings
/// `"inf"`, `"-inf"`, `"nan"`.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&fmt_e(x)).expect("formatted float parses as a JSON number")
    } else {
        Value::String(fmt_e(x))
    }
}

/// Serialize JSON deterministically (serde_json's default map keeps keys
/// sorted).
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Write CSV rows of floats with a header.
pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_e(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
