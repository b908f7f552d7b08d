//! Reproducible emission helpers: floats at 17 significant digits so CSV and
//! JSON bodies round-trip bit-for-bit.

use serde::Serialize;
use std::path::Path;

/// 17 significant digits; round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        // keep integers readable and still exact
        format!("{:.1}", x)
    } else {
        format!("{:.16e}", x)
    }
}

/// Serialize to pretty JSON with a trailing newline (stable body).
pub fn to_json_string<T: Serialize>(value: &T) -> crate::error::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> crate::error::Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn write_text(path: &Path, body: &str) -> crate::error::Result<()> {
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, -2.7e-13, 0.1 + 0.2] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
