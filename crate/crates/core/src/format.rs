//! Number formatting and atomic file output shared by the writers and the CLI.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Default number of significant digits; enough to round-trip any `f64`.
pub const DEFAULT_PRECISION: usize = 17;

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed. From 17 digits on, the shortest string that parses back
/// to `x` is used instead, which never needs more than 17 digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.clamp(1, 17);
    let sci = if digits == 17 {
        format!("{x:e}")
    } else {
        format!("{:.*e}", digits - 1, x)
    };
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", strip_zeros(mantissa), exp)
    } else if digits == 17 {
        format!("{x}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Like [`fmt_sig`], with an empty field for missing values.
pub fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| fmt_sig(v, digits)).unwrap_or_default()
}

/// Rounds every floating-point number in `value` to `digits` significant
/// digits. Integers are left alone.
pub fn round_json(value: &mut Value, digits: usize) {
    if digits >= DEFAULT_PRECISION {
        return;
    }
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = fmt_sig(x, digits).parse().ok().and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| round_json(v, digits)),
        Value::Object(map) => map.values_mut().for_each(|v| round_json(v, digits)),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline, numbers rounded as in [`round_json`].
pub fn write_json(w: &mut dyn Write, value: &impl Serialize, digits: usize) -> std::io::Result<()> {
    let mut v = serde_json::to_value(value).map_err(std::io::Error::other)?;
    round_json(&mut v, digits);
    serde_json::to_writer_pretty(&mut *w, &v).map_err(std::io::Error::other)?;
    writeln!(w)
}

/// Writes `path` through a temporary file in the same directory that is
/// renamed into place once `body` succeeds; readers never see partial files.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
