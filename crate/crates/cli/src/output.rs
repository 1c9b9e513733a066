//! Deterministic JSON/CSV writers: floats with 17 significant digits,
//! complex numbers as `{re, im}`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{Map, Number, Value};

use crate::CliError;

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(text.parse::<Number>().expect("formatted float is a JSON number"))
}

pub fn complex(z: Complex64) -> Value {
    let mut m = Map::new();
    m.insert("re".into(), num(z.re));
    m.insert("im".into(), num(z.im));
    Value::Object(m)
}

pub fn complex_vec(v: &[Complex64]) -> Value {
    Value::Array(v.iter().copied().map(complex).collect())
}

/// Text form used in CSV cells.
pub fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write(dir, name, &text)
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write(dir, name, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-2.5).to_string(), "-2.5000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(std::f64::consts::PI).to_string().parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn complex_pairs() {
        let v = complex(Complex64::new(1.0, -0.5));
        assert_eq!(v.to_string(), r#"{"re":1.0000000000000000e+0,"im":-5.0000000000000000e-1}"#);
    }
}
