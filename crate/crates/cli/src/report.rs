//! Report serialization. Every float is rounded to 10 significant digits so
//! reports re-parse to exactly the values written.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

/// Round to 10 significant digits. Non-finite values pass through.
pub fn sig10(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().expect("formatted float parses")
}

/// Decimal text of [`sig10`]; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        sig10(x).to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(sig10(x)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    let mut v = serde_json::to_value(x)?;
    round_floats(&mut v);
    Ok(v)
}

pub fn json<T: Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_value(report)?)? + "\n")
}

/// CSV with a leading `# config: {...}` comment line.
pub fn csv<C: Serialize>(config: &C, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut out = format!("# config: {}\n", serde_json::to_string(&to_value(config)?)?);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    out.push_str(&String::from_utf8(w.into_inner()?)?);
    Ok(out)
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
