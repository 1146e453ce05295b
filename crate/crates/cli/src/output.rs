//! Deterministic artifact writers.
//!
//! Every number leaves the process through one fixed-format path: CSV cells
//! and JSON scalars both print as `{:.16e}` — 17 significant digits, which
//! round-trips an `f64` exactly — so rerunning a configuration reproduces
//! artifacts byte for byte. JSON objects render with sorted keys
//! (serde_json's default `BTreeMap` backing), and all file writing is
//! single-threaded and ordered, so output never depends on thread schedule.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

/// Shared 17-significant-digit float format. Non-finite values print as
/// `nan` / `inf` / `-inf` (CSV only; JSON never receives them because
/// serde_json maps non-finite floats to null during value construction).
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Row-by-row CSV builder; the header is mandatory and fixes the width.
pub struct Csv {
    columns: usize,
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { columns: header.len(), lines: vec![header.join(",")] }
    }

    /// Append one row of preformatted cells.
    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        self.lines.push(cells.join(","));
    }

    pub fn rows(&self) -> usize {
        self.lines.len() - 1
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body = self.lines.join("\n");
        body.push('\n');
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))
    }
}

/// Render a JSON value with the shared float format. serde_json's own
/// printer emits shortest-round-trip notation, which is exact but varies in
/// width; fixed-width output keeps regression diffs trivial.
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    render(value, 0, &mut out);
    out.push('\n');
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn render(value: &Value, level: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            // serde_json numbers are always finite; fmt_float's nan/inf arms
            // are unreachable here.
            if n.is_f64() {
                out.push_str(&fmt_float(n.as_f64().expect("f64 number")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    render(item, level, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    indent(level + 1, out);
                    render(item, level + 1, out);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(level, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
            } else {
                out.push_str("{\n");
                for (i, (key, val)) in map.iter().enumerate() {
                    indent(level + 1, out);
                    out.push_str(&serde_json::to_string(key).expect("key serialization"));
                    out.push_str(": ");
                    render(val, level + 1, out);
                    if i + 1 < map.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(level, out);
                out.push('}');
            }
        }
    }
}

/// The output directory and the three artifact paths every subcommand uses.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    /// Create the directory (and parents) if missing.
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn curves(&self) -> PathBuf {
        self.dir.join("curves.csv")
    }

    pub fn samples(&self) -> PathBuf {
        self.dir.join("samples.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }

    pub fn write_summary(&self, value: &Value) -> Result<()> {
        let path = self.summary();
        fs::write(&path, render_json(value))
            .with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_format_round_trips_exactly() {
        for &x in &[0.5, -1.0 / 3.0, 0.3125, 1e-300, 2.0_f64.powi(53) + 2.0, f64::MIN_POSITIVE]
        {
            let printed = fmt_float(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{printed} did not round-trip");
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(f64::NAN), "nan");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_has_header_and_fixed_width() {
        let mut csv = Csv::new(&["t", "value"]);
        csv.row(vec![fmt_float(0.0), fmt_float(1.0)]);
        csv.row(vec![fmt_float(0.5), fmt_float(2.0)]);
        assert_eq!(csv.rows(), 2);
        let text = {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c.csv");
            csv.write(&path).unwrap();
            std::fs::read_to_string(&path).unwrap()
        };
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,value"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn csv_rejects_ragged_rows() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(vec![fmt_float(1.0)]);
    }

    #[test]
    fn json_renders_sorted_keys_and_fixed_floats() {
        let v = json!({
            "zeta": 0.5,
            "alpha": {"nested": [1.0, 2.5], "count": 3},
            "name": "x\"y",
        });
        let text = render_json(&v);
        let alpha = text.find("\"alpha\"").unwrap();
        let zeta = text.find("\"zeta\"").unwrap();
        assert!(alpha < zeta, "keys must render sorted");
        assert!(text.contains("5.0000000000000000e-1"));
        assert!(text.contains("[1.0000000000000000e0, 2.5000000000000000e0]"));
        assert!(text.contains("\"count\": 3"), "integers must not gain exponents");
        assert!(text.contains(r#""x\"y""#));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn json_rendering_is_deterministic() {
        let v = json!({"b": [1.0, {"x": 2.0}], "a": true, "c": null});
        assert_eq!(render_json(&v), render_json(&v.clone()));
    }
}
