//! Byte-stable JSON and CSV emission.
//!
//! JSON objects come out with sorted keys and every float as `{:.16e}`
//! (17 significant digits, exact round trip). Non-finite floats are written as
//! the strings `"inf"`, `"-inf"` and `"nan"`.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::ser::Formatter;

use crate::error::{HarnessError, HarnessResult};
use crate::sweep::{DimResult, RatioReport};

pub const CSV_HEADER: &str = "depth,max_ratio,slope";

pub fn float_text(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// `serialize_with` helper keeping non-finite floats representable in JSON.
pub fn finite_or_tag<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&float_text(*x))
    }
}

struct FixedFloat;

impl Formatter for FixedFloat {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(float_text(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Canonical JSON text of any serializable value, newline terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> HarnessResult<String> {
    // Going through `Value` sorts object keys.
    let v = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat);
    v.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

pub fn render_csv(dim: &DimResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let slope = float_text(dim.slope);
    for d in &dim.depths {
        out.push_str(&format!("{},{},{}\n", d.depth, float_text(d.max_ratio), slope));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> HarnessResult<()> {
    std::fs::write(path, text)
        .map_err(|source| HarnessError::IoFailure { path: path.display().to_string(), source })
}

pub fn read_text(path: &Path) -> HarnessResult<String> {
    std::fs::read_to_string(path)
        .map_err(|source| HarnessError::IoFailure { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// From the file extension; anything but `.csv` is JSON.
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

/// `R.csv` becomes `R.dim2.csv`.
pub fn per_dim_path(path: &Path, dim: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.dim{dim}.{ext}"),
        None => format!("{stem}.dim{dim}"),
    };
    path.with_file_name(name)
}

/// JSON holds every dimension; CSV writes one file per dimension when there
/// is more than one. Returns the written paths.
pub fn emit_report(report: &RatioReport, format: Format, path: &Path) -> HarnessResult<Vec<PathBuf>> {
    match format {
        Format::Json => {
            write_text(path, &to_canonical_json(report)?)?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv if report.dims.len() == 1 => {
            write_text(path, &render_csv(&report.dims[0]))?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv => report
            .dims
            .iter()
            .map(|d| {
                let p = per_dim_path(path, d.dim);
                write_text(&p, &render_csv(d))?;
                Ok(p)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float_text(1.0), "1.0000000000000000e0");
        assert_eq!(float_text(f64::INFINITY), "inf");
        let x = 0.1 + 0.2;
        assert_eq!(float_text(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn keys_are_sorted() {
        let text = to_canonical_json(&json!({"b": 1, "a": [0.5, 2]})).unwrap();
        assert_eq!(text, "{\"a\":[5.0000000000000000e-1,2],\"b\":1}\n");
    }

    #[test]
    fn per_dim_names() {
        assert_eq!(per_dim_path(Path::new("/t/r.csv"), 2), Path::new("/t/r.dim2.csv"));
        assert_eq!(Format::of(Path::new("x.CSV")), Format::Csv);
        assert_eq!(Format::of(Path::new("x.json")), Format::Json);
    }
}
