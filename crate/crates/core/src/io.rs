//! Text formats: operator JSON, CSV tables with `#` metadata headers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dk::CriticalScanResult;
use crate::error::{Error, Result};
use crate::local::LocalOperator;
use crate::matrix::{CMatrix, C64};
use crate::spectrum::{HistogramGrid, SpectrumMultiset};

/// Ordered key/value pairs written ahead of every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Self::default()
            .with("tool", concat!("ipszeta ", env!("CARGO_PKG_VERSION")))
            .with("command", command)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn csv_header(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LocalJson {
    a_kl_ij: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OperatorJson {
    n: usize,
    local: LocalJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Serialises `{n, local: {a_kl_ij: [[re, im]; 16]}, label}`; entry order
/// is row-major in the 4x4 table.
pub fn operator_to_json(local: &LocalOperator, n: usize) -> String {
    let doc = OperatorJson {
        n,
        local: LocalJson {
            a_kl_ij: local.entries().iter().map(|z| [z.re, z.im]).collect(),
        },
        label: local.label().map(str::to_string),
    };
    serde_json::to_string_pretty(&doc).expect("operator JSON")
}

pub fn operator_from_json(text: &str) -> Result<(LocalOperator, usize)> {
    let doc: OperatorJson = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("operator JSON: {e}")))?;
    if doc.local.a_kl_ij.len() != 16 {
        return Err(Error::LengthMismatch {
            expected: 16,
            got: doc.local.a_kl_ij.len(),
        });
    }
    let mut entries = [C64::new(0.0, 0.0); 16];
    for (slot, [re, im]) in entries.iter_mut().zip(doc.local.a_kl_ij) {
        *slot = C64::new(re, im);
    }
    let mut local = LocalOperator::new(entries)?;
    if let Some(label) = doc.label {
        local = local.with_label(label);
    }
    Ok((local, doc.n))
}

fn fmt_f(x: f64) -> String {
    // shortest round-trip representation, stable across runs
    let s = format!("{x:?}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// Nonzero entries as `row,col,re,im`.
pub fn dense_csv(m: &CMatrix, meta: &Metadata) -> String {
    let mut out = meta.csv_header();
    out.push_str("row,col,re,im\n");
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.re != 0.0 || z.im != 0.0 {
                let _ = writeln!(out, "{r},{c},{},{}", fmt_f(z.re), fmt_f(z.im));
            }
        }
    }
    out
}

pub fn spectrum_csv(spec: &SpectrumMultiset, meta: &Metadata) -> String {
    let mut out = meta.csv_header();
    out.push_str("re,im,multiplicity\n");
    for (z, m) in spec.sorted().entries() {
        let _ = writeln!(out, "{},{},{m}", fmt_f(z.re), fmt_f(z.im));
    }
    out
}

pub fn histogram_csv(grid: &HistogramGrid, meta: &Metadata) -> String {
    let mut out = meta.csv_header();
    let _ = writeln!(out, "# bin: {}", grid.bin_size);
    let _ = writeln!(out, "# outside_range: {}", grid.overflow);
    out.push_str("re_low,im_low,count\n");
    for (i, row) in grid.counts.iter().enumerate() {
        for (j, count) in row.iter().enumerate() {
            if *count > 0 {
                let _ = writeln!(
                    out,
                    "{},{},{count}",
                    fmt_f(grid.bin_low(i)),
                    fmt_f(grid.bin_low(j))
                );
            }
        }
    }
    out
}

/// `r,C_r_re,C_r_im` for `r = 1..`.
pub fn coefficients_csv(coeffs: &[C64], meta: &Metadata) -> String {
    let mut out = meta.csv_header();
    out.push_str("r,C_r_re,C_r_im\n");
    for (idx, c) in coeffs.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", idx + 1, fmt_f(c.re), fmt_f(c.im));
    }
    out
}

pub fn scan_csv(scan: &CriticalScanResult, meta: &Metadata) -> String {
    let mut out = meta.csv_header();
    let _ = writeln!(out, "# bracket: [{}, {}]", scan.bracket.0, scan.bracket.1);
    out.push_str("p,estimate,ci_lo,ci_hi,label\n");
    for pt in &scan.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f(pt.p),
            fmt_f(pt.estimate),
            fmt_f(pt.ci[0]),
            fmt_f(pt.ci[1]),
            pt.label.as_str()
        );
    }
    out
}

/// Wraps a serialisable payload as `{"metadata": ..., <payload fields>}`.
pub fn json_with_metadata<T: Serialize>(payload: &T, meta: &Metadata) -> String {
    let mut value = serde_json::to_value(payload).expect("serialisable payload");
    let wrapped = match value {
        serde_json::Value::Object(ref mut map) => {
            let mut out = serde_json::Map::new();
            out.insert("metadata".into(), meta.to_json());
            out.append(map);
            serde_json::Value::Object(out)
        }
        other => serde_json::json!({ "metadata": meta.to_json(), "data": other }),
    };
    let mut s = serde_json::to_string_pretty(&wrapped).expect("JSON");
    s.push('\n');
    s
}

/// Data lines of a CSV produced here, with `#` lines removed.
pub fn strip_metadata(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
