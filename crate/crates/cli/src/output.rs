//! Result records and their CSV / JSON encodings.

use serde::{Deserialize, Serialize};
use std::io::Write;

pub const COLUMNS: [&str; 13] = [
    "method",
    "t",
    "sweep_param",
    "sweep_value",
    "re_w",
    "im_w",
    "overlap_abs",
    "residual",
    "caustic_indicator",
    "multi_root_flag",
    "wallclock_ms",
    "abs_diff",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: String,
    pub t: f64,
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub re_w: Option<f64>,
    pub im_w: Option<f64>,
    pub overlap_abs: Option<f64>,
    pub residual: Option<f64>,
    pub caustic_indicator: Option<f64>,
    pub multi_root_flag: Option<bool>,
    pub wallclock_ms: f64,
    pub abs_diff: Option<f64>,
    pub status: String,
}

impl Record {
    pub fn new(method: &str, t: f64) -> Self {
        Self {
            method: method.to_string(),
            t,
            sweep_param: None,
            sweep_value: None,
            re_w: None,
            im_w: None,
            overlap_abs: None,
            residual: None,
            caustic_indicator: None,
            multi_root_flag: None,
            wallclock_ms: 0.0,
            abs_diff: None,
            status: "ok".to_string(),
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            fmt_f64(r.t),
            r.sweep_param.clone().unwrap_or_default(),
            opt(r.sweep_value),
            opt(r.re_w),
            opt(r.im_w),
            opt(r.overlap_abs),
            opt(r.residual),
            opt(r.caustic_indicator),
            r.multi_root_flag.map(|b| b.to_string()).unwrap_or_default(),
            fmt_f64(r.wallclock_ms),
            opt(r.abs_diff),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<Record>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header != COLUMNS {
        return Err(format!("unexpected header {header:?}"));
    }
    let num = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("bad number {s:?}"))
        }
    };
    let mut out = vec![];
    for row in rdr.records() {
        let row = row.map_err(|e| e.to_string())?;
        let f = |i: usize| row.get(i).unwrap_or("");
        out.push(Record {
            method: f(0).to_string(),
            t: num(f(1))?.ok_or("missing t")?,
            sweep_param: Some(f(2).to_string()).filter(|s| !s.is_empty()),
            sweep_value: num(f(3))?,
            re_w: num(f(4))?,
            im_w: num(f(5))?,
            overlap_abs: num(f(6))?,
            residual: num(f(7))?,
            caustic_indicator: num(f(8))?,
            multi_root_flag: match f(9) {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => return Err(format!("bad flag {other:?}")),
            },
            wallclock_ms: num(f(10))?.ok_or("missing wallclock_ms")?,
            abs_diff: num(f(11))?,
            status: f(12).to_string(),
        });
    }
    Ok(out)
}
