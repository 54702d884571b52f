//! End-to-end reproduction of the two reference examples, diffed against the
//! committed CSV files in `goldens/`.

use crate::output::{read_csv, write_csv, Record};
use crate::request::{Command, RunRequest, SweepSpec};
use crate::run::{run, CliError};
use std::f64::consts::FRAC_PI_4;
use std::f64::consts::FRAC_PI_6;
use std::path::{Path, PathBuf};
use weakline_core::model::Scenario;

pub const H0_COHERENT: &str = include_str!("../scenarios/h0_coherent.json");
pub const SPIN_AAV: &str = include_str!("../scenarios/spin_aav.json");

/// Relative tolerance on every numeric cell, absorbing platform-level rounding.
pub const TOLERANCE: f64 = 1e-9;

pub struct Golden {
    pub file: &'static str,
    pub scenario: &'static str,
    pub scenario_name: &'static str,
    pub request: RunRequest,
}

pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

pub fn goldens() -> Vec<Golden> {
    let mut out = vec![];
    for obs in ["q", "p"] {
        let mut req = RunRequest::new(Command::Compare, "scenarios/h0_coherent.json");
        req.observable = Some(obs.into());
        req.times = Some(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        out.push(Golden {
            file: if obs == "q" { "h0_coherent_q.csv" } else { "h0_coherent_p.csv" },
            scenario: H0_COHERENT,
            scenario_name: "h0_coherent.json",
            request: req,
        });
    }
    for (axis, file) in [("sigma_x", "spin_aav_x.csv"), ("sigma_y", "spin_aav_y.csv"), ("sigma_z", "spin_aav_z.csv")] {
        let mut req = RunRequest::new(Command::Sweep, "scenarios/spin_aav.json");
        req.observable = Some(axis.into());
        req.sweep = Some(SweepSpec {
            param: crate::request::SweepParam::Alpha,
            values: vec![FRAC_PI_6, FRAC_PI_4 - 0.005],
        });
        out.push(Golden { file, scenario: SPIN_AAV, scenario_name: "spin_aav.json", request: req });
    }
    out
}

pub fn render(g: &Golden) -> Result<(String, Vec<Record>), CliError> {
    let scenario =
        Scenario::from_json_str(g.scenario).map_err(|e| CliError::validation(format!("{}: {e}", g.scenario_name)))?;
    let outcome = run(&g.request, &scenario)?;
    let mut buf = vec![];
    write_csv(&mut buf, &outcome.records).map_err(|e| CliError::validation(e.to_string()))?;
    Ok((String::from_utf8(buf).expect("csv is utf-8"), outcome.records))
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y || (x - y).abs() <= TOLERANCE * (1.0 + y.abs()),
        _ => false,
    }
}

/// First difference between computed and reference records, if any.
pub fn compare(got: &[Record], want: &[Record]) -> Option<String> {
    if got.len() != want.len() {
        return Some(format!("{} rows, reference has {}", got.len(), want.len()));
    }
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        let text_ok = a.method == b.method
            && a.sweep_param == b.sweep_param
            && a.status == b.status
            && a.multi_root_flag == b.multi_root_flag;
        let nums = [
            ("t", Some(a.t), Some(b.t)),
            ("sweep_value", a.sweep_value, b.sweep_value),
            ("re_w", a.re_w, b.re_w),
            ("im_w", a.im_w, b.im_w),
            ("overlap_abs", a.overlap_abs, b.overlap_abs),
            ("residual", a.residual, b.residual),
            ("caustic_indicator", a.caustic_indicator, b.caustic_indicator),
            ("abs_diff", a.abs_diff, b.abs_diff),
        ];
        if !text_ok {
            return Some(format!("row {}: {a:?} vs reference {b:?}", i + 1));
        }
        for (name, x, y) in nums {
            // residuals and differences sit at round-off level; compare them absolutely
            let ok = if matches!(name, "residual" | "abs_diff") {
                match (x, y) {
                    (Some(x), Some(y)) => (x - y).abs() <= TOLERANCE,
                    (x, y) => x.is_none() && y.is_none(),
                }
            } else {
                close(x, y)
            };
            if !ok {
                return Some(format!("row {} column {name}: {x:?} vs reference {y:?}", i + 1));
            }
        }
    }
    None
}

/// Regenerates every golden; with `bless` the reference files are rewritten.
/// Returns one report line per file and whether all matched.
pub fn check(dir: &Path, bless: bool) -> Result<(Vec<String>, bool), CliError> {
    let mut lines = vec![];
    let mut all_ok = true;
    for g in goldens() {
        let (text, records) = render(&g)?;
        let path = dir.join(g.file);
        if bless {
            std::fs::write(&path, &text)
                .map_err(|e| CliError::validation(format!("writing {}: {e}", path.display())))?;
            lines.push(format!("BLESSED {}", g.file));
            continue;
        }
        let reference = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                all_ok = false;
                lines.push(format!("MISSING {}: {e}", g.file));
                continue;
            }
        };
        match read_csv(&reference).map(|want| compare(&records, &want)) {
            Ok(None) => lines.push(format!("OK {}", g.file)),
            Ok(Some(diff)) => {
                all_ok = false;
                lines.push(format!("MISMATCH {}: {diff}", g.file));
            }
            Err(e) => {
                all_ok = false;
                lines.push(format!("MISMATCH {}: unreadable reference: {e}", g.file));
            }
        }
    }
    Ok((lines, all_ok))
}
