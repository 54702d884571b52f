use crate::observable::parse_list;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Exact,
    Semiclassical,
    Gf,
    Pointer,
    Compare,
    /// `compare` at every value of `--sweep`.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Hbar,
    TEnd,
    /// Spin preselection `theta' = 2 alpha, phi' = 0`.
    Alpha,
    /// Pointer coupling.
    G,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Hbar => "hbar",
            SweepParam::TEnd => "t_end",
            SweepParam::Alpha => "alpha",
            SweepParam::G => "g",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, values) = s.split_once('=').ok_or("expected PARAM=v1,v2,...")?;
        let param = match name.trim() {
            "hbar" => SweepParam::Hbar,
            "t_end" => SweepParam::TEnd,
            "alpha" => SweepParam::Alpha,
            "g" => SweepParam::G,
            other => return Err(format!("unknown sweep parameter {other:?} (hbar, t_end, alpha, g)")),
        };
        Ok(Self { param, values: parse_list(values)? })
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}={}", self.param.name(), vals.join(","))
    }
}

/// Everything that determines the output of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub command: Command,
    pub scenario_path: PathBuf,
    pub observable: Option<String>,
    pub times: Option<Vec<f64>>,
    pub sweep: Option<SweepSpec>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub sigma: f64,
    pub samples: usize,
    pub epsilon: f64,
    pub bin_width: Option<f64>,
    pub timing: bool,
}

impl RunRequest {
    pub fn new(command: Command, scenario_path: impl Into<PathBuf>) -> Self {
        Self {
            command,
            scenario_path: scenario_path.into(),
            observable: None,
            times: None,
            sweep: None,
            output_path: None,
            format: Format::Csv,
            seed: 0,
            sigma: 10.0,
            samples: 0,
            epsilon: 1e-5,
            bin_width: None,
            timing: false,
        }
    }
}
