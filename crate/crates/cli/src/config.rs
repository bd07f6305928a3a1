//! Run configuration shared by all subcommands. A JSON file supplies defaults
//! and command-line flags override it field by field.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use ptscatter::numeric::linspace;
use ptscatter::DerivativeMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Probability,
    Phase,
    Delay,
    Residuals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    FixedXi,
    FixedV,
}

impl From<ModeArg> for DerivativeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixedXi => DerivativeMode::FixedXi,
            ModeArg::FixedV => DerivativeMode::FixedV,
        }
    }
}

/// `A:B` or `A:B:N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: Option<usize>,
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(format!("expected A:B or A:B:N, got '{s}'"));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number '{p}' in '{s}'"))
        };
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(format!("range must satisfy 0 <= A < B, got '{s}'"));
        }
        let steps = match parts.get(2) {
            Some(p) => {
                let n = p
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad step count '{p}' in '{s}'"))?;
                if n < 2 {
                    return Err(format!("step count must be >= 2, got {n}"));
                }
                Some(n)
            }
            None => None,
        };
        Ok(Self { lo, hi, steps })
    }
}

impl std::fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.steps {
            Some(n) => write!(f, "{}:{}:{}", self.lo, self.hi, n),
            None => write!(f, "{}:{}", self.lo, self.hi),
        }
    }
}

impl Serialize for RangeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RangeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl RangeSpec {
    pub fn grid(&self, name: &str) -> CliResult<Vec<f64>> {
        let n = self
            .steps
            .ok_or_else(|| CliError::Usage(format!("--{name}-range needs a step count (A:B:N)")))?;
        Ok(linspace(self.lo, self.hi, n))
    }
}

/// Every setting a run can take. All fields are optional so that a file and
/// the flags can be merged.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Contrast values (repeatable or comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<f64>,

    /// Contrast range A:B:N.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_range: Option<RangeSpec>,

    /// ka range A:B:N.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ka_range: Option<RangeSpec>,

    /// Phase derivative mode.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,

    /// Residual tolerance for root searches.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    /// Coarse-grid samples per unit length for root searches.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,

    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Output formats (repeatable).
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub format: Vec<OutputFormat>,

    /// Quantities written by `scan` (repeatable or comma separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub quantities: Vec<Quantity>,

    /// Photon energy ħω in eV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_energy: Option<f64>,

    /// Plasma energy ħω_p in eV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plasma_energy: Option<f64>,

    /// Damping energy ħδ in eV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_energy: Option<f64>,

    /// Half length a in nm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,

    /// Half height b in nm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_height: Option<f64>,

    /// Solve for the half height that lands on a spectral singularity.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub solve: bool,

    /// JSON config file; flags override its fields.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_vec<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Loads `--config` if given and overlays the flags on it.
    pub fn resolve(self) -> CliResult<Self> {
        let file = match &self.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        Ok(self.over(file))
    }

    fn over(self, file: Self) -> Self {
        Self {
            xi: pick_vec(self.xi, file.xi),
            xi_range: pick(self.xi_range, file.xi_range),
            ka_range: pick(self.ka_range, file.ka_range),
            mode: pick(self.mode, file.mode),
            tol: pick(self.tol, file.tol),
            density: pick(self.density, file.density),
            out: pick(self.out, file.out),
            format: pick_vec(self.format, file.format),
            quantities: pick_vec(self.quantities, file.quantities),
            photon_energy: pick(self.photon_energy, file.photon_energy),
            plasma_energy: pick(self.plasma_energy, file.plasma_energy),
            damping_energy: pick(self.damping_energy, file.damping_energy),
            half_length: pick(self.half_length, file.half_length),
            half_height: pick(self.half_height, file.half_height),
            solve: self.solve || file.solve,
            config: self.config,
        }
    }

    /// Sorted, deduplicated contrast values from `--xi` or `--xi-range`.
    pub fn xi_values(&self) -> CliResult<Vec<f64>> {
        let mut v = match (&self.xi[..], self.xi_range) {
            ([], None) => return Err(CliError::Usage("give --xi or --xi-range".into())),
            ([], Some(r)) => r.grid("xi")?,
            (list, None) => list.to_vec(),
            (_, Some(_)) => return Err(CliError::Usage("--xi and --xi-range are exclusive".into())),
        };
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(CliError::Usage(format!("xi values must be finite and >= 0, got {bad}")));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    }

    pub fn ka_range(&self) -> CliResult<RangeSpec> {
        self.ka_range
            .ok_or_else(|| CliError::Usage("give --ka-range A:B:N".into()))
    }

    pub fn ka_values(&self) -> CliResult<Vec<f64>> {
        self.ka_range()?.grid("ka")
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode.map(Into::into).unwrap_or_default()
    }

    pub fn formats(&self, default: OutputFormat) -> Vec<OutputFormat> {
        let mut f = if self.format.is_empty() {
            vec![default]
        } else {
            self.format.clone()
        };
        f.sort();
        f.dedup();
        f
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("ptscatter-out"))
    }

    pub fn tol(&self, default: f64) -> CliResult<f64> {
        let t = self.tol.unwrap_or(default);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::Usage(format!("--tol must be > 0, got {t}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r: RangeSpec = "0:25:501".parse().unwrap();
        assert_eq!((r.lo, r.hi, r.steps), (0.0, 25.0, Some(501)));
        assert_eq!(r.to_string(), "0:25:501");
        assert_eq!("1.5:2.5".parse::<RangeSpec>().unwrap().steps, None);
        for bad in ["1", "2:1:5", "0:1:1", "a:b", "0:1:x", "-1:1:3"] {
            assert!(bad.parse::<RangeSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"xi": [0.4], "ka_range": "0:10:11", "mode": "fixed-v", "tol": 1e-8}"#).unwrap();
        let flags = RunConfig {
            xi: vec![2.0, 1.0],
            tol: Some(1e-12),
            ..RunConfig::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.xi_values().unwrap(), vec![1.0, 2.0]);
        assert_eq!(merged.tol, Some(1e-12));
        assert_eq!(merged.mode(), DerivativeMode::FixedV);
        assert_eq!(merged.ka_values().unwrap().len(), 11);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"xsi": [1]}"#).is_err());
    }
}
