//! TOML run configuration. Every section rejects unknown keys, and the whole
//! file is validated before any computation starts.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::{
    NoiseMode, OptimizerSettings, ProtocolKind, SchemeTemplate, Side, SweepAxis, SweepKind,
    TpsSetting, DEFAULT_CUTOFF, DEFAULT_NOISE_TOL,
};
use crate::gaussian::Quadrature;
use crate::protocols::{EstimatorModel, MuPolicy};
use crate::sources::IntegralGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every command except `oracle-check`.
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Per-curve overrides of `[scheme]`; empty means one curve.
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub max_distance: MaxDistanceConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub optimize: OptimizeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn two_way() -> ProtocolKind {
    ProtocolKind::TwoWay
}
fn half() -> f64 {
    0.5
}
fn optimize() -> TpsSetting {
    TpsSetting::Optimize
}
fn x_basis() -> Quadrature {
    Quadrature::X
}

/// Operating point. `v` sets both sources; `v_alice`/`v_bob` override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "two_way")]
    pub protocol: ProtocolKind,
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default)]
    pub v_alice: Option<f64>,
    #[serde(default)]
    pub v_bob: Option<f64>,
    pub beta: f64,
    pub eps: f64,
    #[serde(default = "half")]
    pub t_a: f64,
    #[serde(default)]
    pub distance_km: f64,
    #[serde(default)]
    pub k_alice: u32,
    #[serde(default)]
    pub k_bob: u32,
    #[serde(default = "optimize")]
    pub t_ps_alice: TpsSetting,
    #[serde(default = "optimize")]
    pub t_ps_bob: TpsSetting,
    #[serde(default)]
    pub mu_policy: MuPolicy,
    #[serde(default)]
    pub estimator: EstimatorModel,
    #[serde(default = "x_basis")]
    pub basis: Quadrature,
}

impl SchemeConfig {
    pub fn template(&self) -> Result<SchemeTemplate, CliError> {
        let pick = |side: Option<f64>, key: &str| {
            side.or(self.v)
                .ok_or_else(|| CliError::Config(format!("[scheme]: missing `v` (or `{key}`)")))
        };
        let t = SchemeTemplate {
            protocol: self.protocol,
            v_alice: pick(self.v_alice, "v_alice")?,
            v_bob: pick(self.v_bob, "v_bob")?,
            k_alice: self.k_alice,
            k_bob: self.k_bob,
            t_ps_alice: self.t_ps_alice,
            t_ps_bob: self.t_ps_bob,
            t_a: self.t_a,
            beta: self.beta,
            eps: self.eps,
            distance_km: self.distance_km,
            mu_policy: self.mu_policy,
            estimator: self.estimator,
            basis: self.basis,
        };
        t.validate().map_err(|e| CliError::Config(format!("[scheme]: {e}")))?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    #[serde(default = "rate")]
    pub kind: SweepKind,
    /// Explicit grid; otherwise `start..=stop` in steps of `step`.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

fn rate() -> SweepKind {
    SweepKind::Rate
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let grid = match (&self.grid, self.start, self.stop, self.step) {
            (Some(g), None, None, None) => g.clone(),
            (None, Some(a), Some(b), Some(h)) => {
                if !(h > 0.0) || !a.is_finite() || !b.is_finite() {
                    return Err(CliError::Config("[sweep]: `step` must be positive and bounds finite".into()));
                }
                let n = ((b - a) / h + 1e-9).floor();
                if n < 0.0 {
                    Vec::new()
                } else {
                    (0..=n as usize).map(|i| a + i as f64 * h).collect()
                }
            }
            _ => {
                return Err(CliError::Config(
                    "[sweep]: give either `grid` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if grid.is_empty() {
            return Err(CliError::Config("[sweep]: grid is empty".into()));
        }
        Ok(grid)
    }
}

/// Overrides of `[scheme]` for one named curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub name: String,
    #[serde(default)]
    pub protocol: Option<ProtocolKind>,
    #[serde(default)]
    pub k_alice: Option<u32>,
    #[serde(default)]
    pub k_bob: Option<u32>,
    #[serde(default)]
    pub t_ps_alice: Option<TpsSetting>,
    #[serde(default)]
    pub t_ps_bob: Option<TpsSetting>,
}

impl CurveConfig {
    pub fn apply(&self, base: &SchemeTemplate) -> Result<SchemeTemplate, CliError> {
        let mut t = base.clone();
        if let Some(p) = self.protocol {
            t.protocol = p;
        }
        if let Some(k) = self.k_alice {
            t.k_alice = k;
        }
        if let Some(k) = self.k_bob {
            t.k_bob = k;
        }
        if let Some(s) = self.t_ps_alice {
            t.t_ps_alice = s;
        }
        if let Some(s) = self.t_ps_bob {
            t.t_ps_bob = s;
        }
        t.validate()
            .map_err(|e| CliError::Config(format!("[[curves]] `{}`: {e}", self.name)))?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub tol: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mode: NoiseMode::Optimized,
            tol: DEFAULT_NOISE_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxDistanceConfig {
    pub cutoff: f64,
}

impl Default for MaxDistanceConfig {
    fn default() -> Self {
        Self { cutoff: DEFAULT_CUTOFF }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Photons subtracted on each subtracting side.
    pub k: u32,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { k: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Side to optimise; defaults to every subtracting side.
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub v: Vec<f64>,
    pub t_ps: Vec<f64>,
    pub k: Vec<u32>,
    /// Maximum elementwise deviation from the photon-number oracle.
    pub fock_tol: f64,
    /// Maximum elementwise deviation from the phase-space integral oracle.
    pub integral_tol: f64,
    /// Tail bound used to truncate the photon-number sums.
    pub fock_tail: f64,
    pub grid: IntegralGrid,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            v: vec![5.0, 20.0, 40.0],
            t_ps: vec![0.5, 0.8, 0.95, 1.0],
            k: vec![0, 1, 2, 3],
            fock_tol: 1e-8,
            integral_tol: 1e-4,
            fock_tail: 1e-14,
            grid: IntegralGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn template(&self) -> Result<SchemeTemplate, CliError> {
        self.scheme
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [scheme] section".into()))?
            .template()
    }

    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] section".into()))
    }
}

/// Parses `text` after applying `key=value` overrides addressed by dotted path.
pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    if overrides.is_empty() {
        // Deserialising from the text keeps line numbers in diagnostics.
        toml::from_str(text).map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    } else {
        RunConfig::deserialize(table).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let path: Vec<&str> = path.trim().split('.').collect();
    let raw = raw.trim();
    let value = format!("x = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let (last, parents) = path.split_last().expect("split yields at least one item");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{assignment}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[scheme]\nv = 40.0\nbeta = 0.95\neps = 0.01\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL, &[]).unwrap();
        let t = c.scheme.unwrap().template().unwrap();
        assert_eq!(t, SchemeTemplate::reference_two_way());
        assert_eq!(c.optimizer, OptimizerSettings::default());
    }

    #[test]
    fn missing_beta_is_named() {
        let e = parse("[scheme]\nv = 40.0\neps = 0.01\n", &[]).unwrap_err();
        assert!(e.to_string().contains("beta"), "{e}");
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let e = parse(&format!("{MINIMAL}betta = 1\n"), &[]).unwrap_err().to_string();
        assert!(e.contains("betta") && e.contains("line 5"), "{e}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = parse(MINIMAL, &["scheme.distance_km=25".into(), "sweep.axis=distance-km".into(), "sweep.grid=[1.0, 2.0]".into()]).unwrap();
        assert_eq!(c.scheme.unwrap().distance_km, 25.0);
        assert_eq!(c.sweep.unwrap().values().unwrap(), vec![1.0, 2.0]);
        assert!(parse(MINIMAL, &["scheme.v.x=1".into()]).is_err());
    }

    #[test]
    fn range_grid_includes_stop() {
        let s = SweepConfig {
            axis: SweepAxis::DistanceKm,
            kind: SweepKind::Rate,
            grid: None,
            start: Some(0.0),
            stop: Some(1.0),
            step: Some(0.25),
        };
        assert_eq!(s.values().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let empty = SweepConfig { grid: Some(vec![]), start: None, stop: None, step: None, ..s };
        assert!(empty.values().is_err());
    }

    #[test]
    fn missing_source_variance_is_reported() {
        let c = parse("[scheme]\nbeta = 0.95\neps = 0.01\n", &[]).unwrap();
        assert!(c.scheme.unwrap().template().unwrap_err().to_string().contains("`v`"));
    }
}
