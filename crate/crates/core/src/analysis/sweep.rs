use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{best_rate, tolerable_excess_noise, NoiseMode, NoiseOutcome, OptimizerSettings};
use super::{SchemeTemplate, TpsSetting};
use crate::error::{Error, Result};
use crate::protocols::KeyRateReport;

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    DistanceKm,
    Eps,
    /// Pins the transmittance of every side with `k > 0`.
    TPs,
    /// Photon number subtracted by Alice.
    K,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DistanceKm => "distance-km",
            SweepAxis::Eps => "eps",
            SweepAxis::TPs => "t-ps",
            SweepAxis::K => "k",
        }
    }

    /// The template with this axis set to `value`.
    pub fn apply(self, template: &SchemeTemplate, value: f64) -> Result<SchemeTemplate> {
        let mut t = template.clone();
        match self {
            SweepAxis::DistanceKm => t.distance_km = value,
            SweepAxis::Eps => t.eps = value,
            SweepAxis::TPs => {
                if t.k_alice > 0 {
                    t.t_ps_alice = TpsSetting::Fixed(value);
                }
                if t.k_bob > 0 {
                    t.t_ps_bob = TpsSetting::Fixed(value);
                }
            }
            SweepAxis::K => {
                if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                    return Err(Error::InvalidParameter {
                        name: "k",
                        value,
                        reason: "photon number must be a non-negative integer",
                    });
                }
                t.k_alice = value as u32;
            }
        }
        t.validate()?;
        Ok(t)
    }
}

/// What is computed at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Rate,
    /// Largest tolerable excess noise; the reported rate is taken at that noise.
    TolerableNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub t_ps_alice: f64,
    pub t_ps_bob: f64,
    pub report: KeyRateReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerable_eps: Option<f64>,
}

/// Everything needed to re-run any point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub template: SchemeTemplate,
    pub settings: OptimizerSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_mode: Option<NoiseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_tol: Option<f64>,
    /// `key=value` overrides applied on top of a preset.
    #[serde(default)]
    pub overrides: Vec<String>,
}

/// One curve: points sorted ascending by parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub curve: String,
    pub axis: SweepAxis,
    pub kind: SweepKind,
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: 0.0,
            reason: "sweep grid is empty",
        });
    }
    if let Some(&bad) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: bad,
            reason: "grid values must be finite",
        });
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    Ok(g)
}

fn run<F>(grid: &[f64], f: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> Result<SweepPoint> + Sync + Send,
{
    // Indexed parallel collection keeps grid order regardless of scheduling.
    sorted_grid(grid)?.into_par_iter().map(f).collect()
}

/// Optimised key rate along `axis`.
pub fn rate_sweep(
    curve: &str,
    template: &SchemeTemplate,
    axis: SweepAxis,
    grid: &[f64],
    settings: &OptimizerSettings,
) -> Result<SweepResult> {
    let points = run(grid, |x| {
        let o = best_rate(&axis.apply(template, x)?, settings)?;
        Ok(SweepPoint {
            parameter: x,
            t_ps_alice: o.t_ps_alice,
            t_ps_bob: o.t_ps_bob,
            report: o.report,
            tolerable_eps: None,
        })
    })?;
    Ok(SweepResult {
        curve: curve.to_owned(),
        axis,
        kind: SweepKind::Rate,
        points,
        metadata: SweepMetadata {
            template: template.clone(),
            settings: *settings,
            noise_mode: None,
            noise_tol: None,
            overrides: Vec::new(),
        },
    })
}

/// Tolerable excess noise along `axis` (normally distance).
pub fn noise_sweep(
    curve: &str,
    template: &SchemeTemplate,
    axis: SweepAxis,
    grid: &[f64],
    mode: NoiseMode,
    tol: f64,
    settings: &OptimizerSettings,
) -> Result<SweepResult> {
    if axis == SweepAxis::Eps {
        return Err(Error::InvalidParameter {
            name: "axis",
            value: f64::NAN,
            reason: "tolerable noise cannot be swept over eps",
        });
    }
    let points = run(grid, |x| {
        let tpl = axis.apply(template, x)?;
        Ok(match tolerable_excess_noise(&tpl, mode, settings, tol)? {
            NoiseOutcome::Tolerable { eps, optimum, .. } => SweepPoint {
                parameter: x,
                t_ps_alice: optimum.t_ps_alice,
                t_ps_bob: optimum.t_ps_bob,
                report: optimum.report,
                tolerable_eps: Some(eps),
            },
            NoiseOutcome::OutOfRange { .. } => {
                let o = best_rate(&tpl.with_eps(0.0), settings)?;
                SweepPoint {
                    parameter: x,
                    t_ps_alice: o.t_ps_alice,
                    t_ps_bob: o.t_ps_bob,
                    report: o.report,
                    tolerable_eps: None,
                }
            }
        })
    })?;
    Ok(SweepResult {
        curve: curve.to_owned(),
        axis,
        kind: SweepKind::TolerableNoise,
        points,
        metadata: SweepMetadata {
            template: template.clone(),
            settings: *settings,
            noise_mode: Some(mode),
            noise_tol: Some(tol),
            overrides: Vec::new(),
        },
    })
}

/// The four subtraction placements over the same distance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub none: SweepResult,
    pub alice_only: SweepResult,
    pub bob_only: SweepResult,
    pub both: SweepResult,
}

impl SchemeComparison {
    pub fn curves(&self) -> [&SweepResult; 4] {
        [&self.none, &self.alice_only, &self.bob_only, &self.both]
    }

    pub fn into_curves(self) -> Vec<SweepResult> {
        vec![self.none, self.alice_only, self.bob_only, self.both]
    }
}

/// Rate vs distance with no subtraction, `k` photons at Alice, at Bob, and at both.
pub fn compare_schemes(
    base: &SchemeTemplate,
    k: u32,
    grid_km: &[f64],
    settings: &OptimizerSettings,
) -> Result<SchemeComparison> {
    let with = |ka, kb| SchemeTemplate {
        k_alice: ka,
        k_bob: kb,
        ..base.clone()
    };
    let sweep = |name, tpl: SchemeTemplate| rate_sweep(name, &tpl, SweepAxis::DistanceKm, grid_km, settings);
    Ok(SchemeComparison {
        none: sweep("none", with(0, 0))?,
        alice_only: sweep("alice-only", with(k, 0))?,
        bob_only: sweep("bob-only", with(0, k))?,
        both: sweep("both", with(k, k))?,
    })
}
