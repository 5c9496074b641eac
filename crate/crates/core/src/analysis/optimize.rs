use serde::{Deserialize, Serialize};

use super::search::{bisect_boundary, golden_section_max};
use super::SchemeTemplate;
use crate::error::{Error, Result};
use crate::protocols::KeyRateReport;

/// Rates below this are discarded when measuring reach, in bits per use.
pub const DEFAULT_CUTOFF: f64 = 1e-8;
/// Bracket width at which the tolerable-noise bisection stops.
pub const DEFAULT_NOISE_TOL: f64 = 1e-5;
/// Bracket width at which the distance bisection stops, in km.
pub const DISTANCE_TOL_KM: f64 = 0.1;
const RATE_RESIDUAL: f64 = 1e-12;

/// Coarse grid plus golden-section refinement for `t_ps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub grid_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Golden-section bracket width at termination.
    pub tol: f64,
    /// Alternating rounds when both sides are optimised.
    pub rounds: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points: 21,
            t_min: 0.01,
            t_max: 1.0,
            tol: 1e-4,
            rounds: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsOptimum {
    pub t_ps_alice: f64,
    pub t_ps_bob: f64,
    pub report: KeyRateReport,
    /// False when no positive rate was found.
    pub positive: bool,
}

fn line_search<F>(mut rate: F, s: &OptimizerSettings) -> Result<(f64, KeyRateReport)>
where
    F: FnMut(f64) -> Result<KeyRateReport>,
{
    let n = s.grid_points.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| s.t_min + (s.t_max - s.t_min) * i as f64 / (n - 1) as f64)
        .collect();
    let mut best: Option<(usize, KeyRateReport)> = None;
    for (i, &t) in grid.iter().enumerate() {
        let r = rate(t)?;
        if best.as_ref().is_none_or(|(_, b)| r.k_ps > b.k_ps) {
            best = Some((i, r));
        }
    }
    let (i, grid_best) = best.expect("grid is non-empty");
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(n - 1)];
    let (t, k) = golden_section_max(|t| rate(t).map(|r| r.k_ps), lo, hi, s.tol)?;
    if k > grid_best.k_ps {
        Ok((t, rate(t)?))
    } else {
        Ok((grid[i], grid_best))
    }
}

/// Maximises the key rate over the subtraction transmittance of `side` at the
/// template's distance and noise. The other side keeps its pinned value.
pub fn optimize_tps(template: &SchemeTemplate, side: Side, s: &OptimizerSettings) -> Result<TpsOptimum> {
    template.validate()?;
    let mut t_a = SchemeTemplate::pinned_tps(template.t_ps_alice);
    let mut t_b = SchemeTemplate::pinned_tps(template.t_ps_bob);
    let report = match side {
        Side::Alice => {
            let (t, r) = line_search(|t| template.rate_at(t, t_b), s)?;
            t_a = t;
            r
        }
        Side::Bob => {
            let (t, r) = line_search(|t| template.rate_at(t_a, t), s)?;
            t_b = t;
            r
        }
        Side::Both => {
            let mid = 0.5 * (s.t_min + s.t_max);
            t_a = mid;
            t_b = mid;
            let mut report = template.rate_at(t_a, t_b)?;
            for _ in 0..s.rounds.max(1) {
                let (t, _) = line_search(|t| template.rate_at(t, t_b), s)?;
                t_a = t;
                let (t, r) = line_search(|t| template.rate_at(t_a, t), s)?;
                t_b = t;
                report = r;
            }
            report
        }
    };
    Ok(TpsOptimum {
        t_ps_alice: t_a,
        t_ps_bob: t_b,
        positive: report.k_ps > 0.0,
        report,
    })
}

/// Best rate at the template's operating point, optimising every side whose
/// transmittance is free.
pub fn best_rate(template: &SchemeTemplate, s: &OptimizerSettings) -> Result<TpsOptimum> {
    match template.free_sides() {
        (true, true) => optimize_tps(template, Side::Both, s),
        (true, false) => optimize_tps(template, Side::Alice, s),
        (false, true) => optimize_tps(template, Side::Bob, s),
        (false, false) => {
            template.validate()?;
            let t_a = SchemeTemplate::pinned_tps(template.t_ps_alice);
            let t_b = SchemeTemplate::pinned_tps(template.t_ps_bob);
            let report = template.rate_at(t_a, t_b)?;
            Ok(TpsOptimum {
                t_ps_alice: t_a,
                t_ps_bob: t_b,
                positive: report.k_ps > 0.0,
                report,
            })
        }
    }
}

/// Whether `t_ps` is re-optimised at each trial noise or frozen at its optimum
/// for the template's own noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    Optimized,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum NoiseOutcome {
    /// `rate(eps) > 0 ≥ rate(eps_upper)` with `eps_upper − eps ≤ tol`.
    Tolerable {
        eps: f64,
        eps_upper: f64,
        rate_at_eps: f64,
        rate_at_upper: f64,
        optimum: TpsOptimum,
    },
    /// No positive rate even without excess noise.
    OutOfRange { rate_at_zero: f64 },
}

impl NoiseOutcome {
    pub fn eps(&self) -> Option<f64> {
        match self {
            NoiseOutcome::Tolerable { eps, .. } => Some(*eps),
            NoiseOutcome::OutOfRange { .. } => None,
        }
    }
}

/// Largest excess noise that still leaves a positive key at the template's distance.
pub fn tolerable_excess_noise(
    template: &SchemeTemplate,
    mode: NoiseMode,
    s: &OptimizerSettings,
    tol: f64,
) -> Result<NoiseOutcome> {
    let frozen = match mode {
        NoiseMode::Optimized => None,
        NoiseMode::Fixed => {
            let opt = best_rate(template, s)?;
            Some((opt.t_ps_alice, opt.t_ps_bob))
        }
    };
    let eval = |eps: f64| -> Result<TpsOptimum> {
        let tpl = template.with_eps(eps);
        match frozen {
            None => best_rate(&tpl, s),
            Some((a, b)) => {
                let report = tpl.rate_at(a, b)?;
                Ok(TpsOptimum {
                    t_ps_alice: a,
                    t_ps_bob: b,
                    positive: report.k_ps > 0.0,
                    report,
                })
            }
        }
    };
    let rate = |eps: f64| eval(eps).map(|o| o.report.k_ps);

    let at_zero = rate(0.0)?;
    if !(at_zero > 0.0) {
        return Ok(NoiseOutcome::OutOfRange {
            rate_at_zero: at_zero,
        });
    }
    let mut hi = 0.05;
    let mut k_hi = rate(hi)?;
    while k_hi > 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Bracket {
                what: "tolerable excess noise",
                detail: format!("rate still positive at eps = {hi}"),
            });
        }
        k_hi = rate(hi)?;
    }
    let b = bisect_boundary(
        rate,
        |k| k > 0.0,
        (0.0, at_zero),
        (hi, k_hi),
        tol,
        |k| k.abs() < RATE_RESIDUAL,
    )?;
    Ok(NoiseOutcome::Tolerable {
        eps: b.inside,
        eps_upper: b.outside,
        rate_at_eps: b.f_inside,
        rate_at_upper: b.f_outside,
        optimum: eval(b.inside)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDistance {
    /// Largest certified distance with `rate ≥ cutoff`.
    pub km: f64,
    /// Nearest certified distance with `rate < cutoff`.
    pub km_upper: f64,
    pub rate_at_km: f64,
    pub rate_at_upper: f64,
}

/// Longest distance at which the (optimised) rate stays at or above `cutoff`.
pub fn max_distance(template: &SchemeTemplate, cutoff: f64, s: &OptimizerSettings) -> Result<MaxDistance> {
    let rate = |km: f64| best_rate(&template.at_distance(km), s).map(|o| o.report.k_ps);
    let at_zero = rate(0.0)?;
    if !(at_zero >= cutoff) {
        return Ok(MaxDistance {
            km: 0.0,
            km_upper: 0.0,
            rate_at_km: at_zero,
            rate_at_upper: at_zero,
        });
    }
    let mut hi = 50.0;
    let mut k_hi = rate(hi)?;
    while k_hi >= cutoff {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Bracket {
                what: "maximum distance",
                detail: format!("rate still above cutoff at {hi} km"),
            });
        }
        k_hi = rate(hi)?;
    }
    let b = bisect_boundary(rate, |k| k >= cutoff, (0.0, at_zero), (hi, k_hi), DISTANCE_TOL_KM, |_| false)?;
    Ok(MaxDistance {
        km: b.inside,
        km_upper: b.outside,
        rate_at_km: b.f_inside,
        rate_at_upper: b.f_outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TpsSetting;

    #[test]
    fn zero_photon_side_prefers_no_selection() {
        for km in [5.0, 40.0] {
            let tpl = SchemeTemplate::reference_two_way().at_distance(km);
            let opt = optimize_tps(&tpl, Side::Alice, &OptimizerSettings::default()).unwrap();
            assert_eq!(opt.t_ps_alice, 1.0);
            assert_eq!(opt.report.p_success, 1.0);
        }
    }

    #[test]
    fn interior_optimum_beats_its_neighbours() {
        let s = OptimizerSettings::default();
        let tpl = SchemeTemplate::reference_two_way().with_alice(1).at_distance(50.0);
        let opt = optimize_tps(&tpl, Side::Alice, &s).unwrap();
        assert!(opt.positive);
        assert!(opt.t_ps_alice > 0.0 && opt.t_ps_alice < 1.0);
        let k = opt.report.k_ps;
        assert!(k >= tpl.rate_at(0.99, 1.0).unwrap().k_ps);
        let step = (s.t_max - s.t_min) / (s.grid_points - 1) as f64;
        let i = ((opt.t_ps_alice - s.t_min) / step).round() as i64;
        for j in [i - 1, i, i + 1] {
            let t = (s.t_min + j as f64 * step).clamp(s.t_min, s.t_max);
            assert!(k >= tpl.rate_at(t, 1.0).unwrap().k_ps - 1e-12);
        }
    }

    #[test]
    fn optimum_moves_with_distance() {
        let s = OptimizerSettings::default();
        let tpl = SchemeTemplate::reference_two_way().with_alice(1);
        let ts: Vec<f64> = [10.0, 80.0, 160.0]
            .iter()
            .map(|&km| optimize_tps(&tpl.at_distance(km), Side::Alice, &s).unwrap().t_ps_alice)
            .collect();
        assert!(ts.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-3), "{ts:?}");
    }

    #[test]
    fn fixed_transmittance_is_respected() {
        let mut tpl = SchemeTemplate::reference_two_way().with_alice(1).at_distance(30.0);
        tpl.t_ps_alice = TpsSetting::Fixed(0.4);
        let o = best_rate(&tpl, &OptimizerSettings::default()).unwrap();
        assert_eq!(o.t_ps_alice, 0.4);
        assert_eq!(o.report, tpl.rate_at(0.4, 1.0).unwrap());
    }

    #[test]
    fn noise_threshold_is_bracketed() {
        let s = OptimizerSettings::default();
        let tol = DEFAULT_NOISE_TOL;
        let tpl = SchemeTemplate::reference_two_way().at_distance(30.0);
        let out = tolerable_excess_noise(&tpl, NoiseMode::Optimized, &s, tol).unwrap();
        let eps = out.eps().unwrap();
        let k = |e: f64| best_rate(&tpl.with_eps(e), &s).unwrap().report.k_ps;
        assert!(k(eps - tol) > 0.0);
        assert!(k(eps + tol) < 0.0);
    }

    #[test]
    fn noise_out_of_range() {
        let tpl = SchemeTemplate::reference_two_way().at_distance(400.0);
        let out = tolerable_excess_noise(&tpl, NoiseMode::Optimized, &OptimizerSettings::default(), 1e-5).unwrap();
        assert!(matches!(out, NoiseOutcome::OutOfRange { .. }));
    }

    #[test]
    fn reach_orderings() {
        let s = OptimizerSettings::default();
        let reach = |t: SchemeTemplate| max_distance(&t, DEFAULT_CUTOFF, &s).unwrap();
        let orig = reach(SchemeTemplate::reference_two_way());
        let alice = reach(SchemeTemplate::reference_two_way().with_alice(1));
        let bob = reach(SchemeTemplate::reference_two_way().with_bob(1));
        assert!(alice.km > orig.km);
        assert!((bob.km - orig.km).abs() <= 1.0, "{} vs {}", bob.km, orig.km);
        assert!(reach(SchemeTemplate::reference_one_way().with_alice(1)).km > reach(SchemeTemplate::reference_one_way()).km);
        // Certified bracket.
        assert!(alice.rate_at_km >= DEFAULT_CUTOFF && alice.rate_at_upper < DEFAULT_CUTOFF);
        assert!(alice.km_upper - alice.km <= DISTANCE_TOL_KM);
    }

    #[test]
    fn huge_cutoff_means_zero_reach() {
        let tpl = SchemeTemplate::reference_two_way();
        let d = max_distance(&tpl, 1e3, &OptimizerSettings::default()).unwrap();
        assert_eq!(d.km, 0.0);
    }
}
