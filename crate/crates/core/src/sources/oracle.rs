//! Independent checks on the closed-form subtracted covariance.
//!
//! Neither routine touches `subtracted_covariance`: the Fock oracle sums the
//! photon-number series of the heralded state and the integral oracle averages
//! the heralded coherent states over post-selected heterodyne outcomes.

use serde::{Deserialize, Serialize};

use super::{heralded_amplitude_sq, heterodyne_density, poisson_weight, SourceSpec, SubtractionSpec, TwoModeCovariance};
use crate::error::{Error, Result};

/// Hard cap on the number of Fock terms.
pub const FOCK_TERM_CAP: usize = 20_000;

/// Running sums of the series `Σ_n w_n |n⟩|n − k⟩` with
/// `w_n ∝ λ^{2n} C(n, k) t^{n − k}` (the constant `(1 − t)^k` cancels on normalisation).
struct FockSums {
    norm: f64,
    n1: f64,
    n2: f64,
    corr: f64,
}

impl FockSums {
    fn covariance(&self) -> TwoModeCovariance {
        TwoModeCovariance {
            v1: 1.0 + 2.0 * self.n1 / self.norm,
            c: 2.0 * self.corr / self.norm,
            v2: 1.0 + 2.0 * self.n2 / self.norm,
        }
    }
}

fn step_ratio(q: f64, n: usize, k: usize) -> f64 {
    q * (n + 1) as f64 / (n + 1 - k) as f64
}

/// Sums `terms` Fock components starting at `n = k`. Returns the sums and, for the
/// adaptive driver, a rigorous bound on the neglected `Σ w_n n²` tail (relative to the norm).
fn fock_sums(src: &SourceSpec, sub: &SubtractionSpec, terms: usize) -> (FockSums, f64) {
    let k = sub.k() as usize;
    let q = src.lambda_sq() * sub.t_ps();
    let mut s = FockSums {
        norm: 0.0,
        n1: 0.0,
        n2: 0.0,
        corr: 0.0,
    };
    let mut w = 1.0;
    let mut prev: Option<f64> = None;
    let mut n = k;
    for _ in 0..terms {
        let nf = n as f64;
        s.norm += w;
        s.n1 += w * nf;
        s.n2 += w * (nf - k as f64);
        if let Some(wp) = prev {
            // ⟨a1 a2⟩ couples |n⟩|n−k⟩ with |n−1⟩|n−k−1⟩.
            s.corr += (wp * w).sqrt() * (nf * (nf - k as f64)).sqrt();
        }
        prev = Some(w);
        w *= step_ratio(q, n, k);
        n += 1;
    }
    // Next neglected term w_n n², followed by terms whose successive ratio is at
    // most ρ (the ratio is decreasing in n).
    let nf = n as f64;
    let rho = step_ratio(q, n, k) * ((nf + 1.0) / nf).powi(2);
    let tail = if rho < 1.0 {
        w * nf * nf / (1.0 - rho) / s.norm
    } else {
        f64::INFINITY
    };
    (s, tail)
}

/// Number of Fock terms needed for the neglected second-moment tail to drop below `tol`.
pub fn fock_truncation(src: &SourceSpec, sub: &SubtractionSpec, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tail tolerance must be positive",
        });
    }
    if src.lambda_sq() * sub.t_ps() == 0.0 {
        return Ok(1);
    }
    let mut terms = 16;
    loop {
        let (_, tail) = fock_sums(src, sub, terms);
        if tail < tol {
            return Ok(terms);
        }
        if terms >= FOCK_TERM_CAP {
            return Err(Error::Truncation { cap: FOCK_TERM_CAP });
        }
        terms = (terms * 2).min(FOCK_TERM_CAP);
    }
}

/// Covariance from exactly `terms` Fock components.
pub fn fock_oracle_truncated(src: &SourceSpec, sub: &SubtractionSpec, terms: usize) -> TwoModeCovariance {
    fock_sums(src, sub, terms.max(1)).0.covariance()
}

/// Covariance of the k-photon-subtracted TMSV from its photon-number expansion,
/// truncated adaptively at tail tolerance `tol`.
pub fn fock_oracle_covariance(
    src: &SourceSpec,
    sub: &SubtractionSpec,
    tol: f64,
) -> Result<TwoModeCovariance> {
    let terms = fock_truncation(src, sub, tol)?;
    Ok(fock_oracle_truncated(src, sub, terms))
}

/// Which weight multiplies the heterodyne density in the integral oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// Post-selected on `k` photons in the tapped mode.
    Selected,
    /// Every outcome kept.
    Unselected,
}

/// Square quadrature grid over the heterodyne plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralGrid {
    /// Points per axis.
    pub points: usize,
    /// Half width in standard deviations of the weighted outcome distribution.
    pub half_width_sigmas: f64,
}

impl Default for IntegralGrid {
    fn default() -> Self {
        Self {
            points: 401,
            half_width_sigmas: 10.0,
        }
    }
}

/// Minimum grid half width (in standard deviations) for the advertised accuracy.
pub const MIN_GRID_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyWarning {
    pub half_width_sigmas: f64,
    pub points: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub covariance: TwoModeCovariance,
    pub warning: Option<AccuracyWarning>,
}

/// Second moments of the heralded ensemble by trapezoidal quadrature over `(x, p)`.
/// The outgoing-mode quadrature is integrated analytically: given `(x, p)` it is
/// Gaussian with mean `2√t Re α` and unit variance.
pub fn integral_oracle_covariance(
    src: &SourceSpec,
    sub: &SubtractionSpec,
    grid: &IntegralGrid,
    weighting: Weighting,
) -> IntegralEstimate {
    let k = sub.k();
    let t = sub.t_ps();
    let l2 = src.lambda_sq();
    // With |β|² = (1 − t)λ² r²/2 the selected weight is ∝ r^{2k} e^{−a r²}; its
    // per-quadrature variance is (k + 1)/(2a).
    let a = 1.0 / (src.v() + 1.0) + 0.5 * (1.0 - t) * l2;
    let sigma = match weighting {
        Weighting::Selected => ((k as f64 + 1.0) / (2.0 * a)).sqrt(),
        Weighting::Unselected => ((src.v() + 1.0) / 2.0).sqrt(),
    }
    .max(((src.v() + 1.0) / 2.0).sqrt());

    let warning = if grid.half_width_sigmas < MIN_GRID_SIGMAS || grid.points < 3 {
        let message = format!(
            "integration grid spans {:.2} standard deviations with {} points; accuracy not guaranteed",
            grid.half_width_sigmas, grid.points
        );
        log::warn!("{message}");
        Some(AccuracyWarning {
            half_width_sigmas: grid.half_width_sigmas,
            points: grid.points,
            message,
        })
    } else {
        None
    };

    let n = grid.points.max(3);
    let half = grid.half_width_sigmas * sigma;
    let h = 2.0 * half / (n - 1) as f64;
    let mean_scale = (2.0 * t).sqrt() * src.lambda();

    let (mut z, mut xx, mut xm, mut mm) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let x = -half + i as f64 * h;
        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        for j in 0..n {
            let p = -half + j as f64 * h;
            let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let sel = match weighting {
                // Divided by (1 − t)^k, which cancels in the normalised average.
                Weighting::Selected => {
                    let alpha2 = heralded_amplitude_sq(src, x, p);
                    poisson_weight((1.0 - t) * alpha2, 0) * alpha2.powi(k as i32)
                }
                Weighting::Unselected => 1.0,
            };
            let w = wi * wj * sel * heterodyne_density(src, x, p);
            let m4 = mean_scale * x;
            z += w;
            xx += w * x * x;
            xm += w * x * m4;
            mm += w * (1.0 + m4 * m4);
        }
    }
    IntegralEstimate {
        covariance: TwoModeCovariance {
            v1: 2.0 * xx / z - 1.0,
            c: std::f64::consts::SQRT_2 * xm / z,
            v2: mm / z,
        },
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::subtracted_covariance;
    use approx::assert_abs_diff_eq;

    fn source(v: f64, k: u32, t: f64) -> (SourceSpec, SubtractionSpec) {
        (SourceSpec::new(v).unwrap(), SubtractionSpec::new(k, t).unwrap())
    }

    #[test]
    fn fock_without_subtraction_is_tmsv() {
        let (s, sub) = (SourceSpec::new(40.0).unwrap(), SubtractionSpec::disabled());
        let c = fock_oracle_covariance(&s, &sub, 1e-12).unwrap();
        assert_abs_diff_eq!(c.v1, 40.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.v2, 40.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.c, 1599f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn fock_matches_closed_form() {
        for (v, k, t) in [(5.0, 1, 0.9), (5.0, 2, 0.7), (40.0, 3, 1.0), (20.0, 1, 0.5)] {
            let (s, sub) = source(v, k, t);
            let f = fock_oracle_covariance(&s, &sub, 1e-13).unwrap();
            let c = subtracted_covariance(&s, &sub);
            assert!(f.max_abs_diff(&c) < 1e-8, "({v},{k},{t}): {f:?} vs {c:?}");
        }
    }

    #[test]
    fn fock_truncation_is_converged() {
        let tol = 1e-10;
        let (s, sub) = source(40.0, 2, 0.95);
        let n = fock_truncation(&s, &sub, tol).unwrap();
        let a = fock_oracle_truncated(&s, &sub, n);
        let b = fock_oracle_truncated(&s, &sub, 2 * n);
        assert!(a.max_abs_diff(&b) <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn fock_truncation_errors() {
        let (s, sub) = source(40.0, 1, 0.9);
        assert!(fock_truncation(&s, &sub, 0.0).is_err());
        // λ² = 1 − 2e-6 needs far more than the cap.
        let hot = SourceSpec::new(1e6).unwrap();
        assert_eq!(
            fock_truncation(&hot, &SubtractionSpec::disabled(), 1e-12),
            Err(Error::Truncation { cap: FOCK_TERM_CAP })
        );
    }

    #[test]
    fn integral_gaussian_case() {
        let s = SourceSpec::new(40.0).unwrap();
        let est = integral_oracle_covariance(&s, &SubtractionSpec::disabled(), &IntegralGrid::default(), Weighting::Selected);
        assert!(est.warning.is_none());
        let c = est.covariance;
        assert_abs_diff_eq!(c.v1, 40.0, epsilon = 1e-4);
        assert_abs_diff_eq!(c.c, 1599f64.sqrt(), epsilon = 1e-4);
        assert_abs_diff_eq!(c.v2, 40.0, epsilon = 1e-4);
    }

    #[test]
    fn integral_matches_closed_form() {
        let (s, sub) = source(20.0, 1, 0.8);
        let est = integral_oracle_covariance(&s, &sub, &IntegralGrid::default(), Weighting::Selected);
        assert!(est.covariance.max_abs_diff(&subtracted_covariance(&s, &sub)) < 1e-4);
    }

    #[test]
    fn unselected_marginal_is_unchanged() {
        let (s, sub) = source(20.0, 1, 0.8);
        let est = integral_oracle_covariance(&s, &sub, &IntegralGrid::default(), Weighting::Unselected);
        assert_abs_diff_eq!(est.covariance.v1, 20.0, epsilon = 1e-4);
    }

    #[test]
    fn narrow_grid_warns() {
        let (s, sub) = source(20.0, 1, 0.8);
        let grid = IntegralGrid {
            points: 101,
            half_width_sigmas: 3.0,
        };
        let est = integral_oracle_covariance(&s, &sub, &grid, Weighting::Selected);
        assert!(est.warning.is_some());
    }
}
