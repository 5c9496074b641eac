//! Gaussian and virtually photon-subtracted two-mode squeezed vacuum sources.
//!
//! Photon subtraction is realised by post-selecting heterodyne outcomes on the
//! retained mode. The resulting non-Gaussian state is characterised by its
//! covariance matrix, which is all the key-rate analysis consumes.

mod oracle;

pub use oracle::{
    fock_oracle_covariance, fock_oracle_truncated, fock_truncation, integral_oracle_covariance,
    AccuracyWarning, IntegralEstimate, IntegralGrid, Weighting, FOCK_TERM_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::gaussian::{two_mode_symmetric, CovarianceMatrix};

/// A two-mode squeezed vacuum source with modulation variance `v` (shot-noise units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceRepr", into = "SourceRepr")]
pub struct SourceSpec {
    v: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceRepr {
    v: f64,
}

impl TryFrom<SourceRepr> for SourceSpec {
    type Error = Error;
    fn try_from(r: SourceRepr) -> Result<Self> {
        SourceSpec::new(r.v)
    }
}

impl From<SourceSpec> for SourceRepr {
    fn from(s: SourceSpec) -> Self {
        SourceRepr { v: s.v }
    }
}

impl SourceSpec {
    pub fn new(v: f64) -> Result<Self> {
        check_range("v", v, 1.0, f64::MAX, "modulation variance must be >= 1")?;
        Ok(Self { v })
    }

    /// Source with squeezing amplitude `λ = tanh r`.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        check_range("lambda", lambda, 0.0, 1.0 - f64::EPSILON, "lambda must lie in [0, 1)")?;
        let l2 = lambda * lambda;
        Self::new((1.0 + l2) / (1.0 - l2))
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// `λ² = (v − 1)/(v + 1)`.
    pub fn lambda_sq(&self) -> f64 {
        (self.v - 1.0) / (self.v + 1.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_sq().sqrt()
    }

    /// Squeezing parameter `r = atanh λ`.
    pub fn r(&self) -> f64 {
        self.lambda().atanh()
    }
}

/// Virtual photon subtraction settings: `k` photons after a tap of transmittance `t_ps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubtractionRepr", into = "SubtractionRepr")]
pub struct SubtractionSpec {
    k: u32,
    t_ps: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubtractionRepr {
    k: u32,
    t_ps: f64,
}

impl TryFrom<SubtractionRepr> for SubtractionSpec {
    type Error = Error;
    fn try_from(r: SubtractionRepr) -> Result<Self> {
        SubtractionSpec::new(r.k, r.t_ps)
    }
}

impl From<SubtractionSpec> for SubtractionRepr {
    fn from(s: SubtractionSpec) -> Self {
        SubtractionRepr { k: s.k, t_ps: s.t_ps }
    }
}

impl SubtractionSpec {
    pub fn new(k: u32, t_ps: f64) -> Result<Self> {
        if !(t_ps.is_finite() && t_ps > 0.0 && t_ps <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "t_ps",
                value: t_ps,
                reason: "subtraction transmittance must lie in (0, 1]",
            });
        }
        Ok(Self { k, t_ps })
    }

    /// No post-selection: `k = 0`, `t_ps = 1`.
    pub const fn disabled() -> Self {
        Self { k: 0, t_ps: 1.0 }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn t_ps(&self) -> f64 {
        self.t_ps
    }

    pub fn enabled(&self) -> bool {
        !(self.k == 0 && self.t_ps == 1.0)
    }

    pub fn with_t_ps(&self, t_ps: f64) -> Result<Self> {
        Self::new(self.k, t_ps)
    }
}

impl Default for SubtractionSpec {
    fn default() -> Self {
        Self::disabled()
    }
}

/// Two-mode covariance `[[v1 I, c σz], [c σz, v2 I]]` of a (possibly subtracted) source.
/// Mode 1 is retained by its owner, mode 2 is sent out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCovariance {
    pub v1: f64,
    pub c: f64,
    pub v2: f64,
}

impl TwoModeCovariance {
    pub fn to_covariance(&self) -> CovarianceMatrix {
        two_mode_symmetric(self.v1, self.c, self.v2)
    }

    pub fn max_abs_diff(&self, other: &TwoModeCovariance) -> f64 {
        (self.v1 - other.v1)
            .abs()
            .max((self.c - other.c).abs())
            .max((self.v2 - other.v2).abs())
    }

    pub fn is_physical(&self) -> bool {
        self.v1 >= 1.0 && self.v2 >= 1.0 && self.to_covariance().is_physical()
    }
}

/// Closed-form covariance of the subtracted source:
/// `V1 = 2V' − 1`, `C = 2√t λ V'`, `V2 = 2 t λ² V' + 1`, `V' = (k + 1)/(1 − t λ²)`.
pub fn subtracted_covariance(src: &SourceSpec, sub: &SubtractionSpec) -> TwoModeCovariance {
    if !sub.enabled() {
        let v = src.v();
        return TwoModeCovariance {
            v1: v,
            c: (v * v - 1.0).sqrt(),
            v2: v,
        };
    }
    let l2 = src.lambda_sq();
    let t = sub.t_ps();
    let vp = (sub.k() as f64 + 1.0) / (1.0 - t * l2);
    TwoModeCovariance {
        v1: 2.0 * vp - 1.0,
        c: 2.0 * (t * l2).sqrt() * vp,
        v2: 2.0 * t * l2 * vp + 1.0,
    }
}

/// Probability that the post-selection keeps a sample,
/// `P = (1 − λ²)/(1 − tλ²) · [λ²(1 − t)/(1 − tλ²)]^k`.
pub fn success_probability(src: &SourceSpec, sub: &SubtractionSpec) -> f64 {
    if !sub.enabled() {
        return 1.0;
    }
    let l2 = src.lambda_sq();
    let t = sub.t_ps();
    let denom = 1.0 - t * l2;
    (1.0 - l2) / denom * (l2 * (1.0 - t) / denom).powi(sub.k() as i32)
}

/// Coherent amplitude `α = λ (x − i p)/√2` heralded on the outgoing mode by the
/// heterodyne outcome `(x, p)`; returned as `|α|²`.
pub fn heralded_amplitude_sq(src: &SourceSpec, x: f64, p: f64) -> f64 {
    0.5 * src.lambda_sq() * (x * x + p * p)
}

/// Density of the heterodyne outcome `(x, p)`: isotropic Gaussian with variance
/// `(v + 1)/2` per quadrature.
pub fn heterodyne_density(src: &SourceSpec, x: f64, p: f64) -> f64 {
    let s = src.v() + 1.0;
    (-(x * x + p * p) / s).exp() / (std::f64::consts::PI * s)
}

/// Acceptance probability of a single heterodyne outcome,
/// `|⟨k | √(1 − t) α⟩|² = e^{−|β|²} |β|^{2k} / k!`.
pub fn selection_probability(src: &SourceSpec, sub: &SubtractionSpec, x: f64, p: f64) -> f64 {
    let b2 = (1.0 - sub.t_ps()) * heralded_amplitude_sq(src, x, p);
    poisson_weight(b2, sub.k())
}

pub(crate) fn poisson_weight(mean: f64, k: u32) -> f64 {
    if k == 0 {
        return (-mean).exp();
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (-mean + k as f64 * mean.ln() - ln_fact).exp()
}
