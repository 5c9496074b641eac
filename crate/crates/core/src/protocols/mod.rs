//! Channel model, two-way and one-way key-rate evaluation.

mod one_way;
mod two_way;

pub use one_way::one_way_key_rate;
pub use two_way::{
    assemble_two_way_state, closed_form_mu, estimator_state, gamma_mu_symplectic,
    gamma_mu_transform, holevo_bound, mutual_information, optimal_mu, two_way_key_rate,
    EstimatorState, HolevoBound, MODE_A1, MODE_A5, MODE_B1, MODE_B5,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::gaussian::{CovarianceMatrix, Quadrature};
use crate::sources::{SourceSpec, SubtractionSpec};

/// Thermal-loss channel realised by an entangling cloner: transmittance `t`,
/// excess noise `eps` (shot-noise units, referred to the channel input).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct ChannelSpec {
    t: f64,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRepr {
    t: f64,
    eps: f64,
}

impl TryFrom<ChannelRepr> for ChannelSpec {
    type Error = Error;
    fn try_from(r: ChannelRepr) -> Result<Self> {
        ChannelSpec::new(r.t, r.eps)
    }
}

impl From<ChannelSpec> for ChannelRepr {
    fn from(c: ChannelSpec) -> Self {
        ChannelRepr { t: c.t, eps: c.eps }
    }
}

impl ChannelSpec {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "channel transmittance must lie in (0, 1]",
            });
        }
        check_range("eps", eps, 0.0, f64::MAX, "excess noise must be >= 0")?;
        Ok(Self { t, eps })
    }

    pub const fn ideal() -> Self {
        Self { t: 1.0, eps: 0.0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Input-referred added noise `χ = (1 − t)/t + ε`.
    pub fn chi(&self) -> f64 {
        (1.0 - self.t) / self.t + self.eps
    }
}

/// Sends `mode` through the cloner channel: its quadratures scale by `√t` and it
/// picks up `(1 − t) + t ε` of noise, i.e. `V → t (V + χ)`. Eve's modes are traced out.
pub fn entangling_cloner_apply(
    gamma: &CovarianceMatrix,
    mode: usize,
    ch: &ChannelSpec,
) -> Result<CovarianceMatrix> {
    let n = gamma.n_modes();
    if mode >= n {
        return Err(Error::InvalidMode {
            index: mode,
            n_modes: n,
        });
    }
    let st = ch.t().sqrt();
    let mut m = gamma.matrix().clone();
    for q in 0..2 {
        let i = 2 * mode + q;
        m.row_mut(i).scale_mut(st);
        m.column_mut(i).scale_mut(st);
        m[(i, i)] += (1.0 - ch.t()) + ch.t() * ch.eps();
    }
    CovarianceMatrix::new(m)
}

/// How Bob's estimator `x_B = x_B5 − μ x_B1` is formed in the covariance picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorModel {
    /// Bob heterodynes his retained mode: it is split on a balanced beam splitter
    /// with vacuum, the estimator uses one output arm, and the other arm stays in
    /// the conditional state (four conditional symplectic eigenvalues).
    #[default]
    Heterodyne,
    /// The estimator acts on the retained mode's quadratures directly and the
    /// measured mode is dropped (three conditional symplectic eigenvalues).
    DirectQuadrature,
}

/// Choice of the estimator gain μ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuPolicy {
    #[default]
    Optimal,
    Explicit(f64),
}

/// Full parameter set of one two-way run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub alice_src: SourceSpec,
    pub bob_src: SourceSpec,
    #[serde(default)]
    pub alice_sub: SubtractionSpec,
    #[serde(default)]
    pub bob_sub: SubtractionSpec,
    /// Alice's coupler transmittance: Alice's outgoing mode is transmitted,
    /// Bob's incoming mode is reflected into the backward channel.
    pub t_a: f64,
    pub forward: ChannelSpec,
    pub backward: ChannelSpec,
    pub beta: f64,
    #[serde(default)]
    pub mu_policy: MuPolicy,
    #[serde(default)]
    pub estimator: EstimatorModel,
    #[serde(default = "default_basis")]
    pub basis: Quadrature,
}

fn default_basis() -> Quadrature {
    Quadrature::X
}

impl ProtocolConfig {
    /// Gaussian two-way protocol with symmetric sources and channels.
    pub fn gaussian(v: f64, t_a: f64, channel: ChannelSpec, beta: f64) -> Result<Self> {
        let src = SourceSpec::new(v)?;
        let cfg = Self {
            alice_src: src,
            bob_src: src,
            alice_sub: SubtractionSpec::disabled(),
            bob_sub: SubtractionSpec::disabled(),
            t_a,
            forward: channel,
            backward: channel,
            beta,
            mu_policy: MuPolicy::Optimal,
            estimator: EstimatorModel::Heterodyne,
            basis: Quadrature::X,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("t_a", self.t_a, 0.0, 1.0, "coupler transmittance must lie in [0, 1]")?;
        check_range("beta", self.beta, 0.0, 1.0, "reconciliation efficiency must lie in [0, 1]")?;
        if let MuPolicy::Explicit(mu) = self.mu_policy {
            check_range("mu", mu, f64::MIN, f64::MAX, "estimator gain must be finite")?;
        }
        Ok(())
    }
}

/// Decomposition of one key-rate evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// Joint post-selection probability.
    pub p_success: f64,
    /// `I(B:A)` in bits.
    pub mutual_info: f64,
    /// `S(E:B)` in bits.
    pub holevo: f64,
    pub eig_unconditional: Vec<f64>,
    pub eig_conditional: Vec<f64>,
    /// `β I − S` before the success-probability factor.
    pub k_s: f64,
    /// Final rate in bits per protocol use.
    pub k_ps: f64,
    pub beta: f64,
    pub mu: f64,
}

impl KeyRateReport {
    pub(crate) fn from_parts(
        p_success: f64,
        beta: f64,
        mutual_info: f64,
        holevo: HolevoBound,
        mu: f64,
    ) -> Self {
        let k_s = beta * mutual_info - holevo.bits;
        Self {
            p_success,
            mutual_info,
            holevo: holevo.bits,
            eig_unconditional: holevo.eig_unconditional,
            eig_conditional: holevo.eig_conditional,
            k_s,
            k_ps: p_success * k_s,
            beta,
            mu,
        }
    }

    /// `P (β I − S)` from the stored fields.
    pub fn recompute_k_ps(&self) -> f64 {
        self.p_success * (self.beta * self.mutual_info - self.holevo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::tmsv_covariance;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chi_round_trip() {
        let ch = ChannelSpec::new(0.25, 0.01).unwrap();
        assert_abs_diff_eq!(ch.chi(), 3.01, epsilon = 1e-12);
        assert_eq!(ChannelSpec::ideal().chi(), 0.0);
        assert!(ChannelSpec::new(0.0, 0.1).is_err());
        assert!(ChannelSpec::new(0.5, -0.1).is_err());
    }

    #[test]
    fn identity_channel_changes_nothing() {
        let g = tmsv_covariance(7.0).unwrap();
        let out = entangling_cloner_apply(&g, 1, &ChannelSpec::ideal()).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn lossy_channel_on_thermal_mode() {
        let g = CovarianceMatrix::thermal(40.0).unwrap();
        let out = entangling_cloner_apply(&g, 0, &ChannelSpec::new(0.5, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 20.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(1, 1), 20.5, epsilon = 1e-12);
    }

    #[test]
    fn channel_on_tmsv_arm() {
        let v = 40.0;
        let ch = ChannelSpec::new(0.3, 0.05).unwrap();
        let out = entangling_cloner_apply(&tmsv_covariance(v).unwrap(), 1, &ch).unwrap();
        let expected = ch.t() * v + 1.0 - ch.t() + ch.t() * ch.eps();
        assert_abs_diff_eq!(out.get(2, 2), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(2, 2), ch.t() * (v + ch.chi()), epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(0, 2), (0.3 * (v * v - 1.0)).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(0, 0), v, epsilon = 0.0);
    }

    #[test]
    fn unit_transmittance_adds_noise_directly() {
        let g = CovarianceMatrix::thermal(3.0).unwrap();
        let out = entangling_cloner_apply(&g, 0, &ChannelSpec::new(1.0, 0.2).unwrap()).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 3.2, epsilon = 1e-15);
        assert!(entangling_cloner_apply(&g, 1, &ChannelSpec::ideal()).is_err());
    }

    #[test]
    fn config_validation() {
        let ch = ChannelSpec::ideal();
        assert!(ProtocolConfig::gaussian(40.0, 0.5, ch, 0.95).is_ok());
        assert!(ProtocolConfig::gaussian(40.0, 1.5, ch, 0.95).is_err());
        assert!(ProtocolConfig::gaussian(40.0, 0.5, ch, 1.2).is_err());
    }
}
