use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{entangling_cloner_apply, EstimatorModel, KeyRateReport, MuPolicy, ProtocolConfig};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_symplectic, beam_splitter_symplectic, g_entropy, homodyne_condition, CovarianceMatrix,
    Quadrature, SymplecticTransform, EIGEN_CLAMP,
};
use crate::sources::{subtracted_covariance, success_probability};

/// Mode order of the assembled state: Bob's retained mode, Bob's received mode,
/// Alice's retained mode, Alice's coupler output that stays home.
pub const MODE_B1: usize = 0;
pub const MODE_B5: usize = 1;
pub const MODE_A1: usize = 2;
pub const MODE_A5: usize = 3;

/// Global covariance over `(B1, B5, A1, A5)`.
///
/// Bob's source `(B1, B4)` sends B4 through the forward channel (becoming B3).
/// Alice's source `(A1, A4)` meets B3 on her coupler: A4 is transmitted and B3
/// reflected into the backward channel, which delivers B5 to Bob; the other
/// output A5 stays with Alice.
pub fn assemble_two_way_state(cfg: &ProtocolConfig) -> Result<CovarianceMatrix> {
    cfg.validate()?;
    let bob = subtracted_covariance(&cfg.bob_src, &cfg.bob_sub).to_covariance();
    let alice = subtracted_covariance(&cfg.alice_src, &cfg.alice_sub).to_covariance();
    // Working order: B1, B4, A1, A4.
    let g = bob.direct_sum(&alice);
    let g = entangling_cloner_apply(&g, 1, &cfg.forward)?;
    // Mode 3 becomes √t_a A4 + √(1 − t_a) B3 (outgoing), mode 1 becomes A5.
    let coupler = beam_splitter_symplectic(cfg.t_a, 3, 1, 4)?;
    let g = apply_symplectic(&g, &coupler)?;
    let g = entangling_cloner_apply(&g, 3, &cfg.backward)?;
    g.select_modes(&[0, 3, 2, 1])
}

/// `μ = √(2 r T1 T2 (V_B4 − 1)/(V_B1 + 1))`, where `r` is the fraction of Bob's
/// forward mode routed into the backward channel.
pub fn closed_form_mu(routing: f64, t1: f64, t2: f64, v_b1: f64, v_b4: f64) -> Result<f64> {
    if !(v_b1 > -1.0) {
        return Err(Error::InvalidParameter {
            name: "v_b1",
            value: v_b1,
            reason: "retained-mode variance must exceed -1",
        });
    }
    let arg = 2.0 * routing * t1 * t2 * (v_b4 - 1.0) / (v_b1 + 1.0);
    Ok(arg.max(0.0).sqrt())
}

/// Estimator gain for `cfg`; the closed form makes `x_B5 − μ x_het` the minimum
/// variance estimate when `x_het` is Bob's heterodyne outcome on B1.
pub fn optimal_mu(cfg: &ProtocolConfig, assembled: &CovarianceMatrix) -> Result<f64> {
    match cfg.mu_policy {
        MuPolicy::Explicit(mu) => Ok(mu),
        MuPolicy::Optimal => {
            let v_b1 = assembled.variance(MODE_B1, Quadrature::X);
            let v_b4 = subtracted_covariance(&cfg.bob_src, &cfg.bob_sub).v2;
            closed_form_mu(1.0 - cfg.t_a, cfg.forward.t(), cfg.backward.t(), v_b1, v_b4)
        }
    }
}

/// Symplectic map forming `q_B = q_rx − μ q_ref` on `received`, with the
/// conjugate compensation `q̄_ref → q̄_ref + μ q̄_rx` on `reference`.
pub fn gamma_mu_symplectic(
    n_modes: usize,
    reference: usize,
    received: usize,
    mu: f64,
    quadrature: Quadrature,
) -> Result<SymplecticTransform> {
    for m in [reference, received] {
        if m >= n_modes {
            return Err(Error::InvalidMode {
                index: m,
                n_modes,
            });
        }
    }
    if reference == received {
        return Err(Error::InvalidMode {
            index: received,
            n_modes,
        });
    }
    let q = quadrature.offset();
    let c = quadrature.conjugate().offset();
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * received + q, 2 * reference + q)] = -mu;
    m[(2 * reference + c, 2 * received + c)] = mu;
    SymplecticTransform::new(m)
}

pub fn gamma_mu_transform(
    gamma: &CovarianceMatrix,
    reference: usize,
    received: usize,
    mu: f64,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    let s = gamma_mu_symplectic(gamma.n_modes(), reference, received, mu, quadrature)?;
    apply_symplectic(gamma, &s)
}

/// Bob's side after the estimator transform, ready for measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub covariance: CovarianceMatrix,
    pub alice_mode: usize,
    /// Mode whose `quadrature` carries the estimator `x_B`.
    pub estimator_mode: usize,
    pub quadrature: Quadrature,
}

/// Applies the estimator transform to the assembled `(B1, B5, A1, A5)` state.
pub fn estimator_state(
    assembled: &CovarianceMatrix,
    model: EstimatorModel,
    basis: Quadrature,
    mu: f64,
) -> Result<EstimatorState> {
    if assembled.n_modes() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            actual: 2 * assembled.n_modes(),
        });
    }
    let (state, reference, mu) = match model {
        EstimatorModel::Heterodyne => {
            // B1 and a vacuum mode on a balanced splitter: mode 0 carries the
            // x-arm, mode 4 the p-arm of the heterodyne detector.
            let ext = assembled.direct_sum(&CovarianceMatrix::vacuum(1));
            let split = beam_splitter_symplectic(0.5, MODE_B1, 4, 5)?;
            let ext = apply_symplectic(&ext, &split)?;
            let reference = match basis {
                Quadrature::X => MODE_B1,
                Quadrature::P => 4,
            };
            (ext, reference, mu)
        }
        EstimatorModel::DirectQuadrature => {
            // p correlations carry the σz sign, so the p estimator adds.
            let mu = match basis {
                Quadrature::X => mu,
                Quadrature::P => -mu,
            };
            (assembled.clone(), MODE_B1, mu)
        }
    };
    let covariance = gamma_mu_transform(&state, reference, MODE_B5, mu, basis)?;
    Ok(EstimatorState {
        covariance,
        alice_mode: MODE_A1,
        estimator_mode: MODE_B5,
        quadrature: basis,
    })
}

/// `I(A:B) = ½ log2[(V_A + 1)/(V_A − C²/V_B + 1)]` between Alice's heterodyned
/// mode and Bob's homodyned estimator quadrature.
pub fn mutual_information(state: &EstimatorState) -> Result<f64> {
    let g = &state.covariance;
    let q = state.quadrature;
    let v_b = g.variance(state.estimator_mode, q);
    if !(v_b > 1e-12) {
        return Err(Error::DegenerateEstimator { variance: v_b });
    }
    let v_a = g.variance(state.alice_mode, q);
    let c = g.covariance(state.alice_mode, state.estimator_mode, q);
    Ok(0.5 * ((v_a + 1.0) / (v_a - c * c / v_b + 1.0)).log2())
}

/// Holevo bound with both symplectic spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolevoBound {
    pub bits: f64,
    pub eig_unconditional: Vec<f64>,
    pub eig_conditional: Vec<f64>,
}

pub(crate) fn entropy_of_spectrum(spectrum: &[f64]) -> Result<f64> {
    if spectrum.iter().any(|&v| !(v >= 1.0 - EIGEN_CLAMP)) {
        return Err(Error::UnphysicalState {
            spectrum: spectrum.to_vec(),
        });
    }
    spectrum.iter().map(|&v| g_entropy(v)).sum()
}

/// `S(E) − S(E|x_B)` given the unconditional state and the state Bob measures.
pub(crate) fn holevo_from_states(
    unconditional: &CovarianceMatrix,
    measured: &CovarianceMatrix,
    mode: usize,
    quadrature: Quadrature,
) -> Result<HolevoBound> {
    let eig_unconditional = unconditional.symplectic_eigenvalues()?;
    let s_e = entropy_of_spectrum(&eig_unconditional)?;
    let cond = homodyne_condition(measured, mode, quadrature)?;
    let eig_conditional = cond.symplectic_eigenvalues()?;
    let s_cond = entropy_of_spectrum(&eig_conditional)?;
    let mut bits = s_e - s_cond;
    if bits < 0.0 {
        if bits < -EIGEN_CLAMP {
            return Err(Error::UnphysicalState {
                spectrum: eig_conditional,
            });
        }
        bits = 0.0;
    }
    Ok(HolevoBound {
        bits,
        eig_unconditional,
        eig_conditional,
    })
}

/// Eve's information on Bob's estimator: the entropy of the assembled state minus
/// the entropy of the remaining modes conditioned on Bob's homodyne outcome.
pub fn holevo_bound(
    assembled: &CovarianceMatrix,
    model: EstimatorModel,
    mu: f64,
    quadrature: Quadrature,
) -> Result<HolevoBound> {
    let state = estimator_state(assembled, model, quadrature, mu)?;
    holevo_from_states(assembled, &state.covariance, state.estimator_mode, quadrature)
}

/// Two-way key rate `P [β I(B:A) − S(E:B)]` with reverse reconciliation.
pub fn two_way_key_rate(cfg: &ProtocolConfig) -> Result<KeyRateReport> {
    let assembled = assemble_two_way_state(cfg)?;
    let mu = optimal_mu(cfg, &assembled)?;
    let state = estimator_state(&assembled, cfg.estimator, cfg.basis, mu)?;
    let info = mutual_information(&state)?;
    let holevo = holevo_from_states(&assembled, &state.covariance, state.estimator_mode, cfg.basis)?;
    let p = success_probability(&cfg.alice_src, &cfg.alice_sub)
        * success_probability(&cfg.bob_src, &cfg.bob_sub);
    Ok(KeyRateReport::from_parts(p, cfg.beta, info, holevo, mu))
}
