use super::two_way::holevo_from_states;
use super::{entangling_cloner_apply, ChannelSpec, KeyRateReport};
use crate::error::{check_range, Result};
use crate::gaussian::Quadrature;
use crate::protocols::two_way::{mutual_information, EstimatorState};
use crate::sources::{subtracted_covariance, success_probability, SourceSpec, SubtractionSpec};

/// One-way coherent-state protocol (heterodyne at Alice in the entanglement
/// picture, homodyne at Bob) with reverse reconciliation. With subtraction
/// disabled this is the usual Gaussian-modulated coherent-state rate.
pub fn one_way_key_rate(
    src: &SourceSpec,
    sub: &SubtractionSpec,
    ch: &ChannelSpec,
    beta: f64,
) -> Result<KeyRateReport> {
    check_range("beta", beta, 0.0, 1.0, "reconciliation efficiency must lie in [0, 1]")?;
    let source = subtracted_covariance(src, sub).to_covariance();
    let state = entangling_cloner_apply(&source, 1, ch)?;
    let measured = EstimatorState {
        covariance: state.clone(),
        alice_mode: 0,
        estimator_mode: 1,
        quadrature: Quadrature::X,
    };
    let info = mutual_information(&measured)?;
    let holevo = holevo_from_states(&state, &state, 1, Quadrature::X)?;
    Ok(KeyRateReport::from_parts(
        success_probability(src, sub),
        beta,
        info,
        holevo,
        0.0,
    ))
}
