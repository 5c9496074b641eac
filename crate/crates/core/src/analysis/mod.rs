//! Parameter searches and sweeps over complete protocol schemes.
//!
//! A [`SchemeTemplate`] fixes everything except the subtraction transmittances,
//! which are either pinned or re-optimised at every evaluation point.

mod optimize;
pub mod search;
mod sweep;

pub use optimize::{
    best_rate, max_distance, optimize_tps, tolerable_excess_noise, MaxDistance, NoiseMode,
    NoiseOutcome, OptimizerSettings, Side, TpsOptimum, DEFAULT_CUTOFF, DEFAULT_NOISE_TOL,
};
pub use sweep::{
    compare_schemes, noise_sweep, rate_sweep, SchemeComparison, SweepAxis, SweepKind,
    SweepMetadata, SweepPoint, SweepResult,
};

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_range, Result};
use crate::gaussian::Quadrature;
use crate::protocols::{
    one_way_key_rate, two_way_key_rate, ChannelSpec, EstimatorModel, KeyRateReport, MuPolicy,
    ProtocolConfig,
};
use crate::sources::{SourceSpec, SubtractionSpec};

/// Fibre loss assumed when converting distance to transmittance, in dB/km.
pub const FIBER_LOSS_DB_PER_KM: f64 = 0.2;

/// Channel of length `l_km` at 0.2 dB/km with excess noise `eps`.
pub fn distance_to_channel(l_km: f64, eps: f64) -> Result<ChannelSpec> {
    check_range("distance_km", l_km, 0.0, f64::MAX, "distance must be >= 0")?;
    ChannelSpec::new(10f64.powf(-FIBER_LOSS_DB_PER_KM * l_km / 10.0), eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    TwoWay,
    OneWay,
}

/// Subtraction transmittance: pinned, or re-optimised per evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TpsSetting {
    Optimize,
    Fixed(f64),
}

impl Serialize for TpsSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TpsSetting::Optimize => s.serialize_str("optimize"),
            TpsSetting::Fixed(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for TpsSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = TpsSetting;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a transmittance in (0, 1] or \"optimize\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<TpsSetting, E> {
                if v > 0.0 && v <= 1.0 {
                    Ok(TpsSetting::Fixed(v))
                } else {
                    Err(E::custom(format!("t_ps = {v} is outside (0, 1]")))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<TpsSetting, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<TpsSetting, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<TpsSetting, E> {
                match v {
                    "optimize" => Ok(TpsSetting::Optimize),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Everything needed to evaluate one scheme at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeTemplate {
    pub protocol: ProtocolKind,
    pub v_alice: f64,
    pub v_bob: f64,
    pub k_alice: u32,
    pub k_bob: u32,
    pub t_ps_alice: TpsSetting,
    pub t_ps_bob: TpsSetting,
    pub t_a: f64,
    pub beta: f64,
    /// Excess noise, applied to both channels.
    pub eps: f64,
    pub distance_km: f64,
    pub mu_policy: MuPolicy,
    pub estimator: EstimatorModel,
    pub basis: Quadrature,
}

impl SchemeTemplate {
    /// Two-way protocol at the reference operating point: `V = 40`, `β = 0.95`,
    /// `ε = 0.01`, `T_A = 0.5`, no subtraction.
    pub fn reference_two_way() -> Self {
        Self {
            protocol: ProtocolKind::TwoWay,
            v_alice: 40.0,
            v_bob: 40.0,
            k_alice: 0,
            k_bob: 0,
            t_ps_alice: TpsSetting::Optimize,
            t_ps_bob: TpsSetting::Optimize,
            t_a: 0.5,
            beta: 0.95,
            eps: 0.01,
            distance_km: 0.0,
            mu_policy: MuPolicy::Optimal,
            estimator: EstimatorModel::Heterodyne,
            basis: Quadrature::X,
        }
    }

    /// One-way coherent-state protocol at the same operating point.
    pub fn reference_one_way() -> Self {
        Self {
            protocol: ProtocolKind::OneWay,
            ..Self::reference_two_way()
        }
    }

    pub fn with_alice(mut self, k: u32) -> Self {
        self.k_alice = k;
        self
    }

    pub fn with_bob(mut self, k: u32) -> Self {
        self.k_bob = k;
        self
    }

    pub fn at_distance(&self, km: f64) -> Self {
        Self {
            distance_km: km,
            ..self.clone()
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self {
            eps,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        SourceSpec::new(self.v_alice)?;
        if self.protocol == ProtocolKind::TwoWay {
            SourceSpec::new(self.v_bob)?;
            check_range("t_a", self.t_a, 0.0, 1.0, "coupler transmittance must lie in [0, 1]")?;
        }
        check_range("beta", self.beta, 0.0, 1.0, "reconciliation efficiency must lie in [0, 1]")?;
        distance_to_channel(self.distance_km, self.eps)?;
        for t in [self.t_ps_alice, self.t_ps_bob] {
            if let TpsSetting::Fixed(t) = t {
                SubtractionSpec::new(1, t)?;
            }
        }
        Ok(())
    }

    /// Whether Alice's (Bob's) transmittance is a free parameter.
    pub(crate) fn free_sides(&self) -> (bool, bool) {
        let alice = self.k_alice > 0 && self.t_ps_alice == TpsSetting::Optimize;
        let bob = self.protocol == ProtocolKind::TwoWay
            && self.k_bob > 0
            && self.t_ps_bob == TpsSetting::Optimize;
        (alice, bob)
    }

    /// Transmittance used on a side whose value is not being optimised.
    pub(crate) fn pinned_tps(setting: TpsSetting) -> f64 {
        match setting {
            TpsSetting::Fixed(t) => t,
            // With k = 0 this is "no post-selection", which is also the optimum.
            TpsSetting::Optimize => 1.0,
        }
    }

    fn subtraction(k: u32, t_ps: f64) -> Result<SubtractionSpec> {
        if k == 0 && t_ps == 1.0 {
            Ok(SubtractionSpec::disabled())
        } else {
            SubtractionSpec::new(k, t_ps)
        }
    }

    /// Concrete two-way configuration at the template's distance and noise.
    pub fn two_way_config(&self, t_ps_alice: f64, t_ps_bob: f64) -> Result<ProtocolConfig> {
        let ch = distance_to_channel(self.distance_km, self.eps)?;
        let cfg = ProtocolConfig {
            alice_src: SourceSpec::new(self.v_alice)?,
            bob_src: SourceSpec::new(self.v_bob)?,
            alice_sub: Self::subtraction(self.k_alice, t_ps_alice)?,
            bob_sub: Self::subtraction(self.k_bob, t_ps_bob)?,
            t_a: self.t_a,
            forward: ch,
            backward: ch,
            beta: self.beta,
            mu_policy: self.mu_policy,
            estimator: self.estimator,
            basis: self.basis,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Key rate with the given subtraction transmittances.
    pub fn rate_at(&self, t_ps_alice: f64, t_ps_bob: f64) -> Result<KeyRateReport> {
        match self.protocol {
            ProtocolKind::TwoWay => two_way_key_rate(&self.two_way_config(t_ps_alice, t_ps_bob)?),
            ProtocolKind::OneWay => one_way_key_rate(
                &SourceSpec::new(self.v_alice)?,
                &Self::subtraction(self.k_alice, t_ps_alice)?,
                &distance_to_channel(self.distance_km, self.eps)?,
                self.beta,
            ),
        }
    }
}
