//! Property checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::sample::Index;

use tw_cvqkd::analysis::{
    OptimizerSettings, SchemeTemplate, SweepAxis, SweepKind, SweepMetadata, SweepPoint,
    SweepResult, TpsSetting,
};
use tw_cvqkd::cli::output::{fmt_f64, SweepDocument};
use tw_cvqkd::gaussian::{
    apply_symplectic, beam_splitter_symplectic, g_entropy, homodyne_condition,
    phase_rotation_symplectic, squeezer_symplectic, CovarianceMatrix, Quadrature,
};
use tw_cvqkd::protocols::{gamma_mu_symplectic, KeyRateReport};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn quadrature() -> impl Strategy<Value = Quadrature> {
    prop_oneof![Just(Quadrature::X), Just(Quadrature::P)]
}

/// Thermal product state dressed with random squeezers, rotations and beam splitters.
pub fn physical_state() -> impl Strategy<Value = CovarianceMatrix> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(1.0f64..20.0, n),
                prop::collection::vec((0u8..3, any::<Index>(), any::<Index>(), -1.0f64..1.0, 0.0f64..1.0), 0..8),
            )
        })
        .prop_map(|(n, nus, ops)| {
            let diag: Vec<f64> = nus.iter().flat_map(|&v| [v, v]).collect();
            let mut g = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))).unwrap();
            for (kind, a, b, r, t) in ops {
                let (a, b) = (a.index(n), b.index(n));
                let s = match kind {
                    0 => squeezer_symplectic(r, a, n).unwrap(),
                    1 => phase_rotation_symplectic(r * std::f64::consts::PI, a, n).unwrap(),
                    _ if a != b => beam_splitter_symplectic(t, a, b, n).unwrap(),
                    _ => continue,
                };
                g = apply_symplectic(&g, &s).unwrap();
            }
            g
        })
}

/// Key rate at fixed `t_ps` never increases with excess noise.
pub fn eps_monotone(one_way: bool, km: f64, eps: f64, d_eps: f64, k: u32, t_ps: f64) -> Check {
    let base = if one_way {
        SchemeTemplate::reference_one_way()
    } else {
        SchemeTemplate::reference_two_way()
    }
    .with_alice(k)
    .at_distance(km);
    let t = if k == 0 { 1.0 } else { t_ps };
    let lo = base.with_eps(eps).rate_at(t, 1.0).map_err(|e| e.to_string())?;
    let hi = base.with_eps(eps + d_eps).rate_at(t, 1.0).map_err(|e| e.to_string())?;
    ensure(hi.k_ps <= lo.k_ps + 1e-12, || {
        format!("rate rose from {} to {} as eps went {eps} -> {}", lo.k_ps, hi.k_ps, eps + d_eps)
    })
}

/// The estimator transform is symplectic for every gain and mode pair.
pub fn gamma_mu_is_symplectic(n: usize, a: Index, b: Index, mu: f64, q: Quadrature) -> Check {
    let (r, x) = (a.index(n), b.index(n));
    if r == x {
        return ensure(gamma_mu_symplectic(n, r, x, mu, q).is_err(), || "equal modes accepted".into());
    }
    let s = gamma_mu_symplectic(n, r, x, mu, q).map_err(|e| e.to_string())?;
    let dev = s.symplectic_deviation();
    ensure(dev <= 1e-10 * (1.0 + mu * mu), || format!("deviation {dev} at mu = {mu}"))
}

/// Homodyne conditioning never raises the entropy of the remaining modes, and
/// the conditional spectrum stays physical.
pub fn conditioning_reduces_entropy(g: &CovarianceMatrix, m: Index, q: Quadrature) -> Check {
    let n = g.n_modes();
    let m = m.index(n);
    let rest: Vec<usize> = (0..n).filter(|&i| i != m).collect();
    let reduced = g.select_modes(&rest).map_err(|e| e.to_string())?;
    let cond = homodyne_condition(g, m, q).map_err(|e| e.to_string())?;
    let nus = cond.symplectic_eigenvalues().map_err(|e| e.to_string())?;
    ensure(nus.iter().all(|&v| v >= 1.0 - 1e-9), || format!("conditional spectrum {nus:?}"))?;
    let s_red = reduced.entropy().map_err(|e| e.to_string())?;
    let s_cond = cond.entropy().map_err(|e| e.to_string())?;
    ensure(s_cond >= 0.0 && s_cond <= s_red + 1e-9 * (1.0 + s_red), || {
        format!("conditional entropy {s_cond} vs reduced {s_red}")
    })
}

/// Entropies clamp tiny negative excursions to zero and reject real violations;
/// the Holevo bound of a random two-way configuration is finite and non-negative.
pub fn entropy_clamps(delta: f64, km: f64, eps: f64, k_a: u32, k_b: u32, t_a: f64, t_b: f64) -> Check {
    let at = g_entropy(1.0 - delta * 1e-9).map_err(|e| e.to_string())?;
    ensure(at == 0.0, || format!("G(1 - {delta}e-9) = {at}"))?;
    ensure(g_entropy(1.0 - 1e-9 - (1.0 + delta) * 1e-8).is_err(), || "violation accepted".into())?;
    let tpl = SchemeTemplate::reference_two_way().with_alice(k_a).with_bob(k_b).at_distance(km).with_eps(eps);
    let r = tpl
        .rate_at(if k_a == 0 { 1.0 } else { t_a }, if k_b == 0 { 1.0 } else { t_b })
        .map_err(|e| e.to_string())?;
    ensure(r.holevo.is_finite() && r.holevo >= 0.0, || format!("holevo {}", r.holevo))?;
    ensure(r.eig_conditional.iter().chain(&r.eig_unconditional).all(|&v| v >= 1.0 - 1e-9), || {
        format!("spectra {:?} / {:?}", r.eig_unconditional, r.eig_conditional)
    })
}

pub fn finite_f64() -> impl Strategy<Value = f64> {
    use proptest::num::f64 as f;
    f::POSITIVE | f::NEGATIVE | f::NORMAL | f::SUBNORMAL | f::ZERO
}

pub fn report() -> impl Strategy<Value = KeyRateReport> {
    (
        prop::collection::vec(finite_f64(), 7),
        prop::collection::vec(finite_f64(), 0..5),
        prop::collection::vec(finite_f64(), 0..5),
    )
        .prop_map(|(f, eu, ec)| KeyRateReport {
            p_success: f[0],
            mutual_info: f[1],
            holevo: f[2],
            eig_unconditional: eu,
            eig_conditional: ec,
            k_s: f[3],
            k_ps: f[4],
            beta: f[5],
            mu: f[6],
        })
}

/// Sweep results survive JSON serialisation bit for bit, and the CSV float
/// formatting parses back to the same bits.
pub fn json_round_trip(
    reports: Vec<KeyRateReport>,
    params: Vec<f64>,
    eps: Option<f64>,
    template_values: (f64, f64, f64),
) -> Check {
    let (km, e, t) = template_values;
    let mut template = SchemeTemplate::reference_two_way().at_distance(km).with_eps(e);
    template.t_ps_alice = TpsSetting::Fixed(t);
    let result = SweepResult {
        curve: "random".into(),
        axis: SweepAxis::DistanceKm,
        kind: SweepKind::Rate,
        points: reports
            .into_iter()
            .zip(&params)
            .map(|(report, &p)| SweepPoint {
                parameter: p,
                t_ps_alice: p,
                t_ps_bob: -p,
                report,
                tolerable_eps: eps,
            })
            .collect(),
        metadata: SweepMetadata {
            template,
            settings: OptimizerSettings::default(),
            noise_mode: None,
            noise_tol: eps,
            overrides: vec!["scheme.eps=0.02".into()],
        },
    };
    let text = serde_json::to_string(&SweepDocument::from_results(std::slice::from_ref(&result))).unwrap();
    let back: SweepDocument = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let back = back.into_results();
    ensure(back.len() == 1, || "curve count changed".into())?;
    let bits = |r: &SweepResult| -> Vec<u64> {
        r.points
            .iter()
            .flat_map(|p| {
                let k = &p.report;
                [p.parameter, p.t_ps_alice, p.t_ps_bob, k.p_success, k.mutual_info, k.holevo, k.k_s, k.k_ps, k.beta, k.mu]
                    .into_iter()
                    .chain(k.eig_unconditional.iter().copied())
                    .chain(k.eig_conditional.iter().copied())
                    .chain(p.tolerable_eps)
            })
            .map(f64::to_bits)
            .collect()
    };
    ensure(bits(&back[0]) == bits(&result) && back[0].metadata == result.metadata, || {
        "JSON round trip changed a value".into()
    })?;
    for &p in &params {
        let s = fmt_f64(p);
        ensure(s.parse::<f64>().map(f64::to_bits) == Ok(p.to_bits()), || format!("{p:e} printed as {s}"))?;
    }
    Ok(())
}

/// Relabelling modes permutes the conditional state and leaves spectra unchanged.
pub fn relabel_commutes(g: &CovarianceMatrix, perm: Vec<Index>, m: Index, q: Quadrature) -> Check {
    let n = g.n_modes();
    // Fisher–Yates driven by the sampled indices.
    let mut order: Vec<usize> = (0..n).collect();
    for (i, ix) in perm.iter().enumerate().take(n) {
        let j = i + ix.index(n - i);
        order.swap(i, j);
    }
    let h = g.select_modes(&order).map_err(|e| e.to_string())?;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8 * (1.0 + x.abs()));
    let sa = g.symplectic_eigenvalues().map_err(|e| e.to_string())?;
    let sb = h.symplectic_eigenvalues().map_err(|e| e.to_string())?;
    ensure(close(&sa, &sb), || format!("spectra {sa:?} vs {sb:?}"))?;

    let m = m.index(n);
    let m_new = order.iter().position(|&o| o == m).unwrap();
    let c1 = homodyne_condition(g, m, q).map_err(|e| e.to_string())?;
    let c2 = homodyne_condition(&h, m_new, q).map_err(|e| e.to_string())?;
    // Express c1 in the relabelled order of the surviving modes.
    let rest_old: Vec<usize> = (0..n).filter(|&i| i != m).collect();
    let rest_new: Vec<usize> = order.iter().copied().filter(|&i| i != m).collect();
    let pos: Vec<usize> = rest_new.iter().map(|o| rest_old.iter().position(|r| r == o).unwrap()).collect();
    let c1p = c1.select_modes(&pos).map_err(|e| e.to_string())?;
    let diff = (c1p.matrix() - c2.matrix()).amax();
    let scale = c1.matrix().amax();
    ensure(diff <= 1e-10 * scale, || format!("conditioning differs by {diff}"))
}
