mod common;

use common::*;
use proptest::prelude::*;
use proptest::sample::Index;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rate_degrades_with_excess_noise(
        one_way in any::<bool>(),
        km in 0.0f64..150.0,
        eps in 0.0f64..0.2,
        d_eps in 1e-4f64..0.1,
        k in 0u32..4,
        t_ps in 0.05f64..1.0,
    ) {
        eps_monotone(one_way, km, eps, d_eps, k, t_ps).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn estimator_transform_is_symplectic(
        n in 2usize..7,
        a in any::<Index>(),
        b in any::<Index>(),
        mu in -5.0f64..5.0,
        q in quadrature(),
    ) {
        gamma_mu_is_symplectic(n, a, b, mu, q).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn conditioning_never_raises_entropy(g in physical_state(), m in any::<Index>(), q in quadrature()) {
        conditioning_reduces_entropy(&g, m, q).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn entropies_are_clamped_not_negative(
        delta in 0.0f64..=1.0,
        km in 0.0f64..200.0,
        eps in 0.0f64..0.3,
        k_a in 0u32..4,
        k_b in 0u32..4,
        t_a in 0.05f64..1.0,
        t_b in 0.05f64..1.0,
    ) {
        entropy_clamps(delta, km, eps, k_a, k_b, t_a, t_b).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn sweep_json_round_trip_is_bit_exact(
        reports in prop::collection::vec(report(), 0..4),
        params in prop::collection::vec(finite_f64(), 4),
        eps in proptest::option::of(finite_f64()),
        km in finite_f64(),
        e in finite_f64(),
        t in 1e-9f64..=1.0,
    ) {
        json_round_trip(reports, params, eps, (km, e, t)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn mode_relabelling_commutes_with_conditioning(
        g in physical_state(),
        perm in prop::collection::vec(any::<Index>(), 4),
        m in any::<Index>(),
        q in quadrature(),
    ) {
        relabel_commutes(&g, perm, m, q).map_err(TestCaseError::fail)?;
    }
}
