//! Randomized pointwise properties of the integrands.

mod common;

use common::props;
use dualflow_core::LagrangianSpec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn asymptotic_limit_is_monotone(seed in any::<u64>()) {
        props::asymptotic_limit(seed)?;
    }

    #[test]
    fn subgradients_carry_to_the_recession_function(seed in any::<u64>()) {
        props::subgradient_on_ray(seed)?;
    }

    #[test]
    fn linear_growth_holds(seed in any::<u64>()) {
        props::growth_bound(seed)?;
    }

    #[test]
    fn prox_agrees_with_finite_differences(seed in any::<u64>()) {
        props::prox_matches_finite_differences(seed)?;
    }
}

/// The recession inequality only survives in the limit along the ray: at a
/// point where `f` is strictly convex it fails for the area integrand.
#[test]
fn recession_subgradient_needs_ray_limit() {
    let lag = LagrangianSpec::area();
    let xi = [1.0, 0.0];
    let zeta = [1.0 / 2f64.sqrt(), 0.0];
    assert!(lag.fenchel_young_residual(0, &xi, &zeta).unwrap().le(1e-15));
    let eta = [0.0, 0.0];
    let lhs = lag.asymptotic(0, &eta).unwrap() - lag.asymptotic(0, &xi).unwrap();
    let rhs = zeta[0] * (eta[0] - xi[0]);
    assert!(lhs < rhs);
    // At the end of the ray the inequality holds.
    assert!(lag.asymptotic(0, &eta).unwrap() >= zeta[0] * eta[0]);
}
