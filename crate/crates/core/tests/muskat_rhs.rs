mod common;

use std::f64::consts::PI;

use common::{params, random_state, rel_max};
use muskat_core::grid_spectral::{roll, spectral_derivative};
use muskat_core::layer_potentials::apply_layer;
use muskat_core::muskat_rhs::{admissibility_gap, check_admissible, compute_phi, two_phase_reduction};
use muskat_core::nonlocal_operators::apply_bcal;
use muskat_core::{Error, Grid, GridFunction, InterfaceState, LayerKind, LayerRequest, PhysicalParams};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n, 2.0 * PI).unwrap()
}

#[test]
fn gap_examples() {
    let g = grid(64);
    let c = 1.3;
    let p = params(-0.5, -0.5, c);
    assert_eq!(admissibility_gap(&InterfaceState::flat(g, p)), c);
    let bump = InterfaceState::new(GridFunction::zeros(g), GridFunction::from_fn(g, |x| 0.5 * c * (-x * x).exp()), p)
        .unwrap();
    assert!((admissibility_gap(&bump) - 0.5 * c).abs() < 1e-15);
    let touching = InterfaceState::new(
        GridFunction::from_fn(g, |x| -0.5 * c * x.cos()),
        GridFunction::from_fn(g, |x| 0.5 * c * x.cos()),
        p,
    )
    .unwrap();
    assert!(admissibility_gap(&touching).abs() < 1e-15);
}

#[test]
fn inadmissible_state_names_the_worst_node() {
    let g = grid(64);
    let x = InterfaceState::new(
        GridFunction::zeros(g),
        GridFunction::from_fn(g, |x| 1.5 * (-(x - 1.0).powi(2)).exp()),
        params(-0.5, -0.5, 1.0),
    )
    .unwrap();
    match compute_phi(&x) {
        Err(Error::Inadmissible { node, x: at, gap }) => {
            assert_eq!(node, 42);
            assert!((at - g.node(42)).abs() < 1e-15);
            assert!(gap < 0.0);
        }
        other => panic!("{other:?}"),
    }
    assert!(check_admissible(&x).is_err());
}

#[test]
fn flat_state_is_an_equilibrium_for_random_parameters() {
    let mut r = common::rng(1);
    for _ in 0..5 {
        use rand::Rng;
        let p = params(-r.gen_range(0.05..3.0), -r.gen_range(0.05..3.0), r.gen_range(0.1..4.0));
        let (a, b) = compute_phi(&InterfaceState::flat(grid(128), p)).unwrap();
        assert!(a.max_abs() <= 1e-12 && b.max_abs() <= 1e-12);
    }
}

#[test]
fn single_mode_in_upper_interface_follows_the_flat_symbol() {
    let g = grid(256);
    let p = params(-0.5, -0.5, 1.0);
    let eps = 1e-6;
    for k in [1.0, 2.0, 5.0] {
        let x = InterfaceState::new(GridFunction::from_fn(g, |s| eps * (k * s).cos()), GridFunction::zeros(g), p)
            .unwrap();
        let (a, b) = compute_phi(&x).unwrap();
        let e1 = GridFunction::from_fn(g, |s| -0.5 * k * eps * (k * s).cos());
        let e2 = GridFunction::from_fn(g, |s| -0.5 * k * (-k).exp() * eps * (k * s).cos());
        assert!(rel_max(&a, &e1) <= 1e-3, "{k}");
        assert!(rel_max(&b, &e2) <= 1e-3, "{k}");
    }
}

/// `Phi` assembled from the public operators, one call per term.
fn phi_from_operators(x: &InterfaceState) -> (GridFunction, GridFunction) {
    let c = x.c_inf();
    let (t1, t2) = (x.params.theta1(), x.params.theta2());
    let fp = spectral_derivative(&x.f);
    let hp = spectral_derivative(&x.h);
    let lay = |kind, w: &GridFunction| apply_layer(&LayerRequest::plain(kind, vec![x], w)).unwrap();
    let cf = x.f.map(|v| c + v);
    let hc = x.h.map(|v| v - c);
    let cross1 = &(&(&(&cf * &fp) * &lay(LayerKind::C, &hp)) - &(&fp * &lay(LayerKind::C, &(&x.h * &hp))))
        + &lay(LayerKind::D, &hp);
    let cross2 = &(&(&(&hc * &hp) * &lay(LayerKind::CPrime, &fp))
        - &(&hp * &lay(LayerKind::CPrime, &(&x.f * &fp))))
        + &lay(LayerKind::DPrime, &fp);
    let phi1 = &apply_bcal(&x.f, &fp).unwrap().scale(t1) + &cross1.scale(t2 / PI);
    let phi2 = &apply_bcal(&x.h, &hp).unwrap().scale(t2) + &cross2.scale(t1 / PI);
    (phi1, phi2)
}

#[test]
fn assembly_matches_term_by_term_evaluation() {
    let g = grid(128);
    let x = random_state(g, params(-0.3, -0.8, 0.9), 17, 0.3);
    let (a, b) = compute_phi(&x).unwrap();
    let (ea, eb) = phi_from_operators(&x);
    assert!((&a - &ea).max_abs() <= 1e-12 * (1.0 + ea.max_abs()));
    assert!((&b - &eb).max_abs() <= 1e-12 * (1.0 + eb.max_abs()));
}

#[test]
fn two_phase_reduction_examples() {
    let g = grid(256);
    let p = params(-0.5, 0.0, 1.0);
    assert_eq!(two_phase_reduction(&InterfaceState::flat(g, p)).unwrap().max_abs(), 0.0);
    let eps = 1e-6;
    for k in [1.0, 3.0] {
        let x = InterfaceState::new(GridFunction::from_fn(g, |s| eps * (k * s).cos()), GridFunction::zeros(g), p)
            .unwrap();
        let v = two_phase_reduction(&x).unwrap();
        let rate = v.inner(&x.f) / x.f.inner(&x.f);
        assert!((rate - (-0.5 * k)).abs() <= 1e-3 * 0.5 * k);
    }
    let x = random_state(g, p, 3, 0.3);
    let (a, b) = compute_phi(&x).unwrap();
    assert!((&a - &two_phase_reduction(&x).unwrap()).max_abs() <= 1e-12);
    let (_, eb) = phi_from_operators(&x);
    assert!((&b - &eb).max_abs() <= 1e-12);
    let bad = random_state(g, params(-0.5, -0.1, 1.0), 3, 0.3);
    assert!(matches!(two_phase_reduction(&bad), Err(Error::Precondition(_))));
}

#[test]
fn unequal_grids_are_rejected() {
    let f = GridFunction::zeros(grid(64));
    let h = GridFunction::zeros(grid(128));
    assert!(InterfaceState::new(f, h, params(-0.5, -0.5, 1.0)).is_err());
}

#[test]
fn density_ordering_is_reported() {
    let p = PhysicalParams::new(1.0, 1.0, 9.8, [2.0, 2.0, 3.0], 1.0).unwrap();
    assert!(!p.is_stable());
    let v = p.stable_violations();
    assert!(v.iter().any(|m| m.contains("densities must be strictly increasing")));
    assert!(params(-0.2, -0.4, 1.0).theta1() < 0.0);
    assert!((params(-0.2, -0.4, 1.0).theta2() + 0.4).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn phi_commutes_with_grid_shifts(seed in 0u64..10_000, j in -64i64..64) {
        let g = grid(64);
        let x = random_state(g, params(-0.5, -0.7, 1.0), seed, 0.3);
        let moved = InterfaceState::new(roll(&x.f, j), roll(&x.h, j), x.params).unwrap();
        let (a, b) = compute_phi(&x).unwrap();
        let (ma, mb) = compute_phi(&moved).unwrap();
        prop_assert!((&ma - &roll(&a, j)).max_abs() <= 1e-13 * (1.0 + a.max_abs()));
        prop_assert!((&mb - &roll(&b, j)).max_abs() <= 1e-13 * (1.0 + b.max_abs()));
    }

    #[test]
    fn phi_commutes_with_reflection(seed in 0u64..10_000) {
        let g = grid(64);
        let x = random_state(g, params(-0.4, -0.6, 1.2), seed, 0.3);
        let mirrored = InterfaceState::new(x.f.reflect(), x.h.reflect(), x.params).unwrap();
        let (a, b) = compute_phi(&x).unwrap();
        let (ma, mb) = compute_phi(&mirrored).unwrap();
        prop_assert!((&ma - &a.reflect()).max_abs() <= 1e-10);
        prop_assert!((&mb - &b.reflect()).max_abs() <= 1e-10);
    }

    #[test]
    fn phi_preserves_means(seed in 0u64..10_000, amp in 0.05f64..0.35) {
        let g = grid(128);
        let x = random_state(g, params(-0.5, -0.5, 1.0), seed, amp);
        let (a, b) = compute_phi(&x).unwrap();
        let size = x.f.max_abs().max(x.h.max_abs());
        prop_assert!(a.mean().abs() <= 1e-9 * size, "{}", a.mean());
        prop_assert!(b.mean().abs() <= 1e-9 * size, "{}", b.mean());
    }

    #[test]
    fn flat_states_are_equilibria(t1 in -5.0f64..-0.01, t2 in -5.0f64..-0.01, c in 0.05f64..5.0) {
        let (a, b) = compute_phi(&InterfaceState::flat(grid(32), params(t1, t2, c))).unwrap();
        prop_assert!(a.max_abs() <= 1e-12 && b.max_abs() <= 1e-12);
    }
}
