//! Property suites for the symmetric/antisymmetric split, the stability probe
//! and the λ-sign machinery.

mod common;

use common::{antisymmetric, catalog_variants, matrix, orthogonal, rng, symmetric_with_spectrum, vector};
use diffgame_core::adjusters::{direction, AdjusterKind, AdjusterSpec};
use diffgame_core::differentiation::{self as diff, DifferentiationConfig};
use diffgame_core::linalg::{self, Matrix};
use diffgame_core::mechanics::{
    alignment_sign, classify_game, helmholtz_split, infinitesimal_alignment, stability_probe,
    GameKind,
};
use diffgame_core::{Game, QuadraticGame};
use proptest::prelude::*;
use rand::Rng;

const CASES: usize = 1000;

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES as u32))]

    #[test]
    fn split_reconstructs_exactly(seed in any::<u64>(), d in 1usize..=64, log_scale in -3.0..3.0f64) {
        let mut r = rng(seed);
        let h = matrix(&mut r, d, 10f64.powf(log_scale));
        let dec = helmholtz_split(&h).unwrap();
        let scale = h.max_abs().max(f64::MIN_POSITIVE);
        prop_assert!(max_abs_diff(&dec.s.add_scaled(&dec.a, 1.0), &h) <= 1e-14 * scale);
        prop_assert!(max_abs_diff(&dec.s, &dec.s.transpose()) <= 1e-14 * scale);
        prop_assert!(max_abs_diff(&dec.a, &dec.a.transpose().scaled(-1.0)) <= 1e-14 * scale);
    }

    #[test]
    fn split_is_idempotent(seed in any::<u64>(), d in 1usize..=16) {
        let mut r = rng(seed);
        let dec = helmholtz_split(&matrix(&mut r, d, 1.0)).unwrap();
        let again = helmholtz_split(&dec.s).unwrap();
        prop_assert_eq!(&again.s, &dec.s);
        prop_assert_eq!(again.a.max_abs(), 0.0);
        let again = helmholtz_split(&dec.a).unwrap();
        prop_assert_eq!(&again.a, &dec.a);
        prop_assert_eq!(again.s.max_abs(), 0.0);
    }

    #[test]
    fn split_commutes_with_orthogonal_change_of_basis(seed in any::<u64>(), d in 1usize..=24) {
        let mut r = rng(seed);
        let h = matrix(&mut r, d, 1.0);
        let p = orthogonal(&mut r, d);
        let conj = |m: &Matrix| p.transpose().matmul(m).matmul(&p);
        let dec = helmholtz_split(&h).unwrap();
        let rotated = helmholtz_split(&conj(&h)).unwrap();
        prop_assert!(max_abs_diff(&rotated.s, &conj(&dec.s)) <= 1e-10);
        prop_assert!(max_abs_diff(&rotated.a, &conj(&dec.a)) <= 1e-10);
        for (x, y) in rotated.s_eigenvalues.iter().zip(&dec.s_eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }
}

/// A random quadratic game with `S` drawn from the given spectrum.
fn game_with(r: &mut impl Rng, eigs: &[f64], a_scale: f64) -> QuadraticGame {
    let d = eigs.len();
    let s = symmetric_with_spectrum(r, eigs);
    let a = antisymmetric(r, d, a_scale);
    QuadraticGame::from_hessian(&s.add_scaled(&a, 1.0)).unwrap()
}

fn spectrum(r: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| r.random_range(lo..hi)).collect()
}

#[test]
fn probe_sign_follows_definiteness() {
    let mut r = rng(11);
    let cfg = DifferentiationConfig::default();
    for case in 0..CASES {
        let d = r.random_range(1..=6);
        let positive = case % 2 == 0;
        let sign = if positive { 1.0 } else { -1.0 };
        let eigs: Vec<f64> = spectrum(&mut r, d, 0.05, 3.0).iter().map(|e| sign * e).collect();
        let g = game_with(&mut r, &eigs, 2.0);
        let w = vector(&mut r, d, 2.0);
        let probe = stability_probe(&g, &w, &cfg).unwrap();
        assert_eq!(probe > 0.0, positive, "case {case}: probe {probe}");
        assert_ne!(probe, 0.0);
    }
}

#[test]
fn hamiltonian_games_conserve_the_hamiltonian() {
    let mut r = rng(12);
    let cfg = DifferentiationConfig::default();
    let mut checked = 0;
    for (name, g) in catalog_variants() {
        let pts = [vec![0.0; g.dim()]];
        if classify_game(&g, &pts, None, &cfg).unwrap().kind != GameKind::Hamiltonian {
            continue;
        }
        checked += 1;
        for _ in 0..CASES {
            let w = vector(&mut r, g.dim(), 3.0);
            let f = diff::simultaneous_gradient(&g, &w).unwrap();
            let gh = diff::thvp(&g, &w, &f.xi, &cfg).unwrap();
            let bound = 1e-10 * f.norm() * linalg::norm(&gh);
            assert!(linalg::dot(&f.xi, &gh).abs() <= bound, "{name}");
        }
    }
    // example1 ×2, example3 ×2, fig4_bilinear ×2
    assert!(checked >= 6, "only {checked} Hamiltonian games in the catalog");
}

fn cos2(u: &[f64], v: &[f64], w: &[f64], lambda: f64) -> f64 {
    let x = linalg::add_scaled(u, lambda, v);
    let c = linalg::dot(&x, w);
    c * c / (linalg::norm_sq(&x) * linalg::norm_sq(w))
}

#[test]
fn alignment_sign_law_and_closed_form() {
    let mut r = rng(13);
    let cfg = DifferentiationConfig::default();
    let mut compared = 0;
    for case in 0..CASES {
        let d = r.random_range(2..=6);
        let eigs = spectrum(&mut r, d, -3.0, 3.0);
        let g = game_with(&mut r, &eigs, 2.0);
        let w = vector(&mut r, d, 2.0);
        let f = diff::simultaneous_gradient(&g, &w).unwrap();
        let at = diff::sym_adjustment_at(&g, &f, &cfg).unwrap();
        let gh = diff::thvp(&g, &w, &f.xi, &cfg).unwrap();
        let align = infinitesimal_alignment(&f.xi, &at, &gh).unwrap();

        let product = linalg::dot(&f.xi, &gh) * linalg::dot(&at, &gh);
        let scale = f.norm_sq * linalg::norm(&at) * linalg::norm_sq(&gh);
        if product.abs() > 1e-9 * scale {
            assert_eq!(align > 0.0, product > 0.0, "case {case}");
            let chosen = alignment_sign(&f.xi, &at, &gh, 0.0);
            assert_eq!(chosen > 0.0, align > 0.0, "case {case}");
        }

        let h = 1e-6;
        let fd = (cos2(&f.xi, &at, &gh, h) - cos2(&f.xi, &at, &gh, -h)) / (2.0 * h);
        if align.abs() > 1e-6 {
            assert!((fd - align).abs() <= 1e-4 * align.abs(), "case {case}: {fd} vs {align}");
            compared += 1;
        }
    }
    assert!(compared > CASES / 2);
}

/// `⟨ξ + λAᵀξ, ∇𝓗⟩`
fn adjusted_descent(g: &QuadraticGame, w: &[f64], lambda: f64) -> f64 {
    let cfg = DifferentiationConfig::default();
    let spec = AdjusterSpec::new(AdjusterKind::SGA).with_lambda(lambda);
    let d = direction(&spec, g, w, None).unwrap();
    linalg::dot(&d, &diff::grad_hamiltonian(g, w, &cfg).unwrap())
}

#[test]
fn scalar_symmetric_part_admits_every_lambda() {
    let mut r = rng(14);
    for _ in 0..CASES {
        let d = r.random_range(1..=6);
        let sigma = r.random_range(0.01..5.0);
        let g = game_with(&mut r, &vec![sigma; d], 3.0);
        let w = vector(&mut r, d, 2.0);
        for lambda in [0.0, 0.1, 1.0, 10.0] {
            assert!(adjusted_descent(&g, &w, lambda) >= -1e-12);
        }
    }
}

#[test]
fn semidefinite_symmetric_part_bounds_lambda() {
    let mut r = rng(15);
    for case in 0..CASES {
        let d = r.random_range(2..=6);
        let mut eigs = spectrum(&mut r, d, 0.0, 3.0);
        eigs[0] = 0.0;
        eigs[1] = eigs[1].max(0.5);
        let kappa = eigs.iter().cloned().fold(f64::MIN, f64::max);
        let lambda = r.random_range(1e-3..1.0 - 1e-3) * 4.0 / kappa;

        let psd = game_with(&mut r, &eigs, 2.0);
        let w = vector(&mut r, d, 2.0);
        let v = adjusted_descent(&psd, &w, lambda);
        assert!(v >= -1e-9, "case {case}: PSD λ={lambda} gives {v}");

        let neg: Vec<f64> = eigs.iter().map(|e| -e).collect();
        let nsd = game_with(&mut r, &neg, 2.0);
        let v = adjusted_descent(&nsd, &w, -lambda);
        assert!(v <= 1e-9, "case {case}: NSD λ={lambda} gives {v}");
    }
}

#[test]
fn lambda_bound_matches_condition_number() {
    let mut r = rng(16);
    let eigs = [0.0, 0.5, 2.0];
    let g = game_with(&mut r, &eigs, 1.0);
    let dec = helmholtz_split(g.hessian()).unwrap();
    assert!((dec.additive_condition_number - 2.0).abs() < 1e-12);
    assert!((dec.lambda_bound() - 2.0).abs() < 1e-11);
}
