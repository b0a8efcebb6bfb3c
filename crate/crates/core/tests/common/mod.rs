#![allow(dead_code)]

use diffgame_core::linalg::{self, Matrix};
use diffgame_core::{catalog_game, QuadraticGame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn matrix(rng: &mut impl Rng, d: usize, scale: f64) -> Matrix {
    Matrix::from_fn(d, d, |_, _| rng.random_range(-scale..scale))
}

pub fn antisymmetric(rng: &mut impl Rng, d: usize, scale: f64) -> Matrix {
    let m = matrix(rng, d, scale);
    Matrix::from_fn(d, d, |i, j| m[(i, j)] - m[(j, i)])
}

/// Gram–Schmidt on a random matrix.
pub fn orthogonal(rng: &mut impl Rng, d: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = vector(rng, d, 1.0);
        for c in &cols {
            let p = linalg::dot(&v, c);
            linalg::axpy(-p, c, &mut v);
        }
        let n = linalg::norm(&v);
        if n > 1e-3 {
            cols.push(v.iter().map(|x| x / n).collect());
        }
    }
    Matrix::from_fn(d, d, |i, j| cols[j][i])
}

/// `Qᵀ diag(eigs) Q` for a random orthogonal `Q`.
pub fn symmetric_with_spectrum(rng: &mut impl Rng, eigs: &[f64]) -> Matrix {
    let d = eigs.len();
    let q = orthogonal(rng, d);
    let diag = Matrix::from_fn(d, d, |i, j| if i == j { eigs[i] } else { 0.0 });
    let s = q.transpose().matmul(&diag).matmul(&q);
    // remove rounding asymmetry
    Matrix::from_fn(d, d, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))
}

/// Every catalog game at its defaults plus a few non-default variants.
pub fn catalog_variants() -> Vec<(String, QuadraticGame)> {
    let mut out = Vec::new();
    for entry in diffgame_core::catalog::CATALOG {
        out.push((entry.name.to_string(), catalog_game(entry.name, &[]).unwrap()));
    }
    let extra: [(&str, &[(&str, &str)]); 6] = [
        ("example1", &[("payoff", "1,2;-3,0.5")]),
        ("example2", &[("p", "1,2;0,1"), ("q", "3,-1;2,2")]),
        ("example3", &[("a", "0.7"), ("b", "-1.2")]),
        ("example6", &[("epsilon", "0")]),
        ("fig4_bilinear", &[("dim", "3")]),
        ("fig7_four_player", &[("epsilon", "0")]),
    ];
    for (name, params) in extra {
        out.push((format!("{name}{params:?}"), catalog_game(name, params).unwrap()));
    }
    out
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linalg::norm(&diff) / linalg::norm(b).max(1e-12)
}
