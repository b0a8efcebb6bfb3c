//! Step-size facts behind the update rules: the descent inequality for a
//! direction at angle θ to the gradient, and the unit-ball alignment bound.

mod common;

use common::{rng, symmetric_with_spectrum, vector};
use diffgame_core::linalg;
use rand::Rng;

const CASES: usize = 1000;

/// For convex `f(w) = ½wᵀQw` with `L = λ_max(Q)` and any `v` with
/// `‖v‖ = ‖∇f‖` at angle θ to `∇f`, the step `η* = cosθ / L` decreases `f`
/// by at least `cos²θ/(2L)·‖∇f‖²`.
#[test]
fn optimal_step_along_a_deviated_direction_descends() {
    let mut r = rng(21);
    for case in 0..CASES {
        let d = r.random_range(1..=8);
        let eigs: Vec<f64> = (0..d).map(|_| r.random_range(0.01..5.0)).collect();
        let lip = eigs.iter().cloned().fold(0.0, f64::max);
        let q = symmetric_with_spectrum(&mut r, &eigs);
        let f = |w: &[f64]| 0.5 * linalg::dot(w, &q.mul_vec(w));

        let w = vector(&mut r, d, 3.0);
        let grad = q.mul_vec(&w);
        let gn = linalg::norm(&grad);
        let mut v = vector(&mut r, d, 1.0);
        let vn = linalg::norm(&v);
        v.iter_mut().for_each(|x| *x *= gn / vn);
        let cos = linalg::dot(&v, &grad) / (gn * gn);
        if cos <= 0.0 {
            continue;
        }
        let eta = cos / lip;
        let next = linalg::add_scaled(&w, -eta, &v);
        let bound = f(&w) - cos * cos / (2.0 * lip) * gn * gn + 1e-12 * f(&w).max(1.0);
        assert!(f(&next) <= bound, "case {case}: {} > {bound}", f(&next));
    }
}

/// Unit `w`, `ξ` with `wᵀξ > 0`: stepping `w − ηξ` with `η ∈ [0, 2wᵀξ]`
/// stays in the unit ball.
#[test]
fn aligned_steps_stay_in_the_unit_ball() {
    let mut r = rng(22);
    let mut checked = 0;
    while checked < CASES {
        let d = r.random_range(1..=8);
        let unit = |r: &mut rand_chacha::ChaCha8Rng| {
            let v = vector(r, d, 1.0);
            let n = linalg::norm(&v);
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let w = unit(&mut r);
        let xi = unit(&mut r);
        let c = linalg::dot(&w, &xi);
        if c <= 0.0 {
            continue;
        }
        for eta in [0.0, r.random_range(0.0..=2.0 * c), 2.0 * c] {
            let n = linalg::norm(&linalg::add_scaled(&w, -eta, &xi));
            assert!(n <= 1.0 + 1e-12, "η={eta}: ‖w − ηξ‖ = {n}");
        }
        checked += 1;
    }
}
