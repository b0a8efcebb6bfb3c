//! Analysis of the game Hessian: the split into symmetric and antisymmetric
//! parts, game and fixed-point classification, the `⟨ξ, ∇𝓗⟩` stability
//! probe and the alignment quantities used to choose the sign of λ.

use alloc::vec;
use alloc::vec::Vec;

use crate::differentiation::{self as diff, DifferentiationConfig, HvpMode};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::linalg::{self, Matrix};

/// `H = S + A` with `S` symmetric and `A` antisymmetric, plus the spectrum
/// of `S`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decomposition {
    pub h: Matrix,
    pub s: Matrix,
    pub a: Matrix,
    /// Eigenvalues of `S`, largest first.
    pub s_eigenvalues: Vec<f64>,
    /// `σ_max − σ_min` of `S`.
    pub additive_condition_number: f64,
}

impl Decomposition {
    pub fn sigma_max(&self) -> f64 {
        self.s_eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.s_eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Upper end of the λ interval `(0, 4/κ)` on which SGA keeps
    /// `⟨ξ_λ, ∇𝓗⟩` sign-definite for semidefinite `S`. Infinite when
    /// `κ = 0`, where `S = σI` commutes with every `A`.
    pub fn lambda_bound(&self) -> f64 {
        if self.additive_condition_number == 0.0 {
            f64::INFINITY
        } else {
            4.0 / self.additive_condition_number
        }
    }

    /// Eigenvalues within this distance of zero count as zero.
    pub fn psd_tolerance(&self) -> f64 {
        PSD_RELATIVE_TOL * self.additive_condition_number.max(1.0)
    }

    pub fn stability(&self) -> Stability {
        stability_from_eigenvalues(&self.s_eigenvalues, self.psd_tolerance())
    }
}

const PSD_RELATIVE_TOL: f64 = 1e-9;

pub fn helmholtz_split(h: &Matrix) -> Result<Decomposition> {
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("Hessian"));
    }
    let n = h.rows();
    let s = Matrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let a = Matrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] - h[(j, i)]));
    let s_eigenvalues = linalg::symmetric_eigenvalues(&s)?;
    let kappa = match (s_eigenvalues.first(), s_eigenvalues.last()) {
        (Some(hi), Some(lo)) => (hi - lo).max(0.0),
        _ => 0.0,
    };
    Ok(Decomposition { h: h.clone(), s, a, s_eigenvalues, additive_condition_number: kappa })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GameKind {
    /// `A ≡ 0`
    Potential,
    /// `S ≡ 0`
    Hamiltonian,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameClass {
    pub kind: GameKind,
    /// Largest `max|A_ij|` over the sampled points.
    pub max_antisymmetric: f64,
    /// Largest `max|S_ij|` over the sampled points.
    pub max_symmetric: f64,
    pub tolerance: f64,
}

/// Classifies a game by sampling its Hessian at `samples`.
///
/// With `tol = None` the tolerance is `1e-9 · max(1, ‖H‖∞)` for analytic
/// Hessians and `1e-5 · max(1, ‖H‖∞)` when the Hessian comes from finite
/// differences. A game whose Hessian vanishes is reported as potential.
pub fn classify_game<G: Game + ?Sized>(
    game: &G,
    samples: &[Vec<f64>],
    tol: Option<f64>,
    cfg: &DifferentiationConfig,
) -> Result<GameClass> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("classify_game needs at least one sample point".into()));
    }
    let mut max_a: f64 = 0.0;
    let mut max_s: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    let mut analytic = true;
    for w in samples {
        if cfg.hvp_mode == HvpMode::FiniteDifference || game.analytic_hessian(w).is_none() {
            analytic = false;
        }
        let dec = helmholtz_split(&diff::full_hessian(game, w, cfg)?)?;
        max_a = max_a.max(dec.a.max_abs());
        max_s = max_s.max(dec.s.max_abs());
        max_h = max_h.max(dec.h.max_abs());
    }
    let tolerance = tol.unwrap_or_else(|| {
        let rel = if analytic { 1e-9 } else { 1e-5 };
        rel * max_h.max(1.0)
    });
    let kind = if max_a <= tolerance {
        GameKind::Potential
    } else if max_s <= tolerance {
        GameKind::Hamiltonian
    } else {
        GameKind::General
    };
    Ok(GameClass { kind, max_antisymmetric: max_a, max_symmetric: max_s, tolerance })
}

/// `⟨ξ, ∇𝓗⟩ = ξᵀ S ξ`: non-negative near stable fixed points, negative near
/// unstable ones.
pub fn stability_probe<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<f64> {
    let f = diff::simultaneous_gradient(game, w)?;
    let gh = diff::thvp(game, &f.w, &f.xi, cfg)?;
    Ok(linalg::dot(&f.xi, &gh))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stability {
    /// `S ⪰ 0` near the point
    Stable,
    /// `S ≺ 0` near the point
    Unstable,
    Indefinite,
}

fn stability_from_eigenvalues(eigs: &[f64], tol: f64) -> Stability {
    if eigs.iter().all(|&s| s >= -tol) {
        Stability::Stable
    } else if eigs.iter().all(|&s| s < -tol) {
        Stability::Unstable
    } else {
        Stability::Indefinite
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointReport {
    pub w: Vec<f64>,
    pub xi_norm: f64,
    pub stability: Stability,
    #[cfg_attr(feature = "serde", serde(rename = "local_nash"))]
    pub is_local_nash: bool,
    /// `⟨ξ, ∇𝓗⟩` at `w + r·(1,…,1)/√d` with `r` the neighborhood radius.
    pub probe_value: f64,
    pub s_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// `‖ξ(w)‖` above this is not a fixed point.
    pub xi_tolerance: f64,
    /// Radius of the neighborhood sampled for games with non-constant Hessian.
    pub neighborhood_radius: f64,
    pub neighborhood_samples: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { xi_tolerance: 1e-8, neighborhood_radius: 1e-3, neighborhood_samples: 8 }
    }
}

/// Labels a fixed point stable, unstable or indefinite from the spectrum of
/// `S`, and checks the local Nash condition on each player's diagonal block.
///
/// Quadratic games are judged at `w` alone; other games at `w` and
/// `neighborhood_samples` points at distance `neighborhood_radius`, and a
/// label only sticks if every sample agrees.
pub fn classify_fixed_point<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    opts: &FixedPointOptions,
    cfg: &DifferentiationConfig,
) -> Result<FixedPointReport> {
    let f = diff::simultaneous_gradient(game, w)?;
    let xi_norm = f.norm();
    if xi_norm > opts.xi_tolerance {
        return Err(Error::NotAFixedPoint { xi_norm, tolerance: opts.xi_tolerance });
    }
    let dec = helmholtz_split(&diff::full_hessian(game, w, cfg)?)?;
    let mut stability = dec.stability();
    if !game.has_constant_hessian() {
        for dir in neighborhood_directions(w.len(), opts.neighborhood_samples) {
            let p = linalg::add_scaled(w, opts.neighborhood_radius, &dir);
            let here = helmholtz_split(&diff::full_hessian(game, &p, cfg)?)?.stability();
            if here != stability {
                stability = Stability::Indefinite;
                break;
            }
        }
    }

    let tol = dec.psd_tolerance();
    let part = game.partition();
    let mut is_local_nash = true;
    for i in 0..part.players() {
        let r = part.range(i);
        let block = dec.s.block(r.clone(), r);
        if linalg::symmetric_eigenvalues(&block)?.iter().any(|&s| s < -tol) {
            is_local_nash = false;
            break;
        }
    }

    let d = w.len();
    let diag = vec![opts.neighborhood_radius / libm::sqrt(d as f64); d];
    let probe_value = stability_probe(game, &linalg::add_scaled(w, 1.0, &diag), cfg)?;

    Ok(FixedPointReport {
        w: w.to_vec(),
        xi_norm,
        stability,
        is_local_nash,
        probe_value,
        s_eigenvalues: dec.s_eigenvalues,
    })
}

/// Unit directions `±e_0, ±e_1, …` followed by `±(1,…,1)/√d` and the
/// alternating-sign diagonal, truncated to `count`.
fn neighborhood_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut base: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            e
        })
        .collect();
    let s = 1.0 / libm::sqrt(d as f64);
    base.push(vec![s; d]);
    base.push((0..d).map(|j| if j % 2 == 0 { s } else { -s }).collect());
    base.into_iter()
        .flat_map(|v| {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            [v, neg]
        })
        .take(count)
        .collect()
}

/// Sign of `(1/d)⟨ξ, ∇𝓗⟩⟨Aᵀξ, ∇𝓗⟩ + ε`, returned as `±1.0`; zero maps to `+1`.
pub fn alignment_sign(xi: &[f64], at_xi: &[f64], grad_h: &[f64], epsilon: f64) -> f64 {
    let d = xi.len().max(1) as f64;
    let score = linalg::dot(xi, grad_h) * linalg::dot(at_xi, grad_h) / d + epsilon;
    if score < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `d/dλ cos²θ(u + λv, w)` at `λ = 0`.
pub fn infinitesimal_alignment(u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    let uu = linalg::norm_sq(u);
    let ww = linalg::norm_sq(w);
    if uu == 0.0 {
        return Err(Error::ZeroVector("alignment base vector u"));
    }
    if ww == 0.0 {
        return Err(Error::ZeroVector("alignment reference vector w"));
    }
    let uw = linalg::dot(u, w);
    let vw = linalg::dot(v, w);
    let uv = linalg::dot(u, v);
    Ok(2.0 * uw * (vw * uu - uw * uv) / (uu * uu * ww))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_game;
    use crate::game::{make_game, PlayerFns, PlayerPartition};

    fn cfg() -> DifferentiationConfig {
        DifferentiationConfig::default()
    }

    #[test]
    fn split_fig3_hessian() {
        let h = Matrix::from_rows(&[[1.0, 10.0], [-10.0, 1.0]]).unwrap();
        let d = helmholtz_split(&h).unwrap();
        assert_eq!(d.s, Matrix::identity(2));
        assert_eq!(d.a, Matrix::from_rows(&[[0.0, 10.0], [-10.0, 0.0]]).unwrap());
        assert_eq!(d.additive_condition_number, 0.0);
        assert_eq!(d.lambda_bound(), f64::INFINITY);
    }

    #[test]
    fn split_example7_hessian() {
        let h = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let d = helmholtz_split(&h).unwrap();
        assert_eq!(d.a, Matrix::zeros(2, 2));
        assert!((d.s_eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((d.s_eigenvalues[1] + 1.0).abs() < 1e-12);
        assert!((d.additive_condition_number - 4.0).abs() < 1e-12);
    }

    #[test]
    fn split_four_player() {
        let g = catalog_game("fig7_four_player", &[("epsilon", "0.01")]).unwrap();
        let d = helmholtz_split(g.hessian()).unwrap();
        assert_eq!(d.s, Matrix::identity(4).scaled(0.01));
        for i in 0..4 {
            for j in 0..4 {
                let expect = if j > i { 1.0 } else if j < i { -1.0 } else { 0.0 };
                assert_eq!(d.a[(i, j)], expect);
            }
        }
    }

    #[test]
    fn split_rejects_non_square() {
        assert!(matches!(
            helmholtz_split(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn classify_catalog() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, -2.0]];
        let kind = |name: &str| {
            let g = catalog_game(name, &[]).unwrap();
            classify_game(&g, &pts, None, &cfg()).unwrap().kind
        };
        assert_eq!(kind("example3"), GameKind::Hamiltonian);
        assert_eq!(kind("example4"), GameKind::Potential);
        assert_eq!(kind("fig3_weak_attractor"), GameKind::General);
        assert_eq!(kind("example7"), GameKind::Potential);
        assert_eq!(kind("example5"), GameKind::Potential);
        assert_eq!(kind("example6"), GameKind::General);
    }

    #[test]
    fn classify_needs_samples() {
        let g = catalog_game("example7", &[]).unwrap();
        assert!(classify_game(&g, &[], None, &cfg()).is_err());
    }

    #[test]
    fn probe_examples() {
        let g = catalog_game("fig3_weak_attractor", &[]).unwrap();
        assert_eq!(stability_probe(&g, &[1.0, 1.0], &cfg()).unwrap(), 202.0);
        let g6 = catalog_game("example6", &[("epsilon", "0.1")]).unwrap();
        assert!((stability_probe(&g6, &[1.0, 0.0], &cfg()).unwrap() + 0.101).abs() < 1e-15);
        let g3 = catalog_game("example3", &[]).unwrap();
        assert_eq!(stability_probe(&g3, &[0.3, -1.7], &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_examples() {
        let opts = FixedPointOptions::default();
        let g7 = catalog_game("example7", &[]).unwrap();
        let r = classify_fixed_point(&g7, &[0.0, 0.0], &opts, &cfg()).unwrap();
        assert_eq!(r.stability, Stability::Indefinite);
        assert!(r.is_local_nash);

        let g1 = catalog_game("example1", &[]).unwrap();
        let r = classify_fixed_point(&g1, &[0.0; 4], &opts, &cfg()).unwrap();
        assert_eq!(r.stability, Stability::Stable);
        assert!(r.is_local_nash);

        let g6 = catalog_game("example6", &[]).unwrap();
        let r = classify_fixed_point(&g6, &[0.0, 0.0], &opts, &cfg()).unwrap();
        assert_eq!(r.stability, Stability::Unstable);
        assert!(!r.is_local_nash);
        assert!(r.probe_value < 0.0);
    }

    #[test]
    fn not_a_fixed_point() {
        let g = catalog_game("example7", &[]).unwrap();
        let err = classify_fixed_point(&g, &[1.0, 0.0], &FixedPointOptions::default(), &cfg());
        assert!(matches!(err, Err(Error::NotAFixedPoint { .. })));
    }

    #[test]
    fn fixed_point_of_non_quadratic_game_uses_neighborhood() {
        // ℓ1 = x³ + xy, ℓ2 = y²/2 − xy: at the origin S = diag(0, 1) is PSD, but
        // S_11 = 6x changes sign across x = 0.
        let p = PlayerPartition::new(vec![1, 1]).unwrap();
        let g = make_game(
            p,
            vec![
                PlayerFns::new(|w| w[0].powi(3) + w[0] * w[1], |w| vec![3.0 * w[0] * w[0] + w[1]]),
                PlayerFns::new(|w| 0.5 * w[1] * w[1] - w[0] * w[1], |w| vec![w[1] - w[0]]),
            ],
        )
        .unwrap();
        let r = classify_fixed_point(&g, &[0.0, 0.0], &FixedPointOptions::default(), &cfg()).unwrap();
        assert_eq!(r.stability, Stability::Indefinite);
    }

    #[test]
    fn alignment_sign_examples() {
        // Example 6 (ε = 0.1) at (2, 0)
        let xi = [-0.2, 2.0];
        let at_xi = [2.0, 0.2];
        let gh = [2.02, 0.0];
        assert!((linalg::dot(&xi, &gh) + 0.404).abs() < 1e-12);
        assert!((linalg::dot(&at_xi, &gh) - 4.04).abs() < 1e-12);
        assert_eq!(alignment_sign(&xi, &at_xi, &gh, 0.1), -1.0);
        // fig3 game at (1, 1)
        assert_eq!(alignment_sign(&[11.0, -9.0], &[90.0, 110.0], &[101.0, 101.0], 0.1), 1.0);
        assert_eq!(alignment_sign(&[0.0; 3], &[0.0; 3], &[0.0; 3], 0.1), 1.0);
        assert_eq!(alignment_sign(&[0.0; 3], &[0.0; 3], &[0.0; 3], 0.0), 1.0);
    }

    #[test]
    fn alignment_examples() {
        assert_eq!(infinitesimal_alignment(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(infinitesimal_alignment(&[1.0, 2.0], &[0.0, 0.0], &[3.0, 1.0]).unwrap(), 0.0);
        assert!(infinitesimal_alignment(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(infinitesimal_alignment(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn neighborhood_directions_are_unit() {
        for d in [1, 2, 5] {
            let dirs = neighborhood_directions(d, 8);
            assert_eq!(dirs.len(), 8.min(2 * (d + 2)));
            for v in dirs {
                assert!((linalg::norm(&v) - 1.0).abs() < 1e-15);
            }
        }
    }
}
