//! First- and second-order quantities of the game dynamics.
//!
//! `ξ` comes straight from the per-player gradients. Products with the game
//! Hessian `H = ∂ξ/∂w` and its transpose use the analytic Hessian when the
//! game has one, and central finite differences of `ξ` otherwise. The
//! finite-difference paths double as an independent check on the analytic
//! ones.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HvpMode {
    /// Use the game's analytic Hessian; falls back to finite differences
    /// for games without one.
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DifferentiationConfig {
    /// Central-difference step is `fd_step_scale * (1 + ‖w‖∞)`.
    pub fd_step_scale: f64,
    pub hvp_mode: HvpMode,
    /// Largest `d` for which [`full_hessian`] will assemble a dense matrix.
    pub hessian_cap: usize,
}

impl Default for DifferentiationConfig {
    fn default() -> Self {
        Self { fd_step_scale: 1e-6, hvp_mode: HvpMode::Analytic, hessian_cap: 512 }
    }
}

impl DifferentiationConfig {
    pub fn finite_difference() -> Self {
        Self { hvp_mode: HvpMode::FiniteDifference, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-9..=1e-2).contains(&self.fd_step_scale) {
            return Err(Error::InvalidConfig(alloc::format!(
                "fd_step_scale must lie in [1e-9, 1e-2], got {}",
                self.fd_step_scale
            )));
        }
        Ok(())
    }

    fn step(&self, w: &[f64]) -> f64 {
        self.fd_step_scale * (1.0 + linalg::norm_inf(w))
    }

    fn analytic<G: Game + ?Sized>(&self, game: &G, w: &[f64]) -> Option<Matrix> {
        match self.hvp_mode {
            HvpMode::Analytic => game.analytic_hessian(w),
            HvpMode::FiniteDifference => None,
        }
    }
}

/// `ξ(w)` together with `‖ξ‖²`; the Hamiltonian is `𝓗 = ½‖ξ‖²`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldEvaluation {
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    pub norm_sq: f64,
}

impl FieldEvaluation {
    pub fn hamiltonian(&self) -> f64 {
        0.5 * self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq)
    }
}

pub fn simultaneous_gradient<G: Game + ?Sized>(game: &G, w: &[f64]) -> Result<FieldEvaluation> {
    game.partition().check_point(w)?;
    let xi = game.simultaneous_gradient(w);
    if !linalg::all_finite(&xi) {
        return Err(Error::NonFinite("simultaneous gradient"));
    }
    let norm_sq = linalg::norm_sq(&xi);
    Ok(FieldEvaluation { w: w.to_vec(), xi, norm_sq })
}

fn check_direction(game: &(impl Game + ?Sized), v: &[f64]) -> Result<()> {
    if v.len() != game.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.dim(),
            actual: v.len(),
            context: "direction vector",
        });
    }
    Ok(())
}

/// `H(w) v`.
pub fn hvp<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    v: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<Vec<f64>> {
    check_direction(game, v)?;
    if let Some(h) = cfg.analytic(game, w) {
        return Ok(h.mul_vec(v));
    }
    let vn = linalg::norm(v);
    if vn == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let h = cfg.step(w);
    let dir: Vec<f64> = v.iter().map(|x| x / vn).collect();
    let plus = game.simultaneous_gradient(&linalg::add_scaled(w, h, &dir));
    let minus = game.simultaneous_gradient(&linalg::add_scaled(w, -h, &dir));
    let out: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h) * vn).collect();
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite("Hessian-vector product"));
    }
    Ok(out)
}

/// `H(w)ᵀ v`. The finite-difference path differentiates the scalar
/// `g(w) = ⟨ξ(w), v⟩` along each coordinate, costing `2d` evaluations of `ξ`.
pub fn thvp<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    v: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<Vec<f64>> {
    check_direction(game, v)?;
    if let Some(h) = cfg.analytic(game, w) {
        return Ok(h.tr_mul_vec(v));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; v.len()]);
    }
    let h = cfg.step(w);
    let mut probe = w.to_vec();
    let mut out = vec![0.0; w.len()];
    for j in 0..w.len() {
        probe[j] = w[j] + h;
        let plus = linalg::dot(&game.simultaneous_gradient(&probe), v);
        probe[j] = w[j] - h;
        let minus = linalg::dot(&game.simultaneous_gradient(&probe), v);
        probe[j] = w[j];
        out[j] = (plus - minus) / (2.0 * h);
    }
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite("transposed Hessian-vector product"));
    }
    Ok(out)
}

/// The symplectic adjustment `Aᵀξ = (Hᵀξ − Hξ) / 2`.
pub fn sym_adjustment<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<Vec<f64>> {
    let f = simultaneous_gradient(game, w)?;
    sym_adjustment_at(game, &f, cfg)
}

/// [`sym_adjustment`] reusing an already evaluated field.
pub fn sym_adjustment_at<G: Game + ?Sized>(
    game: &G,
    field: &FieldEvaluation,
    cfg: &DifferentiationConfig,
) -> Result<Vec<f64>> {
    let h_xi = hvp(game, &field.w, &field.xi, cfg)?;
    let ht_xi = thvp(game, &field.w, &field.xi, cfg)?;
    Ok(ht_xi.iter().zip(&h_xi).map(|(ht, h)| (ht - h) / 2.0).collect())
}

/// `∇𝓗 = Hᵀξ`.
pub fn grad_hamiltonian<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<Vec<f64>> {
    let f = simultaneous_gradient(game, w)?;
    thvp(game, &f.w, &f.xi, cfg)
}

/// The dense game Hessian. Uses the analytic Hessian when present, otherwise
/// assembles column `j` as `H e_j`.
pub fn full_hessian<G: Game + ?Sized>(
    game: &G,
    w: &[f64],
    cfg: &DifferentiationConfig,
) -> Result<Matrix> {
    let d = game.dim();
    if d > cfg.hessian_cap {
        return Err(Error::HessianCapExceeded { dim: d, cap: cfg.hessian_cap });
    }
    game.partition().check_point(w)?;
    if let Some(h) = cfg.analytic(game, w) {
        return Ok(h);
    }
    let mut m = Matrix::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        let col = hvp(game, w, &e, cfg)?;
        e[j] = 0.0;
        for (i, c) in col.into_iter().enumerate() {
            m[(i, j)] = c;
        }
    }
    Ok(m)
}
