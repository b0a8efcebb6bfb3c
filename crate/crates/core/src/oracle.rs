//! Exact convergence predictions for linear update rules on quadratic games.
//!
//! With zero offsets `ξ(w) = Hw`, so every non-aligned rule is a fixed linear
//! map and converges from generic starts iff its spectral radius is below one.

use crate::adjusters::{AdjusterKind, AdjusterSpec};
use crate::error::{Error, Result};
use crate::game::QuadraticGame;
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleReport {
    pub spectral_radius: f64,
    pub predicts_convergence: bool,
}

/// The matrix `M` with `w_{t+1} = M w_t`; for OMD the state is
/// `(w_t, w_{t−1})` and `M` is the `2d × 2d` companion form.
pub fn iteration_matrix(spec: &AdjusterSpec, game: &QuadraticGame, eta: f64) -> Result<Matrix> {
    if !game.has_zero_offsets() {
        return Err(Error::OracleUnsupported("game has nonzero linear offsets"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eta".into(),
            reason: alloc::format!("learning rate must be positive and finite, got {eta}"),
        });
    }
    let h = game.hessian();
    let d = h.rows();
    let id = Matrix::identity(d);
    // Each non-OMD rule is d(w) = P·H·w for some preconditioner P.
    let ph = match spec.kind {
        AdjusterKind::SimGD => h.clone(),
        AdjusterKind::SGA => {
            let at = Matrix::from_fn(d, d, |i, j| 0.5 * (h[(j, i)] - h[(i, j)]));
            id.add_scaled(&at, spec.lambda).matmul(h)
        }
        AdjusterKind::Consensus => id.add_scaled(&h.transpose(), spec.lambda).matmul(h),
        AdjusterKind::HamiltonianDescent => h.transpose().matmul(h),
        AdjusterKind::OMD => {
            return Ok(Matrix::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
                (true, true) => id[(i, j)] - 2.0 * eta * h[(i, j)],
                (true, false) => eta * h[(i, j - d)],
                (false, true) => id[(i - d, j)],
                (false, false) => 0.0,
            }));
        }
        AdjusterKind::SGAAligned | AdjusterKind::AlignedConsensus => {
            return Err(Error::OracleUnsupported("aligned rules are nonlinear"));
        }
    };
    Ok(id.add_scaled(&ph, -eta))
}

pub fn spectral_oracle(spec: &AdjusterSpec, game: &QuadraticGame, eta: f64) -> Result<OracleReport> {
    let rho = linalg::spectral_radius(&iteration_matrix(spec, game, eta)?)?;
    Ok(OracleReport { spectral_radius: rho, predicts_convergence: rho < 1.0 })
}
