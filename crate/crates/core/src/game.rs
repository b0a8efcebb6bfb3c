//! Games: a partition of the parameter vector among players, per-player
//! losses, and the per-player gradients the dynamics are built from.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// How the flat parameter vector `w` splits among players. Player `i`
/// controls `w[offsets[i]..offsets[i] + sizes[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlayerPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl PlayerPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("a game needs at least one player".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("player {i} controls no parameters")));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(Self { sizes, offsets })
    }

    /// `n` players with one parameter each.
    pub fn scalar_players(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn players(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.sizes.last().copied().unwrap_or(0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinates controlled by `player`.
    pub fn range(&self, player: usize) -> Range<usize> {
        self.offsets[player]..self.offsets[player] + self.sizes[player]
    }

    /// Checks that `w` is a valid point: right length, all entries finite.
    pub fn check_point(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: w.len(),
                context: "point",
            });
        }
        if !linalg::all_finite(w) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(())
    }
}

/// An n-player differentiable game.
///
/// Implementors supply losses and each player's gradient with respect to its
/// own parameters. The simultaneous gradient and every second-order quantity
/// are derived from those.
pub trait Game: Send + Sync {
    fn partition(&self) -> &PlayerPartition;

    /// `ℓ_i(w)`.
    fn loss(&self, player: usize, w: &[f64]) -> f64;

    /// Writes `∇_{w_i} ℓ_i(w)` into `out` (length `d_i`).
    fn player_gradient(&self, player: usize, w: &[f64], out: &mut [f64]);

    /// The game Hessian `H(w)` when known in closed form.
    fn analytic_hessian(&self, _w: &[f64]) -> Option<Matrix> {
        None
    }

    /// True when `H` does not depend on `w` (quadratic games).
    fn has_constant_hessian(&self) -> bool {
        false
    }

    fn dim(&self) -> usize {
        self.partition().dim()
    }

    fn players(&self) -> usize {
        self.partition().players()
    }

    /// `ξ(w)`, the concatenated per-player gradients.
    fn simultaneous_gradient(&self, w: &[f64]) -> Vec<f64> {
        let p = self.partition();
        let mut xi = vec![0.0; p.dim()];
        for i in 0..p.players() {
            self.player_gradient(i, w, &mut xi[p.range(i)]);
        }
        xi
    }

    /// `(ℓ_1(w), …, ℓ_n(w))`.
    fn loss_vector(&self, w: &[f64]) -> Vec<f64> {
        (0..self.players()).map(|i| self.loss(i, w)).collect()
    }
}

type LossFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessianFn = Box<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// Loss and own-parameter gradient for one player of an [`FnGame`].
pub struct PlayerFns {
    loss: LossFn,
    gradient: GradFn,
}

impl PlayerFns {
    pub fn new(
        loss: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { loss: Box::new(loss), gradient: Box::new(gradient) }
    }
}

/// A game defined by closures. Second-order information comes from finite
/// differences unless an analytic Hessian is attached.
pub struct FnGame {
    partition: PlayerPartition,
    players: Vec<PlayerFns>,
    hessian: Option<HessianFn>,
}

impl core::fmt::Debug for FnGame {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FnGame")
            .field("partition", &self.partition)
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

/// Builds a game from per-player loss/gradient closures.
///
/// Each gradient is probed once at the origin to check that it returns
/// exactly `d_i` entries.
pub fn make_game(partition: PlayerPartition, players: Vec<PlayerFns>) -> Result<FnGame> {
    if players.len() != partition.players() {
        return Err(Error::DimensionMismatch {
            expected: partition.players(),
            actual: players.len(),
            context: "number of players",
        });
    }
    let origin = vec![0.0; partition.dim()];
    for (i, p) in players.iter().enumerate() {
        let g = (p.gradient)(&origin);
        if g.len() != partition.sizes()[i] {
            return Err(Error::DimensionMismatch {
                expected: partition.sizes()[i],
                actual: g.len(),
                context: "player gradient length",
            });
        }
    }
    Ok(FnGame { partition, players, hessian: None })
}

impl FnGame {
    /// Attaches a closed-form Hessian. It must return a `d×d` matrix.
    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let d = self.partition.dim();
        let probe = hessian(&vec![0.0; d]);
        if probe.rows() != d || probe.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: probe.rows(),
                context: "analytic Hessian size",
            });
        }
        self.hessian = Some(Box::new(hessian));
        Ok(self)
    }
}

impl Game for FnGame {
    fn partition(&self) -> &PlayerPartition {
        &self.partition
    }

    fn loss(&self, player: usize, w: &[f64]) -> f64 {
        (self.players[player].loss)(w)
    }

    fn player_gradient(&self, player: usize, w: &[f64], out: &mut [f64]) {
        let g = (self.players[player].gradient)(w);
        out.copy_from_slice(&g);
    }

    fn analytic_hessian(&self, w: &[f64]) -> Option<Matrix> {
        self.hessian.as_ref().map(|h| h(w))
    }
}

/// `ℓ_i(w) = ½ wᵀ B_i w + b_iᵀ w` for symmetric `B_i`.
///
/// The Hessian is constant: its block-row for player `i` is the rows of `B_i`
/// that belong to player `i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadraticGame {
    partition: PlayerPartition,
    coefficients: Vec<Matrix>,
    offsets: Vec<Vec<f64>>,
    hessian: Matrix,
}

/// Entries of `B_i` may differ from their transpose by at most this much,
/// relative to the largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

impl QuadraticGame {
    pub fn new(
        partition: PlayerPartition,
        coefficients: Vec<Matrix>,
        offsets: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = partition.players();
        let d = partition.dim();
        if coefficients.len() != n || offsets.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: coefficients.len().min(offsets.len()),
                context: "quadratic game players",
            });
        }
        for (i, (b, off)) in coefficients.iter().zip(&offsets).enumerate() {
            if b.rows() != d || b.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: b.rows(),
                    context: "quadratic coefficient size",
                });
            }
            if off.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: off.len(),
                    context: "quadratic offset length",
                });
            }
            if !b.is_finite() || !linalg::all_finite(off) {
                return Err(Error::NonFinite("quadratic game coefficients"));
            }
            let asym = b.asymmetry();
            if asym > SYMMETRY_TOL * b.max_abs().max(1.0) {
                return Err(Error::NotSymmetric { player: i, asymmetry: asym });
            }
        }
        let mut hessian = Matrix::zeros(d, d);
        for (i, b) in coefficients.iter().enumerate() {
            for r in partition.range(i) {
                for c in 0..d {
                    hessian[(r, c)] = b[(r, c)];
                }
            }
        }
        Ok(Self { partition, coefficients, offsets, hessian })
    }

    /// Same game with every linear term `b_i` zero.
    pub fn homogeneous(partition: PlayerPartition, coefficients: Vec<Matrix>) -> Result<Self> {
        let offsets = vec![vec![0.0; partition.dim()]; partition.players()];
        Self::new(partition, coefficients, offsets)
    }

    /// A game with one scalar player per coordinate whose Hessian is exactly
    /// `h`: player `i` gets `B_i` holding row `i` of `h` in row and column `i`.
    pub fn from_hessian(h: &Matrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
        }
        let d = h.rows();
        let coefficients = (0..d)
            .map(|i| {
                Matrix::from_fn(d, d, |r, c| match (r == i, c == i) {
                    (true, _) => h[(i, c)],
                    (false, true) => h[(i, r)],
                    _ => 0.0,
                })
            })
            .collect();
        Self::homogeneous(PlayerPartition::scalar_players(d)?, coefficients)
    }

    pub fn coefficients(&self) -> &[Matrix] {
        &self.coefficients
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn has_zero_offsets(&self) -> bool {
        self.offsets.iter().all(|b| b.iter().all(|&x| x == 0.0))
    }

    /// The constant game Hessian.
    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }
}

impl Game for QuadraticGame {
    fn partition(&self) -> &PlayerPartition {
        &self.partition
    }

    fn loss(&self, player: usize, w: &[f64]) -> f64 {
        let b = &self.coefficients[player];
        let quad: f64 = (0..w.len()).map(|r| w[r] * linalg::dot(b.row(r), w)).sum();
        0.5 * quad + linalg::dot(&self.offsets[player], w)
    }

    fn player_gradient(&self, player: usize, w: &[f64], out: &mut [f64]) {
        let b = &self.coefficients[player];
        let off = &self.offsets[player];
        for (o, r) in out.iter_mut().zip(self.partition.range(player)) {
            *o = linalg::dot(b.row(r), w) + off[r];
        }
    }

    fn analytic_hessian(&self, _w: &[f64]) -> Option<Matrix> {
        Some(self.hessian.clone())
    }

    fn has_constant_hessian(&self) -> bool {
        true
    }

    fn simultaneous_gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut xi = self.hessian.mul_vec(w);
        for i in 0..self.partition.players() {
            for r in self.partition.range(i) {
                xi[r] += self.offsets[i][r];
            }
        }
        xi
    }
}
