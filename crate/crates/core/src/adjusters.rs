//! Update rules and the optimizer loop.
//!
//! Every rule is a direction field `d(w)`; a step is plain explicit Euler,
//! `w ← w − η·d(w)`. [`direction`] is exposed on its own so callers can feed
//! the adjusted field into any outer optimizer.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::differentiation::{self as diff, DifferentiationConfig};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::linalg;
use crate::mechanics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AdjusterKind {
    /// `ξ`
    #[cfg_attr(feature = "serde", serde(rename = "simgd"))]
    SimGD,
    /// `ξ + λAᵀξ`
    #[cfg_attr(feature = "serde", serde(rename = "sga"))]
    SGA,
    /// `ξ + λ*Aᵀξ` with the sign of `λ*` chosen by alignment each step
    #[cfg_attr(feature = "serde", serde(rename = "sga-aligned"))]
    SGAAligned,
    /// `ξ + λHᵀξ`
    #[cfg_attr(feature = "serde", serde(rename = "consensus"))]
    Consensus,
    /// `ξ + |λ|·sign(⟨ξ, ∇𝓗⟩)·Hᵀξ`
    #[cfg_attr(feature = "serde", serde(rename = "aligned-consensus"))]
    AlignedConsensus,
    /// `Hᵀξ = ∇𝓗`
    #[cfg_attr(feature = "serde", serde(rename = "hamiltonian-descent"))]
    HamiltonianDescent,
    /// `2ξ_t − ξ_{t−1}`
    #[cfg_attr(feature = "serde", serde(rename = "omd"))]
    OMD,
}

impl AdjusterKind {
    pub const ALL: [AdjusterKind; 7] = [
        Self::SimGD,
        Self::SGA,
        Self::SGAAligned,
        Self::Consensus,
        Self::AlignedConsensus,
        Self::HamiltonianDescent,
        Self::OMD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimGD => "simgd",
            Self::SGA => "sga",
            Self::SGAAligned => "sga-aligned",
            Self::Consensus => "consensus",
            Self::AlignedConsensus => "aligned-consensus",
            Self::HamiltonianDescent => "hamiltonian-descent",
            Self::OMD => "omd",
        }
    }

    /// Rules whose sign choice depends on the current state, making the
    /// iteration nonlinear even on quadratic games.
    pub fn is_aligned(self) -> bool {
        matches!(self, Self::SGAAligned | Self::AlignedConsensus)
    }

    pub fn uses_lambda(self) -> bool {
        !matches!(self, Self::SimGD | Self::HamiltonianDescent | Self::OMD)
    }
}

impl fmt::Display for AdjusterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdjusterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::InvalidParameter {
            name: "adjuster".into(),
            reason: alloc::format!(
                "unknown kind {s:?}; expected one of simgd, sga, sga-aligned, consensus, \
                 aligned-consensus, hamiltonian-descent, omd"
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdjusterSpec {
    pub kind: AdjusterKind,
    #[cfg_attr(feature = "serde", serde(default = "default_lambda"))]
    pub lambda: f64,
    /// Alignment bias; only read by [`AdjusterKind::SGAAligned`].
    #[cfg_attr(feature = "serde", serde(default = "default_epsilon"))]
    pub epsilon: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub diff: DifferentiationConfig,
}

#[cfg(feature = "serde")]
fn default_lambda() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn default_epsilon() -> f64 {
    0.1
}

impl AdjusterSpec {
    pub fn new(kind: AdjusterKind) -> Self {
        Self { kind, lambda: 1.0, epsilon: 0.1, diff: DifferentiationConfig::default() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_diff(mut self, diff: DifferentiationConfig) -> Self {
        self.diff = diff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda".into(),
                reason: String::from("must be finite"),
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon".into(),
                reason: alloc::format!("must be finite and non-negative, got {}", self.epsilon),
            });
        }
        self.diff.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepDiagnostics {
    pub losses: Vec<f64>,
    pub xi_norm: f64,
    /// `⟨ξ, ∇𝓗⟩`
    pub probe: f64,
    /// Sign of the λ actually applied; `0` for rules without λ.
    pub lambda_sign: f64,
}

/// Everything a rule computes at one point.
struct Evaluated {
    xi: Vec<f64>,
    direction: Vec<f64>,
    diagnostics: StepDiagnostics,
}

fn sign_of(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn evaluate<G: Game + ?Sized>(
    spec: &AdjusterSpec,
    game: &G,
    w: &[f64],
    prev_xi: Option<&[f64]>,
) -> Result<Evaluated> {
    let field = diff::simultaneous_gradient(game, w)?;
    let xi = &field.xi;
    let grad_h = diff::thvp(game, w, xi, &spec.diff)?;
    let at_xi = || -> Result<Vec<f64>> {
        let h_xi = diff::hvp(game, w, xi, &spec.diff)?;
        Ok(grad_h.iter().zip(&h_xi).map(|(ht, h)| (ht - h) / 2.0).collect())
    };
    let lam = spec.lambda;
    let (direction, lambda_sign) = match spec.kind {
        AdjusterKind::SimGD => (xi.clone(), 0.0),
        AdjusterKind::SGA => (linalg::add_scaled(xi, lam, &at_xi()?), sign_of(lam)),
        AdjusterKind::SGAAligned => {
            let at = at_xi()?;
            let s = mechanics::alignment_sign(xi, &at, &grad_h, spec.epsilon);
            (linalg::add_scaled(xi, s * lam.abs(), &at), s)
        }
        AdjusterKind::Consensus => (linalg::add_scaled(xi, lam, &grad_h), sign_of(lam)),
        AdjusterKind::AlignedConsensus => {
            let s = sign_of(linalg::dot(xi, &grad_h));
            (linalg::add_scaled(xi, s * lam.abs(), &grad_h), s)
        }
        AdjusterKind::HamiltonianDescent => (grad_h.clone(), 0.0),
        AdjusterKind::OMD => {
            let prev = prev_xi.unwrap_or(xi);
            if prev.len() != xi.len() {
                return Err(Error::DimensionMismatch {
                    expected: xi.len(),
                    actual: prev.len(),
                    context: "previous simultaneous gradient",
                });
            }
            (xi.iter().zip(prev).map(|(x, p)| 2.0 * x - p).collect(), 0.0)
        }
    };
    if !linalg::all_finite(&direction) {
        return Err(Error::NonFinite("update direction"));
    }
    let diagnostics = StepDiagnostics {
        losses: game.loss_vector(w),
        xi_norm: field.norm(),
        probe: linalg::dot(xi, &grad_h),
        lambda_sign,
    };
    Ok(Evaluated { xi: field.xi, direction, diagnostics })
}

/// The adjusted field at `w`. `prev_xi` is `ξ` at the previous iterate and
/// is only read by OMD, which treats `None` as `ξ_{t−1} = ξ_t`.
pub fn direction<G: Game + ?Sized>(
    spec: &AdjusterSpec,
    game: &G,
    w: &[f64],
    prev_xi: Option<&[f64]>,
) -> Result<Vec<f64>> {
    Ok(evaluate(spec, game, w, prev_xi)?.direction)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// `w − η·d(w)`; may be non-finite, which [`run`] reports as divergence.
    pub w: Vec<f64>,
    /// `ξ` at the pre-step point, to be passed back as `prev_xi`.
    pub xi: Vec<f64>,
    /// Measured at the pre-step point.
    pub diagnostics: StepDiagnostics,
}

pub fn step<G: Game + ?Sized>(
    spec: &AdjusterSpec,
    game: &G,
    w: &[f64],
    eta: f64,
    prev_xi: Option<&[f64]>,
) -> Result<Step> {
    check_eta(eta)?;
    let ev = evaluate(spec, game, w, prev_xi)?;
    Ok(Step { w: linalg::add_scaled(w, -eta, &ev.direction), xi: ev.xi, diagnostics: ev.diagnostics })
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "eta".into(),
            reason: alloc::format!("learning rate must be positive and finite, got {eta}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct StopCriteria {
    pub max_iters: usize,
    pub loss_window: usize,
    /// Converged once the window mean of per-iterate mean `|ℓ_i|` drops below this.
    pub loss_threshold: f64,
    pub divergence_norm: f64,
    /// When set, convergence is `‖ξ‖ < xi_threshold` instead of the loss window.
    pub xi_threshold: Option<f64>,
    /// Keep every `record_every`-th iterate in the trajectory; `0` keeps only
    /// the endpoints.
    pub record_every: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            loss_window: 10,
            loss_threshold: 0.01,
            divergence_norm: 1e6,
            xi_threshold: None,
            record_every: 1,
        }
    }
}

impl StopCriteria {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_xi_threshold(mut self, threshold: f64) -> Self {
        self.xi_threshold = Some(threshold);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidConfig(reason));
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.loss_window == 0 || self.loss_window > self.max_iters {
            return bad(alloc::format!(
                "loss_window must lie in 1..=max_iters ({}), got {}",
                self.max_iters,
                self.loss_window
            ));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.loss_threshold) {
            return bad("loss_threshold must be positive and finite".into());
        }
        if !positive(self.divergence_norm) {
            return bad("divergence_norm must be positive and finite".into());
        }
        if let Some(t) = self.xi_threshold {
            if !positive(t) {
                return bad("xi_threshold must be positive and finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Outcome {
    /// Stop criterion met after this many steps.
    Converged(usize),
    /// Left the divergence ball, went non-finite or failed to evaluate after
    /// this many steps.
    Diverged(usize),
    MaxIters,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Self::Converged(_) => "converged",
            Self::Diverged(_) => "diverged",
            Self::MaxIters => "max_iters",
        }
    }

    pub fn is_converged(self) -> bool {
        matches!(self, Self::Converged(_))
    }

    pub fn is_diverged(self) -> bool {
        matches!(self, Self::Diverged(_))
    }

    pub fn iteration(self) -> Option<usize> {
        match self {
            Self::Converged(n) | Self::Diverged(n) => Some(n),
            Self::MaxIters => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    /// `w_0`, every `record_every`-th iterate, and the last iterate.
    pub iterates: Vec<Vec<f64>>,
    /// Step index of each entry of `iterates`.
    pub iterate_steps: Vec<usize>,
    /// One entry per step taken.
    pub diagnostics: Vec<StepDiagnostics>,
    /// Per-iterate mean `|ℓ_i|` for the last `loss_window` iterates.
    pub trailing_losses: Vec<f64>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.diagnostics.len()
    }

    pub fn final_point(&self) -> &[f64] {
        self.iterates.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Mean of [`Trajectory::trailing_losses`]; NaN if the run produced none.
    pub fn trailing_loss(&self) -> f64 {
        if self.trailing_losses.is_empty() {
            return f64::NAN;
        }
        self.trailing_losses.iter().sum::<f64>() / self.trailing_losses.len() as f64
    }
}

fn mean_abs(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len().max(1) as f64
}

/// Iterates [`step`] from `w0` until a stop criterion fires.
///
/// The criterion is checked at `w0` and after every step. Invalid inputs are
/// errors; anything that goes wrong mid-run is reported as
/// [`Outcome::Diverged`].
pub fn run<G: Game + ?Sized>(
    spec: &AdjusterSpec,
    game: &G,
    w0: &[f64],
    eta: f64,
    stop: &StopCriteria,
) -> Result<Trajectory> {
    spec.validate()?;
    stop.validate()?;
    check_eta(eta)?;
    game.partition().check_point(w0)?;

    let mut w = w0.to_vec();
    let mut prev_xi: Option<Vec<f64>> = None;
    let mut diagnostics = Vec::new();
    let mut iterates = alloc::vec![w.clone()];
    let mut iterate_steps = alloc::vec![0];
    let mut window: VecDeque<f64> = VecDeque::with_capacity(stop.loss_window);
    let mut outcome = Outcome::MaxIters;

    let converged = |w: &[f64], window: &mut VecDeque<f64>| -> bool {
        if window.len() == stop.loss_window {
            window.pop_front();
        }
        window.push_back(mean_abs(&game.loss_vector(w)));
        match stop.xi_threshold {
            Some(t) => linalg::norm(&game.simultaneous_gradient(w)) < t,
            None => {
                window.len() == stop.loss_window
                    && window.iter().sum::<f64>() / (window.len() as f64) < stop.loss_threshold
            }
        }
    };

    if converged(&w, &mut window) {
        outcome = Outcome::Converged(0);
    } else {
        for t in 1..=stop.max_iters {
            let s = match step(spec, game, &w, eta, prev_xi.as_deref()) {
                Ok(s) => s,
                Err(_) => {
                    outcome = Outcome::Diverged(t - 1);
                    break;
                }
            };
            diagnostics.push(s.diagnostics);
            prev_xi = Some(s.xi);
            w = s.w;
            if stop.record_every > 0 && t % stop.record_every == 0 {
                iterates.push(w.clone());
                iterate_steps.push(t);
            }
            if !linalg::all_finite(&w) || linalg::norm(&w) > stop.divergence_norm {
                outcome = Outcome::Diverged(t);
                break;
            }
            if converged(&w, &mut window) {
                outcome = Outcome::Converged(t);
                break;
            }
        }
    }

    let steps = diagnostics.len();
    if iterate_steps.last() != Some(&steps) {
        iterates.push(w);
        iterate_steps.push(steps);
    }
    Ok(Trajectory {
        iterates,
        iterate_steps,
        diagnostics,
        trailing_losses: window.into_iter().collect(),
        outcome,
    })
}
