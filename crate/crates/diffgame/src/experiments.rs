//! Learning-rate sweeps over catalog games, the three figure presets, and
//! the single-point analysis bundle.

use std::collections::BTreeMap;
use std::fmt;

use diffgame_core::adjusters::{self, AdjusterKind, AdjusterSpec, Outcome, StopCriteria};
use diffgame_core::differentiation::{self as diff, DifferentiationConfig};
use diffgame_core::linalg;
use diffgame_core::mechanics::{
    self, Decomposition, FixedPointOptions, FixedPointReport, GameClass,
};
use diffgame_core::{spectral_oracle, CatalogGame, Game, QuadraticGame};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{ExperimentError, Result};

/// Trailing losses are reported capped at this value.
pub const TRAILING_LOSS_CAP: f64 = 5.0;

/// A catalog game id with parameter overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSelection {
    pub name: String,
    #[serde(default, deserialize_with = "params_as_strings")]
    pub params: BTreeMap<String, String>,
}

/// Accepts `{"epsilon": 0.01}` as well as `{"epsilon": "0.01"}`.
fn params_as_strings<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Scalar {
        Text(String),
        Int(i64),
        Real(f64),
    }
    let raw = BTreeMap::<String, Scalar>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                Scalar::Text(s) => s,
                Scalar::Int(i) => i.to_string(),
                Scalar::Real(x) => x.to_string(),
            };
            (k, v)
        })
        .collect())
}

impl GameSelection {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), params: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_owned(), value.to_owned());
        self
    }

    /// Parses `name[:key=value]...`.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut parts = raw.split(':');
        let name = parts.next().unwrap_or_default().trim();
        if name.is_empty() {
            return Err(ExperimentError::Config(format!("empty game id in {raw:?}")));
        }
        let mut sel = Self::new(name);
        for kv in parts {
            sel.insert_param(kv)?;
        }
        Ok(sel)
    }

    /// Adds one `key=value` override.
    pub fn insert_param(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("expected key=value, got {kv:?}")))?;
        self.params.insert(k.trim().to_owned(), v.trim().to_owned());
        Ok(())
    }

    pub fn catalog(&self) -> Result<CatalogGame> {
        let params: Vec<(&str, &str)> =
            self.params.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        Ok(CatalogGame::from_name(&self.name, &params)?)
    }

    pub fn build(&self) -> Result<QuadraticGame> {
        Ok(self.catalog()?.build()?)
    }
}

/// Same syntax as [`GameSelection::parse`].
impl fmt::Display for GameSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for (k, v) in &self.params {
            write!(f, ":{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaGrid {
    List(Vec<f64>),
    /// `count` geometrically spaced points including both ends.
    Log { start: f64, stop: f64, count: usize },
    /// `count` evenly spaced points including both ends.
    Linear { start: f64, stop: f64, count: usize },
}

impl EtaGrid {
    pub fn values(&self) -> Vec<f64> {
        let spaced = |start: f64, stop: f64, count: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            match count {
                0 => vec![],
                1 => vec![start],
                n => (0..n)
                    .map(|i| match i {
                        0 => start,
                        i if i == n - 1 => stop,
                        i => f(i as f64 / (n - 1) as f64),
                    })
                    .collect(),
            }
        };
        match *self {
            Self::List(ref v) => v.clone(),
            Self::Log { start, stop, count } => {
                let (a, b) = (start.ln(), stop.ln());
                spaced(start, stop, count, &|t| (a + t * (b - a)).exp())
            }
            Self::Linear { start, stop, count } => {
                spaced(start, stop, count, &|t| start + t * (stop - start))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(ExperimentError::Config("learning-rate grid is empty".into()));
        }
        if let Some(bad) = v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(ExperimentError::Config(format!(
                "learning rates must be positive and finite, got {bad}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoints {
    /// One start with every coordinate equal to this value.
    Fill(f64),
    Points(Vec<Vec<f64>>),
    /// `count` points drawn uniformly from the ball of this radius.
    RandomBall { radius: f64, count: usize },
}

impl InitialPoints {
    /// Starting points for the game at position `game_index` in the sweep.
    ///
    /// Random starts come from ChaCha8 seeded with `seed` on stream
    /// `game_index`, so every adjuster and learning rate of a game shares
    /// the same starts.
    pub fn points(&self, dim: usize, seed: u64, game_index: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Self::Fill(x) => Ok(vec![vec![*x; dim]]),
            Self::Points(ps) => {
                if let Some(p) = ps.iter().find(|p| p.len() != dim) {
                    return Err(ExperimentError::Config(format!(
                        "initial point {p:?} has {} coordinates, game has {dim}",
                        p.len()
                    )));
                }
                Ok(ps.clone())
            }
            Self::RandomBall { radius, count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(game_index as u64);
                let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
                Ok((0..*count)
                    .map(|_| {
                        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                        let n = linalg::norm(&z);
                        let r = radius * unit.sample(&mut rng).powf(1.0 / dim as f64);
                        z.iter().map(|x| r * x / n).collect()
                    })
                    .collect())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Fill(x) => x.is_finite(),
            Self::Points(ps) => !ps.is_empty() && ps.iter().all(|p| linalg::all_finite(p)),
            Self::RandomBall { radius, count } => *radius > 0.0 && radius.is_finite() && *count > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(ExperimentError::Config(format!("invalid initial-point policy {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub games: Vec<GameSelection>,
    pub adjusters: Vec<AdjusterSpec>,
    pub etas: EtaGrid,
    #[serde(default = "default_w0")]
    pub w0: InitialPoints,
    #[serde(default)]
    pub stop: StopCriteria,
    /// Worker threads; `0` uses one per core. Never affects results.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_w0() -> InitialPoints {
    InitialPoints::Fill(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig3, Preset::Fig4, Preset::Fig7];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig7 => "fig7",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn config(self) -> SweepConfig {
        let sga = |lambda| AdjusterSpec::new(AdjusterKind::SGA).with_lambda(lambda);
        let omd = AdjusterSpec::new(AdjusterKind::OMD);
        match self {
            // SimGD against SGA on the weak-attractor game. λ = 0.1: at λ = 1
            // the SGA iteration matrix at η = 0.032 has spectral radius ≈ 2.2.
            Self::Fig3 => SweepConfig {
                games: vec![GameSelection::new("fig3_weak_attractor")],
                adjusters: vec![AdjusterSpec::new(AdjusterKind::SimGD), sga(0.1)],
                etas: EtaGrid::List(vec![0.01, 0.032, 0.1]),
                w0: InitialPoints::Fill(0.5),
                stop: StopCriteria::default().with_max_iters(10_000),
                jobs: 0,
                seed: 0,
            },
            Self::Fig4 => SweepConfig {
                games: vec![GameSelection::new("fig4_bilinear")],
                adjusters: vec![sga(1.0), omd],
                etas: EtaGrid::Log { start: 0.01, stop: 1.75, count: 50 },
                w0: InitialPoints::Fill(0.5),
                stop: StopCriteria::default().with_max_iters(250),
                jobs: 0,
                seed: 0,
            },
            Self::Fig7 => SweepConfig {
                games: vec![
                    GameSelection::new("fig7_four_player").with_param("epsilon", "0.01"),
                    GameSelection::new("fig7_four_player").with_param("epsilon", "0"),
                ],
                adjusters: vec![sga(1.0), omd],
                etas: EtaGrid::Linear { start: 0.01, stop: 0.5, count: 50 },
                w0: InitialPoints::RandomBall { radius: 1.0, count: 3 },
                stop: StopCriteria::default().with_max_iters(5000),
                jobs: 0,
                seed: 0,
            },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.games.is_empty() {
            return Err(ExperimentError::Config("no games selected".into()));
        }
        if self.adjusters.is_empty() {
            return Err(ExperimentError::Config("no adjusters selected".into()));
        }
        for a in &self.adjusters {
            a.validate()?;
        }
        self.etas.validate()?;
        self.w0.validate()?;
        self.stop.validate()?;
        Ok(())
    }
}

/// One `(game, adjuster, η, w0)` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub game: String,
    pub adjuster: AdjusterKind,
    /// `None` for rules without λ.
    pub lambda: Option<f64>,
    pub eta: f64,
    pub seed: u64,
    pub w0_index: usize,
    pub w0: Vec<f64>,
    pub outcome: Outcome,
    /// Steps taken; equals the cutoff for runs that hit it.
    pub iters: usize,
    /// Trailing-window mean `|loss|`, capped at [`TRAILING_LOSS_CAP`].
    pub trailing_loss: f64,
    pub spectral_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

struct Job<'a> {
    game: &'a (String, QuadraticGame),
    spec: AdjusterSpec,
    eta: f64,
    w0_index: usize,
    w0: &'a [f64],
}

/// Runs every cell of the grid, `jobs` at a time. Cells come back in the
/// order games × adjusters × learning rates × starts, whatever the thread
/// count.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let games = config
        .games
        .iter()
        .map(|g| Ok((g.to_string(), g.build()?)))
        .collect::<Result<Vec<_>>>()?;
    let starts = games
        .iter()
        .enumerate()
        .map(|(i, (_, g))| config.w0.points(g.dim(), config.seed, i))
        .collect::<Result<Vec<_>>>()?;
    let etas = config.etas.values();
    // Only summaries are kept, so skip recording iterates.
    let stop = StopCriteria { record_every: 0, ..config.stop };

    let mut jobs = Vec::new();
    for (game, points) in games.iter().zip(&starts) {
        for spec in &config.adjusters {
            for &eta in &etas {
                for (w0_index, w0) in points.iter().enumerate() {
                    jobs.push(Job { game, spec: *spec, eta, w0_index, w0 });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
    let cells = pool.install(|| {
        jobs.par_iter().map(|job| run_cell(job, &stop, config.seed)).collect::<Vec<_>>()
    });
    Ok(SweepResult { cells })
}

fn run_cell(job: &Job<'_>, stop: &StopCriteria, seed: u64) -> SweepCell {
    let (label, game) = job.game;
    let (outcome, iters, trailing) = match adjusters::run(&job.spec, game, job.w0, job.eta, stop) {
        Ok(t) => {
            let iters = t.outcome.iteration().unwrap_or(stop.max_iters);
            (t.outcome, iters, t.trailing_loss())
        }
        Err(_) => (Outcome::Diverged(0), 0, f64::INFINITY),
    };
    let trailing_loss = if trailing.is_finite() { trailing.min(TRAILING_LOSS_CAP) } else { TRAILING_LOSS_CAP };
    let spectral_radius = spectral_oracle(&job.spec, game, job.eta).ok().map(|r| r.spectral_radius);
    SweepCell {
        game: label.clone(),
        adjuster: job.spec.kind,
        lambda: job.spec.kind.uses_lambda().then_some(job.spec.lambda),
        eta: job.eta,
        seed,
        w0_index: job.w0_index,
        w0: job.w0.to_vec(),
        outcome,
        iters,
        trailing_loss,
        spectral_radius,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    /// `Aᵀξ`
    pub sym_adjustment: Vec<f64>,
    /// `∇𝓗 = Hᵀξ`
    pub grad_hamiltonian: Vec<f64>,
    /// Sign aligned SGA would pick for λ.
    pub lambda_sign: f64,
    pub epsilon: f64,
    /// `d/dλ cos²θ(ξ + λAᵀξ, ∇𝓗)` at 0; absent when `ξ` or `∇𝓗` vanishes.
    pub infinitesimal_alignment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointAnalysis {
    pub game: String,
    pub w: Vec<f64>,
    pub losses: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_norm: f64,
    pub hamiltonian: f64,
    pub class: GameClass,
    pub decomposition: Decomposition,
    /// `⟨ξ, ∇𝓗⟩`
    pub probe: f64,
    pub alignment: AlignmentReport,
    /// Present only when `w` is a fixed point.
    pub fixed_point: Option<FixedPointReport>,
}

/// Every mechanics quantity at one point. The game class is judged from `w`
/// and four nearby points.
pub fn analyze_point<G: Game + ?Sized>(
    label: &str,
    game: &G,
    w: &[f64],
    epsilon: f64,
    cfg: &DifferentiationConfig,
) -> Result<PointAnalysis> {
    let field = diff::simultaneous_gradient(game, w)?;
    let decomposition = mechanics::helmholtz_split(&diff::full_hessian(game, w, cfg)?)?;
    let samples: Vec<Vec<f64>> = std::iter::once(w.to_vec())
        .chain((0..4).map(|k| w.iter().enumerate().map(|(j, x)| x + 0.1 * ((j + k) % 3) as f64 - 0.1).collect()))
        .collect();
    let class = mechanics::classify_game(game, &samples, None, cfg)?;
    let sym_adjustment = diff::sym_adjustment_at(game, &field, cfg)?;
    let grad_hamiltonian = diff::thvp(game, w, &field.xi, cfg)?;
    let alignment = AlignmentReport {
        lambda_sign: mechanics::alignment_sign(&field.xi, &sym_adjustment, &grad_hamiltonian, epsilon),
        infinitesimal_alignment: mechanics::infinitesimal_alignment(
            &field.xi,
            &sym_adjustment,
            &grad_hamiltonian,
        )
        .ok(),
        epsilon,
        sym_adjustment,
        grad_hamiltonian,
    };
    let fixed_point = match mechanics::classify_fixed_point(game, w, &FixedPointOptions::default(), cfg) {
        Ok(r) => Some(r),
        Err(diffgame_core::Error::NotAFixedPoint { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(PointAnalysis {
        game: label.to_owned(),
        w: w.to_vec(),
        losses: game.loss_vector(w),
        xi_norm: field.norm(),
        hamiltonian: field.hamiltonian(),
        probe: linalg::dot(&field.xi, &alignment.grad_hamiltonian),
        xi: field.xi,
        class,
        decomposition,
        alignment,
        fixed_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use diffgame_core::GameKind;
    use diffgame_core::Stability;

    #[test]
    fn selection_syntax_round_trips() {
        let s = GameSelection::parse("example1:payoff=1,2;3,4").unwrap();
        assert_eq!(s.params["payoff"], "1,2;3,4");
        assert_eq!(GameSelection::parse(&s.to_string()).unwrap(), s);
        assert!(GameSelection::parse(":a=1").is_err());
        assert!(GameSelection::parse("example3:a").is_err());
    }

    #[test]
    fn params_accept_numbers() {
        let s: GameSelection =
            serde_json::from_str(r#"{"name":"fig4_bilinear","params":{"dim":2}}"#).unwrap();
        assert_eq!(s.params["dim"], "2");
        let s: GameSelection =
            serde_json::from_str(r#"{"name":"example6","params":{"epsilon":0.25}}"#).unwrap();
        assert_eq!(s.params["epsilon"], "0.25");
    }

    #[test]
    fn grids() {
        let log = EtaGrid::Log { start: 0.01, stop: 1.75, count: 50 }.values();
        assert_eq!(log.len(), 50);
        assert_eq!((log[0], log[49]), (0.01, 1.75));
        assert!(log.windows(2).all(|w| w[1] > w[0]));
        let ratio = log[1] / log[0];
        assert!(log.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-12));
        let lin = EtaGrid::Linear { start: 0.01, stop: 0.5, count: 50 }.values();
        assert!((lin[1] - 0.02).abs() < 1e-15);
        assert!(EtaGrid::List(vec![]).validate().is_err());
        assert!(EtaGrid::List(vec![0.1, 0.0]).validate().is_err());
    }

    #[test]
    fn random_starts_are_seeded_and_in_the_ball() {
        let p = InitialPoints::RandomBall { radius: 1.0, count: 5 };
        let a = p.points(4, 7, 0).unwrap();
        assert_eq!(a, p.points(4, 7, 0).unwrap());
        assert_ne!(a, p.points(4, 7, 1).unwrap());
        assert_ne!(a, p.points(4, 8, 0).unwrap());
        assert!(a.iter().all(|w| w.len() == 4 && linalg::norm(w) <= 1.0));
    }

    #[test]
    fn preset_shapes() {
        for p in Preset::ALL {
            let c = p.config();
            c.validate().unwrap();
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        let r = sweep(&Preset::Fig3.config()).unwrap();
        assert_eq!(r.cells.len(), 6);
    }

    #[test]
    fn cells_follow_configured_order() {
        let mut c = Preset::Fig4.config();
        c.etas = EtaGrid::List(vec![0.5, 0.1]);
        c.jobs = 3;
        let r = sweep(&c).unwrap();
        let order: Vec<(AdjusterKind, f64)> = r.cells.iter().map(|c| (c.adjuster, c.eta)).collect();
        assert_eq!(
            order,
            vec![
                (AdjusterKind::SGA, 0.5),
                (AdjusterKind::SGA, 0.1),
                (AdjusterKind::OMD, 0.5),
                (AdjusterKind::OMD, 0.1)
            ]
        );
        assert_eq!(r.cells[2].lambda, None);
        assert_eq!(r.cells[0].lambda, Some(1.0));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = Preset::Fig3.config();
        c.games = vec![GameSelection::new("nope")];
        assert!(sweep(&c).is_err());
        let mut c = Preset::Fig3.config();
        c.w0 = InitialPoints::Points(vec![vec![1.0]]);
        assert!(sweep(&c).is_err());
        let mut c = Preset::Fig3.config();
        c.adjusters.clear();
        assert!(sweep(&c).is_err());
    }

    #[test]
    fn failures_are_capped() {
        let mut c = Preset::Fig3.config();
        c.adjusters = vec![AdjusterSpec::new(AdjusterKind::SimGD)];
        c.etas = EtaGrid::List(vec![0.1]);
        let cell = &sweep(&c).unwrap().cells[0];
        assert!(cell.outcome.is_diverged());
        assert_eq!(cell.trailing_loss, TRAILING_LOSS_CAP);
        assert!(cell.spectral_radius.unwrap() > 1.3);
    }

    #[test]
    fn analysis_examples() {
        let cfg = DifferentiationConfig::default();
        let g7 = diffgame_core::catalog_game("example7", &[]).unwrap();
        let a = analyze_point("example7", &g7, &[0.0, 0.0], 0.1, &cfg).unwrap();
        assert_eq!(a.class.kind, GameKind::Potential);
        let fp = a.fixed_point.unwrap();
        assert_eq!(fp.stability, Stability::Indefinite);
        assert!(fp.is_local_nash);

        let g1 = diffgame_core::catalog_game("example1", &[("payoff", "1")]).unwrap();
        let a = analyze_point("example1", &g1, &[1.0, 1.0], 0.1, &cfg).unwrap();
        assert_eq!(a.class.kind, GameKind::Hamiltonian);
        assert_eq!(a.probe, 0.0);
        assert!(a.fixed_point.is_none());

        let g3 = diffgame_core::catalog_game("fig3_weak_attractor", &[]).unwrap();
        let a = analyze_point("fig3", &g3, &[1.0, 1.0], 0.1, &cfg).unwrap();
        assert_eq!(a.class.kind, GameKind::General);
        assert_eq!(a.probe, 202.0);
        assert_eq!(a.alignment.lambda_sign, 1.0);
    }
}
