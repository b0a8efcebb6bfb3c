//! Named quadratic games with their parameters.
//!
//! | id | losses |
//! |----|--------|
//! | `example1` | `ℓ1 = xᵀAy`, `ℓ2 = −xᵀAy` |
//! | `example2` | `ℓ1 = xᵀPy`, `ℓ2 = xᵀQy` |
//! | `example3` | `ℓ1 = x(y − b)`, `ℓ2 = −(x − a)y` |
//! | `example4` | `ℓ1 = x² + y²`, `ℓ2 = −(x² + y²)` |
//! | `example5` | `ℓ1 = ℓ2 = −κ/2 (x² + y²)` |
//! | `example6` | `ℓ1 = −ε/2 x² − xy`, `ℓ2 = −ε/2 y² + xy` |
//! | `example7` | `ℓ1 = x²/2 + 2xy`, `ℓ2 = y²/2 + 2xy` |
//! | `fig3_weak_attractor` | `ℓ1 = ½x² + 10xy`, `ℓ2 = ½y² − 10xy` |
//! | `fig4_bilinear` | `ℓ1 = w1ᵀw2`, `ℓ2 = −w1ᵀw2`, `w_i ∈ R^dim` |
//! | `fig7_four_player` | four scalar players, `ℓ_i = ε/2 w_i² − Σ_{j<i} w_j w_i + Σ_{j>i} w_i w_j` |
//!
//! Constant terms are dropped; they do not change the dynamics.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{PlayerPartition, QuadraticGame};
use crate::linalg::Matrix;

/// One documented parameter of a catalog game.
#[derive(Debug, Clone, Copy)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: &'static str,
    pub description: &'static str,
}

/// A catalog listing entry.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamInfo],
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "example1",
        summary: "zero-sum bilinear game l1 = x'Ay, l2 = -x'Ay (Hamiltonian)",
        params: &[ParamInfo {
            name: "payoff",
            default: "1,0;0,1",
            description: "payoff matrix A, rows separated by ';'",
        }],
    },
    CatalogEntry {
        name: "example2",
        summary: "bimatrix game l1 = x'Py, l2 = x'Qy",
        params: &[
            ParamInfo { name: "p", default: "1", description: "payoff matrix P" },
            ParamInfo { name: "q", default: "1", description: "payoff matrix Q (same shape as P)" },
        ],
    },
    CatalogEntry {
        name: "example3",
        summary: "Hamiltonian game that is not zero-sum: l1 = x(y-b), l2 = -(x-a)y",
        params: &[
            ParamInfo { name: "a", default: "0", description: "shift of x in l2" },
            ParamInfo { name: "b", default: "0", description: "shift of y in l1" },
        ],
    },
    CatalogEntry {
        name: "example4",
        summary: "zero-sum potential game l1 = x^2+y^2, l2 = -(x^2+y^2)",
        params: &[],
    },
    CatalogEntry {
        name: "example5",
        summary: "potential game l1 = l2 = -kappa/2 (x^2+y^2); consensus can converge to its maximum",
        params: &[ParamInfo { name: "kappa", default: "10", description: "curvature, > 0" }],
    },
    CatalogEntry {
        name: "example6",
        summary: "weak repellor plus strong rotation: l1 = -eps/2 x^2 - xy, l2 = -eps/2 y^2 + xy",
        params: &[ParamInfo { name: "epsilon", default: "0.1", description: "repellor strength, >= 0" }],
    },
    CatalogEntry {
        name: "example7",
        summary: "local Nash equilibrium that is not stable: l1 = x^2/2 + 2xy, l2 = y^2/2 + 2xy",
        params: &[],
    },
    CatalogEntry {
        name: "fig3_weak_attractor",
        summary: "weak attractor with strong rotation: l1 = x^2/2 + 10xy, l2 = y^2/2 - 10xy",
        params: &[],
    },
    CatalogEntry {
        name: "fig4_bilinear",
        summary: "zero-sum bilinear game l1 = w1'w2, l2 = -w1'w2",
        params: &[ParamInfo { name: "dim", default: "1", description: "parameters per player, >= 1" }],
    },
    CatalogEntry {
        name: "fig7_four_player",
        summary: "four scalar players with antisymmetric coupling and S = eps*I",
        params: &[ParamInfo { name: "epsilon", default: "0.01", description: "diagonal weight, >= 0" }],
    },
];

/// A catalog game with resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogGame {
    Example1 { payoff: Matrix },
    Example2 { p: Matrix, q: Matrix },
    Example3 { a: f64, b: f64 },
    Example4,
    Example5 { kappa: f64 },
    Example6 { epsilon: f64 },
    Example7,
    Fig3WeakAttractor,
    Fig4Bilinear { dim: usize },
    Fig7FourPlayer { epsilon: f64 },
}

/// Looks up `name` in the catalog and builds the game.
///
/// `params` are `(key, value)` pairs; unspecified keys take their defaults and
/// unknown keys are rejected.
pub fn catalog_game(name: &str, params: &[(&str, &str)]) -> Result<QuadraticGame> {
    CatalogGame::from_name(name, params)?.build()
}

impl CatalogGame {
    pub fn from_name(name: &str, params: &[(&str, &str)]) -> Result<Self> {
        let entry = CATALOG
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownGame(name.to_string()))?;
        for (k, _) in params {
            if !entry.params.iter().any(|p| p.name == *k) {
                return Err(Error::InvalidParameter {
                    name: k.to_string(),
                    reason: format!("`{name}` has no such parameter"),
                });
            }
        }
        let get = |key: &str| -> &str {
            params
                .iter()
                .rev()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .or_else(|| entry.params.iter().find(|p| p.name == key).map(|p| p.default))
                .unwrap_or("")
        };
        let game = match name {
            "example1" => Self::Example1 { payoff: parse_matrix("payoff", get("payoff"))? },
            "example2" => {
                let p = parse_matrix("p", get("p"))?;
                let q = parse_matrix("q", get("q"))?;
                if (p.rows(), p.cols()) != (q.rows(), q.cols()) {
                    return Err(Error::InvalidParameter {
                        name: "q".into(),
                        reason: "P and Q must have the same shape".into(),
                    });
                }
                Self::Example2 { p, q }
            }
            "example3" => Self::Example3 { a: parse_real("a", get("a"))?, b: parse_real("b", get("b"))? },
            "example4" => Self::Example4,
            "example5" => {
                let kappa = parse_real("kappa", get("kappa"))?;
                if kappa <= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "kappa".into(),
                        reason: format!("must be positive, got {kappa}"),
                    });
                }
                Self::Example5 { kappa }
            }
            "example6" => Self::Example6 { epsilon: parse_nonneg("epsilon", get("epsilon"))? },
            "example7" => Self::Example7,
            "fig3_weak_attractor" => Self::Fig3WeakAttractor,
            "fig4_bilinear" => {
                let raw = get("dim");
                let dim: usize = raw.trim().parse().map_err(|_| Error::InvalidParameter {
                    name: "dim".into(),
                    reason: format!("expected a positive integer, got `{raw}`"),
                })?;
                if dim == 0 {
                    return Err(Error::InvalidParameter {
                        name: "dim".into(),
                        reason: "must be at least 1".into(),
                    });
                }
                Self::Fig4Bilinear { dim }
            }
            "fig7_four_player" => Self::Fig7FourPlayer { epsilon: parse_nonneg("epsilon", get("epsilon"))? },
            _ => unreachable!("catalog entry without constructor"),
        };
        Ok(game)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Example1 { .. } => "example1",
            Self::Example2 { .. } => "example2",
            Self::Example3 { .. } => "example3",
            Self::Example4 => "example4",
            Self::Example5 { .. } => "example5",
            Self::Example6 { .. } => "example6",
            Self::Example7 => "example7",
            Self::Fig3WeakAttractor => "fig3_weak_attractor",
            Self::Fig4Bilinear { .. } => "fig4_bilinear",
            Self::Fig7FourPlayer { .. } => "fig7_four_player",
        }
    }

    /// True for games whose losses sum to zero everywhere.
    pub fn is_zero_sum(&self) -> bool {
        matches!(
            self,
            Self::Example1 { .. } | Self::Example4 | Self::Fig4Bilinear { .. }
        ) || matches!(self, Self::Example2 { p, q } if p.add_scaled(q, 1.0).max_abs() == 0.0)
    }

    pub fn build(&self) -> Result<QuadraticGame> {
        match self {
            Self::Example1 { payoff } => bilinear(payoff, &payoff.scaled(-1.0)),
            Self::Example2 { p, q } => bilinear(p, q),
            Self::Example3 { a, b } => {
                let part = PlayerPartition::scalar_players(2)?;
                let cross = sym2(0.0, 1.0, 0.0);
                QuadraticGame::new(
                    part,
                    vec![cross.clone(), cross.scaled(-1.0)],
                    vec![vec![-b, 0.0], vec![0.0, *a]],
                )
            }
            Self::Example4 => scalar_pair(sym2(2.0, 0.0, 2.0), sym2(-2.0, 0.0, -2.0)),
            Self::Example5 { kappa } => {
                let b = sym2(-kappa, 0.0, -kappa);
                scalar_pair(b.clone(), b)
            }
            Self::Example6 { epsilon } => {
                scalar_pair(sym2(-epsilon, -1.0, 0.0), sym2(0.0, 1.0, -epsilon))
            }
            Self::Example7 => scalar_pair(sym2(1.0, 2.0, 0.0), sym2(0.0, 2.0, 1.0)),
            Self::Fig3WeakAttractor => scalar_pair(sym2(1.0, 10.0, 0.0), sym2(0.0, -10.0, 1.0)),
            Self::Fig4Bilinear { dim } => {
                let id = Matrix::identity(*dim);
                bilinear(&id, &id.scaled(-1.0))
            }
            Self::Fig7FourPlayer { epsilon } => {
                let n = 4;
                let coefficients = (0..n)
                    .map(|i| {
                        let mut b = Matrix::zeros(n, n);
                        b[(i, i)] = *epsilon;
                        for j in 0..n {
                            if j != i {
                                let s = if j < i { -1.0 } else { 1.0 };
                                b[(i, j)] = s;
                                b[(j, i)] = s;
                            }
                        }
                        b
                    })
                    .collect();
                QuadraticGame::homogeneous(PlayerPartition::scalar_players(n)?, coefficients)
            }
        }
    }
}

/// `[[a, b], [b, c]]`
fn sym2(a: f64, b: f64, c: f64) -> Matrix {
    Matrix::from_rows(&[[a, b], [b, c]]).expect("2x2")
}

fn scalar_pair(b1: Matrix, b2: Matrix) -> Result<QuadraticGame> {
    QuadraticGame::homogeneous(PlayerPartition::scalar_players(2)?, vec![b1, b2])
}

/// `ℓ1 = xᵀPy`, `ℓ2 = xᵀQy` with `x ∈ R^m`, `y ∈ R^k`.
fn bilinear(p: &Matrix, q: &Matrix) -> Result<QuadraticGame> {
    let (m, k) = (p.rows(), p.cols());
    let part = PlayerPartition::new(vec![m, k])?;
    let embed = |a: &Matrix| {
        let mut b = Matrix::zeros(m + k, m + k);
        for i in 0..m {
            for j in 0..k {
                b[(i, m + j)] = a[(i, j)];
                b[(m + j, i)] = a[(i, j)];
            }
        }
        b
    };
    QuadraticGame::homogeneous(part, vec![embed(p), embed(q)])
}

fn parse_real(name: &str, raw: &str) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("expected a finite number, got `{raw}`"),
        }),
    }
}

fn parse_nonneg(name: &str, raw: &str) -> Result<f64> {
    let v = parse_real(name, raw)?;
    if v < 0.0 {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("must be non-negative, got {v}"),
        });
    }
    Ok(v)
}

/// Parses `"1,2;3,4"` into a row-major matrix.
pub fn parse_matrix(name: &str, raw: &str) -> Result<Matrix> {
    let bad = |reason: String| Error::InvalidParameter { name: name.to_string(), reason };
    let rows: Vec<Vec<f64>> = raw
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| parse_real(name, x))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(bad(String::from("empty matrix")));
    }
    Matrix::from_rows(&rows).map_err(|_| bad(format!("ragged matrix literal `{raw}`")))
}
