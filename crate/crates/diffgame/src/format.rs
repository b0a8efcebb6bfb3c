//! CSV and JSON encodings of sweep results and trajectories.

use std::io::Write;

use diffgame_core::Trajectory;
use serde::Serialize;

use crate::error::Result;
use crate::experiments::{SweepCell, SweepResult};

/// Bumped whenever a JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_COLUMNS: [&str; 9] = [
    "game",
    "adjuster",
    "lambda",
    "eta",
    "seed",
    "outcome",
    "iters",
    "trailing_loss",
    "spectral_radius",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_record(c: &SweepCell) -> [String; 9] {
    [
        c.game.clone(),
        c.adjuster.to_string(),
        opt(c.lambda),
        c.eta.to_string(),
        c.seed.to_string(),
        c.outcome.label().to_owned(),
        c.iters.to_string(),
        c.trailing_loss.to_string(),
        opt(c.spectral_radius),
    ]
}

/// The sweep columns, one row per cell. An empty sweep gives just the header.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for c in &result.cells {
        w.write_record(csv_record(c))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonCell<'a> {
    game: &'a str,
    adjuster: String,
    lambda: Option<f64>,
    eta: f64,
    seed: u64,
    outcome: &'static str,
    iters: usize,
    trailing_loss: f64,
    spectral_radius: Option<f64>,
    w0_index: usize,
    w0: &'a [f64],
}

#[derive(Serialize)]
struct JsonSweep<'a> {
    schema_version: u32,
    columns: [&'static str; 9],
    cells: Vec<JsonCell<'a>>,
}

/// The CSV columns as named fields, plus each cell's start.
pub fn write_sweep_json<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let doc = JsonSweep {
        schema_version: SCHEMA_VERSION,
        columns: SWEEP_COLUMNS,
        cells: result
            .cells
            .iter()
            .map(|c| JsonCell {
                game: &c.game,
                adjuster: c.adjuster.to_string(),
                lambda: c.lambda,
                eta: c.eta,
                seed: c.seed,
                outcome: c.outcome.label(),
                iters: c.iters,
                trailing_loss: c.trailing_loss,
                spectral_radius: c.spectral_radius,
                w0_index: c.w0_index,
                w0: &c.w0,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_sweep<W: Write>(result: &SweepResult, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_sweep_csv(result, out),
        Format::Json => write_sweep_json(result, out),
    }
}

/// Any serializable value as pretty JSON tagged with the schema version.
pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Tagged<'a, T> {
        schema_version: u32,
        #[serde(flatten)]
        value: &'a T,
    }
    serde_json::to_writer_pretty(&mut out, &Tagged { schema_version: SCHEMA_VERSION, value })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// One row per recorded iterate: `step, w_0.., loss_0.., xi_norm, probe,
/// lambda_sign`. Diagnostics are blank on the final row, which has no step
/// after it.
pub fn write_trajectory_csv<W: Write>(t: &Trajectory, out: W) -> Result<()> {
    let dim = t.iterates.first().map_or(0, Vec::len);
    let players = t.diagnostics.first().map_or(0, |d| d.losses.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_owned()];
    header.extend((0..dim).map(|i| format!("w_{i}")));
    header.extend((0..players).map(|i| format!("loss_{i}")));
    header.extend(["xi_norm", "probe", "lambda_sign"].map(String::from));
    w.write_record(&header)?;
    for (step, point) in t.iterate_steps.iter().zip(&t.iterates) {
        let mut row = vec![step.to_string()];
        row.extend(point.iter().map(f64::to_string));
        match t.diagnostics.get(*step) {
            Some(d) => {
                row.extend(d.losses.iter().map(f64::to_string));
                row.extend([d.xi_norm, d.probe, d.lambda_sign].map(|x| x.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), players + 3)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use diffgame_core::{AdjusterKind, Outcome};

    fn cell(outcome: Outcome) -> SweepCell {
        SweepCell {
            game: "fig4_bilinear".into(),
            adjuster: AdjusterKind::SGA,
            lambda: Some(1.0),
            eta: 0.5,
            seed: 0,
            w0_index: 0,
            w0: vec![0.5, 0.5],
            outcome,
            iters: 12,
            trailing_loss: 0.001,
            spectral_radius: None,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut buf = Vec::new();
        write_sweep_csv(&SweepResult { cells: vec![] }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SWEEP_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn one_converged_row() {
        let mut buf = Vec::new();
        write_sweep_csv(&SweepResult { cells: vec![cell(Outcome::Converged(12))] }, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], "fig4_bilinear,sga,1,0.5,0,converged,12,0.001,");
    }

    #[test]
    fn json_carries_schema_version() {
        let mut buf = Vec::new();
        write_sweep_json(&SweepResult { cells: vec![cell(Outcome::MaxIters)] }, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["cells"][0]["outcome"], "max_iters");
        assert_eq!(v["cells"][0]["spectral_radius"], serde_json::Value::Null);
    }
}
