//! Held-out evaluation of a fitted model against the baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{baseline_linear, baseline_nn};
use super::dataset::{Dataset, Split};
use super::metrics::{metric_env, metric_mag};
use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::models::SceneParams;
use crate::render::{RenderConfig, Renderer};

/// Published tables multiply response errors by this factor; reported
/// values here are raw.
pub const TABLE_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub mag: f64,
    pub env: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalRow {
    pub index: usize,
    pub position: [f64; 3],
    pub model: MethodScores,
    pub nn: MethodScores,
    pub linear: MethodScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalSummary {
    pub test_points: usize,
    pub model: MethodScores,
    pub nn: MethodScores,
    pub linear: MethodScores,
    /// Values are raw; multiply by `table_scale` to compare with tables
    /// that use the ×10 convention.
    pub raw_values: bool,
    pub table_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: EvalSummary,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,x,y,z,model_mag,model_env,nn_mag,nn_env,linear_mag,linear_env\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.index,
                r.position[0],
                r.position[1],
                r.position[2],
                r.model.mag,
                r.model.env,
                r.nn.mag,
                r.nn.env,
                r.linear.mag,
                r.linear.env
            ));
        }
        s
    }
}

fn fit_length(mut x: Vec<f64>, n: usize) -> Vec<f64> {
    x.resize(n, 0.0);
    x
}

fn scores(pred: &[f64], gt: &[f64]) -> Result<MethodScores> {
    Ok(MethodScores {
        mag: metric_mag(pred, gt)?,
        env: metric_env(pred, gt)?,
    })
}

fn mean(rows: &[EvalRow], f: impl Fn(&EvalRow) -> MethodScores) -> MethodScores {
    let n = rows.len().max(1) as f64;
    MethodScores {
        mag: rows.iter().map(|r| f(r).mag).sum::<f64>() / n,
        env: rows.iter().map(|r| f(r).env).sum::<f64>() / n,
    }
}

/// Score the model and both baselines on every test entry, all truncated or
/// padded to the render length.
pub fn evaluate(ds: &Dataset, params: &SceneParams, cfg: &RenderConfig) -> Result<EvalReport> {
    let n = cfg.samples();
    let train: Vec<(usize, Point)> = ds.entries(Split::Train).map(|(i, e)| (i, e.position())).collect();
    let test: Vec<(usize, Point)> = ds.entries(Split::Test).map(|(i, e)| (i, e.position())).collect();
    if train.is_empty() || test.is_empty() {
        return Err(invalid("evaluation needs both train and test entries"));
    }
    let load = |i: usize| -> Result<Vec<f64>> { Ok(fit_length(ds.load_rir(i)?.mono_samples()?.to_vec(), n)) };
    let train_rirs = train.iter().map(|(i, _)| load(*i)).collect::<Result<Vec<_>>>()?;
    let train_pos: Vec<Point> = train.iter().map(|t| t.1).collect();
    let renderer = Renderer::new(cfg, params.bands())?;
    let prep = renderer.prepare(params)?;
    let source = params.source_location;
    let rows = test
        .par_iter()
        .map(|&(i, pos)| -> Result<EvalRow> {
            let gt = load(i)?;
            let paths = cfg.trace(&ds.room, &source, &pos)?;
            let early = renderer.early(&prep, params, &paths.paths, None)?;
            let model = renderer.assemble(&prep, params, &early);
            Ok(EvalRow {
                index: i,
                position: pos.into(),
                model: scores(&model, &gt)?,
                nn: scores(&baseline_nn(&train_pos, &train_rirs, &pos)?, &gt)?,
                linear: scores(&baseline_linear(&train_pos, &train_rirs, &pos)?, &gt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = EvalSummary {
        test_points: rows.len(),
        model: mean(&rows, |r| r.model),
        nn: mean(&rows, |r| r.nn),
        linear: mean(&rows, |r| r.linear),
        raw_values: true,
        table_scale: TABLE_SCALE,
    };
    Ok(EvalReport { rows, summary })
}
