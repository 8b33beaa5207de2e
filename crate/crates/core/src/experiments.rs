//! Monte Carlo experiments: eigenvalue histograms of single samples and
//! sweeps of the gap `λ₁ − λ₂` and detection overlap against the predicted
//! outlier.
//!
//! Trial `t` at sweep point `k` always uses stream `(k << 32) | t` of the
//! master seed, so results do not depend on scheduling or worker count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SpecError};
use crate::format::{fmt_opt, fmt_sig, write_atomic, write_json};
use crate::matrix::SymMatrix;
use crate::model::{from_sbm, p_from_w, GsbmSpec, NoiseKind, SbmParams, Shift};
use crate::prediction::{predict_outlier, OutlierPrediction};
use crate::sampler::{sample_gsbm, sample_shifted_sbm, spike_vector, SampleSeed};
use crate::spectra::{detect_from_vector, eigen_symmetric, SpectralReport};

pub const DEFAULT_BINS: usize = 100;
const HIST_MARGIN: f64 = 0.1;

/// What is sampled at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExperimentBase {
    /// Shifted and rescaled Bernoulli adjacency matrices.
    Sbm { params: SbmParams },
    /// `H + λuuᵀ` with synthetic noise.
    Gsbm { spec: GsbmSpec, noise: NoiseKind },
}

/// Quantity varied across the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `w = (p − q)√N`; Bernoulli models only.
    W,
    /// Intra-community probability `p`; Bernoulli models only.
    P,
    /// Spike strength; synthetic noise only.
    Lambda,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::W => "w",
            SweepAxis::P => "p",
            SweepAxis::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: ExperimentBase,
    pub axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub trials_per_point: usize,
    pub master_seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// One concrete model at a sweep point.
#[derive(Debug, Clone, Copy)]
pub struct PointModel {
    pub value: f64,
    pub spec: GsbmSpec,
    source: ExperimentBase,
}

impl PointModel {
    /// Returns `(M, H, u)`.
    pub fn sample(&self, seed: SampleSeed) -> Result<(SymMatrix, SymMatrix, Vec<f64>)> {
        match self.source {
            ExperimentBase::Sbm { params } => {
                let m = sample_shifted_sbm(&params, seed)?;
                let u = spike_vector(&self.spec)?;
                let h = m.add_rank_one(-self.spec.lambda, &u)?;
                Ok((m, h, u))
            }
            ExperimentBase::Gsbm { spec, noise } => {
                let s = sample_gsbm(&spec, noise, seed)?;
                Ok((s.m, s.h, s.u))
            }
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidArgument("trials_per_point must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        if let Some(v) = self.sweep_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sweep value {v}")));
        }
        match (self.base, self.axis) {
            (ExperimentBase::Sbm { .. }, SweepAxis::Lambda) => Err(Error::InvalidArgument(
                "lambda sweeps need synthetic noise; sweep w or p for Bernoulli models".into(),
            )),
            (ExperimentBase::Gsbm { .. }, SweepAxis::W | SweepAxis::P) => Err(Error::InvalidArgument(
                "w and p sweeps need a Bernoulli model; sweep lambda for synthetic noise".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The unmodified base configuration.
    pub fn base_point(&self) -> Result<PointModel> {
        let (spec, value) = match self.base {
            ExperimentBase::Sbm { params } => {
                let spec = from_sbm(&params)?.spec;
                let value = match self.axis {
                    SweepAxis::P => params.p1,
                    _ => crate::model::w_from_p(params.q, params.p1, params.n),
                };
                (spec, value)
            }
            ExperimentBase::Gsbm { spec, .. } => (crate::model::validate_spec(spec)?, spec.lambda),
        };
        Ok(PointModel {
            value,
            spec,
            source: self.base,
        })
    }

    /// The model at sweep value `value`.
    pub fn point(&self, value: f64) -> Result<PointModel> {
        let source = match (self.base, self.axis) {
            (ExperimentBase::Sbm { params }, axis @ (SweepAxis::W | SweepAxis::P)) => {
                let p = if axis == SweepAxis::W {
                    p_from_w(params.q, value, params.n)
                } else {
                    value
                };
                if !(0.0..=1.0).contains(&p) {
                    return Err(SpecError::Probability { name: "p", value: p }.into());
                }
                let params = match params.shift {
                    Shift::HiddenCommunity => SbmParams { p1: p, ..params },
                    Shift::Balanced => SbmParams { p1: p, p2: p, ..params },
                };
                ExperimentBase::Sbm { params }
            }
            (ExperimentBase::Gsbm { spec, noise }, SweepAxis::Lambda) => ExperimentBase::Gsbm {
                spec: spec.with_lambda(value),
                noise,
            },
            _ => return Err(Error::InvalidArgument("sweep axis does not match the model".into())),
        };
        let spec = match source {
            ExperimentBase::Sbm { params } => from_sbm(&params)?.spec,
            ExperimentBase::Gsbm { spec, .. } => crate::model::validate_spec(spec)?,
        };
        Ok(PointModel { value, spec, source })
    }

    fn in_pool<T: Send>(&self, work: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(work()),
            Some(jobs) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(work))
            }
        }
    }
}

/// Stream of trial `trial` at sweep point `point`.
pub fn trial_seed(master_seed: u64, point: usize, trial: usize) -> SampleSeed {
    SampleSeed::new(master_seed, ((point as u64) << 32) | trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramData {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_total: u64,
}

impl HistogramData {
    /// `bins` equal-width bins over `[min − 0.1, max + 0.1]`.
    pub fn from_values(values: &[f64], bins: usize) -> Result<HistogramData> {
        if values.is_empty() || bins == 0 {
            return Err(Error::InvalidArgument("histogram needs values and at least one bin".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - HIST_MARGIN;
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + HIST_MARGIN;
        let width = (hi - lo) / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins)
            .map(|k| if k == bins { hi } else { lo + k as f64 * width })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let k = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(HistogramData {
            bin_edges,
            counts,
            n_total: values.len() as u64,
        })
    }

    pub fn write_csv(&self, mut w: impl std::io::Write, precision: usize) -> std::io::Result<()> {
        writeln!(w, "bin_left,bin_right,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                fmt_sig(self.bin_edges[k], precision),
                fmt_sig(self.bin_edges[k + 1], precision),
                c
            )?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramRun {
    pub config: ExperimentConfig,
    pub value: f64,
    pub spec: GsbmSpec,
    pub data: HistogramData,
    pub report: SpectralReport,
}

/// Samples one matrix at the single configured point (or the base when no
/// sweep value is given) and bins its full spectrum.
pub fn run_histogram(config: &ExperimentConfig) -> Result<HistogramRun> {
    config.validate()?;
    let point = match config.sweep_values.as_slice() {
        [] => config.base_point()?,
        [v] => config.point(*v)?,
        _ => return Err(Error::InvalidArgument("histogram takes at most one sweep value".into())),
    };
    let (m, h, _) = point.sample(trial_seed(config.master_seed, 0, 0))?;
    let (em, eh) = config.in_pool(|| -> Result<_> { Ok((eigen_symmetric(&m, 1)?, eigen_symmetric(&h, 0)?)) })??;
    let predicted = predict_outlier(&point.spec, point.spec.lambda)?;
    let data = HistogramData::from_values(&em.values, config.bins)?;
    Ok(HistogramRun {
        config: config.clone(),
        value: point.value,
        spec: point.spec,
        data,
        report: SpectralReport::new(&em, Some(&eh), Some(predicted)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub point: usize,
    pub value: f64,
    pub trial: usize,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub gap: Option<f64>,
    pub overlap: Option<f64>,
    pub predicted_z: Option<f64>,
    pub predicted_gap: Option<f64>,
    /// Set when the trial failed; its measurements are then absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub w: f64,
    pub trials_ok: usize,
    pub mean_gap: Option<f64>,
    pub sd_gap: Option<f64>,
    pub mean_overlap: Option<f64>,
    pub sd_overlap: Option<f64>,
    pub mean_lambda1: Option<f64>,
    pub predicted_z: Option<f64>,
    pub predicted_gap: Option<f64>,
    pub l_plus: Option<f64>,
    pub lambda_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub config: ExperimentConfig,
    pub rows: Vec<TransitionRow>,
    pub points: Vec<PointSummary>,
    /// Prediction for the base configuration.
    pub base_prediction: Option<OutlierPrediction>,
}

/// Mean and sample standard deviation; the latter needs two values.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn run_trial(point: &PointModel, index: usize, trial: usize, seed: u64, predicted: Option<&OutlierPrediction>) -> TransitionRow {
    let mut row = TransitionRow {
        point: index,
        value: point.value,
        trial,
        lambda1: None,
        lambda2: None,
        gap: None,
        overlap: None,
        predicted_z: predicted.and_then(|p| p.z),
        predicted_gap: predicted.and_then(|p| p.gap),
        error: None,
    };
    let measured = (|| -> Result<(f64, f64, f64)> {
        let (m, _, _) = point.sample(trial_seed(seed, index, trial))?;
        let eig = eigen_symmetric(&m, 1)?;
        let overlap = detect_from_vector(eig.vector(0), &point.spec)?.overlap;
        Ok((eig.values[0], eig.values.get(1).copied().unwrap_or(f64::NAN), overlap))
    })();
    match measured {
        Ok((l1, l2, ov)) => {
            row.lambda1 = Some(l1);
            row.lambda2 = Some(l2);
            row.gap = Some(l1 - l2);
            row.overlap = Some(ov);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn summarize(rows: &[TransitionRow], point: usize, value: f64, predicted: Option<&OutlierPrediction>) -> PointSummary {
    let ok: Vec<&TransitionRow> = rows.iter().filter(|r| r.point == point && r.error.is_none()).collect();
    let gaps: Vec<f64> = ok.iter().filter_map(|r| r.gap).collect();
    let overlaps: Vec<f64> = ok.iter().filter_map(|r| r.overlap).collect();
    let l1: Vec<f64> = ok.iter().filter_map(|r| r.lambda1).collect();
    let (mean_gap, sd_gap) = mean_sd(&gaps);
    let (mean_overlap, sd_overlap) = mean_sd(&overlaps);
    PointSummary {
        w: value,
        trials_ok: ok.len(),
        mean_gap,
        sd_gap,
        mean_overlap,
        sd_overlap,
        mean_lambda1: mean_sd(&l1).0,
        predicted_z: predicted.and_then(|p| p.z),
        predicted_gap: predicted.and_then(|p| p.gap),
        l_plus: predicted.map(|p| p.l_plus),
        lambda_c: predicted.map(|p| p.lambda_c),
    }
}

/// Runs every `(sweep value, trial)` pair. A failing trial is recorded in
/// its row and excluded from the aggregates; a sweep value that does not
/// define a valid model is an error.
pub fn run_transition_sweep(config: &ExperimentConfig) -> Result<TransitionTable> {
    config.validate()?;
    if config.sweep_values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let points = config
        .sweep_values
        .iter()
        .map(|&v| config.point(v))
        .collect::<Result<Vec<_>>>()?;
    let predictions: Vec<Option<OutlierPrediction>> = points
        .iter()
        .map(|p| match predict_outlier(&p.spec, p.spec.lambda) {
            Ok(pred) => Some(pred),
            Err(e) => {
                log::warn!("no prediction at {} = {}: {e}", config.axis.name(), p.value);
                None
            }
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|k| (0..config.trials_per_point).map(move |t| (k, t)))
        .collect();
    let mut rows: Vec<TransitionRow> = config.in_pool(|| {
        pairs
            .par_iter()
            .map(|&(k, t)| run_trial(&points[k], k, t, config.master_seed, predictions[k].as_ref()))
            .collect()
    })?;
    rows.sort_by_key(|r| (r.point, r.trial));
    let summaries = points
        .iter()
        .enumerate()
        .map(|(k, p)| summarize(&rows, k, p.value, predictions[k].as_ref()))
        .collect();
    let base_prediction = config
        .base_point()
        .and_then(|b| predict_outlier(&b.spec, b.spec.lambda))
        .ok();
    Ok(TransitionTable {
        config: config.clone(),
        rows,
        points: summaries,
        base_prediction,
    })
}

impl TransitionTable {
    /// Header `<axis>,trial,lambda1,lambda2,gap,overlap,predicted_z`; absent
    /// values are empty fields.
    pub fn write_csv(&self, mut w: impl std::io::Write, precision: usize) -> std::io::Result<()> {
        writeln!(
            w,
            "{},trial,lambda1,lambda2,gap,overlap,predicted_z",
            self.config.axis.name()
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_sig(r.value, precision),
                r.trial,
                fmt_opt(r.lambda1, precision),
                fmt_opt(r.lambda2, precision),
                fmt_opt(r.gap, precision),
                fmt_opt(r.overlap, precision),
                fmt_opt(r.predicted_z, precision),
            )?;
        }
        w.flush()
    }

    /// Aggregates recomputed from the rows.
    pub fn recompute_summaries(&self) -> Vec<PointSummary> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let mut s = summarize(&self.rows, k, p.w, None);
                s.predicted_z = p.predicted_z;
                s.predicted_gap = p.predicted_gap;
                s.l_plus = p.l_plus;
                s.lambda_c = p.lambda_c;
                s
            })
            .collect()
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Experiment output ready to be written.
pub enum Report<'a> {
    Histogram(&'a HistogramRun),
    Sweep(&'a TransitionTable),
}

fn summary_json(report: &Report<'_>) -> serde_json::Value {
    use serde_json::json;
    match report {
        Report::Histogram(run) => {
            let pred = run.report.predicted;
            json!({
                "config_echo": run.config,
                "lambda_c": pred.map(|p| p.lambda_c),
                "l_plus": pred.map(|p| p.l_plus),
                "lambda": run.spec.lambda,
                "predicted_z": pred.and_then(|p| p.z),
                "lambda1": run.report.lambda1(),
                "lambda2": run.report.lambda2(),
                "gap": run.report.gap,
                "per_point": [{
                    "w": run.value,
                    "mean_gap": run.report.gap,
                    "sd_gap": null,
                    "mean_overlap": null,
                    "predicted_z": pred.and_then(|p| p.z),
                }],
            })
        }
        Report::Sweep(table) => {
            let pred = table.base_prediction;
            let per_point: Vec<_> = table
                .points
                .iter()
                .map(|p| {
                    json!({
                        "w": p.w,
                        "mean_gap": p.mean_gap,
                        "sd_gap": p.sd_gap,
                        "mean_overlap": p.mean_overlap,
                        "predicted_z": p.predicted_z,
                        "predicted_gap": p.predicted_gap,
                        "trials_ok": p.trials_ok,
                        "l_plus": p.l_plus,
                        "lambda_c": p.lambda_c,
                    })
                })
                .collect();
            json!({
                "config_echo": table.config,
                "lambda_c": pred.map(|p| p.lambda_c),
                "l_plus": pred.map(|p| p.l_plus),
                "per_point": per_point,
            })
        }
    }
}

/// Writes the data file (`hist.csv`/`sweep.csv`, or `.json` with the full
/// data) and `summary.json` into `dir`, each atomically. Returns the paths.
pub fn emit_report(report: &Report<'_>, dir: &Path, format: ReportFormat, precision: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = match report {
        Report::Histogram(_) => "hist",
        Report::Sweep(_) => "sweep",
    };
    let data_path = dir.join(format!(
        "{stem}.{}",
        match format {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    ));
    write_atomic(&data_path, |w| match (report, format) {
        (Report::Histogram(run), ReportFormat::Csv) => run.data.write_csv(w, precision),
        (Report::Sweep(table), ReportFormat::Csv) => table.write_csv(w, precision),
        (Report::Histogram(run), ReportFormat::Json) => write_json(w, run, precision),
        (Report::Sweep(table), ReportFormat::Json) => write_json(w, table, precision),
    })?;
    let summary_path = dir.join("summary.json");
    let summary = summary_json(report);
    write_atomic(&summary_path, |w| write_json(w, &summary, precision))?;
    Ok(vec![data_path, summary_path])
}
