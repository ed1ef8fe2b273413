//! Experiment harness: dataset × model × trial grids, trial aggregation and
//! report files.

mod config;
mod metrics;
mod report;

pub use config::{ExperimentConfig, ExperimentId, TrainPatch, EXP1_N_GRID, EXP2_SIGMA_GRID};
pub use metrics::{mae, median, quantile_sorted, quantiles, Quantiles};
pub use report::{
    aggregate, read_tidy, table_from_rows, write_outputs, write_quantiles, write_series, write_table, write_tidy,
    FileHeader, MaeTable, QuantileSummary, SeriesPoint, TidyRow,
};

use std::fmt;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::dataset::{generate_d2, generate_d3, sample_d1, Dataset, DatasetId, Observation, Role};
use crate::error::{Error, Result};
use crate::model::{build, Model, ModelKind, ModelSetup};
use crate::nn::NetSpec;
use crate::process::Inputs;
use crate::rng::{derive_seed, stream_rng};
use crate::train::train;

const DATA_TAG: u64 = 1;
const SUBSET_TAG: u64 = 2;
const INIT_TAG: u64 = 3;
const SHUFFLE_TAG: u64 = 4;

/// The grid coordinate a trial belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    /// Training-set size.
    N(usize),
    /// Noise level of the training targets; 0 is the noise-free baseline.
    Sigma(f64),
    Dataset(DatasetId),
}

impl Control {
    pub fn name(&self) -> &'static str {
        match self {
            Control::N(_) => "n",
            Control::Sigma(_) => "sigma",
            Control::Dataset(_) => "dataset",
        }
    }

    pub fn sort_key(&self) -> f64 {
        match *self {
            Control::N(n) => n as f64,
            Control::Sigma(s) => s,
            Control::Dataset(d) => d as u8 as f64,
        }
    }

    pub fn parse(name: &str, value: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad control value `{value}` for `{name}`"));
        match name {
            "n" => value.parse().map(Control::N).map_err(|_| bad()),
            "sigma" => value.parse().map(Control::Sigma).map_err(|_| bad()),
            "dataset" => value.parse().map(Control::Dataset),
            _ => Err(Error::Config(format!("unknown control `{name}`"))),
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Control::N(n) => write!(f, "{n}"),
            Control::Sigma(s) => write!(f, "{s}"),
            Control::Dataset(d) => write!(f, "{d}"),
        }
    }
}

/// One trained model in one grid cell. A diverged run has no errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub experiment: ExperimentId,
    pub model: ModelKind,
    pub trial: usize,
    pub control: Control,
    /// Against the observed targets the run was selected on.
    pub mae_validation: Option<f64>,
    /// Against noise-free targets.
    pub mae_test: Option<f64>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// `|ŷ − q|` for every time step of a temporal dataset.
    pub abs_errors: Option<Vec<f64>>,
}

impl TrialResult {
    pub fn diverged(&self) -> bool {
        self.mae_test.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Sorted by (model, control, trial).
    pub trials: Vec<TrialResult>,
    /// Split role of each time step, for exp3 and exp4.
    pub timeline: Option<Vec<Role>>,
}

impl ExperimentResult {
    pub fn header(&self) -> FileHeader {
        FileHeader::for_config(&self.config)
    }

    /// One row per (model, control, trial, metric). Exp2 adds the ratio of
    /// each test error to the same trial's noise-free test error.
    pub fn tidy_rows(&self) -> Vec<TidyRow> {
        let mut rows = Vec::new();
        for r in &self.trials {
            let mut push = |metric: &str, value: f64| {
                rows.push(TidyRow {
                    experiment: r.experiment,
                    model: r.model,
                    control: r.control,
                    trial: r.trial,
                    metric: metric.into(),
                    value,
                })
            };
            push("diverged", if r.diverged() { 1.0 } else { 0.0 });
            push("epochs_run", r.epochs_run as f64);
            if let (Some(v), Some(t)) = (r.mae_validation, r.mae_test) {
                push("best_epoch", r.best_epoch as f64);
                push("mae_validation", v);
                push("mae_test", t);
                if let Control::Sigma(_) = r.control {
                    let base = self
                        .trials
                        .iter()
                        .find(|b| b.model == r.model && b.trial == r.trial && b.control == Control::Sigma(0.0));
                    if let Some(b) = base.and_then(|b| b.mae_test) {
                        push("ratio", t / b);
                    }
                }
            }
        }
        rows
    }

    pub fn summary(&self) -> Result<Vec<QuantileSummary>> {
        aggregate(&self.tidy_rows())
    }

    /// Median validation and test errors per model, for exp3 and exp4.
    pub fn table(&self) -> Result<Option<MaeTable>> {
        match self.config.id {
            ExperimentId::Exp3 | ExperimentId::Exp4 => table_from_rows(&self.tidy_rows()).map(Some),
            _ => Ok(None),
        }
    }

    /// Per-time-step quantiles of the absolute error across surviving trials.
    pub fn series(&self) -> Result<Vec<SeriesPoint>> {
        let Some(timeline) = &self.timeline else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for &model in &ModelKind::ALL {
            let runs: Vec<&Vec<f64>> = self
                .trials
                .iter()
                .filter(|r| r.model == model && !r.diverged())
                .filter_map(|r| r.abs_errors.as_ref())
                .collect();
            if runs.is_empty() {
                continue;
            }
            for (t, role) in timeline.iter().enumerate() {
                let values: Vec<f64> = runs.iter().map(|s| s[t]).collect();
                out.push(SeriesPoint { t, role: *role, model, q: quantiles(&values)? });
            }
        }
        Ok(out)
    }
}

struct Task {
    control_index: usize,
    trial: usize,
    model: ModelKind,
}

fn model_index(kind: ModelKind) -> u64 {
    ModelKind::ALL.iter().position(|k| *k == kind).unwrap_or(0) as u64
}

fn run_pool<T: Send>(
    jobs: Option<usize>,
    tasks: &[Task],
    f: impl Fn(&Task) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| tasks.par_iter().map(f).collect())
}

fn tasks(config: &ExperimentConfig, n_controls: usize) -> Vec<Task> {
    let mut out = Vec::new();
    for control_index in 0..n_controls {
        for trial in 0..config.trials {
            for &model in &config.models {
                out.push(Task { control_index, trial, model });
            }
        }
    }
    out
}

fn predict_all(model: &Model, rows: &[Observation]) -> Result<Vec<f64>> {
    let mut scratch = model.scratch();
    rows.iter()
        .map(|o| {
            let x: Inputs = o.inputs();
            Ok(model.predict_features(&model.features(&x)?, &mut scratch))
        })
        .collect()
}

struct Fit<'a> {
    config: &'a ExperimentConfig,
    setup: ModelSetup,
}

impl Fit<'_> {
    /// Trains one model and scores it; divergence is a result, not an error.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        task: &Task,
        control: Control,
        train_rows: &[Observation],
        val_rows: &[Observation],
        test_rows: &[Observation],
        sigma: f64,
        timeline: Option<&[Observation]>,
    ) -> Result<TrialResult> {
        let cfg = self.config;
        let tag = cfg.id.tag();
        let mi = model_index(task.model);
        let trial = task.trial as u64;
        let net = NetSpec::new(Inputs::DIM, &cfg.hidden, derive_seed(cfg.seed, &[tag, INIT_TAG, trial, mi]));
        let model = build(task.model, &self.setup, Some(&net))?;
        let mut tc = cfg.train_config(task.model);
        tc.seed = derive_seed(cfg.seed, &[tag, SHUFFLE_TAG, trial, mi]);
        tc.sigma_eps_assumed = if sigma > 0.0 { sigma } else { 1.0 };

        let mut result = TrialResult {
            experiment: cfg.id,
            model: task.model,
            trial: task.trial,
            control,
            mae_validation: None,
            mae_test: None,
            epochs_run: 0,
            best_epoch: 0,
            abs_errors: None,
        };
        let (fit, report) = match train(&model, train_rows, val_rows, &tc) {
            Ok(ok) => ok,
            Err(Error::Diverged { report, .. }) => {
                result.epochs_run = report.epochs_run;
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        result.epochs_run = report.epochs_run;
        result.best_epoch = report.best_epoch;

        let val_pred = predict_all(&fit, val_rows)?;
        let test_pred = predict_all(&fit, test_rows)?;
        let val_y: Vec<f64> = val_rows.iter().map(|o| o.y).collect();
        let test_q: Vec<f64> = test_rows.iter().map(|o| o.q_true).collect();
        let (v, t) = (mae(&val_pred, &val_y)?, mae(&test_pred, &test_q)?);
        if !(v.is_finite() && t.is_finite()) {
            return Ok(result);
        }
        result.mae_validation = Some(v);
        result.mae_test = Some(t);
        if let Some(rows) = timeline {
            let pred = predict_all(&fit, rows)?;
            result.abs_errors = Some(pred.iter().zip(rows).map(|(p, o)| (p - o.q_true).abs()).collect());
        }
        Ok(result)
    }
}

fn finish(config: &ExperimentConfig, mut trials: Vec<TrialResult>, timeline: Option<Vec<Role>>) -> ExperimentResult {
    trials.sort_by(|a, b| {
        model_index(a.model)
            .cmp(&model_index(b.model))
            .then(a.control.sort_key().total_cmp(&b.control.sort_key()))
            .then(a.trial.cmp(&b.trial))
    });
    ExperimentResult { config: config.clone(), trials, timeline }
}

fn expect_id(config: &ExperimentConfig, id: ExperimentId) -> Result<()> {
    if config.id != id {
        return Err(Error::Config(format!("configuration is for {}, not {id}", config.id)));
    }
    config.validate()
}

/// Test error against training-set size. Each trial draws a fresh subset of
/// the noise-free D1 pool per size; one fifth of it (at least one row)
/// validates. The D1 test split is shared by every cell.
pub fn run_exp1(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    expect_id(config, ExperimentId::Exp1)?;
    let tag = config.id.tag();
    let d1 = sample_d1(config.d1_n, 0.0, derive_seed(config.seed, &[tag, DATA_TAG]))?;
    let pool: Vec<Observation> = d1.train().into_iter().chain(d1.val()).collect();
    let test = d1.test();
    let fit = Fit { config, setup: ModelSetup::default() };
    let grid = &config.n_grid;
    let results = run_pool(jobs, &tasks(config, grid.len()), |task| {
        let n = grid[task.control_index];
        let mut rng = stream_rng(derive_seed(config.seed, &[tag, SUBSET_TAG, task.trial as u64, n as u64]), 0);
        let picked: Vec<Observation> = sample(&mut rng, pool.len(), n).iter().map(|i| pool[i]).collect();
        let n_val = ((n as f64 * 0.2).round() as usize).clamp(1, n - 1);
        let (val, train_rows) = picked.split_at(n_val);
        fit.run(task, Control::N(n), train_rows, val, &test, 0.0, None)
    })?;
    Ok(finish(config, results, None))
}

fn exp2_rows(config: &ExperimentConfig, ds: &Dataset) -> Result<(Vec<Observation>, Vec<Observation>)> {
    let (train_rows, val_rows) = (ds.train(), ds.val());
    let Some(r) = config.exp2_rows else { return Ok((train_rows, val_rows)) };
    let n_val = ((r as f64 * 0.2).round() as usize).clamp(1, r - 1);
    let n_train = r - n_val;
    if n_train > train_rows.len() || n_val > val_rows.len() {
        return Err(Error::Config(format!("exp2_rows {r} exceeds the D1 training or validation split")));
    }
    Ok((train_rows[..n_train].to_vec(), val_rows[..n_val].to_vec()))
}

/// Test error against the noise level of the training and validation
/// targets, with a noise-free baseline at σ = 0. Test targets are always
/// noise-free. Within a trial every level shares inputs, splits,
/// initializations and shuffles.
pub fn run_exp2(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    expect_id(config, ExperimentId::Exp2)?;
    let tag = config.id.tag();
    let levels: Vec<f64> = std::iter::once(0.0).chain(config.sigma_grid.iter().copied()).collect();
    let fit = Fit { config, setup: ModelSetup::default() };
    let results = run_pool(jobs, &tasks(config, levels.len()), |task| {
        let sigma = levels[task.control_index];
        let ds = sample_d1(config.d1_n, sigma, derive_seed(config.seed, &[tag, DATA_TAG, task.trial as u64]))?;
        let (train_rows, val_rows) = exp2_rows(config, &ds)?;
        fit.run(task, Control::Sigma(sigma), &train_rows, &val_rows, &ds.test(), sigma, None)
    })?;
    Ok(finish(config, results, None))
}

fn run_temporal(config: &ExperimentConfig, id: DatasetId, jobs: Option<usize>) -> Result<ExperimentResult> {
    let tag = config.id.tag();
    let seed = derive_seed(config.seed, &[tag, DATA_TAG]);
    let ds = match id {
        DatasetId::D3 => generate_d3(config.temporal_n, seed)?,
        _ => generate_d2(config.temporal_n, seed)?,
    };
    let (train_rows, val_rows, test_rows) = (ds.train(), ds.val(), ds.test());
    let timeline: Vec<Role> = ds
        .split
        .role_of(ds.len())
        .into_iter()
        .map(|r| r.ok_or_else(|| Error::Split("temporal split leaves rows unassigned".into())))
        .collect::<Result<_>>()?;
    let fit = Fit { config, setup: ModelSetup::default() };
    let all = config.series.then_some(ds.observations.as_slice());
    let results = run_pool(jobs, &tasks(config, 1), |task| {
        fit.run(task, Control::Dataset(id), &train_rows, &val_rows, &test_rows, 0.0, all)
    })?;
    Ok(finish(config, results, config.series.then_some(timeline)))
}

/// Temporal extrapolation on the depleting-reservoir dataset.
pub fn run_exp3(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    expect_id(config, ExperimentId::Exp3)?;
    run_temporal(config, DatasetId::D2, jobs)
}

/// Temporal extrapolation on the rising gas-to-oil-ratio dataset.
pub fn run_exp4(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    expect_id(config, ExperimentId::Exp4)?;
    run_temporal(config, DatasetId::D3, jobs)
}

pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    match config.id {
        ExperimentId::Exp1 => run_exp1(config, jobs),
        ExperimentId::Exp2 => run_exp2(config, jobs),
        ExperimentId::Exp3 => run_exp3(config, jobs),
        ExperimentId::Exp4 => run_exp4(config, jobs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(id: ExperimentId) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(id);
        c.trials = 2;
        c.hidden = vec![4];
        c.train.max_epochs = 5;
        c.train.patience = Some(2);
        c.d1_n = 200;
        c.n_grid = vec![4, 20];
        c.sigma_grid = vec![1.0, 5.0];
        c.temporal_n = 100;
        c
    }

    #[test]
    fn exp1_grid_shape() {
        let c = quick(ExperimentId::Exp1);
        let r = run_exp1(&c, Some(1)).unwrap();
        assert_eq!(r.trials.len(), 2 * 2 * 5);
        let s = r.summary().unwrap();
        let test_cells = s.iter().filter(|q| q.metric == "mae_test").count();
        assert_eq!(test_cells, 2 * 5);
        assert!(r.trials.iter().all(|t| t.mae_test.unwrap() >= 0.0));
    }

    #[test]
    fn exp2_baseline_ratio_is_one() {
        let mut c = quick(ExperimentId::Exp2);
        c.exp2_rows = Some(40);
        c.models = vec![ModelKind::MechPlain, ModelKind::DataDriven];
        let r = run_exp2(&c, Some(1)).unwrap();
        let rows = r.tidy_rows();
        let ratios: Vec<&TidyRow> = rows.iter().filter(|t| t.metric == "ratio").collect();
        assert_eq!(ratios.len(), 3 * 2 * 2);
        for t in ratios.iter().filter(|t| t.control == Control::Sigma(0.0)) {
            assert_eq!(t.value, 1.0);
        }
    }

    #[test]
    fn exp3_series_cover_timeline() {
        let mut c = quick(ExperimentId::Exp3);
        c.models = vec![ModelKind::MechOracle, ModelKind::HybridError];
        let r = run_exp3(&c, None).unwrap();
        let timeline = r.timeline.as_ref().unwrap();
        assert_eq!(timeline.len(), 100);
        assert!(r.trials.iter().all(|t| t.abs_errors.as_ref().unwrap().len() == 100));
        let table = r.table().unwrap().unwrap();
        assert_eq!(table.models, vec![ModelKind::MechOracle, ModelKind::HybridError]);
        assert_eq!(r.series().unwrap().len(), 2 * 100);
    }

    #[test]
    fn wrong_experiment_is_rejected() {
        assert!(run_exp3(&quick(ExperimentId::Exp1), None).is_err());
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut c = quick(ExperimentId::Exp4);
        c.models = vec![ModelKind::MechPlain, ModelKind::DataDriven];
        let a = run_exp4(&c, Some(1)).unwrap();
        let b = run_exp4(&c, Some(3)).unwrap();
        assert_eq!(a.trials, b.trials);
    }

    #[test]
    fn control_text_round_trips() {
        for c in [Control::N(800), Control::Sigma(0.0), Control::Sigma(2.5), Control::Dataset(DatasetId::D3)] {
            assert_eq!(Control::parse(c.name(), &c.to_string()).unwrap(), c);
        }
        assert!(Control::parse("n", "x").is_err());
    }
}
