//! MAP estimation with mini-batch Adam and early stopping.

mod adam;
mod loss;

pub use adam::{adam_step, AdamState};
pub use loss::map_loss;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::model::{Features, Model, ParamGroup, ParamVector};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate_net: f64,
    pub learning_rate_phys: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; `None` trains
    /// for `max_epochs` and needs no validation rows.
    pub patience: Option<usize>,
    /// Noise scale in the likelihood term.
    pub sigma_eps_assumed: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate_net: 1e-3,
            learning_rate_phys: 1e-2,
            batch_size: 64,
            max_epochs: 5000,
            patience: Some(100),
            sigma_eps_assumed: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate_net > 0.0 && self.learning_rate_phys > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.patience == Some(0) {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.sigma_eps_assumed > 0.0) {
            return Err(Error::Config("sigma_eps_assumed must be positive".into()));
        }
        Ok(())
    }

    /// Per-entry learning rates: group rate times the entry's step scale.
    pub fn learning_rates(&self, params: &ParamVector) -> Vec<f64> {
        params
            .specs
            .iter()
            .map(|s| {
                s.step_scale
                    * match s.group {
                        ParamGroup::Physical => self.learning_rate_phys,
                        ParamGroup::Network => self.learning_rate_net,
                    }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    /// Summed mini-batch objective per epoch.
    pub train_loss: Vec<f64>,
    /// Validation mean squared prediction error per epoch.
    pub val_mse: Vec<f64>,
    pub params: ParamVector,
}

impl TrainReport {
    pub fn best_val_mse(&self) -> Option<f64> {
        self.best_epoch.checked_sub(1).and_then(|i| self.val_mse.get(i)).copied()
    }
}

fn prepare(model: &Model, rows: &[Observation]) -> Result<(Vec<Features>, Vec<f64>)> {
    let features = rows.iter().map(|o| model.features(&o.inputs())).collect::<Result<Vec<_>>>()?;
    Ok((features, rows.iter().map(|o| o.y).collect()))
}

/// Fits `model` to `train`, selecting the epoch with the lowest validation
/// error. Network scaling is refit on `train` first.
pub fn train(
    model: &Model,
    train: &[Observation],
    val: &[Observation],
    config: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if val.is_empty() && config.patience.is_some() {
        return Err(Error::Config("early stopping needs a non-empty validation split".into()));
    }

    let mut model = model.clone();
    model.fit_scaling(train);
    let (train_f, train_y) = prepare(&model, train)?;
    let (val_f, val_y) = prepare(&model, val)?;

    let n = train.len();
    let batch = config.batch_size.min(n);
    let inv_sigma2 = 1.0 / (config.sigma_eps_assumed * config.sigma_eps_assumed);
    let lr = config.learning_rates(model.params());
    let mut adam = AdamState::new(model.n_params());
    let mut grad = vec![0.0; model.n_params()];
    let mut scratch = model.scratch();
    let mut rng = stream_rng(config.seed, 0);
    let mut order: Vec<usize> = (0..n).collect();

    let mut report = TrainReport {
        epochs_run: 0,
        best_epoch: 0,
        train_loss: Vec::new(),
        val_mse: Vec::new(),
        params: model.params().clone(),
    };
    let mut best_values = model.params().values.clone();
    let mut best_metric = f64::INFINITY;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let frac = chunk.len() as f64 / n as f64;
            epoch_loss +=
                loss::batch_objective(&model, &train_f, &train_y, chunk, inv_sigma2, frac, &mut scratch, &mut grad);
            adam_step(&mut adam, model.params_mut(), &grad, &lr);
        }
        let metric = if val.is_empty() {
            loss::mse(&model, &train_f, &train_y, &mut scratch)
        } else {
            loss::mse(&model, &val_f, &val_y, &mut scratch)
        };
        report.epochs_run = epoch;
        report.train_loss.push(epoch_loss);
        report.val_mse.push(metric);

        if !epoch_loss.is_finite() || !metric.is_finite() || model.params().values.iter().any(|v| !v.is_finite()) {
            model.params_mut().set_values(&best_values)?;
            report.params = model.params().clone();
            return Err(Error::Diverged { epoch, report: Box::new(report) });
        }

        if config.patience.is_none() {
            best_metric = metric;
            report.best_epoch = epoch;
            continue;
        }
        if metric < best_metric {
            best_metric = metric;
            report.best_epoch = epoch;
            best_values.copy_from_slice(&model.params().values);
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience.is_some_and(|p| since_best >= p) {
                break;
            }
        }
    }

    if config.patience.is_some() && report.best_epoch > 0 {
        model.params_mut().set_values(&best_values)?;
    }
    report.params = model.params().clone();
    Ok((model, report))
}
