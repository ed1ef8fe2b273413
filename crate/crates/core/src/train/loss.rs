use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::model::{Features, Model, ModelScratch};

/// MAP objective of one mini-batch:
///
/// `Σ (y - ŷ)² / σ_ε² + (|batch| / n_train) Σ ((φ - μ) / σ)²`
///
/// The prior share is proportional to the batch, so summing over the batches
/// of one epoch gives the full-data objective exactly once.
pub fn map_loss(model: &Model, batch: &[Observation], sigma_eps: f64, n_train: usize) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("loss batch"));
    }
    let mut scratch = model.scratch();
    let mut sse = 0.0;
    for o in batch {
        let f = model.features(&o.inputs())?;
        let r = o.y - model.predict_features(&f, &mut scratch);
        sse += r * r;
    }
    let frac = batch.len() as f64 / n_train as f64;
    Ok(sse / (sigma_eps * sigma_eps) + frac * model.params().prior_penalty())
}

/// Batch objective and its gradient on precomputed features.
#[allow(clippy::too_many_arguments)]
pub(crate) fn batch_objective(
    model: &Model,
    features: &[Features],
    targets: &[f64],
    batch: &[usize],
    inv_sigma2: f64,
    prior_fraction: f64,
    scratch: &mut ModelScratch,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut sse = 0.0;
    for &i in batch {
        let target = targets[i];
        model.backprop(&features[i], scratch, grad, |y_hat| {
            let r = target - y_hat;
            sse += r * r;
            -2.0 * r * inv_sigma2
        });
    }
    let params = model.params();
    let mut penalty = 0.0;
    for ((g, v), s) in grad.iter_mut().zip(&params.values).zip(&params.specs) {
        penalty += s.prior.penalty(*v);
        *g += prior_fraction * s.prior.penalty_gradient(*v);
    }
    sse * inv_sigma2 + prior_fraction * penalty
}

/// Mean squared prediction error.
pub(crate) fn mse(model: &Model, features: &[Features], targets: &[f64], scratch: &mut ModelScratch) -> f64 {
    let sse: f64 = features
        .iter()
        .zip(targets)
        .map(|(f, y)| {
            let r = y - model.predict_features(f, scratch);
            r * r
        })
        .sum();
    sse / features.len() as f64
}
