//! Full-batch Adam training for the attention classifier.
//!
//! Per-sample losses and gradients are independent, so they are computed by
//! the data-parallel dispatcher and reduced in index order — the update is
//! bit-identical whether or not the `parallel` feature is enabled.

use crate::error::{Error, Result};
use crate::gat::{dual_loss, GatModel, GraphSample};
use crate::par;

/// Optimizer settings (defaults: 300 epochs, learning rate 1e-3, Adam
/// moments 0.9/0.999, epsilon 1e-8).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidConfig { reason });
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b.is_finite() && (0.0..1.0).contains(&b)) {
                return fail(format!("{name} {b} must lie in [0, 1)"));
            }
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return fail(format!("adam_epsilon {} must be > 0", self.adam_epsilon));
        }
        Ok(())
    }
}

/// Loss history of one training run.
#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    /// Mean training loss per epoch, measured at the pre-update parameters.
    pub train_loss: Vec<f64>,
    /// Mean validation loss per epoch at the post-update parameters
    /// (empty when no validation set was given).
    pub val_loss: Vec<f64>,
}

/// Mean dual loss of a model over a set of samples.
pub fn mean_loss(model: &GatModel, samples: &[GraphSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "cannot evaluate loss on an empty sample set".into(),
        });
    }
    let losses: Vec<Result<f64>> = par::map_indices(samples.len(), |i| {
        let pass = model.forward(&samples[i])?;
        Ok(dual_loss(pass.y_hat, pass.y_enc, samples[i].label()))
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / samples.len() as f64)
}

/// Train a model with full-batch Adam; returns the trained model and the
/// loss trace. Fails rather than continuing if the loss ever goes
/// non-finite.
pub fn train(
    model: GatModel,
    train_set: &[GraphSample],
    val_set: Option<&[GraphSample]>,
    cfg: &TrainConfig,
) -> Result<(GatModel, TrainTrace)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "training set is empty".into(),
        });
    }
    let n_params = model.n_params();
    let mut work = model;
    let mut theta = work.flat_params();
    let mut m1 = vec![0.0f64; n_params];
    let mut m2 = vec![0.0f64; n_params];
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.epochs {
        let per_sample: Vec<Result<(f64, Vec<f64>)>> =
            par::map_indices(train_set.len(), |i| {
                let sample = &train_set[i];
                let pass = work.forward(sample)?;
                let loss = dual_loss(pass.y_hat, pass.y_enc, sample.label());
                let grads = work.backward(sample, &pass)?;
                Ok((loss, grads.flat()))
            });

        let count = train_set.len() as f64;
        let mut total = 0.0;
        let mut grad = vec![0.0f64; n_params];
        for item in per_sample {
            let (loss, g) = item?;
            total += loss;
            for (acc, gi) in grad.iter_mut().zip(g.iter()) {
                *acc += gi;
            }
        }
        let mean = total / count;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        trace.train_loss.push(mean);

        let t = (epoch + 1) as f64;
        let bias1 = 1.0 - cfg.beta1.powf(t);
        let bias2 = 1.0 - cfg.beta2.powf(t);
        for k in 0..n_params {
            let g = grad[k] / count;
            m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * g;
            m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m1[k] / bias1;
            let v_hat = m2[k] / bias2;
            theta[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
        work.set_flat_params(&theta)?;

        if let Some(val) = val_set {
            trace.val_loss.push(mean_loss(&work, val)?);
        }
    }
    Ok((work, trace))
}
