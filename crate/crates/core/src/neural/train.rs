use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::adam::Adam;
use super::mlp::{mse_gradient, weighted_mse, Mlp};
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

const SPLIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const MASK_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Inference-mode loss of the returned parameters on the training rows.
    pub final_train_loss: f64,
    /// Inference-mode loss of the returned parameters on the validation
    /// rows; equals `final_train_loss` when no validation split was possible.
    pub final_val_loss: f64,
    /// Validation loss after the last epoch that ran.
    pub last_epoch_val_loss: f64,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// False when `n · val_fraction < 1` left no validation rows.
    pub early_stopping: bool,
}

struct Split {
    x: Array2<f64>,
    y: Array1<f64>,
    w: Vec<f64>,
}

impl Split {
    fn take(x: &ArrayView2<f64>, y: &ArrayView1<f64>, w: &[f64], idx: &[usize]) -> Self {
        Self {
            x: x.select(Axis(0), idx),
            y: y.select(Axis(0), idx),
            w: idx.iter().map(|&i| w[i]).collect(),
        }
    }

    fn loss(&self, mlp: &Mlp) -> f64 {
        weighted_mse(mlp.predict_unchecked(self.x.view()).view(), self.y.view(), &self.w)
    }
}

/// Fits `mlp` to minimize the weighted squared loss with mini-batch Adam.
///
/// A seeded shuffle holds out `val_fraction` of the rows; training stops
/// once validation loss has not improved for `patience` epochs and the
/// best-scoring parameters are returned.
pub fn train(
    mlp: &Mlp,
    features: ArrayView2<f64>,
    target: ArrayView1<f64>,
    weights: &[f64],
    hp: &Hyperparams,
    seed: u64,
) -> Result<(Mlp, TrainReport)> {
    hp.validate()?;
    let n = features.nrows();
    if n <= 2 {
        return Err(Error::InvalidArgument(format!("training needs more than 2 rows, got {n}")));
    }
    if features.ncols() != mlp.input_width() {
        return Err(Error::DimensionMismatch {
            expected: mlp.input_width(),
            got: features.ncols(),
        });
    }
    if target.len() != n || weights.len() != n {
        return Err(Error::InvalidArgument("features, target and weights differ in length".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidArgument("weights must be positive and finite".into()));
    }
    if features.iter().chain(target.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(derive_seed(seed, &[SPLIT_STREAM])));
    let n_val = (n as f64 * hp.val_fraction).floor() as usize;
    let early_stopping = n_val >= 1;
    let (val_idx, train_idx) = if early_stopping {
        order.split_at(n_val)
    } else {
        (&order[..0], &order[..])
    };
    let train_set = Split::take(&features, &target, weights, train_idx);
    let val_set = Split::take(&features, &target, weights, val_idx);

    let mut model = mlp.clone();
    let mut adam = Adam::new(hp.learning_rate, &model.param_sizes());
    let mut shuffle_rng = seeded(derive_seed(seed, &[SHUFFLE_STREAM]));
    let mut mask_rng = seeded(derive_seed(seed, &[MASK_STREAM]));
    let mut batch_order: Vec<usize> = (0..train_set.x.nrows()).collect();

    let mut best: Option<(f64, Mlp, usize)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;
    let mut last_val = f64::NAN;

    for epoch in 1..=hp.epochs {
        epochs_run = epoch;
        batch_order.shuffle(&mut shuffle_rng);
        let mut epoch_num = 0.0;
        let mut epoch_den = 0.0;
        for chunk in batch_order.chunks(hp.batch_size) {
            let xb = train_set.x.select(Axis(0), chunk);
            let yb = train_set.y.select(Axis(0), chunk);
            let wb: Vec<f64> = chunk.iter().map(|&i| train_set.w[i]).collect();
            let masks = model.draw_masks(chunk.len(), &mut mask_rng);
            let cache = model.forward_cached(xb.view(), &masks);
            let out = cache.output();
            let batch_w: f64 = wb.iter().sum();
            let batch_loss = weighted_mse(out, yb.view(), &wb);
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("non-finite batch loss {batch_loss}"),
                });
            }
            epoch_num += batch_loss * batch_w;
            epoch_den += batch_w;
            let d_out = mse_gradient(out, yb.view(), &wb);
            let grads = model.backward(xb.view(), &cache, &masks, d_out.view());
            adam.step(&mut model.param_slices_mut(), &grads.slices());
        }
        let train_loss = epoch_num / epoch_den;
        log::trace!("epoch {epoch}: train loss {train_loss:.6e}");

        if early_stopping {
            last_val = val_set.loss(&model);
            if !last_val.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("non-finite validation loss {last_val}"),
                });
            }
            match &best {
                Some((b, _, _)) if last_val >= *b => {
                    since_best += 1;
                    if since_best >= hp.patience {
                        stopped_early = epoch < hp.epochs;
                        break;
                    }
                }
                _ => {
                    best = Some((last_val, model.clone(), epoch));
                    since_best = 0;
                }
            }
        }
    }

    let (model, best_epoch) = match best {
        Some((_, m, e)) => (m, e),
        None => (model, epochs_run),
    };
    let final_train_loss = train_set.loss(&model);
    let final_val_loss = if early_stopping {
        val_set.loss(&model)
    } else {
        final_train_loss
    };
    if !final_train_loss.is_finite() {
        return Err(Error::Diverged {
            epoch: epochs_run,
            detail: "non-finite final training loss".into(),
        });
    }
    Ok((
        model,
        TrainReport {
            epochs_run,
            final_train_loss,
            final_val_loss,
            last_epoch_val_loss: if early_stopping { last_val } else { final_train_loss },
            best_epoch,
            stopped_early,
            early_stopping,
        },
    ))
}
