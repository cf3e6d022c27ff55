//! Group-aware logistic score model: estimates P(Y=1 | X=x, A=a) by
//! mini-batch gradient descent on the cross-entropy loss, with the group
//! entering as one-hot features appended to x.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{GroupId, TabularDataset};
use crate::error::{Error, Result};
use crate::rng;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// L2 penalty coefficient on the weights (bias excluded).
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            epochs: 30,
            batch_size: 256,
            seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.l2 < 0.0 {
            return Err(Error::Config("l2 must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub seed: u64,
}

/// Trained logistic model over `dim` features and `num_groups` one-hot
/// group indicators. Immutable; prediction is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    /// Feature weights followed by one per-group weight (length `d + num_groups`).
    weights: Vec<f64>,
    bias: f64,
    #[serde(rename = "d")]
    dim: usize,
    num_groups: usize,
    pub meta: TrainingMeta,
}

fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // keep scores strictly inside (0, 1)
    s.clamp(1e-12, 1.0 - 1e-12)
}

// log(1 + e^z), computed without overflow or log-of-clamped-probability
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logit_for(weights: &[f64], bias: f64, dim: usize, x: &[f64], a: GroupId) -> f64 {
    let mut z = bias + weights[dim + a];
    for (w, v) in weights[..dim].iter().zip(x) {
        z += w * v;
    }
    z
}

/// Mean cross-entropy over the dataset for the given parameters, plus its
/// gradient: `(loss, d/dweights, d/dbias)`. The loss includes the penalty
/// `0.5 * l2 * |weights|^2`. This is exactly the objective `train` descends.
pub fn mean_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    ds: &TabularDataset,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let dim = ds.dim();
    let n = ds.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for i in 0..ds.len() {
        let x = ds.row(i);
        let a = ds.groups()[i];
        let y = ds.labels()[i] as f64;
        let z = logit_for(weights, bias, dim, x, a);
        loss += softplus(z) - y * z;
        let g = sigmoid(z) - y;
        for (gw, v) in grad_w[..dim].iter_mut().zip(x) {
            *gw += g * v;
        }
        grad_w[dim + a] += g;
        grad_b += g;
    }
    loss /= n;
    for gw in grad_w.iter_mut() {
        *gw /= n;
    }
    grad_b /= n;
    if l2 > 0.0 {
        loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
        for (gw, w) in grad_w.iter_mut().zip(weights) {
            *gw += l2 * w;
        }
    }
    (loss, grad_w, grad_b)
}

impl ScoreModel {
    /// Builds a model from explicit parameters (all finite).
    pub fn from_parts(weights: Vec<f64>, bias: f64, dim: usize, num_groups: usize) -> Result<Self> {
        if weights.len() != dim + num_groups {
            return Err(Error::Shape(format!(
                "expected {} weights (d = {dim} + {num_groups} groups), got {}",
                dim + num_groups,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Data("model parameters must be finite".into()));
        }
        Ok(Self {
            weights,
            bias,
            dim,
            num_groups,
            meta: TrainingMeta {
                epochs_run: 0,
                initial_loss: 0.0,
                final_loss: 0.0,
                seed: 0,
            },
        })
    }

    /// Trains by seeded mini-batch gradient descent on the mean
    /// cross-entropy with optional L2 penalty.
    pub fn train(ds: &TabularDataset, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let n = ds.len();
        let pos = ds.labels().iter().filter(|&&y| y == 1).count();
        if pos == 0 || pos == n {
            return Err(Error::Data(
                "training requires both label values to be present".into(),
            ));
        }
        let dim = ds.dim();
        let num_groups = ds.num_groups();
        let mut weights = vec![0.0; dim + num_groups];
        let mut bias = 0.0;
        let (initial_loss, _, _) = mean_loss_and_gradient(&weights, bias, ds, cfg.l2);

        let mut rng = rng::rng_from_seed(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut grad_w = vec![0.0; weights.len()];
        for epoch in 0..cfg.epochs {
            rng::shuffle(&mut rng, &mut order);
            for batch in order.chunks(cfg.batch_size) {
                grad_w.iter_mut().for_each(|g| *g = 0.0);
                let mut grad_b = 0.0;
                for &i in batch {
                    let x = ds.row(i);
                    let a = ds.groups()[i];
                    let y = ds.labels()[i] as f64;
                    let z = logit_for(&weights, bias, dim, x, a);
                    let g = sigmoid(z) - y;
                    for (gw, v) in grad_w[..dim].iter_mut().zip(x) {
                        *gw += g * v;
                    }
                    grad_w[dim + a] += g;
                    grad_b += g;
                }
                let scale = cfg.learning_rate / batch.len() as f64;
                for (w, gw) in weights.iter_mut().zip(&grad_w) {
                    *w -= scale * gw + cfg.learning_rate * cfg.l2 * *w;
                }
                bias -= scale * grad_b;
            }
            if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite parameter".into(),
                });
            }
        }
        let (final_loss, _, _) = mean_loss_and_gradient(&weights, bias, ds, cfg.l2);
        if !final_loss.is_finite() {
            return Err(Error::Divergence {
                epoch: cfg.epochs - 1,
                message: "non-finite loss".into(),
            });
        }
        if final_loss > initial_loss + 1e-6 {
            return Err(Error::Divergence {
                epoch: cfg.epochs - 1,
                message: format!("final loss {final_loss} exceeds initial loss {initial_loss}"),
            });
        }
        Ok(Self {
            weights,
            bias,
            dim,
            num_groups,
            meta: TrainingMeta {
                epochs_run: cfg.epochs,
                initial_loss,
                final_loss,
                seed: cfg.seed,
            },
        })
    }

    /// Estimated P(Y=1 | X=x, A=a), strictly inside (0, 1).
    pub fn predict_eta(&self, x: &[f64], a: GroupId) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "feature vector has width {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        if a >= self.num_groups {
            return Err(Error::Shape(format!(
                "group id {a} out of range (model has {} groups)",
                self.num_groups
            )));
        }
        Ok(sigmoid(logit_for(&self.weights, self.bias, self.dim, x, a)))
    }

    /// Scores for every row of a dataset.
    pub fn scores(&self, ds: &TabularDataset) -> Result<Vec<f64>> {
        (0..ds.len())
            .map(|i| self.predict_eta(ds.row(i), ds.groups()[i]))
            .collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn save_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load_json<R: Read>(r: R) -> Result<Self> {
        let model: Self = serde_json::from_reader(r)?;
        if model.weights.len() != model.dim + model.num_groups {
            return Err(Error::Shape(
                "weight vector length mismatch in model file".into(),
            ));
        }
        Ok(model)
    }
}

/// One independent logistic model per group: the estimator for
/// distributions whose score direction differs across groups, which a
/// single shared weight vector cannot represent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupwiseModel {
    models: Vec<ScoreModel>, // models[a] scores group a; each has num_groups = 1
}

impl GroupwiseModel {
    /// Trains a separate logistic model on each group's rows. Group `a`'s
    /// model is seeded with `derive_seed(cfg.seed, a)`.
    pub fn train(ds: &TabularDataset, cfg: &TrainConfig) -> Result<Self> {
        let mut rows_by_group: Vec<Vec<usize>> = vec![Vec::new(); ds.num_groups()];
        for (i, &g) in ds.groups().iter().enumerate() {
            rows_by_group[g].push(i);
        }
        let mut models = Vec::with_capacity(ds.num_groups());
        for (a, rows) in rows_by_group.iter().enumerate() {
            if rows.is_empty() {
                return Err(Error::Data(format!("group {a} has no training rows")));
            }
            let part = ds.select(rows)?;
            let sub = TabularDataset::new(
                (0..part.len()).flat_map(|i| part.row(i).to_vec()).collect(),
                part.dim(),
                vec![0; part.len()],
                part.labels().to_vec(),
                1,
            )?;
            let group_cfg = TrainConfig {
                seed: crate::rng::derive_seed(cfg.seed, a as u64),
                ..*cfg
            };
            models.push(ScoreModel::train(&sub, &group_cfg)?);
        }
        Ok(Self { models })
    }

    pub fn num_groups(&self) -> usize {
        self.models.len()
    }

    pub fn group_model(&self, a: GroupId) -> Option<&ScoreModel> {
        self.models.get(a)
    }

    pub fn predict_eta(&self, x: &[f64], a: GroupId) -> Result<f64> {
        let model = self.models.get(a).ok_or(Error::UnknownGroup(a))?;
        model.predict_eta(x, 0)
    }

    pub fn scores(&self, ds: &TabularDataset) -> Result<Vec<f64>> {
        (0..ds.len())
            .map(|i| self.predict_eta(ds.row(i), ds.groups()[i]))
            .collect()
    }
}
