use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{
    batch_loss_and_grad, BatchObjective, CentroidObjective, ClassifierObjective, GcnModel, GraphInput, ModelKind,
};
use super::optim::{optimizers, OptimizerParams};
use crate::dataset::TrainingSample;
use crate::polycube::NUM_TYPES;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: String,
    pub rng_seed: u64,
    pub val_fraction: f64,
    /// Stop once validation accuracy (classifier) reaches this value.
    pub target_accuracy: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = OptimizerParams::default();
        TrainConfig {
            learning_rate: p.learning_rate,
            l2_lambda: 1e-5,
            epochs: 60,
            batch_size: 32,
            optimizer: "adam".into(),
            rng_seed: 42,
            val_fraction: 0.1,
            target_accuracy: None,
            beta1: p.beta1,
            beta2: p.beta2,
            rho: p.rho,
            eps: p.eps,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(Error::Config("l2_lambda must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    fn optimizer_params(&self) -> OptimizerParams {
        OptimizerParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            rho: self.rho,
            eps: self.eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_metric: f64,
    pub val_metric: f64,
}

/// Per-epoch history. For the classifier the metrics are accuracies, for the
/// centroid regressor mean squared errors. The training metric is measured on
/// a fixed strided subset of at most [`TRAIN_PROBE_SIZE`] training samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

impl TrainTrace {
    pub fn to_text(&self) -> String {
        let mut s = String::from("epoch loss train val\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{} {:.16e} {:.16e} {:.16e}", e.epoch, e.loss, e.train_metric, e.val_metric);
        }
        s
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Seeded split stratified by label: `round(fraction * n_label)` samples of
/// every label (at least one when the label has two or more) go to validation.
pub fn stratified_split(labels: &[usize], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut idx) in by_label {
        idx.shuffle(&mut rng);
        let mut nv = (val_fraction * idx.len() as f64).round() as usize;
        if val_fraction > 0.0 && nv == 0 && idx.len() >= 2 {
            nv = 1;
        }
        val.extend_from_slice(&idx[..nv]);
        train.extend_from_slice(&idx[nv..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Evenly strided subset of the training indices used for the per-epoch
/// training metric, so that monitoring costs about as much as validation.
pub const TRAIN_PROBE_SIZE: usize = 64;

fn train_probe(train: &[usize]) -> Vec<usize> {
    if train.len() <= TRAIN_PROBE_SIZE {
        return train.to_vec();
    }
    (0..TRAIN_PROBE_SIZE).map(|i| train[i * train.len() / TRAIN_PROBE_SIZE]).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_training(
    model: &mut GcnModel,
    inputs: &[GraphInput],
    objective: &dyn BatchObjective,
    cfg: &TrainConfig,
    train: &[usize],
    mut evaluate: impl FnMut(&GcnModel, &[usize]) -> Result<f64>,
    val: &[usize],
    stop: impl Fn(f64) -> bool,
) -> Result<Vec<EpochStats>> {
    let mut opt = optimizers().create(&cfg.optimizer, &cfg.optimizer_params())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x5eed_0000_0000_0001);
    let mut order = train.to_vec();
    let mut stats = Vec::new();
    let probe = train_probe(train);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_loss_and_grad(model, inputs, batch, objective, cfg.l2_lambda)?;
            if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { epoch, loss });
            }
            opt.step(&mut model.tensors, &grads);
            sum += loss;
            batches += 1;
        }
        let loss = sum / batches.max(1) as f64;
        let train_metric = evaluate(model, &probe)?;
        let val_metric = if val.is_empty() { train_metric } else { evaluate(model, val)? };
        log::info!("epoch {epoch}: loss {loss:.6} train {train_metric:.4} val {val_metric:.4}");
        stats.push(EpochStats {
            epoch,
            loss,
            train_metric,
            val_metric,
        });
        if stop(val_metric) {
            break;
        }
    }
    Ok(stats)
}

/// Fraction of `indices` whose argmax class equals the label.
pub fn accuracy(model: &GcnModel, inputs: &[GraphInput], labels: &[usize], indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for &i in indices {
        let cache = model.forward(&inputs[i].adj, inputs[i].x.view())?;
        let out = cache.output();
        let mut best = 0;
        for c in 1..out.ncols() {
            if out[[0, c]] > out[[0, best]] {
                best = c;
            }
        }
        hits += usize::from(best == labels[i]);
    }
    Ok(hits as f64 / indices.len() as f64)
}

pub fn train_classifier(samples: &[TrainingSample], cfg: &TrainConfig) -> Result<(GcnModel, TrainTrace)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    if let Some(s) = samples.iter().find(|s| !(1..=NUM_TYPES).contains(&s.label)) {
        return Err(Error::InvalidTemplate(s.label));
    }
    let kind = ModelKind::Classifier;
    let labels: Vec<usize> = samples.iter().map(|s| s.label - 1).collect();
    let inputs: Vec<GraphInput> = samples.iter().map(|s| GraphInput::new(kind, &s.graph)).collect();
    let (train, val) = stratified_split(&labels, cfg.val_fraction, cfg.rng_seed);
    let mut model = GcnModel::glorot(kind, cfg.rng_seed);
    let objective = ClassifierObjective { labels: &labels };
    let target = cfg.target_accuracy;
    let epochs = run_training(
        &mut model,
        &inputs,
        &objective,
        cfg,
        &train,
        |m, idx| accuracy(m, &inputs, &labels, idx),
        &val,
        |v| target.is_some_and(|t| v >= t),
    )?;
    Ok((
        model,
        TrainTrace {
            epochs,
            train_indices: train,
            val_indices: val,
        },
    ))
}

/// Mean squared coordinate error over `indices`.
pub fn centroid_mse(model: &GcnModel, inputs: &[GraphInput], targets: &[Vec<f64>], indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &i in indices {
        let cache = model.forward(&inputs[i].adj, inputs[i].x.view())?;
        let out = cache.output().row(0).to_vec();
        total += out.iter().zip(&targets[i]).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / out.len() as f64;
    }
    Ok(total / indices.len() as f64)
}

/// Trains a regressor for the region centroids of one template type. All
/// samples must carry region labels with the same region count.
pub fn train_centroid(samples: &[TrainingSample], cfg: &TrainConfig) -> Result<(GcnModel, TrainTrace)> {
    cfg.validate()?;
    let first = samples.first().ok_or_else(|| Error::Config("empty training set".into()))?;
    let k = first.num_regions();
    if k == 0 {
        return Err(Error::Config("centroid training needs region labels".into()));
    }
    let mut targets = Vec::with_capacity(samples.len());
    for s in samples {
        if s.num_regions() != k || s.regions.len() != s.mesh.num_faces() {
            return Err(Error::ShapeMismatch(format!(
                "sample with seed {} has {} regions, expected {k}",
                s.seed,
                s.num_regions()
            )));
        }
        targets.push(s.region_centroids().iter().flat_map(|c| c.to_array()).collect::<Vec<f64>>());
    }
    let kind = ModelKind::Centroid { k };
    let inputs: Vec<GraphInput> = samples.iter().map(|s| GraphInput::new(kind, &s.graph)).collect();
    let labels = vec![0usize; samples.len()];
    let (train, val) = stratified_split(&labels, cfg.val_fraction, cfg.rng_seed);
    let mut model = GcnModel::glorot(kind, cfg.rng_seed);
    let objective = CentroidObjective { targets: &targets };
    let epochs = run_training(
        &mut model,
        &inputs,
        &objective,
        cfg,
        &train,
        |m, idx| centroid_mse(m, &inputs, &targets, idx),
        &val,
        |_| false,
    )?;
    Ok((
        model,
        TrainTrace {
            epochs,
            train_indices: train,
            val_indices: val,
        },
    ))
}
