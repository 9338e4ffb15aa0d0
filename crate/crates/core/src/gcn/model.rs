use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NormalizedAdjacency;
use crate::mesh::{FaceGraph, Vec3, NODE_FEATURES};
use crate::polycube::NUM_TYPES;
use crate::{Error, Result};

pub const GCONV_WIDTHS: [usize; 4] = [128, 256, 256, 256];
pub const HEAD_WIDTHS: [usize; 2] = [128, 128];
pub const CENTROID_FEATURES: usize = 3;
pub const NUM_GCONV: usize = 4;
pub const NUM_HEAD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Classifier,
    /// Regressor for `k` seed points.
    Centroid { k: usize },
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Classifier => "classifier",
            ModelKind::Centroid { .. } => "centroid",
        }
    }

    pub fn input_width(self) -> usize {
        match self {
            ModelKind::Classifier => NODE_FEATURES,
            ModelKind::Centroid { .. } => CENTROID_FEATURES,
        }
    }

    pub fn output_width(self) -> usize {
        match self {
            ModelKind::Classifier => NUM_TYPES,
            ModelKind::Centroid { k } => 3 * k,
        }
    }

    pub fn pooling(self) -> Pooling {
        match self {
            ModelKind::Classifier => Pooling::Mean,
            ModelKind::Centroid { .. } => Pooling::Max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pooling {
    Mean,
    Max,
}

impl Pooling {
    pub fn tag(self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        }
    }
}

/// Four graph-convolution layers followed by pooling and a three-layer head.
///
/// `tensors` holds `W1..W4` of the graph convolutions, then `(W, b)` for each
/// head layer; biases are stored as `1 × n` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel {
    pub kind: ModelKind,
    pub seed: u64,
    pub tensors: Vec<Array2<f64>>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub struct ForwardCache {
    /// `Â H_{l-1}` per graph layer.
    ah: Vec<Array2<f64>>,
    /// Pre-activations per graph layer.
    z: Vec<Array2<f64>>,
    rows: usize,
    argmax: Vec<usize>,
    /// Inputs of each head layer (the first is the pooled vector).
    head_in: Vec<Array2<f64>>,
    /// Pre-activations of each head layer; the last is the output.
    head_z: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.head_z.last().expect("head has layers")
    }
}

pub fn tensor_shapes(kind: ModelKind) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    let mut d = kind.input_width();
    for w in GCONV_WIDTHS {
        shapes.push((d, w));
        d = w;
    }
    for w in HEAD_WIDTHS.iter().copied().chain(std::iter::once(kind.output_width())) {
        shapes.push((d, w));
        shapes.push((1, w));
        d = w;
    }
    shapes
}

pub fn tensor_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=NUM_GCONV).map(|i| format!("gconv{i}")).collect();
    for j in 1..=NUM_HEAD {
        names.push(format!("dense{j}.weight"));
        names.push(format!("dense{j}.bias"));
    }
    names
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn relu_mask(dh: &mut Array2<f64>, z: &Array2<f64>) {
    ndarray::Zip::from(dh).and(z).for_each(|d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
}

impl GcnModel {
    pub fn zeros(kind: ModelKind) -> Self {
        GcnModel {
            kind,
            seed: 0,
            tensors: tensor_shapes(kind).into_iter().map(Array2::zeros).collect(),
        }
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn glorot(kind: ModelKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = tensor_shapes(kind)
            .into_iter()
            .map(|(r, c)| {
                if r == 1 {
                    return Array2::zeros((r, c));
                }
                let a = (6.0 / (r + c) as f64).sqrt();
                Array2::from_shape_simple_fn((r, c), || rng.random_range(-a..a))
            })
            .collect();
        GcnModel { kind, seed, tensors }
    }

    pub fn gconv(&self, l: usize) -> &Array2<f64> {
        &self.tensors[l]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let want = tensor_shapes(self.kind);
        if want.len() != self.tensors.len() {
            return Err(Error::ShapeMismatch(format!("expected {} tensors, found {}", want.len(), self.tensors.len())));
        }
        for (i, (t, w)) in self.tensors.iter().zip(&want).enumerate() {
            if t.dim() != *w {
                return Err(Error::ShapeMismatch(format!("tensor {i} has shape {:?}, expected {w:?}", t.dim())));
            }
        }
        Ok(())
    }

    /// Sum of squared entries of the graph-convolution weights.
    pub fn gconv_sq_norm(&self) -> f64 {
        self.tensors[..NUM_GCONV].iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn features(&self, graph: &FaceGraph) -> Array2<f64> {
        input_features(self.kind, graph)
    }

    pub fn forward(&self, adj: &NormalizedAdjacency, x: ArrayView2<f64>) -> Result<ForwardCache> {
        if x.ncols() != self.kind.input_width() {
            return Err(Error::ShapeMismatch(format!(
                "model reads {} features per node, got {}",
                self.kind.input_width(),
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyMesh);
        }
        let mut ah = Vec::with_capacity(NUM_GCONV);
        let mut z = Vec::with_capacity(NUM_GCONV);
        let mut h = x.to_owned();
        for l in 0..NUM_GCONV {
            let p = adj.apply(h.view())?;
            let zl = p.dot(&self.tensors[l]);
            h = relu(&zl);
            ah.push(p);
            z.push(zl);
        }
        let rows = h.nrows();
        let (pooled, argmax) = match self.kind.pooling() {
            Pooling::Mean => (h.mean_axis(Axis(0)).expect("non-empty"), Vec::new()),
            Pooling::Max => {
                let mut best = vec![0usize; h.ncols()];
                for c in 0..h.ncols() {
                    let col = h.column(c);
                    for r in 1..rows {
                        if col[r] > col[best[c]] {
                            best[c] = r;
                        }
                    }
                }
                (ndarray::Array1::from_iter(best.iter().enumerate().map(|(c, &r)| h[[r, c]])), best)
            }
        };
        let mut head_in = Vec::with_capacity(NUM_HEAD);
        let mut head_z = Vec::with_capacity(NUM_HEAD);
        let mut a = pooled.insert_axis(Axis(0));
        for j in 0..NUM_HEAD {
            let w = &self.tensors[NUM_GCONV + 2 * j];
            let b = &self.tensors[NUM_GCONV + 2 * j + 1];
            let zj = a.dot(w) + b;
            let next = if j + 1 < NUM_HEAD { relu(&zj) } else { zj.clone() };
            head_in.push(a);
            head_z.push(zj);
            a = next;
        }
        Ok(ForwardCache {
            ah,
            z,
            rows,
            argmax,
            head_in,
            head_z,
        })
    }

    /// Accumulates parameter gradients for `d(loss)/d(output)` into `grads`.
    pub fn backward(&self, adj: &NormalizedAdjacency, cache: &ForwardCache, dout: &Array2<f64>, grads: &mut [Array2<f64>]) -> Result<()> {
        let mut d = dout.clone();
        for j in (0..NUM_HEAD).rev() {
            let wi = NUM_GCONV + 2 * j;
            if j + 1 < NUM_HEAD {
                relu_mask(&mut d, &cache.head_z[j]);
            }
            grads[wi] += &cache.head_in[j].t().dot(&d);
            grads[wi + 1] += &d;
            d = d.dot(&self.tensors[wi].t());
        }
        let width = d.ncols();
        let mut dh = Array2::zeros((cache.rows, width));
        match self.kind.pooling() {
            Pooling::Mean => {
                let row = d.row(0).mapv(|v| v / cache.rows as f64);
                dh.rows_mut().into_iter().for_each(|mut r| r.assign(&row));
            }
            Pooling::Max => {
                for (c, &r) in cache.argmax.iter().enumerate() {
                    dh[[r, c]] = d[[0, c]];
                }
            }
        }
        for l in (0..NUM_GCONV).rev() {
            relu_mask(&mut dh, &cache.z[l]);
            grads[l] += &cache.ah[l].t().dot(&dh);
            if l > 0 {
                let dp = dh.dot(&self.tensors[l].t());
                dh = adj.apply(dp.view())?;
            }
        }
        Ok(())
    }

    pub fn logits(&self, graph: &FaceGraph) -> Result<Vec<f64>> {
        let adj = NormalizedAdjacency::from_graph(graph);
        let x = self.features(graph);
        Ok(self.forward(&adj, x.view())?.output().row(0).to_vec())
    }

    /// Class probabilities over the template types (index `t - 1` is type `t`).
    pub fn forward_classify(&self, graph: &FaceGraph) -> Result<Vec<f64>> {
        if self.kind != ModelKind::Classifier {
            return Err(Error::ModelKindMismatch {
                expected: "classifier".into(),
                found: self.kind.tag().into(),
            });
        }
        Ok(softmax(&self.logits(graph)?))
    }

    pub fn forward_centroid(&self, graph: &FaceGraph, k: usize) -> Result<Vec<Vec3>> {
        match self.kind {
            ModelKind::Centroid { k: mk } if mk == k => {}
            other => {
                return Err(Error::ModelKindMismatch {
                    expected: format!("centroid k={k}"),
                    found: match other {
                        ModelKind::Centroid { k } => format!("centroid k={k}"),
                        ModelKind::Classifier => "classifier".into(),
                    },
                })
            }
        }
        let out = self.logits(graph)?;
        Ok(out.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    pub fn zero_grads(&self) -> Vec<Array2<f64>> {
        self.tensors.iter().map(|t| Array2::zeros(t.dim())).collect()
    }
}

/// Node feature matrix a model of `kind` reads from a graph.
pub fn input_features(kind: ModelKind, graph: &FaceGraph) -> Array2<f64> {
    let n = graph.num_nodes();
    match kind {
        ModelKind::Classifier => Array2::from_shape_fn((n, NODE_FEATURES), |(i, j)| graph.node_features[i][j]),
        ModelKind::Centroid { .. } => Array2::from_shape_fn((n, CENTROID_FEATURES), |(i, j)| graph.centroid_features[i][j]),
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// `-log softmax(logits)[label]` via log-sum-exp.
pub fn log_softmax_nll(logits: &[f64], label: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Mean cross entropy over probability vectors (clamped at 1e-12) plus the L2
/// penalty on the graph-convolution weights. `labels` are 0-based classes.
pub fn cross_entropy_loss(probs: &[Vec<f64>], labels: &[usize], lambda: f64, model: &GcnModel) -> f64 {
    let n = probs.len().max(1) as f64;
    let ce: f64 = probs.iter().zip(labels).map(|(p, &y)| -p[y].max(1e-12).ln()).sum::<f64>() / n;
    ce + lambda * model.gconv_sq_norm()
}

/// Loss and gradient of one mini-batch.
pub trait BatchObjective {
    fn target_width(&self) -> usize;
    /// Per-sample loss and `d loss / d output` for a sample output row.
    fn sample_loss(&self, output: &[f64], sample: usize) -> (f64, Vec<f64>);
}

pub struct ClassifierObjective<'a> {
    pub labels: &'a [usize],
}

impl BatchObjective for ClassifierObjective<'_> {
    fn target_width(&self) -> usize {
        NUM_TYPES
    }

    fn sample_loss(&self, output: &[f64], sample: usize) -> (f64, Vec<f64>) {
        let y = self.labels[sample];
        let p = softmax(output);
        let mut d = p;
        d[y] -= 1.0;
        (log_softmax_nll(output, y), d)
    }
}

pub struct CentroidObjective<'a> {
    pub targets: &'a [Vec<f64>],
}

impl BatchObjective for CentroidObjective<'_> {
    fn target_width(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    fn sample_loss(&self, output: &[f64], sample: usize) -> (f64, Vec<f64>) {
        let t = &self.targets[sample];
        let m = t.len() as f64;
        let loss = output.iter().zip(t).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / m;
        let d = output.iter().zip(t).map(|(o, t)| 2.0 * (o - t) / m).collect();
        (loss, d)
    }
}

/// Prepared graph input: adjacency plus the feature matrix the model reads.
pub struct GraphInput {
    pub adj: NormalizedAdjacency,
    pub x: Array2<f64>,
}

impl GraphInput {
    pub fn new(kind: ModelKind, graph: &FaceGraph) -> Self {
        GraphInput {
            adj: NormalizedAdjacency::from_graph(graph),
            x: input_features(kind, graph),
        }
    }
}

/// Mean sample loss plus `lambda Σ‖W_l‖²` over a batch, and its gradient.
/// `indices` select samples from `inputs`; the objective is indexed the same way.
pub fn batch_loss_and_grad(
    model: &GcnModel,
    inputs: &[GraphInput],
    indices: &[usize],
    objective: &dyn BatchObjective,
    lambda: f64,
) -> Result<(f64, Vec<Array2<f64>>)> {
    let mut grads = model.zero_grads();
    let b = indices.len().max(1) as f64;
    let mut loss = 0.0;
    for &i in indices {
        let inp = &inputs[i];
        let cache = model.forward(&inp.adj, inp.x.view())?;
        let out = cache.output().row(0).to_vec();
        let (l, d) = objective.sample_loss(&out, i);
        loss += l / b;
        let dout = Array2::from_shape_vec((1, d.len()), d.into_iter().map(|v| v / b).collect()).expect("row vector");
        model.backward(&inp.adj, &cache, &dout, &mut grads)?;
    }
    loss += lambda * model.gconv_sq_norm();
    for l in 0..NUM_GCONV {
        grads[l].scaled_add(2.0 * lambda, &model.tensors[l]);
    }
    Ok((loss, grads))
}
