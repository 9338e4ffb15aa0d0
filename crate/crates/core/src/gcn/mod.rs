//! Graph convolutional networks over the face graph of a triangle mesh: the
//! template classifier and the region-centroid regressor.

mod adjacency;
mod io;
mod model;
mod optim;
mod train;

use ndarray::{Array2, ArrayView2};

pub use adjacency::NormalizedAdjacency;
pub use io::{format_model, load_centroid, load_classifier, load_model, parse_model, save_model};
pub use model::{
    batch_loss_and_grad, cross_entropy_loss, input_features, log_softmax_nll, softmax, tensor_names, tensor_shapes,
    BatchObjective, CentroidObjective, ClassifierObjective, ForwardCache, GcnModel, GraphInput, ModelKind, Pooling,
    CENTROID_FEATURES, GCONV_WIDTHS, HEAD_WIDTHS, NUM_GCONV, NUM_HEAD,
};
pub use optim::{optimizers, Adam, Optimizer, OptimizerParams, RmsProp};
pub use train::{
    accuracy, centroid_mse, stratified_split, train_centroid, train_classifier, EpochStats, TrainConfig, TrainTrace,
};

use crate::{Error, Result};

/// `ReLU(Â F W)`.
pub fn gcn_layer_forward(f: ArrayView2<f64>, adj: &NormalizedAdjacency, w: ArrayView2<f64>) -> Result<Array2<f64>> {
    if f.ncols() != w.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "feature width {} does not match weight rows {}",
            f.ncols(),
            w.nrows()
        )));
    }
    Ok(adj.apply(f)?.dot(&w).mapv(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::mesh::{build_face_graph, shapes::tetrahedron};
    use ndarray::Array2;

    #[test]
    fn layer_examples() {
        let adj = NormalizedAdjacency::from_neighbors(&[vec![]]);
        let f = Array2::ones((1, 12));
        let w = Array2::eye(12);
        assert_eq!(gcn_layer_forward(f.view(), &adj, w.view()).unwrap(), f);
        let z = gcn_layer_forward(f.view(), &adj, Array2::zeros((12, 5)).view()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(gcn_layer_forward(f.view(), &adj, Array2::zeros((3, 5)).view()).is_err());
    }

    #[test]
    fn zero_model_outputs() {
        let g = build_face_graph(&tetrahedron());
        let p = GcnModel::zeros(ModelKind::Classifier).forward_classify(&g).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 11.0).abs() < 1e-15));
        let mut m = GcnModel::zeros(ModelKind::Centroid { k: 2 });
        let last = m.tensors.len() - 1;
        m.tensors[last] = ndarray::arr2(&[[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
        let c = m.forward_centroid(&g, 2).unwrap();
        assert_eq!(c[1].to_array(), [4.0, 5.0, 6.0]);
        assert!(m.forward_centroid(&g, 3).is_err());
        assert!(m.forward_classify(&g).is_err());
    }

    #[test]
    fn loss_examples() {
        let m = GcnModel::zeros(ModelKind::Classifier);
        let onehot = vec![{
            let mut p = vec![0.0; 11];
            p[4] = 1.0;
            p
        }];
        assert_eq!(cross_entropy_loss(&onehot, &[4], 0.0, &m), 0.0);
        let uniform = vec![vec![1.0 / 11.0; 11]; 3];
        let l = cross_entropy_loss(&uniform, &[0, 5, 10], 0.0, &m);
        assert!((l - 11f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy_loss(&uniform, &[0, 5, 10], 0.5, &m), l);
        let g = GcnModel::glorot(ModelKind::Classifier, 3);
        let a = cross_entropy_loss(&uniform, &[1, 1, 1], 0.1, &g);
        let b = cross_entropy_loss(&uniform, &[1, 1, 1], 0.0, &g);
        assert_eq!(a - b, 0.1 * g.gconv_sq_norm());
    }

    #[test]
    fn probabilities_are_invariant_under_node_relabeling() {
        let data = generate_dataset(&[1], 1, 3, &DatasetConfig::default()).unwrap();
        let g = &data[0].graph;
        let n = g.num_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let model = GcnModel::glorot(ModelKind::Classifier, 1);
        let a = model.forward_classify(g).unwrap();
        let b = model.forward_classify(&g.permuted(&perm)).unwrap();
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn model_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let model = GcnModel::glorot(ModelKind::Centroid { k: 4 }, 9);
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        assert!(matches!(load_classifier(&path), Err(Error::ModelKindMismatch { .. })));
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = &text[..text.len() / 2];
        let err = parse_model(cut).unwrap_err();
        assert!(err.to_string().starts_with("corrupt model file"), "{err}");
    }

    #[test]
    fn single_class_training_is_trivial() {
        let data = generate_dataset(&[1], 4, 0, &DatasetConfig::default()).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let (model, trace) = train_classifier(&data, &cfg).unwrap();
        assert_eq!(trace.last().unwrap().val_metric, 1.0);
        assert!(trace.epochs.windows(2).all(|w| w[1].loss < w[0].loss));
        let (again, trace2) = train_classifier(&data, &cfg).unwrap();
        assert_eq!(again, model);
        assert_eq!(trace2, trace);
    }
}
