use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::model::{tensor_names, tensor_shapes, GcnModel, ModelKind};
use crate::mesh::io::{read_to_string, write_string};
use crate::{Error, Result};

const MAGIC: &str = "gcn-model 1";

pub fn format_model(model: &GcnModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "kind {}", model.kind.tag());
    if let ModelKind::Centroid { k } = model.kind {
        let _ = writeln!(s, "k {k}");
    }
    let _ = writeln!(s, "pooling {}", model.kind.pooling().tag());
    let _ = writeln!(s, "seed {}", model.seed);
    let _ = writeln!(s, "tensors {}", model.tensors.len());
    for (name, t) in tensor_names().iter().zip(&model.tensors) {
        let _ = writeln!(s, "{name} {} {}", t.nrows(), t.ncols());
    }
    for t in &model.tensors {
        for row in t.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

pub fn parse_model(text: &str) -> Result<GcnModel> {
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| corrupt(format!("missing {what}")));
    if next("header")?.trim() != MAGIC {
        return Err(corrupt("bad header"));
    }
    let field = |line: &str, key: &str| -> Result<String> {
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
            _ => Err(corrupt(format!("expected '{key} <value>', found '{line}'"))),
        }
    };
    let kind_tag = field(next("kind")?, "kind")?;
    let kind = match kind_tag.as_str() {
        "classifier" => ModelKind::Classifier,
        "centroid" => {
            let k = field(next("k")?, "k")?.parse().map_err(|_| corrupt("bad k"))?;
            ModelKind::Centroid { k }
        }
        other => return Err(corrupt(format!("unknown kind '{other}'"))),
    };
    let pooling = field(next("pooling")?, "pooling")?;
    if pooling != kind.pooling().tag() {
        return Err(corrupt(format!("pooling '{pooling}' does not match kind {}", kind.tag())));
    }
    let seed = field(next("seed")?, "seed")?.parse().map_err(|_| corrupt("bad seed"))?;
    let count: usize = field(next("tensors")?, "tensors")?.parse().map_err(|_| corrupt("bad tensor count"))?;
    let want = tensor_shapes(kind);
    if count != want.len() {
        return Err(corrupt(format!("expected {} tensors, found {count}", want.len())));
    }
    let mut shapes = Vec::with_capacity(count);
    for (name, w) in tensor_names().iter().zip(&want) {
        let line = next("shape table")?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        let parsed = match tok.as_slice() {
            [n, r, c] if n == name => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
            _ => None,
        };
        match parsed {
            Some(shape) if shape == *w => shapes.push(shape),
            _ => return Err(corrupt(format!("shape table entry '{line}' does not match {name} {} {}", w.0, w.1))),
        }
    }
    let mut tensors = Vec::with_capacity(count);
    for (name, &(r, c)) in tensor_names().iter().zip(&shapes) {
        let mut vals = Vec::with_capacity(r * c);
        for _ in 0..r {
            let line = next("weights")?;
            let before = vals.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| corrupt(format!("bad value '{tok}' in {name}")))?;
                if !v.is_finite() {
                    return Err(corrupt(format!("non-finite value in {name}")));
                }
                vals.push(v);
            }
            if vals.len() - before != c {
                return Err(corrupt(format!("row of {name} has {} values, expected {c}", vals.len() - before)));
            }
        }
        tensors.push(Array2::from_shape_vec((r, c), vals).expect("row count checked"));
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(corrupt("trailing data"));
    }
    Ok(GcnModel { kind, seed, tensors })
}

pub fn save_model(model: &GcnModel, path: &Path) -> Result<()> {
    write_string(path, &format_model(model))
}

pub fn load_model(path: &Path) -> Result<GcnModel> {
    parse_model(&read_to_string(path)?)
}

pub fn load_classifier(path: &Path) -> Result<GcnModel> {
    let m = load_model(path)?;
    if m.kind != ModelKind::Classifier {
        return Err(Error::ModelKindMismatch {
            expected: "classifier".into(),
            found: m.kind.tag().into(),
        });
    }
    Ok(m)
}

pub fn load_centroid(path: &Path) -> Result<GcnModel> {
    let m = load_model(path)?;
    if !matches!(m.kind, ModelKind::Centroid { .. }) {
        return Err(Error::ModelKindMismatch {
            expected: "centroid".into(),
            found: m.kind.tag().into(),
        });
    }
    Ok(m)
}
