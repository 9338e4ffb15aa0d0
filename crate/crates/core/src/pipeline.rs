//! End-to-end orchestration and its plain-text `key = value` configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::gcn::{load_centroid, load_classifier, TrainConfig};
use crate::hexgen::{assemble_with_paths, MAX_LEVEL};
use crate::mesh::io::{read_to_string, write_string};
use crate::mesh::{build_face_graph, detect_sharp_edges, load_tri_mesh, BoxNormalization, HexMesh, TriMesh, DEFAULT_SHARP_ANGLE, Vec3};
use crate::pathopt::{optimize_boundaries, PathSet, PathWeights};
use crate::polycube::{template, PolycubeStructure, NUM_TYPES};
use crate::quality::{classify_boundary_vertices, optimize, pillow, FeatureCurves, OptimizeConfig, OptimizeReport};
use crate::segmentation::{centroid_sources, segment, SegmentConfig, Segmentation, SourceArgs};
use crate::{Error, Result};

/// Every stage parameter in one place. Unset paths disable the stages that
/// need them.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Use the known template type and ground-truth face centroids instead of
    /// the trained models.
    pub oracle: bool,
    pub type_id: Option<usize>,
    /// Per-triangle template face ids of the input, for oracle centroids.
    pub regions: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub centroid_model: Option<PathBuf>,
    pub sharp_angle: f64,
    /// Uniform refinements of the input before segmentation.
    pub refine: usize,
    pub level: u32,
    pub pillow: bool,
    pub path_weights: PathWeights,
    pub segment: SegmentConfig,
    pub optimize: OptimizeConfig,
    pub train: TrainConfig,
    pub dataset_seed: u64,
    pub per_type: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            output: None,
            report: None,
            oracle: false,
            type_id: None,
            regions: None,
            classifier: None,
            centroid_model: None,
            sharp_angle: DEFAULT_SHARP_ANGLE,
            refine: 2,
            level: 3,
            pillow: true,
            path_weights: PathWeights::default(),
            segment: SegmentConfig::default(),
            optimize: OptimizeConfig::default(),
            train: TrainConfig::default(),
            dataset_seed: 1,
            per_type: 50,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{value}' for key '{key}'"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = opt_path(v),
            "output" => self.output = opt_path(v),
            "report" => self.report = opt_path(v),
            "oracle" => self.oracle = parse_bool(key, v)?,
            "type" => self.type_id = if v.is_empty() { None } else { Some(parse_value(key, v)?) },
            "regions" => self.regions = opt_path(v),
            "classifier" => self.classifier = opt_path(v),
            "centroid_model" => self.centroid_model = opt_path(v),
            "sharp_angle" => self.sharp_angle = parse_value(key, v)?,
            "refine" => self.refine = parse_value(key, v)?,
            "level" => self.level = parse_value(key, v)?,
            "pillow" => self.pillow = parse_bool(key, v)?,
            "lambda0_sharp" => self.path_weights.lambda0_sharp = parse_value(key, v)?,
            "lambda0" => self.path_weights.lambda0 = parse_value(key, v)?,
            "lambda1" => self.path_weights.lambda1 = parse_value(key, v)?,
            "lambda2" => self.path_weights.lambda2 = parse_value(key, v)?,
            "kmeans_tol" => self.segment.tol = parse_value(key, v)?,
            "kmeans_max_iters" => self.segment.max_iters = parse_value(key, v)?,
            "alpha" => self.optimize.alpha = parse_value(key, v)?,
            "sj_threshold" => self.optimize.sj_threshold = parse_value(key, v)?,
            "max_iters" => self.optimize.max_iters = parse_value(key, v)?,
            "smoothing" => self.optimize.smoothing = parse_bool(key, v)?,
            "learning_rate" => self.train.learning_rate = parse_value(key, v)?,
            "l2_lambda" => self.train.l2_lambda = parse_value(key, v)?,
            "epochs" => self.train.epochs = parse_value(key, v)?,
            "batch_size" => self.train.batch_size = parse_value(key, v)?,
            "optimizer" => self.train.optimizer = v.to_string(),
            "train_seed" => self.train.rng_seed = parse_value(key, v)?,
            "val_fraction" => self.train.val_fraction = parse_value(key, v)?,
            "target_accuracy" => self.train.target_accuracy = if v.is_empty() { None } else { Some(parse_value(key, v)?) },
            "dataset_seed" => self.dataset_seed = parse_value(key, v)?,
            "per_type" => self.per_type = parse_value(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected 'key = value', got '{line}'")))?;
            cfg.set(k, v).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LEVEL).contains(&self.level) {
            return Err(Error::Config(format!("level must lie in 1..={MAX_LEVEL}, got {}", self.level)));
        }
        if let Some(t) = self.type_id {
            if !(1..=NUM_TYPES).contains(&t) {
                return Err(Error::InvalidTemplate(t));
            }
        }
        if self.oracle && self.type_id.is_none() {
            return Err(Error::Config("oracle mode needs 'type'".into()));
        }
        if !self.oracle && self.classifier.is_none() && self.type_id.is_none() {
            return Err(Error::Config("set 'classifier', or 'type' with 'oracle = true'".into()));
        }
        let w = &self.path_weights;
        if [w.lambda0_sharp, w.lambda0].iter().any(|&l| !(l > 0.0)) || [w.lambda1, w.lambda2].iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::Config("path weights need lambda0 > 0 and lambda1, lambda2 >= 0".into()));
        }
        if !(self.segment.tol > 0.0) || self.segment.max_iters == 0 {
            return Err(Error::Config("kmeans_tol and kmeans_max_iters must be positive".into()));
        }
        if !(0.0..=180.0).contains(&self.sharp_angle) {
            return Err(Error::Config(format!("sharp_angle must lie in [0, 180], got {}", self.sharp_angle)));
        }
        self.optimize.validate()?;
        self.train.validate()
    }

    /// Canonical text form; parsing it reproduces the configuration.
    pub fn to_text(&self) -> String {
        let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", p(&self.input));
        let _ = writeln!(s, "output = {}", p(&self.output));
        let _ = writeln!(s, "report = {}", p(&self.report));
        let _ = writeln!(s, "oracle = {}", self.oracle);
        let _ = writeln!(s, "type = {}", self.type_id.map(|t| t.to_string()).unwrap_or_default());
        let _ = writeln!(s, "regions = {}", p(&self.regions));
        let _ = writeln!(s, "classifier = {}", p(&self.classifier));
        let _ = writeln!(s, "centroid_model = {}", p(&self.centroid_model));
        let _ = writeln!(s, "sharp_angle = {}", self.sharp_angle);
        let _ = writeln!(s, "refine = {}", self.refine);
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "pillow = {}", self.pillow);
        let w = &self.path_weights;
        let _ = writeln!(s, "lambda0_sharp = {}\nlambda0 = {}\nlambda1 = {}\nlambda2 = {}", w.lambda0_sharp, w.lambda0, w.lambda1, w.lambda2);
        let _ = writeln!(s, "kmeans_tol = {}\nkmeans_max_iters = {}", self.segment.tol, self.segment.max_iters);
        let o = &self.optimize;
        let _ = writeln!(s, "alpha = {}\nsj_threshold = {}\nmax_iters = {}\nsmoothing = {}", o.alpha, o.sj_threshold, o.max_iters, o.smoothing);
        let t = &self.train;
        let _ = writeln!(s, "learning_rate = {}\nl2_lambda = {}\nepochs = {}\nbatch_size = {}", t.learning_rate, t.l2_lambda, t.epochs, t.batch_size);
        let _ = writeln!(s, "optimizer = {}\ntrain_seed = {}\nval_fraction = {}", t.optimizer, t.rng_seed, t.val_fraction);
        let _ = writeln!(s, "target_accuracy = {}", t.target_accuracy.map(|a| a.to_string()).unwrap_or_default());
        let _ = writeln!(s, "dataset_seed = {}\nper_type = {}", self.dataset_seed, self.per_type);
        s
    }
}

/// Input and output sizes plus the worst element, one row per model.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineStats {
    pub input_vertices: usize,
    pub input_faces: usize,
    pub level: u32,
    pub output_vertices: usize,
    pub output_elements: usize,
    pub worst_scaled_jacobian: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub type_id: usize,
    pub probabilities: Vec<f64>,
    /// Final hex mesh in the input frame.
    pub hex: HexMesh,
    /// Per-element minimum scaled Jacobian of `hex`.
    pub scaled_jacobian: Vec<f64>,
    pub segmentation: Segmentation,
    pub paths: PathSet,
    pub quality: OptimizeReport,
    pub stats: PipelineStats,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Template type and class probabilities of a normalized mesh.
pub fn classify_mesh(mesh: &TriMesh, cfg: &PipelineConfig) -> Result<(usize, Vec<f64>)> {
    if cfg.oracle {
        let t = cfg.type_id.ok_or_else(|| Error::Config("oracle mode needs 'type'".into()))?;
        let mut p = vec![0.0; NUM_TYPES];
        p[t - 1] = 1.0;
        return Ok((t, p));
    }
    let path = cfg
        .classifier
        .as_ref()
        .ok_or_else(|| Error::Config("no classifier model configured".into()))?;
    let model = load_classifier(path)?;
    let p = model.forward_classify(&build_face_graph(mesh))?;
    let mut best = 0;
    for (i, &q) in p.iter().enumerate() {
        if q > p[best] {
            best = i;
        }
    }
    Ok((cfg.type_id.unwrap_or(best + 1), p))
}

/// Normalization of `input` into the unit box, and the normalized mesh with
/// sharp edges detected when the input carries none.
pub fn prepare_mesh(input: &TriMesh, sharp_angle: f64) -> Result<(BoxNormalization, TriMesh)> {
    let norm = BoxNormalization::of(input)?;
    let mut mesh = input.with_vertices(input.vertices().iter().map(|&p| norm.apply(p)).collect())?;
    if mesh.sharp_edges().is_empty() {
        let sharp = detect_sharp_edges(&mesh, sharp_angle);
        mesh = mesh.with_sharp_edges(sharp);
    }
    Ok((norm, mesh))
}

/// Expected template face positions of a normalized mesh: ground truth from
/// `regions` in oracle mode, the centroid model when configured, template
/// lattice centroids otherwise.
pub fn face_locations(mesh: &TriMesh, regions: Option<&[usize]>, pc: &PolycubeStructure, cfg: &PipelineConfig) -> Result<Vec<Vec3>> {
    if let Some(r) = regions {
        if r.len() != mesh.num_faces() {
            return Err(Error::ShapeMismatch(format!("{} region ids for {} triangles", r.len(), mesh.num_faces())));
        }
    }
    let args = SourceArgs {
        regions: regions.map(<[usize]>::to_vec),
        model: match (&cfg.centroid_model, cfg.oracle) {
            (Some(p), false) => Some(Arc::new(load_centroid(p)?)),
            _ => None,
        },
    };
    let name = match (cfg.oracle, regions.is_some(), args.model.is_some()) {
        (true, true, _) => "truth",
        (false, _, true) => "gcn",
        _ => "template",
    };
    centroid_sources().create(name, &args)?.locations(mesh, pc)
}

/// Refines a normalized mesh `cfg.refine` times and segments it. Locations
/// come from the mesh at input resolution, which is what the centroid model
/// was trained on.
pub fn segment_input(mesh: &TriMesh, regions: Option<&[usize]>, pc: &PolycubeStructure, cfg: &PipelineConfig) -> Result<(TriMesh, Segmentation)> {
    let locations = stage("centroids", face_locations(mesh, regions, pc, cfg))?;
    let mut fine = mesh.clone();
    for _ in 0..cfg.refine {
        fine = fine.refine_uniform().0;
    }
    let seg = stage("segment", segment(&fine, pc, &locations, &cfg.segment))?.segmentation;
    Ok((fine, seg))
}

/// Runs every stage on an input mesh. `regions` are per-triangle template
/// face ids of `input`, required for oracle centroids.
pub fn run_on_mesh(input: &TriMesh, regions: Option<&[usize]>, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    stage("config", cfg.validate())?;
    let (norm, mesh) = stage("normalize", prepare_mesh(input, cfg.sharp_angle))?;
    let (type_id, probabilities) = stage("classify", classify_mesh(&mesh, cfg))?;
    let pc = stage("classify", template(type_id))?;
    let (fine, seg) = segment_input(&mesh, regions, &pc, cfg)?;
    let boundary = stage("pathopt", optimize_boundaries(&fine, &seg, &pc, &cfg.path_weights))?;
    let hex = stage(
        "hexgen",
        assemble_with_paths(&boundary.mesh, &boundary.segmentation, &pc, &boundary.paths, cfg.level),
    )?;
    let hex = if cfg.pillow { stage("pillow", pillow(&hex))? } else { hex };
    let features = FeatureCurves::sharp_paths(&boundary.paths, &boundary.mesh);
    let classes = classify_boundary_vertices(&hex, &boundary.mesh, &features);
    let (mut hex, quality) = stage("quality", optimize(&hex, &boundary.mesh, &features, &classes, &cfg.optimize))?;
    for v in hex.vertices.iter_mut() {
        *v = norm.invert(*v);
    }
    let scaled_jacobian = crate::quality::QualityReport::of(&hex).per_element;
    let stats = PipelineStats {
        input_vertices: input.num_vertices(),
        input_faces: input.num_faces(),
        level: cfg.level,
        output_vertices: hex.num_vertices(),
        output_elements: hex.num_elements(),
        worst_scaled_jacobian: scaled_jacobian.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(PipelineOutput {
        type_id,
        probabilities,
        hex,
        scaled_jacobian,
        segmentation: boundary.segmentation,
        paths: boundary.paths,
        quality,
        stats,
    })
}

/// Loads the configured input, runs the pipeline and writes the output mesh
/// and report when their paths are set.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let input = cfg.input.as_ref().ok_or_else(|| Error::Config("no input mesh configured".into()))?;
    let mesh = stage("load", load_tri_mesh(input))?;
    let regions = match &cfg.regions {
        Some(p) => Some(stage("load", read_to_string(p).and_then(|t| crate::dataset::parse_regions(&t)))?),
        None => None,
    };
    let out = run_on_mesh(&mesh, regions.as_deref(), cfg)?;
    if let Some(p) = &cfg.output {
        stage("save", crate::mesh::io::save_hex_mesh_with_quality(&out.hex, Some(&out.scaled_jacobian), p))?;
    }
    if let Some(p) = &cfg.report {
        stage("save", write_string(p, &format_report(&out)))?;
    }
    Ok(out)
}

/// Header and percentage row of the class probabilities.
pub fn format_probability_row(probabilities: &[f64]) -> String {
    let mut head = String::new();
    let mut row = String::new();
    for (i, p) in probabilities.iter().enumerate() {
        let _ = write!(head, "{:>8}", format!("P{}", i + 1));
        let _ = write!(row, "{:>8.2}", 100.0 * p);
    }
    format!("{}\n{}\n", head.trim_start(), row.trim_start())
}

/// Header and value row of the mesh statistics.
pub fn format_statistics_row(s: &PipelineStats) -> String {
    format!(
        "input (vertices faces)  level  output (vertices elements)  worst SJ\n({} {})  {}  ({} {})  {:.4}\n",
        s.input_vertices, s.input_faces, s.level, s.output_vertices, s.output_elements, s.worst_scaled_jacobian
    )
}

/// Text report: predicted type, both rows and the optimization summary.
pub fn format_report(out: &PipelineOutput) -> String {
    let q = &out.quality;
    let mut s = format!("type {}\n", out.type_id);
    s.push_str(&format_probability_row(&out.probabilities));
    s.push_str(&format_statistics_row(&out.stats));
    let _ = writeln!(
        s,
        "min SJ {:.6}  mean SJ {:.6}  negative {}  iterations {}  initial min SJ {:.6}",
        q.quality.min, q.quality.mean, q.quality.negative, q.iterations, q.initial.min
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_text() {
        let mut cfg = PipelineConfig::default();
        cfg.set("input", "a.obj").unwrap();
        cfg.set("oracle", "true").unwrap();
        cfg.set("type", "4").unwrap();
        cfg.set("alpha", "2e-4").unwrap();
        cfg.set("target_accuracy", "0.9").unwrap();
        let back = PipelineConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert!(back.validate().is_ok());
    }

    #[test]
    fn config_rejects_bad_lines() {
        assert!(PipelineConfig::parse("level 3").is_err());
        assert!(PipelineConfig::parse("colour = red").unwrap_err().to_string().contains("unknown key"));
        assert!(PipelineConfig::parse("level = three").is_err());
        let cfg = PipelineConfig::parse("level = 9\noracle = true\ntype = 1").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::parse("# comment\nlevel = 2 # trailing\n").unwrap();
        assert_eq!(cfg.level, 2);
    }

    #[test]
    fn probability_row_is_percentages() {
        let mut p = vec![0.0; NUM_TYPES];
        p[2] = 1.0;
        let row = format_probability_row(&p);
        let lines: Vec<&str> = row.lines().collect();
        assert!(lines[0].starts_with("P1"));
        assert_eq!(lines[1].split_whitespace().nth(2), Some("100.00"));
    }

    #[test]
    fn missing_classifier_names_the_file() {
        let cfg = PipelineConfig {
            classifier: Some(PathBuf::from("/nonexistent/model.txt")),
            ..Default::default()
        };
        let mesh = crate::mesh::shapes::unit_cube();
        let err = run_on_mesh(&mesh, None, &cfg).unwrap_err();
        assert!(err.to_string().contains("classify"));
        let msg = format!("{err}: {}", std::error::Error::source(&err).unwrap());
        assert!(msg.contains("/nonexistent/model.txt"), "{msg}");
    }
}
