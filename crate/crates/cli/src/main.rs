use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hexcube::dataset::{generate_dataset, load_dataset, parse_regions, write_dataset, DatasetConfig};
use hexcube::gcn::{load_model, save_model, train_centroid, train_classifier, ModelKind};
use hexcube::hexgen::{assemble_hex_mesh, assemble_with_paths};
use hexcube::mesh::io::{read_to_string, save_hex_mesh_with_quality, write_string};
use hexcube::mesh::{build_face_graph, detect_sharp_edges, load_hex_mesh, load_tri_mesh, save_hex_mesh, save_tri_mesh};
use hexcube::pathopt::{load_paths, optimize_boundaries, save_paths};
use hexcube::pipeline::{format_probability_row, format_report, prepare_mesh, run_pipeline, segment_input, PipelineConfig};
use hexcube::polycube::{template, NUM_TYPES};
use hexcube::quality::{classify_boundary_vertices, optimize, pillow, FeatureCurves, OptimizeReport};
use hexcube::segmentation::{load_segmentation, save_segmentation};

#[derive(Parser)]
#[command(name = "hexcube", version, about = "Polycube-guided all-hex meshing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by every subcommand: a `key = value` file plus overrides.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set level=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate deformed template surfaces with per-triangle face labels.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated template types; all when omitted.
        #[arg(long, value_delimiter = ',')]
        types: Vec<usize>,
        #[arg(long)]
        per_type: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train the structure classifier or a per-type centroid regressor.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `classifier` or `centroid`.
        #[arg(long, default_value = "classifier")]
        kind: String,
        /// Template type whose samples train a centroid regressor.
        #[arg(long = "type")]
        type_id: Option<usize>,
        /// Write the per-epoch trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run a trained model on a mesh.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Refine and segment a mesh into the patches of a template.
    Segment {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long = "type")]
        type_id: usize,
        /// Ground-truth face labels of the input (oracle centroids).
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long)]
        centroid_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// The refined mesh the segmentation indexes into.
        #[arg(long)]
        mesh_out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Reroute patch boundaries along shortest paths between corners.
    Pathopt {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        seg: PathBuf,
        #[arg(long = "type")]
        type_id: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mesh_out: PathBuf,
        #[arg(long)]
        seg_out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Build the octree hex mesh from a segmented surface.
    Hexmesh {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        seg: PathBuf,
        #[arg(long = "type")]
        type_id: usize,
        #[arg(long, default_value_t = 3)]
        level: u32,
        /// Boundary paths from `pathopt`; derived from the segmentation when omitted.
        #[arg(long)]
        paths: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pillow, smooth and optimize a hex mesh against its surface.
    Quality {
        #[arg(long)]
        hex: PathBuf,
        #[arg(long)]
        tri: PathBuf,
        /// Boundary paths from `pathopt`; those along sharp edges become feature
        /// curves. Sharp-edge chains of `tri` otherwise.
        #[arg(long)]
        paths: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        no_pillow: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run every stage from a configuration.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        #[arg(long = "type")]
        type_id: Option<usize>,
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        centroid_model: Option<PathBuf>,
        #[arg(long)]
        level: Option<u32>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn ensure_exists(p: &Path) -> Result<()> {
    if !p.exists() {
        bail!("file not found: {}", p.display());
    }
    Ok(())
}

fn load_regions(p: &Path) -> Result<Vec<usize>> {
    Ok(parse_regions(&read_to_string(p)?)?)
}

fn quality_summary(r: &OptimizeReport) -> String {
    format!(
        "min SJ {:.6}  mean SJ {:.6}  negative {}  iterations {}  initial min SJ {:.6}\n",
        r.quality.min, r.quality.mean, r.quality.negative, r.iterations, r.initial.min
    )
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenDataset {
            out,
            types,
            per_type,
            seed,
            cfg,
        } => {
            let cfg = cfg.load()?;
            let types = if types.is_empty() { (1..=NUM_TYPES).collect() } else { types };
            let samples = generate_dataset(
                &types,
                per_type.unwrap_or(cfg.per_type),
                seed.unwrap_or(cfg.dataset_seed),
                &DatasetConfig::default(),
            )?;
            write_dataset(&out, &samples)?;
            println!("wrote {} samples to {}", samples.len(), out.display());
        }
        Command::Train {
            data,
            out,
            kind,
            type_id,
            trace,
            cfg,
        } => {
            let cfg = cfg.load()?;
            let samples = load_dataset(&data)?;
            let (model, tr) = match kind.as_str() {
                "classifier" => train_classifier(&samples, &cfg.train)?,
                "centroid" => {
                    let t = type_id.context("centroid training needs --type")?;
                    let subset: Vec<_> = samples.into_iter().filter(|s| s.label == t).collect();
                    if subset.is_empty() {
                        bail!("no samples of type {t} in {}", data.display());
                    }
                    train_centroid(&subset, &cfg.train)?
                }
                other => bail!("unknown model kind '{other}'"),
            };
            save_model(&model, &out)?;
            if let Some(p) = trace {
                write_string(&p, &tr.to_text())?;
            }
            if let Some(last) = tr.last() {
                println!(
                    "epochs {}  loss {:.6}  train {:.4}  val {:.4}",
                    tr.epochs.len(),
                    last.loss,
                    last.train_metric,
                    last.val_metric
                );
            }
        }
        Command::Predict { model, mesh } => {
            ensure_exists(&model)?;
            let model = load_model(&model)?;
            let (_, mesh) = prepare_mesh(&load_tri_mesh(&mesh)?, hexcube::mesh::DEFAULT_SHARP_ANGLE)?;
            let graph = build_face_graph(&mesh);
            match model.kind {
                ModelKind::Classifier => {
                    let p = model.forward_classify(&graph)?;
                    let best = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
                    print!("{}", format_probability_row(&p));
                    println!("type {}", best + 1);
                }
                ModelKind::Centroid { k } => {
                    for (i, c) in model.forward_centroid(&graph, k)?.iter().enumerate() {
                        println!("{i} {:e} {:e} {:e}", c.x, c.y, c.z);
                    }
                }
            }
        }
        Command::Segment {
            mesh,
            type_id,
            regions,
            centroid_model,
            out,
            mesh_out,
            cfg,
        } => {
            let mut cfg = cfg.load()?;
            cfg.oracle = regions.is_some();
            cfg.centroid_model = centroid_model;
            let input = load_tri_mesh(&mesh)?;
            let regions = regions.as_deref().map(load_regions).transpose()?;
            let pc = template(type_id)?;
            let (norm, normalized) = prepare_mesh(&input, cfg.sharp_angle)?;
            let (fine, seg) = segment_input(&normalized, regions.as_deref(), &pc, &cfg)?;
            let fine = fine.with_vertices(fine.vertices().iter().map(|&p| norm.invert(p)).collect())?;
            save_tri_mesh(&fine, &mesh_out)?;
            save_segmentation(&seg, &out)?;
            println!("{} triangles in {} patches", fine.num_faces(), pc.num_boundary_faces());
        }
        Command::Pathopt {
            mesh,
            seg,
            type_id,
            out,
            mesh_out,
            seg_out,
            cfg,
        } => {
            let cfg = cfg.load()?;
            let m = load_tri_mesh(&mesh)?;
            let sharp = detect_sharp_edges(&m, cfg.sharp_angle);
            let m = m.with_sharp_edges(sharp);
            let r = optimize_boundaries(&m, &load_segmentation(&seg)?, &template(type_id)?, &cfg.path_weights)?;
            save_tri_mesh(&r.mesh, &mesh_out)?;
            save_segmentation(&r.segmentation, &seg_out)?;
            save_paths(&r.paths, &out)?;
            println!("{} paths{}", r.paths.paths.len(), if r.refined { " (mesh refined)" } else { "" });
        }
        Command::Hexmesh {
            mesh,
            seg,
            type_id,
            level,
            paths,
            out,
        } => {
            let m = load_tri_mesh(&mesh)?;
            let s = load_segmentation(&seg)?;
            let pc = template(type_id)?;
            let hex = match paths {
                Some(p) => assemble_with_paths(&m, &s, &pc, &load_paths(&p)?, level)?,
                None => assemble_hex_mesh(&m, &s, &pc, level)?,
            };
            save_hex_mesh(&hex, &out)?;
            println!("{} vertices, {} elements", hex.num_vertices(), hex.num_elements());
        }
        Command::Quality {
            hex,
            tri,
            paths,
            alpha,
            threshold,
            max_iters,
            no_pillow,
            out,
            report,
            cfg,
        } => {
            let mut cfg = cfg.load()?;
            if let Some(a) = alpha {
                cfg.optimize.alpha = a;
            }
            if let Some(t) = threshold {
                cfg.optimize.sj_threshold = t;
            }
            if let Some(n) = max_iters {
                cfg.optimize.max_iters = n;
            }
            let (h, _) = load_hex_mesh(&hex)?;
            let t = load_tri_mesh(&tri)?;
            let sharp = detect_sharp_edges(&t, cfg.sharp_angle);
            let t = t.with_sharp_edges(sharp);
            let features = match paths {
                Some(p) => FeatureCurves::sharp_paths(&load_paths(&p)?, &t),
                None => FeatureCurves::from_sharp_edges(&t),
            };
            let h = if no_pillow { h } else { pillow(&h)? };
            let classes = classify_boundary_vertices(&h, &t, &features);
            let (opt, rep) = optimize(&h, &t, &features, &classes, &cfg.optimize)?;
            save_hex_mesh_with_quality(&opt, Some(&rep.quality.per_element), &out)?;
            let text = quality_summary(&rep);
            if let Some(p) = report {
                write_string(&p, &text)?;
            }
            print!("{text}");
        }
        Command::Pipeline {
            input,
            output,
            report,
            oracle,
            type_id,
            regions,
            classifier,
            centroid_model,
            level,
            cfg,
        } => {
            let mut cfg = cfg.load()?;
            cfg.input = input.or(cfg.input);
            cfg.output = output.or(cfg.output);
            cfg.report = report.or(cfg.report);
            cfg.oracle |= oracle;
            cfg.type_id = type_id.or(cfg.type_id);
            cfg.regions = regions.or(cfg.regions);
            cfg.classifier = classifier.or(cfg.classifier);
            cfg.centroid_model = centroid_model.or(cfg.centroid_model);
            cfg.level = level.unwrap_or(cfg.level);
            for p in [&cfg.input, &cfg.regions, &cfg.classifier, &cfg.centroid_model].into_iter().flatten() {
                ensure_exists(p)?;
            }
            let out = run_pipeline(&cfg)?;
            print!("{}", format_report(&out));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
