use std::fs;
use std::path::{Path, PathBuf};

use orthonet_core::io::text::{
    format_partition_csv, read_assignments, read_matrix_csv, write_matrix_csv, write_partition_csv,
};
use orthonet_core::io::BundlePaths;
use orthonet_core::pipeline::spectral_baseline;
use orthonet_core::{
    classify_rows, generate_synthetic, load_bundle, load_bundle_dir, run_generalization,
    run_pipeline, save_bundle, DatasetBundle, DiagonalShift, EmbedderModel, Error,
    FeatureMatrix,
    MetricsReport, PipelineConfig, Result, SyntheticSpec,
};
use serde::{Deserialize, Serialize};

use crate::args::{EvaluateArgs, PipelineArgs, PredictArgs, SynthArgs};

pub const METRICS_FILE: &str = "metrics.json";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const CENTERS_FILE: &str = "centers.csv";
pub const MODEL_FILE: &str = "model.json";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const LOSS_FILE: &str = "loss.csv";
pub const LAPLACIAN_FILE: &str = "laplacian.csv";
pub const GENERALIZATION_FILE: &str = "generalization.json";
pub const SPECTRAL_METRICS_FILE: &str = "spectral_metrics.json";
pub const SPECTRAL_ASSIGNMENTS_FILE: &str = "spectral_assignments.csv";

/// Everything a `pipeline` run can be configured with. The JSON config file
/// uses these field names.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub train_fraction: Option<f64>,
    pub repeats: Option<usize>,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if let Some(f) = self.train_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("train fraction must lie in (0, 1], got {f}")));
            }
        }
        if self.repeats == Some(0) {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        self.pipeline.validate()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_points: args.n,
        n_clusters: args.k,
        n_layers: args.s,
        dim_per_layer: args.d,
        knn_k: args.knn,
        seed: args.seed,
        separation: args.separation,
        ..SyntheticSpec::default()
    };
    let bundle = generate_synthetic(&spec)?;
    let files = save_bundle(&bundle, &args.out)?;
    let m = bundle.manifest();
    log::info!(
        "wrote {} files to {}: N={}, M={}, S={}, K={}",
        files.len(),
        args.out.display(),
        m.n,
        m.m,
        m.s,
        m.k_true.unwrap_or(0)
    );
    Ok(())
}

fn load_input(args: &PipelineArgs) -> Result<DatasetBundle> {
    match (&args.data, &args.features) {
        (Some(dir), _) => load_bundle_dir(dir),
        (None, Some(features)) => load_bundle(&BundlePaths {
            layers: args.layer.clone(),
            features: features.clone(),
            labels: args.labels.clone(),
            features_header: args.header,
        }),
        (None, None) => Err(Error::invalid("either --data or --layer/--features is required")),
    }
}

/// Parsed config file, plus whether it set `k` itself.
fn read_config(path: Option<&PathBuf>) -> Result<(RunConfig, bool)> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), false));
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json_err = |source| Error::Json {
        path: path.clone(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    let has_k = value.get("k").is_some();
    Ok((serde_json::from_value(value).map_err(json_err)?, has_k))
}

/// Config file first, then command-line flags on top.
fn resolve_config(args: &PipelineArgs, bundle: &DatasetBundle) -> Result<RunConfig> {
    let (mut run, file_has_k) = read_config(args.config.as_ref())?;
    let cfg = &mut run.pipeline;
    match (args.k, file_has_k, bundle.k_true()) {
        (Some(k), _, _) => cfg.k = k,
        (None, true, _) => {}
        (None, false, Some(k)) => cfg.k = k,
        (None, false, None) => {
            return Err(Error::invalid("--k is required when the dataset has no labels"));
        }
    }
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(layers) = &args.layers {
        cfg.layers = Some(layers.clone());
    }
    if let Some(it) = args.iterations {
        cfg.aggregation.max_iterations = it;
    }
    if let Some(step) = args.step_size {
        cfg.aggregation.step_size = step;
    }
    if let Some(shift) = args.shift {
        cfg.aggregation.shift = DiagonalShift::Relative(shift);
    }
    if let Some(lr) = args.learning_rate {
        cfg.train.learning_rate = lr;
    }
    if let Some(steps) = args.max_steps {
        cfg.train.max_steps = steps;
    }
    if let Some(r) = args.restarts {
        cfg.kmeans.restarts = r;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    if args.train_fraction.is_some() {
        run.train_fraction = args.train_fraction;
    }
    if args.repeats.is_some() {
        run.repeats = args.repeats;
    }
    run.validate()?;
    Ok(run)
}

pub fn pipeline(args: &PipelineArgs) -> Result<()> {
    let bundle = load_input(args)?;
    let run = resolve_config(args, &bundle)?;
    let cfg = &run.pipeline;
    create_dir(&args.out)?;
    write_text(
        &args.out.join("config.json"),
        &(serde_json::to_string_pretty(&run).expect("config serializes") + "\n"),
    )?;

    if let Some(fraction) = run.train_fraction {
        let repeats = run.repeats.unwrap_or(1);
        let report = run_generalization(&bundle, cfg, fraction, repeats)?;
        log::info!(
            "trained on {:.0}% of the nodes: NMI {:.4} ± {:.4} over {repeats} subsets",
            fraction * 100.0,
            report.nmi_mean,
            report.nmi_std
        );
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        write_text(&args.out.join(GENERALIZATION_FILE), &text)?;
        print!("{text}");
        return Ok(());
    }

    let out = run_pipeline(&bundle, cfg)?;
    if args.export_laplacian {
        write_matrix_csv(out.aggregated.as_array(), &args.out.join(LAPLACIAN_FILE))?;
    }
    out.model.save(&args.out.join(MODEL_FILE))?;
    write_partition_csv(&out.partition.assignments, &args.out.join(ASSIGNMENTS_FILE))?;
    write_matrix_csv(&out.partition.centers, &args.out.join(CENTERS_FILE))?;
    write_matrix_csv(&out.embedding.whitened, &args.out.join(EMBEDDING_FILE))?;
    let loss: String = out.embedding.loss_history.iter().map(|v| format!("{v}\n")).collect();
    write_text(&args.out.join(LOSS_FILE), &loss)?;

    if args.spectral_baseline {
        let (partition, metrics) = spectral_baseline(&bundle, cfg)?;
        write_partition_csv(&partition.assignments, &args.out.join(SPECTRAL_ASSIGNMENTS_FILE))?;
        if let Some(m) = metrics {
            log::info!("spectral baseline: purity {:.4}, NMI {:.4}, ARI {:.4}", m.purity, m.nmi, m.ari);
            write_text(&args.out.join(SPECTRAL_METRICS_FILE), &(m.to_json() + "\n"))?;
        }
    }
    if let Some(m) = &out.metrics {
        log::info!("purity {:.4}, NMI {:.4}, ARI {:.4}", m.purity, m.nmi, m.ari);
        let text = m.to_json() + "\n";
        write_text(&args.out.join(METRICS_FILE), &text)?;
        print!("{text}");
    }
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let model = EmbedderModel::load(&args.model)?;
    let centers = read_matrix_csv(&args.centers, false)?;
    let features = read_matrix_csv(&args.features, args.header)?;
    let text = if features.nrows() == 0 {
        String::new()
    } else {
        if features.ncols() != model.input_dim() {
            return Err(Error::invalid(format!(
                "feature file has {} columns but the model expects M={}",
                features.ncols(),
                model.input_dim()
            )));
        }
        let x = FeatureMatrix::new(features)?;
        format_partition_csv(&classify_rows(&model, centers.view(), x.view())?)
    };
    match &args.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let pred = read_assignments(&args.pred)?;
    let truth = read_assignments(&args.truth)?;
    let text = MetricsReport::compute(&pred, &truth)?.to_json() + "\n";
    match &args.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
