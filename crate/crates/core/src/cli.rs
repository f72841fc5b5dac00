//! `gripper-label` command line: label, synth, eval and sample-mesh.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 some demos failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::ply::{write_point_cloud, PlyFormat};
use crate::config::{sha256_hex, LoadedModel, PipelineConfig};
use crate::dataset::{self, CAMERAS_FILE, GROUND_TRUTH_FILE};
use crate::error::{Error, Result};
use crate::labeling::label_demonstration;
use crate::mesh::{load_mesh, sample_uniform};
use crate::synthetic::{error_stats, generate_synthetic_demo, pose_error, read_ground_truth, ErrorStats, PoseError, ScenarioFile};
use crate::tracking::{PoseRecord, SymmetryGroup, SymmetrySpec};
use crate::RigidTransform;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const POSES_FILE: &str = "poses.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";

/// Frames within both limits count as accurate in `eval`.
pub const ACCURATE_TRANSLATION: f64 = 0.005;
pub const ACCURATE_ROTATION_DEG: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(name = "gripper-label", version, about = "Pose and action labels for color-coded gripper recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every demonstration in a dataset directory.
    Label(LabelArgs),
    /// Render synthetic demonstrations with ground truth.
    Synth(SynthArgs),
    /// Score pose tracks against ground truth.
    Eval(EvalArgs),
    /// Sample a point cloud uniformly from a mesh surface.
    SampleMesh(SampleMeshArgs),
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(required_unless_present = "print_default_config")]
    pub dataset: Option<PathBuf>,
    #[arg(required_unless_present = "print_default_config")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the full default config as JSON and exit.
    #[arg(long)]
    pub print_default_config: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub labels: PathBuf,
    pub ground_truth: PathBuf,
    /// "x,y,z:order"; defaults to the symmetry recorded by `label`.
    #[arg(long)]
    pub symmetry: Option<String>,
    /// Compare runs made with different configs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Binary,
    Ascii,
}

#[derive(Debug, Args)]
pub struct SampleMeshArgs {
    pub mesh: PathBuf,
    pub out: PathBuf,
    #[arg(short = 'n', long, default_value_t = 5000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Label(a) => cmd_label(&a),
        Command::Synth(a) => cmd_synth(&a).map(|()| EXIT_OK),
        Command::Eval(a) => cmd_eval(&a).map(|m| {
            let _ = std::io::stdout().write_all(metrics_table(&m).as_bytes());
            EXIT_OK
        }),
        Command::SampleMesh(a) => cmd_sample_mesh(&a).map(|()| EXIT_OK),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::config("jobs", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn file_hash(path: &Path) -> Result<String> {
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// label

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub ransac: u64,
    pub model: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub demo: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub model_hash: String,
    pub cameras_hash: String,
    pub symmetry: Option<SymmetrySpec>,
    pub frames: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub id: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub frames: usize,
    pub labels: usize,
    pub mean_fitness: f64,
    pub flagged_steps: usize,
    pub global_registrations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// The only field that differs between identical runs.
    pub generated_at: String,
    pub config_hash: String,
    pub succeeded: usize,
    pub failed: usize,
    pub demos: Vec<DemoSummary>,
}

fn label_one(dir: &Path, out: &Path, config: &PipelineConfig, model: &LoadedModel) -> Result<DemoSummary> {
    let demo = dataset::load_demonstration(dir)?;
    let labeled = label_demonstration(&demo, &model.cloud, &model.group, config)?;
    let demo_out = out.join(&demo.id);
    create_dir(&demo_out)?;
    dataset::write_lines(&demo_out.join(POSES_FILE), &labeled.track.to_jsonl())?;
    let export = config.export;
    let labels = labeled.records(export.relative_actions, export.drop_flagged).len();
    dataset::write_lines(
        &demo_out.join(LABELS_FILE),
        &labeled.labels_jsonl(export.relative_actions, export.drop_flagged),
    )?;
    let manifest = Manifest {
        demo: demo.id.clone(),
        config_hash: config.hash(),
        seeds: Seeds {
            ransac: config.ransac.seed,
            model: config.model.seed,
        },
        model_hash: model.hash.clone(),
        cameras_hash: file_hash(&dir.join(CAMERAS_FILE))?,
        symmetry: config.symmetry,
        frames: demo.len(),
        labels,
    };
    dataset::write_json_pretty(&demo_out.join(MANIFEST_FILE), &manifest)?;
    Ok(DemoSummary {
        id: demo.id,
        ok: true,
        error: None,
        frames: labeled.track.len(),
        labels,
        mean_fitness: labeled.mean_fitness(),
        flagged_steps: labeled.flagged_steps(),
        global_registrations: labeled.track.global_registrations,
    })
}

pub fn cmd_label(args: &LabelArgs) -> Result<i32> {
    if args.print_default_config {
        let _ = writeln!(std::io::stdout(), "{}", PipelineConfig::default().to_json_pretty());
        return Ok(EXIT_OK);
    }
    let (Some(dataset_dir), Some(out)) = (&args.dataset, &args.out) else {
        return Err(Error::config("dataset", "dataset and output directories are required"));
    };
    let mut config = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.reseed(seed);
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    config.validate()?;
    let demos = dataset::list_demonstrations(dataset_dir)?;
    if demos.is_empty() {
        return Err(Error::Layout {
            path: dataset_dir.clone(),
            reason: "no demonstrations found".into(),
        });
    }
    let model = config.load_model()?;
    create_dir(out)?;
    dataset::write_lines(&out.join("config.json"), &config.canonical().to_json_pretty())?;

    let results: Vec<DemoSummary> = pool(config.jobs)?.install(|| {
        demos
            .par_iter()
            .map(|dir| {
                label_one(dir, out, &config, &model).unwrap_or_else(|e| DemoSummary {
                    id: dataset::demo_id(dir),
                    ok: false,
                    error: Some(e.to_string()),
                    frames: dataset::count_frames(dir),
                    labels: 0,
                    mean_fitness: 0.0,
                    flagged_steps: 0,
                    global_registrations: 0,
                })
            })
            .collect()
    });
    let failed = results.iter().filter(|d| !d.ok).count();
    for d in &results {
        match &d.error {
            None => eprintln!("{}: {} labels, mean fitness {:.3}", d.id, d.labels, d.mean_fitness),
            Some(e) => eprintln!("{}: failed: {e}", d.id),
        }
    }
    let summary = Summary {
        generated_at: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
        config_hash: config.hash(),
        succeeded: results.len() - failed,
        failed,
        demos: results,
    };
    dataset::write_json_pretty(&out.join(SUMMARY_FILE), &summary)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PARTIAL })
}

// ---------------------------------------------------------------------------
// synth

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut scenario = ScenarioFile::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let mesh = scenario.load_mesh()?;
    create_dir(&args.out)?;
    dataset::write_json_pretty(&args.out.join("scenario.json"), &scenario)?;
    pool(args.jobs.unwrap_or(1))?.install(|| {
        (0..scenario.demos).into_par_iter().try_for_each(|d| {
            let id = scenario.demo_id(d);
            let synth = generate_synthetic_demo(&mesh, &scenario.scenario(d)?, &id)?;
            crate::synthetic::write_synthetic_demo(&args.out.join(&id), &synth)?;
            eprintln!("{id}: {} frames", synth.demo.len());
            Ok(())
        })
    })
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoMetrics {
    pub id: String,
    #[serde(flatten)]
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub symmetry: Option<SymmetrySpec>,
    pub max_translation: f64,
    pub max_rotation_deg: f64,
    pub demos: Vec<DemoMetrics>,
    pub aggregate: ErrorStats,
}

fn demo_dirs_with(dir: &Path, file: &str) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Layout {
            path: dir.to_path_buf(),
            reason: "not a directory".into(),
        });
    }
    let mut found = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join(file).is_file() {
            found.insert(dataset::demo_id(&path), path);
        }
    }
    Ok(found)
}

fn read_track(path: &Path) -> Result<Vec<RigidTransform>> {
    let records: Vec<PoseRecord> = dataset::read_jsonl(path)?;
    records.into_iter().map(|r| RigidTransform::from_quaternion(r.q, r.t)).collect()
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Metrics> {
    let labels = demo_dirs_with(&args.labels, POSES_FILE)?;
    let truth = demo_dirs_with(&args.ground_truth, GROUND_TRUTH_FILE)?;
    if labels.is_empty() {
        return Err(Error::Layout {
            path: args.labels.clone(),
            reason: "no demonstrations found".into(),
        });
    }
    if !labels.keys().eq(truth.keys()) {
        let only = |a: &BTreeMap<String, PathBuf>, b: &BTreeMap<String, PathBuf>| {
            a.keys().filter(|k| !b.contains_key(*k)).cloned().collect::<Vec<_>>().join(", ")
        };
        return Err(Error::Layout {
            path: args.labels.clone(),
            reason: format!(
                "demo ids differ; only in labels: [{}]; only in ground truth: [{}]",
                only(&labels, &truth),
                only(&truth, &labels)
            ),
        });
    }

    let manifests = labels
        .values()
        .filter(|dir| dir.join(MANIFEST_FILE).is_file())
        .map(|dir| {
            let path = dir.join(MANIFEST_FILE);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str::<Manifest>(&text).map_err(|e| Error::json(&path, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hashes: Vec<&str> = manifests.iter().map(|m| m.config_hash.as_str()).collect();
    hashes.sort_unstable();
    hashes.dedup();
    if hashes.len() > 1 && !args.force {
        return Err(Error::config(
            "config_hash",
            format!("labels were produced by {} different configs; pass --force to compare anyway", hashes.len()),
        ));
    }

    let symmetry = match &args.symmetry {
        Some(s) if s == "none" => None,
        Some(s) => Some(s.parse::<SymmetrySpec>()?),
        None => manifests.first().and_then(|m| m.symmetry),
    };
    let group = SymmetryGroup::from_spec(symmetry.as_ref())?;
    let max_r = ACCURATE_ROTATION_DEG.to_radians();

    let mut all: Vec<PoseError> = Vec::new();
    let mut demos = Vec::new();
    for (id, dir) in &labels {
        let est = read_track(&dir.join(POSES_FILE))?;
        let gt_path = truth[id].join(GROUND_TRUTH_FILE);
        let gt = read_ground_truth(&gt_path)?;
        if est.len() != gt.len() {
            return Err(Error::Layout {
                path: gt_path,
                reason: format!("{} ground-truth poses for {} tracked frames", gt.len(), est.len()),
            });
        }
        let errors: Vec<PoseError> = est.iter().zip(&gt).map(|(e, t)| pose_error(e, t, &group)).collect();
        demos.push(DemoMetrics {
            id: id.clone(),
            stats: error_stats(&errors, ACCURATE_TRANSLATION, max_r),
        });
        all.extend(errors);
    }
    let metrics = Metrics {
        symmetry,
        max_translation: ACCURATE_TRANSLATION,
        max_rotation_deg: ACCURATE_ROTATION_DEG,
        demos,
        aggregate: error_stats(&all, ACCURATE_TRANSLATION, max_r),
    };
    dataset::write_json_pretty(&args.labels.join(METRICS_FILE), &metrics)?;
    Ok(metrics)
}

pub fn metrics_table(m: &Metrics) -> String {
    let row = |id: &str, s: &ErrorStats| {
        format!(
            "{id:<16} {:>6} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>8.3}\n",
            s.count,
            s.translation_median * 1e3,
            s.translation_p95 * 1e3,
            s.rotation_median_deg,
            s.rotation_p95_deg,
            s.within
        )
    };
    let mut out = format!(
        "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10} {:>8}\n",
        "demo", "frames", "t_med_mm", "t_p95_mm", "r_med_deg", "r_p95_deg", "within"
    );
    for d in &m.demos {
        out.push_str(&row(&d.id, &d.stats));
    }
    out.push_str(&row("all", &m.aggregate));
    out
}

// ---------------------------------------------------------------------------
// sample-mesh

pub fn cmd_sample_mesh(args: &SampleMeshArgs) -> Result<()> {
    let mesh = load_mesh(&args.mesh)?;
    let cloud = sample_uniform(&mesh, args.count, args.seed)?;
    let format = match args.format {
        Format::Binary => PlyFormat::BinaryLittleEndian,
        Format::Ascii => PlyFormat::Ascii,
    };
    write_point_cloud(&args.out, &cloud, format)?;
    eprintln!("{} points from {} triangles", cloud.len(), mesh.triangles().len());
    Ok(())
}
