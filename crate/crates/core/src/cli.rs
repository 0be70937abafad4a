//! Command-line front end. Each subcommand runs one pipeline stage so
//! intermediate products can be inspected; `run-all` chains them.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use thiserror::Error;

use crate::cluster::cluster_observations;
use crate::detector::ObjectClass;
use crate::imaging::ImagingConfig;
use crate::pipeline::{
    self, build_detector, emit_accuracy_report, load_captures, stage_detect, stage_ingest, stage_locate, stage_report,
    stage_slice, DatasetConfig, DatasetStore, DetectOutput, PipelineConfig, PipelineError, Workers,
};
use crate::synth::{generate, NoiseSpec, RandomObjects, SceneSpec, SynthError};

#[derive(Debug, Parser)]
#[command(name = "panoloc", version, about = "Locate street assets from panoramic drive-by imagery")]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "panoloc.toml")]
    pub config: PathBuf,
    /// Restrict to these datasets (repeatable).
    #[arg(long, global = true)]
    pub dataset: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Drop detections scored below this
    #[arg(long, global = true)]
    pub min_confidence: Option<f64>,
    /// Clustering radius, feet.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Minimum cluster size, counting the point itself
    #[arg(long, global = true)]
    pub min_pts: Option<usize>,
    /// Send every cardinal to the detector, not only the first.
    #[arg(long, global = true)]
    pub all_cardinals: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse track CSVs into capture records.
    Ingest,
    /// Cut photospheres into cardinal images.
    Slice,
    /// Run the detector and write sidecars and bearing rays.
    Detect,
    /// Cluster rays and write located features.
    Locate,
    /// Summary, rate and accuracy tables.
    Report,
    /// Generate a synthetic dataset for the mock detector.
    Synth(SynthArgs),
    /// Every stage in order.
    RunAll,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// RNG seed; equal seeds give identical datasets
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Stop signs to plant.
    #[arg(long, default_value_t = 5)]
    pub objects: usize,
    /// Fire hydrants to plant.
    #[arg(long, default_value_t = 0)]
    pub hydrants: usize,
    /// Photospheres along the synthetic track
    #[arg(long, default_value_t = 200)]
    pub captures: usize,
    /// Add bearing and GNSS noise.
    #[arg(long)]
    pub noise: bool,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Usage(String),
}

enum Outcome {
    Done,
    Partial,
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Partial) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(c) = cli.min_confidence {
        cfg.detection.min_confidence = c;
    }
    if let Some(e) = cli.eps {
        cfg.cluster.eps = e;
    }
    if let Some(m) = cli.min_pts {
        cfg.cluster.min_pts = m;
    }
    if cli.all_cardinals {
        cfg.detection.all_cardinals = true;
    }
    cfg.validate().map_err(|reason| PipelineError::Config {
        path: cli.config.clone(),
        reason,
    })?;
    Ok(cfg)
}

/// Explicit `--dataset` ids, else the configured list, else every
/// directory under `datasets/` that holds a track.
fn selected_datasets(cli: &Cli, cfg: &PipelineConfig) -> Result<Vec<DatasetConfig>, CliError> {
    if !cli.dataset.is_empty() {
        return Ok(cli.dataset.iter().map(|id| cfg.dataset(id)).collect());
    }
    if !cfg.datasets.is_empty() {
        return Ok(cfg.datasets.clone());
    }
    let dir = cfg.data_root.join("datasets");
    let mut ids: Vec<String> = fs::read_dir(&dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .filter(|e| e.path().join("track.csv").is_file())
                .filter_map(|e| e.file_name().into_string().ok())
                .collect()
        })
        .unwrap_or_default();
    ids.sort();
    if ids.is_empty() {
        return Err(CliError::Usage(format!("no datasets configured or found under {}", dir.display())));
    }
    Ok(ids.iter().map(|id| cfg.dataset(id)).collect())
}

fn read_observations(cfg: &PipelineConfig, ds: &DatasetConfig) -> Result<DetectOutput, CliError> {
    let store = DatasetStore::new(cfg.dataset_dir(&ds.id));
    let path = store.output().join("observations.json");
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "{} not found; run `detect` for dataset {} first",
            path.display(),
            ds.id
        )));
    }
    Ok(store.read_json(&path)?)
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    if let Command::Synth(args) = &cli.command {
        return synth(cli, args);
    }
    let cfg = load_config(cli)?;
    let datasets = selected_datasets(cli, &cfg)?;
    let workers = Workers::new(cfg.jobs);
    let mut partial = false;
    match &cli.command {
        Command::Ingest => {
            for ds in &datasets {
                let caps = stage_ingest(&cfg, ds)?;
                println!("{}: {} captures", ds.id, caps.len());
            }
        }
        Command::Slice => {
            for ds in &datasets {
                let (written, failed) = stage_slice(&cfg, ds, &workers)?;
                partial |= failed > 0;
                println!("{}: {written} cardinal images, {failed} captures failed", ds.id);
            }
        }
        Command::Detect => {
            for ds in &datasets {
                let captures = load_captures(&cfg, ds)?;
                let detector = build_detector(&cfg, ds)?;
                let out = stage_detect(&cfg, ds, &captures, detector.as_ref(), &workers)?;
                partial |= out.tally.failed_slices > 0;
                println!(
                    "{}: {} detections, {} rays, {} failed slices",
                    ds.id,
                    out.tally.detections_in,
                    out.observations.len(),
                    out.tally.failed_slices
                );
            }
        }
        Command::Locate => {
            for ds in &datasets {
                let detect = read_observations(&cfg, ds)?;
                let (outcome, _) = stage_locate(&cfg, ds, &detect.observations)?;
                println!(
                    "{}: {} objects -> {}",
                    ds.id,
                    outcome.estimates.len(),
                    cfg.dataset_dir(&ds.id).join("output/features.geojson").display()
                );
            }
        }
        Command::Report => {
            partial = report(&cfg, &datasets)?;
        }
        Command::RunAll => {
            for ds in &datasets {
                let detector = build_detector(&cfg, ds)?;
                let run = pipeline::run_dataset_with(&cfg, ds, detector.as_ref(), &workers)?;
                partial |= run.is_partial();
                println!(
                    "{}: {} photospheres, {} cardinals, {} objects",
                    ds.id,
                    run.summary.photosphere_count,
                    run.summary.cardinal_count,
                    run.outcome.estimates.len()
                );
            }
            report(&cfg, &datasets)?;
        }
        Command::Synth(_) => unreachable!(),
    }
    Ok(if partial { Outcome::Partial } else { Outcome::Done })
}

/// Per-dataset reports plus combined tables under `<data_root>/reports`.
fn report(cfg: &PipelineConfig, datasets: &[DatasetConfig]) -> Result<bool, CliError> {
    let mut summaries = Vec::new();
    let mut estimates = Vec::new();
    for ds in datasets {
        let captures = load_captures(cfg, ds)?;
        let detect = read_observations(cfg, ds)?;
        let outcome = cluster_observations(&detect.observations, &cfg.cluster);
        let (summary, _) = stage_report(cfg, ds, &captures, &detect, &outcome)?;
        estimates.extend(outcome.estimates.into_iter().map(|e| (ds.area.clone(), e)));
        summaries.push(summary);
    }
    let accuracy = emit_accuracy_report(&estimates);
    let dir = cfg.data_root.join("reports");
    pipeline::write_reports_to(&dir, &summaries, &accuracy)?;
    print!("{}", pipeline::summary_text(&summaries));
    print!("{}", accuracy.to_text());
    Ok(summaries.iter().any(|s| s.failed_slices > 0))
}

fn synth(cli: &Cli, args: &SynthArgs) -> Result<Outcome, CliError> {
    let fresh = !cli.config.exists();
    let mut cfg = if fresh {
        PipelineConfig {
            data_root: PathBuf::from("."),
            imaging: ImagingConfig::scaled(800),
            ..PipelineConfig::default()
        }
    } else {
        load_config(cli)?
    };
    let id = cli.dataset.first().cloned().unwrap_or_else(|| "synth".into());
    let mut random_objects = Vec::new();
    if args.objects > 0 {
        random_objects.push(RandomObjects {
            class: ObjectClass::StopSign,
            count: args.objects,
        });
    }
    if args.hydrants > 0 {
        random_objects.push(RandomObjects {
            class: ObjectClass::FireHydrant,
            count: args.hydrants,
        });
    }
    let spec = SceneSpec {
        dataset_id: id.clone(),
        seed: args.seed,
        captures: args.captures,
        random_objects,
        noise: args.noise.then(NoiseSpec::default),
        ..SceneSpec::default()
    };
    let scene = generate(&spec)?;

    if fresh {
        cfg.datasets.push(DatasetConfig {
            id: id.clone(),
            area: "synthetic".into(),
            ..DatasetConfig::default()
        });
        write_config(&cli.config, &cfg)?;
        cfg.data_root = cli.config.parent().unwrap_or(Path::new(".")).join(&cfg.data_root);
    }
    let ds = cfg.dataset(&id);
    let store = DatasetStore::new(cfg.dataset_dir(&id));
    store.ensure()?;
    scene.write_track_csv(&cfg.track_path(&ds))?;
    scene.save(&cfg.scene_path(&ds))?;
    println!(
        "{id}: {} captures, {} objects -> {}",
        scene.track.len(),
        scene.objects.len(),
        store.root().display()
    );
    Ok(Outcome::Done)
}

fn write_config(path: &Path, cfg: &PipelineConfig) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::Io {
            path: parent.to_path_buf(),
            reason: e.to_string(),
        })?;
    }
    fs::write(path, cfg.to_toml()).map_err(|e| {
        PipelineError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
        .into()
    })
}
