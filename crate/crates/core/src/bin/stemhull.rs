//! Command-line driver: `inventory`, `evaluate` and `synth`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stemhull::cloud::{read_point_cloud, write_point_cloud, CloudFormat};
use stemhull::metrics::{read_estimates_csv, read_reference_csv, report, write_reference_csv, InventorySummary, MatchConfig, Method};
use stemhull::pipeline::{run_inventory, with_threads, write_outputs, write_summary, PipelineConfig, PipelineError};
use stemhull::synth::{generate_plot, SceneConfig, SynthError};

#[derive(Parser)]
#[command(name = "stemhull", version, about = "Tree DBH inventory from forest point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground filter, stem segmentation and per-tree DBH for one cloud.
    Inventory(InventoryArgs),
    /// Bias / RMSE / Std of an estimates table against a reference table.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic scene cloud and its truth table.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InventoryArgs {
    /// Point cloud (.ply, .xyz, .txt).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Pipeline configuration (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Reference table to match the report against.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write per-tree cross-sections, hulls and the ground raster.
    #[arg(long)]
    debug_dumps: bool,
    #[arg(long)]
    min_dbh_cm: Option<f64>,
    /// Slice denoising radius, 1–3 cm.
    #[arg(long)]
    eps_cm: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Estimates in report-table format.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Matching radius [m].
    #[arg(long, default_value_t = MatchConfig::default().max_dist)]
    max_dist: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the scene seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn synth_error(e: SynthError) -> PipelineError {
    match e {
        SynthError::Io { path, source } => PipelineError::Io { path, source },
        SynthError::Config { path, message } => PipelineError::Config(format!("{}: {message}", path.display())),
        SynthError::Argument(m) => PipelineError::Config(m),
    }
}

fn inventory(args: InventoryArgs) -> Result<(), PipelineError> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.input = args.input.or(cfg.input);
    cfg.out_dir = args.out_dir.or(cfg.out_dir);
    cfg.reference = args.reference.or(cfg.reference);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.threads = args.threads.or(cfg.threads);
    cfg.debug_dumps |= args.debug_dumps;
    cfg.min_dbh_cm = args.min_dbh_cm.unwrap_or(cfg.min_dbh_cm);
    if let Some(eps) = args.eps_cm {
        cfg.dbh.denoise_eps = eps / 100.0;
    }
    cfg.validate()?;
    let input = cfg.input.clone().ok_or_else(|| PipelineError::Config("no input cloud given (--input)".into()))?;
    let out_dir = cfg.out_dir.clone().ok_or_else(|| PipelineError::Config("no output directory given (--out-dir)".into()))?;
    let references = match &cfg.reference {
        Some(p) => read_reference_csv(p)?,
        None => Vec::new(),
    };

    let format = CloudFormat::from_path(&input)
        .ok_or_else(|| PipelineError::Config(format!("{}: unknown point cloud extension", input.display())))?;
    let loaded = read_point_cloud(&input, format)?;
    if loaded.skipped_non_finite > 0 {
        log::warn!("skipped {} points with non-finite coordinates", loaded.skipped_non_finite);
    }
    let cloud = loaded.cloud;
    let run = with_threads(cfg.threads, || run_inventory(&cloud, &cfg))??;
    let rep = run.report(&references, &cfg.matching)?;
    let summary = run.summary(&rep);
    write_outputs(&out_dir, &rep, &summary)?;
    if cfg.debug_dumps {
        run.write_debug_dumps(&cloud, &cfg, &out_dir.join("debug"))?;
    }
    println!("{} trees reported, {} warnings", run.estimates.len(), run.warnings.len());
    if !references.is_empty() {
        print_table(&summary);
    }
    Ok(())
}

fn print_table(summary: &InventorySummary) {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    println!("{:<10}{:>5}{:>10}{:>10}{:>10}", "method", "n", "bias_cm", "rmse_cm", "std_cm");
    for m in Method::ALL {
        let mm = summary.metrics[&m];
        println!("{:<10}{:>5}{:>10}{:>10}{:>10}", m.as_str(), mm.n, cell(mm.bias), cell(mm.rmse), cell(mm.std));
    }
}

fn evaluate(args: EvaluateArgs) -> Result<(), PipelineError> {
    let matching = MatchConfig { max_dist: args.max_dist };
    if !(matching.max_dist > 0.0) {
        return Err(PipelineError::Config(format!("--max-dist must be positive, got {}", args.max_dist)));
    }
    let estimates = read_estimates_csv(&args.input)?;
    let references = read_reference_csv(&args.reference)?;
    let rep = report(&estimates, &references, &matching).map_err(|e| PipelineError::Config(e.to_string()))?;
    let summary = InventorySummary::from_report(&rep, 0, Vec::new());
    print_table(&summary);
    std::fs::create_dir_all(&args.out_dir).map_err(|source| PipelineError::Io { path: args.out_dir.clone(), source })?;
    write_summary(&args.out_dir.join("summary.json"), &summary)
}

fn synth(args: SynthArgs) -> Result<(), PipelineError> {
    let mut scene = SceneConfig::load(&args.config).map_err(synth_error)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    let plot = generate_plot(&scene).map_err(synth_error)?;
    let dir: &Path = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
    write_point_cloud(&plot.cloud, &dir.join("scene.ply"), CloudFormat::Ply)?;
    write_reference_csv(&dir.join("truth.csv"), &plot.references())?;
    println!("{} points, {} trunks", plot.cloud.len(), plot.truth.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Inventory(a) => inventory(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
