use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_sdf::config::RenderConfig;
use hybrid_sdf::pipeline::{self, Mode, PipelineError, Scene};

/// Hybrid SDF soft-shadow renderer.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the coarse and fine SDFs and write the dumps.
    Build(Common),
    /// Run the full pipeline: SDFs, shadowed frames, references, metrics.
    Render(Common),
    /// Render ground-truth visibility by distributed ray tracing.
    Reference(Common),
    /// Compare an SDF visibility image against a reference image.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sdf: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Time the render loop over `bench_resolutions`.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    frames: Option<u64>,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl Common {
    fn load(&self) -> Result<(RenderConfig, Scene), Failure> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        let mut config = RenderConfig::load(&self.config).map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(frames) = self.frames {
            config.frames = frames;
            config.reference_frames.retain(|&f| f < frames);
        }
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        if let Some(out) = &self.out {
            let cwd = std::env::current_dir().map_err(|e| Failure::Runtime(e.to_string()))?;
            config.out_dir = cwd.join(out);
        }
        config.validate().map_err(|e| Failure::Config(e.to_string()))?;
        let scene = Scene::load(&config).map_err(|e| Failure::Config(e.to_string()))?;
        Ok((config, scene))
    }
}

fn write_json(config: &RenderConfig, name: &str, json: &str) -> Result<(), Failure> {
    let dir = config.resolve(&config.out_dir);
    std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(dir.join(name), json))
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build(common) => run_mode(&common, Mode::Build),
        Command::Render(common) => run_mode(&common, Mode::Render),
        Command::Reference(common) => run_mode(&common, Mode::Reference),
        Command::Compare { common, sdf, reference } => {
            let (config, _) = common.load()?;
            let metrics = pipeline::compare(&config, &sdf, &reference)?;
            let json = metrics.to_json();
            if common.out.is_some() {
                write_json(&config, "metrics.json", &json)?;
            }
            println!("{json}");
            Ok(())
        }
        Command::Bench(common) => {
            let (config, scene) = common.load()?;
            let entries = pipeline::bench(&config, &scene)?;
            let json = serde_json::to_string_pretty(&entries).expect("bench serializes");
            write_json(&config, "bench.json", &json)?;
            println!("{json}");
            Ok(())
        }
    }
}

fn run_mode(common: &Common, mode: Mode) -> Result<(), Failure> {
    let (config, scene) = common.load()?;
    let report = pipeline::run_pipeline(&config, scene, mode)?;
    println!(
        "{} frame(s), coarse {:?}, fine {:?}, {:.1} ms total, max shadow steps {}",
        report.frames, report.coarse_resolution, report.fine_resolution, report.total_ms, report.max_steps_taken
    );
    for m in &report.metrics {
        println!("{}", m.to_json());
    }
    println!(
        "wrote {} file(s) to {}",
        report.files.len(),
        config.resolve(&config.out_dir).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
