//! Command-line front end: experiment runs, single-cell reconstructions,
//! template matching and boundary localization.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iriscs::harness::{emit_tables, run_experiment, ExperimentConfig};
use iriscs::imagekit::{self, GrayImage};
use iriscs::iris::{
    decide, encode, hamming, localize, normalize, GaborBank, IrisCode, LocalizerConfig,
};
use iriscs::recon::{reconstruct, SolverConfig, SolverMode};
use iriscs::sampling::{generate_mask, measure};
use iriscs::transforms::TransformDomain;

#[derive(Parser)]
#[command(name = "iriscs", about = "Compressive-sensing iris reconstruction and recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment grid described by a config file.
    Run {
        /// INI-style config with [experiment], [solver] and [iris] sections.
        #[arg(long)]
        config: PathBuf,
    },
    /// Reconstruct one image from a random pixel subset.
    Recon(ReconArgs),
    /// Match a probe image against a gallery image.
    Match {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
    },
    /// Locate the pupil and iris circles, printing the geometry as JSON.
    Localize {
        #[arg(long)]
        image: PathBuf,
    },
    /// Write the bundled synthetic eye fixtures and their manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReconArgs {
    #[arg(long)]
    image: PathBuf,
    /// Fraction of pixels to keep, in (0, 1].
    #[arg(long)]
    fraction: f64,
    #[arg(long, default_value = "dct")]
    domain: TransformDomain,
    #[arg(long, default_value = "tv_domain")]
    mode: SolverMode,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output image path (.png or .pgm).
    #[arg(long)]
    out: PathBuf,
}

// Data-level failure: exit code 2.
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

fn pipeline_code(img: &GrayImage) -> Result<IrisCode, DataError> {
    let lcfg = LocalizerConfig::for_dims(img.height(), img.width());
    let geo = localize(img, &lcfg)?;
    let polar = normalize(img, &geo, 16, 240, &lcfg.exclusion_arcs);
    Ok(encode(&polar, &GaborBank::default_for(16, 240))?)
}

fn cmd_run(config: &PathBuf) -> Result<(), DataError> {
    let cfg = ExperimentConfig::from_ini(config)?;
    let report = run_experiment(&cfg)?;
    emit_tables(&report, &cfg.output_dir)?;
    for skip in &report.skipped {
        eprintln!("skipped {}: {}", skip.label, skip.reason);
    }
    println!(
        "wrote {} records to {}",
        report.records.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_recon(args: &ReconArgs) -> Result<(), DataError> {
    let img = imagekit::load_image(&args.image)?;
    let mask = generate_mask(img.height(), img.width(), args.fraction, args.seed)?;
    let meas = measure(&img, &mask)?;
    let cfg = SolverConfig {
        mode: args.mode,
        domain: Some(args.domain),
        ..SolverConfig::default()
    };
    let (rec, report) = reconstruct(&meas, &mask, &cfg)?;
    imagekit::save_image(&rec, &args.out)?;
    let psnr = match imagekit::psnr(&img, &rec)?.as_db() {
        Some(db) => format!("{db:.2} dB"),
        None => "inf".into(),
    };
    println!(
        "psnr={psnr} iterations={} converged={}",
        report.iterations, report.converged
    );
    Ok(())
}

fn cmd_match(probe: &PathBuf, gallery: &PathBuf) -> Result<(), DataError> {
    let probe_code = pipeline_code(&imagekit::load_image(probe)?)?;
    let gallery_code = pipeline_code(&imagekit::load_image(gallery)?)?;
    let (hd, shift) = hamming(&gallery_code, &probe_code, 8)?;
    println!("hd={hd:.4} shift={shift} decision={}", decide(hd)?);
    Ok(())
}

fn cmd_localize(image: &PathBuf) -> Result<(), DataError> {
    let img = imagekit::load_image(image)?;
    let geo = localize(&img, &LocalizerConfig::for_dims(img.height(), img.width()))?;
    println!("{}", serde_json::to_string_pretty(&geo)?);
    Ok(())
}

fn cmd_synth(out: &PathBuf) -> Result<(), DataError> {
    let manifest = iriscs::fixtures::write_fixture_set(out)?;
    println!("wrote fixtures, manifest at {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2; this tool
            // reserves 2 for data errors and reports usage problems as 1.
            let _ = e.print();
            return if e.exit_code() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let result = match &cli.command {
        Command::Run { config } => {
            if !config.exists() {
                eprintln!("error: config file {} does not exist", config.display());
                return ExitCode::from(1);
            }
            cmd_run(config)
        }
        Command::Recon(args) => cmd_recon(args),
        Command::Match { probe, gallery } => cmd_match(probe, gallery),
        Command::Localize { image } => cmd_localize(image),
        Command::Synth { out } => cmd_synth(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
