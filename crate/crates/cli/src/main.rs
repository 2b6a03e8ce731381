use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod augment;
mod build_db;
mod frame;
mod render;
mod synth_cmd;
mod validate;

/// Multimodal ground-truth paste augmentation for LiDAR + camera frames.
#[derive(Parser)]
#[command(name = "meshpaste", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cut-object database from raw sequences, labels and masks.
    BuildDb {
        /// Root directory of raw sequences (one subdirectory per sequence).
        raw_sequences: PathBuf,
        /// Root directory of per-sequence label files.
        labels: PathBuf,
        /// Root directory of per-sequence instance masks.
        masks: PathBuf,
        /// Output database directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Run configuration file (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Augment one frame directory with pasted objects.
    Augment {
        /// Frame directory (calib.txt, velodyne.bin, image.png, labels.txt).
        frame_dir: PathBuf,
        /// Cut-object database directory.
        #[arg(long)]
        db: PathBuf,
        /// Run configuration file (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed controlling every random draw.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output frame directory.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Render a before/after side-by-side composite of an augmented frame.
    Render {
        /// Frame directory (calib.txt, velodyne.bin, image.png, labels.txt).
        frame_dir: PathBuf,
        /// Cut-object database directory.
        #[arg(long)]
        db: PathBuf,
        /// Run configuration file (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed controlling every random draw.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output PNG path.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Synthetic-oracle utilities.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
    /// Audit the invariants of a cut-object database.
    Validate {
        /// Database directory.
        db: PathBuf,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Run the synthetic oracle suite; exits nonzero on any failure.
    Selftest,
    /// Emit a synthetic dataset: raw sequences, labels, masks and one
    /// augmentable frame directory.
    Emit {
        /// Output root directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Frames per sequence.
        #[arg(long, default_value_t = 20)]
        frames: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildDb { raw_sequences, labels, masks, out, config } => {
            build_db::run(&raw_sequences, &labels, &masks, &out, config.as_deref())
        }
        Command::Augment { frame_dir, db, config, seed, out } => {
            augment::run(&frame_dir, &db, config.as_deref(), seed, &out)
        }
        Command::Render { frame_dir, db, config, seed, out } => {
            render::run(&frame_dir, &db, config.as_deref(), seed, &out)
        }
        Command::Synth { command } => match command {
            SynthCommand::Selftest => synth_cmd::selftest(),
            SynthCommand::Emit { out, frames } => synth_cmd::emit(&out, frames),
        },
        Command::Validate { db } => validate::run(&db),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
