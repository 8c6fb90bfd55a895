//! `avfusion` command line.

mod experiment;
mod prep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avfusion::data::Split;
use avfusion::harness::with_threads;
use avfusion::{Error, ExperimentConfig, Modality, Result, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "avfusion", version, about = "Audiovisual violence detection toolkit")]
struct Cli {
    /// Overrides the experiment seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one log-mel tensor file per manifest clip.
    PrepAudio(PrepAudioArgs),
    /// Write one normalized frame-stack file per manifest clip.
    PrepVideo(PrepVideoArgs),
    /// Append seeded augmented copies to a manifest.
    Augment(AugmentArgs),
    /// Turn preprocessed tensors into an embedding file.
    Embed(EmbedArgs),
    /// Train one fusion head and save it.
    Train(TrainArgs),
    /// Evaluate a saved head.
    Eval(EvalArgs),
    /// Run every fusion strategy under the same data and seeds.
    Compare(CompareArgs),
    /// Random hyperparameter search.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
struct PrepAudioArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PrepVideoArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Holds `<clip>.rgb` raw dumps or `<clip>/` image directories.
    #[arg(long)]
    frames_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = avfusion::video::DEFAULT_FRAME_COUNT)]
    frames: usize,
    /// Decode missing clips from their media files with this ffmpeg binary.
    #[arg(long, value_name = "PATH")]
    ffmpeg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Augmented copies per clip; defaults to the config policy.
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModalityArg {
    Audio,
    Video,
}

impl From<ModalityArg> for Modality {
    fn from(m: ModalityArg) -> Self {
        match m {
            ModalityArg::Audio => Modality::Audio,
            ModalityArg::Video => Modality::Video,
        }
    }
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    modality: ModalityArg,
    /// Directory of preprocessed tensors for the toy encoder.
    #[arg(long, conflicts_with = "from", required_unless_present = "from")]
    tensors: Option<PathBuf>,
    /// Existing embedding file to select the manifest clips from.
    #[arg(long)]
    from: Option<PathBuf>,
    /// Toy encoder output width; defaults to the config.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Use the built-in Gaussian benchmark as data.
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    strategy: Option<Strategy>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Run index; selects the derived seeds.
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    All,
}

impl SplitArg {
    fn splits(self) -> &'static [Split] {
        match self {
            SplitArg::Train => &[Split::Train],
            SplitArg::Validation => &[Split::Validation],
            SplitArg::All => &[Split::Train, Split::Validation],
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "validation")]
    split: SplitArg,
    /// Write per-clip predictions as TSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    synthetic: bool,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Search space (TOML).
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    out: PathBuf,
}

fn load_config(cli: &Cli, synthetic: bool) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, synthetic) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, true) => ExperimentConfig::synthetic_benchmark(),
        (None, false) => ExperimentConfig::default(),
    };
    if synthetic && cfg.data.synthetic.is_none() {
        cfg.data.synthetic = Some(Default::default());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::file(path, e))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::PrepAudio(a) => prep::prep_audio(&a.manifest, &a.out),
        Command::PrepVideo(a) => prep::prep_video(&a.manifest, &a.frames_dir, &a.out, a.frames, a.ffmpeg.as_deref()),
        Command::Augment(a) => {
            let cfg = load_config(cli, false)?;
            prep::augment(&a.manifest, &a.out, a.copies, &cfg)
        }
        Command::Embed(a) => {
            let cfg = load_config(cli, false)?;
            let source = match (&a.tensors, &a.from) {
                (Some(dir), _) => prep::EmbedSource::Toy(dir),
                (None, Some(file)) => prep::EmbedSource::File(file),
                (None, None) => unreachable!("clap requires one source"),
            };
            prep::embed(&a.manifest, a.modality.into(), source, a.dim, &a.out, &cfg)
        }
        Command::Train(a) => {
            let mut cfg = load_config(cli, a.data.synthetic)?;
            if let Some(s) = a.data.strategy {
                cfg.strategy = s;
            }
            experiment::train(&cfg, a.run, &a.out)
        }
        Command::Eval(a) => {
            let cfg = load_config(cli, a.synthetic)?;
            experiment::eval(&cfg, &a.checkpoint, a.split.splits(), a.predictions.as_deref())
        }
        Command::Compare(a) => {
            let cfg = load_config(cli, a.synthetic)?;
            experiment::compare(&cfg, &a.out)
        }
        Command::Search(a) => {
            let mut cfg = load_config(cli, a.data.synthetic)?;
            if let Some(s) = a.data.strategy {
                cfg.strategy = s;
            }
            experiment::search(&cfg, &a.space, a.budget, &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_threads(cli.threads, || dispatch(&cli)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
