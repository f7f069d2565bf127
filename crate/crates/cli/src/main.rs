mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Overrides, RunConfig};

/// Train and evaluate multi-sense dictionary definition generators.
#[derive(Parser, Debug)]
#[command(name = "polydef", version, about)]
struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    threads: Option<usize>,

    /// single-threaded, bit-reproducible training
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingMode {
    Sgns,
    Adagram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// conditioned on one word vector per headword
    Base,
    /// conditioned on one sense vector per training pair
    Multisense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairMode {
    D2s,
    S2d,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tokenize raw text, one sentence per line
    Tokenize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train single-sense (sgns) or multi-sense (adagram) embeddings
    TrainEmbeddings {
        #[arg(long, value_enum)]
        mode: EmbeddingMode,
        /// tokenized corpus
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Word count and proportion of polysemous words of a lexicon
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// also write the JSON here
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Headword-disjoint train/dev/test split
    Split {
        #[arg(long)]
        input: PathBuf,
        /// e.g. 0.8,0.1,0.1
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Attach definitions to sense vectors
    BuildPairs {
        #[arg(long, value_enum)]
        mode: PairMode,
        #[arg(long)]
        lexicon: PathBuf,
        /// sense table from `train-embeddings --mode adagram`
        #[arg(long)]
        senses: PathBuf,
        /// word vectors for embedding definitions (default: the sense table's)
        #[arg(long)]
        word_vectors: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a definition model
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// lexicon TSV (base) or pairs TSV (multisense)
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        /// word vectors (base) or sense table (multisense)
        #[arg(long)]
        vectors: PathBuf,
        /// checkpoint path; vocabularies and the report go next to it
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample definitions for a list of words
    Generate {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        /// one word per line, or a lexicon TSV whose headwords are used
        #[arg(long)]
        words: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// BLEU, rBLEU and fBLEU against a test lexicon over repeated runs
    Evaluate {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        vocab: VocabArgs,
        /// JSON report
        #[arg(long)]
        output: PathBuf,
        /// per-word scores of the last run
        #[arg(long)]
        per_word: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
pub struct VocabArgs {
    /// token vocabulary (default: `<checkpoint>.vocab.tsv`)
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// character vocabulary (default: `<checkpoint>.chars.tsv`)
    #[arg(long)]
    char_vocab: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, missing input or invalid configuration: exit 2.
    Usage(String),
    Core(polydef::Error),
}

impl From<polydef::Error> for CliError {
    fn from(e: polydef::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use polydef::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => 2,
            CliError::Core(
                E::Config(_) | E::Parse { .. } | E::Format(_) | E::DigestMismatch { .. } | E::Json(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

pub fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input not found: {}", path.display())))
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    require(path)?;
    std::fs::read_to_string(path).map_err(|e| polydef::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into())
}

pub fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| polydef::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| {
        polydef::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(
        cli.config.as_deref(),
        Overrides {
            seed: cli.seed,
            threads: cli.threads,
            deterministic: cli.deterministic,
        },
    )?;
    match cli.command {
        Command::Tokenize { input, output } => commands::tokenize(&cfg, &input, &output),
        Command::TrainEmbeddings { mode, input, output } => commands::train_embeddings(&cfg, mode, &input, &output),
        Command::Stats { input, output } => commands::stats(&cfg, &input, output.as_deref()),
        Command::Split {
            input,
            ratios,
            output_dir,
        } => commands::split(&cfg, &input, ratios, &output_dir),
        Command::BuildPairs {
            mode,
            lexicon,
            senses,
            word_vectors,
            stopwords,
            output,
        } => commands::build_pairs(
            &cfg,
            mode,
            &lexicon,
            &senses,
            word_vectors.as_deref(),
            stopwords.as_deref(),
            &output,
        ),
        Command::Train {
            model,
            train,
            dev,
            vectors,
            output,
        } => commands::train(&cfg, model, &train, dev.as_deref(), &vectors, &output),
        Command::Generate {
            model,
            checkpoint,
            vectors,
            words,
            vocab,
            output,
        } => commands::generate(&cfg, model, &checkpoint, &vectors, &words, &vocab, &output),
        Command::Evaluate {
            model,
            checkpoint,
            vectors,
            test,
            runs,
            vocab,
            output,
            per_word,
        } => commands::evaluate(
            &cfg,
            model,
            &checkpoint,
            &vectors,
            &test,
            runs,
            &vocab,
            &output,
            per_word.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
