use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use authorprof::cli::{parse_df_range, run, Command, RunConfig, SynthConfig};
use authorprof::{GammaMode, Language};

#[derive(Parser)]
#[command(name = "authorprof", version, about = "Gender and language-variety profiling of tweet authors")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train gender and variety models into one model file
    Train(Flags),
    /// Predict `id:::gender:::variety` lines for a corpus
    Predict(Flags),
    /// Cross-validate both tasks and write CSV
    Evaluate(Flags),
    /// Cross-validate over a range of min-df values and write CSV
    Sweep(Flags),
    /// Top-k term frequencies per class and the terms classes share
    Report(Flags),
    /// Write a synthetic labeled corpus
    Synth(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long = "min-df", default_value_t = 10)]
    min_df: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "df-range", default_value = "2..25", value_name = "A..B")]
    df_range: String,
    #[arg(long = "top-k", default_value_t = 20)]
    top_k: usize,
    /// synth: language code of the generated corpus
    #[arg(long, default_value = "en")]
    language: String,
    /// synth: number of authors
    #[arg(long, default_value_t = 200)]
    authors: usize,
    /// synth: tweets per author
    #[arg(long, default_value_t = 100)]
    tweets: usize,
    /// synth: number of language varieties
    #[arg(long, default_value_t = 3)]
    varieties: usize,
    /// synth: probability that a token slot carries a class signal
    #[arg(long = "signal-rate", default_value_t = 0.3)]
    signal_rate: f64,
}

fn build_config(command: Command, f: Flags) -> authorprof::Result<RunConfig> {
    let gamma: GammaMode = f
        .gamma
        .parse()
        .map_err(|e: authorprof::Error| authorprof::Error::Usage(e.to_string()))?;
    let language: Language = f
        .language
        .parse()
        .map_err(|e: authorprof::Error| authorprof::Error::Usage(e.to_string()))?;
    let mut config = RunConfig::new(command);
    config.corpus_dir = f.corpus;
    config.truth_path = f.truth;
    config.model_path = f.model;
    config.output_path = f.out;
    config.min_df = f.min_df;
    config.c = f.c;
    config.gamma = gamma;
    config.folds = f.folds;
    config.seed = f.seed;
    config.df_range = parse_df_range(&f.df_range)?;
    config.top_k = f.top_k;
    config.synth = SynthConfig {
        language,
        authors: f.authors,
        tweets: f.tweets,
        varieties: f.varieties,
        signal_rate: f.signal_rate,
    };
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };

    let (command, flags) = match cli.command {
        Cmd::Train(f) => (Command::Train, f),
        Cmd::Predict(f) => (Command::Predict, f),
        Cmd::Evaluate(f) => (Command::Evaluate, f),
        Cmd::Sweep(f) => (Command::Sweep, f),
        Cmd::Report(f) => (Command::Report, f),
        Cmd::Synth(f) => (Command::Synth, f),
    };

    match build_config(command, flags).and_then(|config| run(&config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
