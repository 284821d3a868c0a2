use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spades::cli::{self, CliError, Sentences};
use spades::config::RunConfig;
use spades::generator::CorpusConfig;
use spades::pipeline::Mode;

#[derive(Parser)]
#[command(name = "spades", about = "Grounded CCG semantic parsing for cloze-style slot filling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat key = value run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// unsupervised, semi-pos, semi-word, supervised or bow.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Input corpus: training split for `train`, evaluation split otherwise.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Artifact path (a directory for `generate`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    emit_ungrounded: bool,
    #[arg(long, global = true)]
    emit_candidates: bool,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    #[arg(long, global = true)]
    beam: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print derivations for each sentence.
    Parse(Input),
    /// Print grounded candidates and their answers.
    Ground(Input),
    /// Train a ranker (or the bag-of-words model) and write the model file.
    Train,
    /// Predict answers for the evaluation split.
    Predict,
    /// Accuracy report with entity-count buckets.
    Evaluate,
    /// Retrain and evaluate over word-lexicon sizes.
    Sweep,
    /// Write a synthetic KB, corpus splits, lexicons and manifest.
    Generate {
        #[arg(long, default_value_t = CorpusConfig::default().sentences)]
        sentences: usize,
    },
}

#[derive(Args)]
struct Input {
    /// A single sentence as space-separated surface|POS|entity tokens.
    #[arg(long)]
    tokens: Option<String>,
}

fn config(c: &Common, command: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = c.mode {
        cfg.mode = m;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(p) = &c.kb {
        cfg.kb = Some(p.clone());
    }
    if let Some(p) = &c.corpus {
        match command {
            Command::Train => cfg.train = Some(p.clone()),
            _ => cfg.test = Some(p.clone()),
        }
    }
    if let Some(p) = &c.model {
        cfg.model = Some(p.clone());
    }
    if let Some(n) = c.top_n {
        cfg.top_n = n;
    }
    if let Some(n) = c.beam {
        cfg.beam_width = n;
    }
    if let Some(n) = c.epochs {
        cfg.epochs = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn input(cfg: &RunConfig, i: &Input) -> Result<Sentences, CliError> {
    match (&i.tokens, &cfg.test) {
        (Some(t), _) => Sentences::from_tokens(t),
        (None, Some(p)) => Ok(Sentences::Corpus(cli::load_corpus(p)?.records)),
        (None, None) => Err(CliError::Usage("give --tokens or --corpus".into())),
    }
}

fn write(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if let Command::Generate { sentences } = cli.command {
        let dir = c.out.clone().ok_or_else(|| CliError::Usage("generate needs --out <dir>".into()))?;
        let mut gen = CorpusConfig {
            sentences,
            ..CorpusConfig::default()
        };
        if let Some(s) = c.seed {
            gen.seed = s;
        }
        print!("{}", cli::cmd_generate(&gen, &dir)?);
        return Ok(());
    }
    let cfg = config(c, &cli.command)?;
    let kb_path = cfg.kb.clone().ok_or_else(|| CliError::Usage("no KB given (--kb or kb = in the config)".into()))?;
    let kb = cli::load_kb(&kb_path)?;
    match &cli.command {
        Command::Parse(i) => write(&c.out, &cli::cmd_parse(&cfg, &kb, input(&cfg, i)?, c.emit_ungrounded)?),
        Command::Ground(i) => write(&c.out, &cli::cmd_ground(&cfg, &kb, input(&cfg, i)?, c.emit_ungrounded)?),
        Command::Train => write(&c.out, &cli::cmd_train(&cfg, &kb)?),
        Command::Predict => write(&c.out, &cli::cmd_predict(&cfg, &kb, c.emit_candidates)?),
        Command::Evaluate => {
            let (table, tsv) = cli::cmd_evaluate(&cfg, &kb)?;
            if let Some(p) = &c.out {
                write(&Some(p.with_extension("tsv")), &tsv)?;
            }
            write(&c.out, &table)
        }
        Command::Sweep => write(&c.out, &cli::cmd_sweep(&cfg, &kb)?),
        Command::Generate { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
