//! Command implementations behind the `spades` binary. Each command returns
//! its artifact as text so callers decide where it goes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use crate::categories::{KeyKind, LexiconError, RankedEntries};
use crate::config::{ConfigError, RunConfig};
use crate::corpus::{Corpus, CorpusError, CorpusRecord, CorpusStats};
use crate::eval::{evaluate, render_table, render_tsv, sweep_lexicon, EvalError};
use crate::generator::{generate_corpus, gold_lexicon, manifest, CorpusConfig};
use crate::kb::{KbError, KnowledgeBase};
use crate::parser::Token;
use crate::pipeline::{predict_baseline, train_baseline, Mode, Pipeline, PipelineError, Supertagger};
use crate::ranker::{ModelError, ModelKind, PerceptronModel};
use crate::semantics::{compose, validate};

/// Coverage used when deriving lexicons from gold supertags.
pub const LEXICON_COVERAGE: f64 = 0.95;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    /// Process exit status: 2 usage, 3 config, 4 file access, 5 data format,
    /// 6 pipeline failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Format(_) => 5,
            CliError::Pipeline(_) => 6,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::MissingSupertags(..) | PipelineError::Lexicon(_) => CliError::Format(e.to_string()),
            _ => CliError::Pipeline(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Argument(m) => CliError::Usage(m),
            EvalError::Pipeline(p) => p.into(),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| {
        CliError::Config(ConfigError::Invalid {
            key,
            message: "no path given".into(),
        })
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, CliError> {
    KnowledgeBase::parse(&read(path)?, &path.display().to_string()).map_err(|e| match e {
        KbError::Io(s) => CliError::io(path, s),
        other => CliError::Format(other.to_string()),
    })
}

/// Loads and validates a corpus, logging its statistics.
pub fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    let c = Corpus::parse(&read(path)?, &path.display().to_string()).map_err(|e| match e {
        CorpusError::Io(s) => CliError::io(path, s),
        other => CliError::Format(other.to_string()),
    })?;
    for r in &c.rejected {
        log::warn!("{}: rejected {r}", path.display());
    }
    info!("{}\n{}\n{}", path.display(), CorpusStats::header(), c.stats().row(""));
    Ok(c)
}

pub fn load_lexicon(path: &Path, kind: KeyKind) -> Result<RankedEntries, CliError> {
    RankedEntries::parse(&read(path)?, kind, &path.display().to_string()).map_err(|e| match e {
        LexiconError::Io(s) => CliError::io(path, s),
        other => CliError::Format(other.to_string()),
    })
}

pub fn load_model(path: &Path) -> Result<PerceptronModel, CliError> {
    PerceptronModel::parse(&read(path)?, &path.display().to_string()).map_err(|e| match e {
        ModelError::Io(s) => CliError::io(path, s),
        other => CliError::Format(other.to_string()),
    })
}

/// Supertag source for the configured mode, loading lexicons as needed.
pub fn tagger(cfg: &RunConfig) -> Result<Supertagger, CliError> {
    let need = |p: &Option<PathBuf>, key: &'static str, kind| -> Result<Option<RankedEntries>, CliError> {
        Ok(Some(load_lexicon(required(p, key)?, kind)?))
    };
    let (word, pos) = match cfg.mode {
        Mode::SemiWord => (need(&cfg.word_lexicon, "word_lexicon", KeyKind::Word)?, None),
        Mode::SemiPos => (None, need(&cfg.pos_lexicon, "pos_lexicon", KeyKind::Pos)?),
        Mode::Bow => return Err(CliError::Usage("mode bow has no parser".into())),
        _ => (None, None),
    };
    Ok(Supertagger::for_mode(
        cfg.mode,
        &cfg.induction(),
        word.as_ref(),
        pos.as_ref(),
        cfg.word_lexicon_size,
    )?)
}

pub fn pipeline<'k>(cfg: &RunConfig, kb: &'k KnowledgeBase) -> Result<Pipeline<'k>, CliError> {
    Ok(Pipeline::new(kb, tagger(cfg)?, cfg.parse_config(), cfg.ground_config()))
}

/// Sentences to parse: either one token string or every corpus record.
pub enum Sentences {
    Tokens(Vec<Token>),
    Corpus(Vec<CorpusRecord>),
}

impl Sentences {
    pub fn from_tokens(field: &str) -> Result<Self, CliError> {
        crate::corpus::parse_tokens(field)
            .map(Sentences::Tokens)
            .map_err(CliError::Usage)
    }

    fn records(self) -> Vec<CorpusRecord> {
        match self {
            Sentences::Corpus(r) => r,
            Sentences::Tokens(tokens) => {
                let blank = tokens.iter().position(|t| t.is_blank).unwrap_or(usize::MAX);
                let entity_count = tokens.iter().filter(|t| t.entity.is_some()).count() + 1;
                vec![CorpusRecord {
                    id: "input".into(),
                    tokens,
                    blank,
                    answer: String::new(),
                    supertags: None,
                    entity_count,
                }]
            }
        }
    }
}

/// Derivations per sentence, optionally followed by the distinct valid
/// ungrounded graphs they compose to.
pub fn cmd_parse(cfg: &RunConfig, kb: &KnowledgeBase, input: Sentences, emit_ungrounded: bool) -> Result<String, CliError> {
    let p = pipeline(cfg, kb)?;
    let mut out = String::new();
    for r in input.records() {
        let ds = match p.derivations(&r)? {
            Ok(ds) => ds,
            Err(e) => {
                let _ = writeln!(out, "# {}\tno parse: {e}", r.id);
                continue;
            }
        };
        let _ = writeln!(out, "# {}\tderivations={}", r.id, ds.len());
        for d in &ds {
            let _ = writeln!(out, "{:.1}\t{}", d.score, d.render(Some(&r.tokens)));
        }
        if emit_ungrounded {
            let mut graphs: Vec<String> = Vec::new();
            for d in &ds {
                for g in compose(d, &r.tokens).unwrap_or_default() {
                    let s = g.serialize();
                    if validate(&g).is_ok() && !graphs.contains(&s) {
                        graphs.push(s);
                    }
                }
            }
            let _ = writeln!(out, "## ungrounded graphs={}", graphs.len());
            for g in graphs {
                let _ = writeln!(out, "{g}\n");
            }
        }
    }
    Ok(out)
}

/// Grounded candidates with their answers for each sentence.
pub fn cmd_ground(cfg: &RunConfig, kb: &KnowledgeBase, input: Sentences, emit_ungrounded: bool) -> Result<String, CliError> {
    let p = pipeline(cfg, kb)?;
    let mut out = String::new();
    for r in input.records() {
        let a = p.analyze(&r)?;
        let _ = writeln!(
            out,
            "# {}\tungrounded={}\tcandidates={}\ttruncated={}",
            r.id,
            a.ungrounded.len(),
            a.candidates.len(),
            a.truncated
        );
        if emit_ungrounded {
            for u in &a.ungrounded {
                let _ = writeln!(out, "## ungrounded\n{}\n", u.serialize());
            }
        }
        for (c, ans) in a.candidates.iter().zip(&a.answers) {
            let _ = writeln!(out, "{}\n=> {}\n", c.serialize(), ans.join(" "));
        }
    }
    Ok(out)
}

fn train_records(cfg: &RunConfig) -> Result<Vec<CorpusRecord>, CliError> {
    Ok(load_corpus(required(&cfg.train, "train")?)?.records)
}

fn test_records(cfg: &RunConfig) -> Result<Vec<CorpusRecord>, CliError> {
    Ok(load_corpus(required(&cfg.test, "test")?)?.records)
}

pub fn train_model(cfg: &RunConfig, kb: &KnowledgeBase, train: &[CorpusRecord]) -> Result<PerceptronModel, CliError> {
    if cfg.mode == Mode::Bow {
        return Ok(train_baseline(train, kb, cfg.train_config())?);
    }
    let (model, stats) = pipeline(cfg, kb)?.train(train, cfg.train_config())?;
    info!(
        "trained on {} sentences ({} without a correct candidate); mistakes per epoch {:?}",
        stats.examples, stats.skipped, stats.mistakes
    );
    Ok(model)
}

/// Trains on the configured training split and returns the model file text.
pub fn cmd_train(cfg: &RunConfig, kb: &KnowledgeBase) -> Result<String, CliError> {
    Ok(train_model(cfg, kb, &train_records(cfg)?)?.render())
}

fn check_kind(cfg: &RunConfig, m: &PerceptronModel) -> Result<(), CliError> {
    let want = if cfg.mode == Mode::Bow { ModelKind::Bow } else { ModelKind::Ranker };
    if m.kind != want {
        return Err(CliError::Usage(format!("model kind {:?} does not match mode {}", m.kind, cfg.mode)));
    }
    Ok(())
}

/// The configured model, or one trained on the spot when none is given.
fn model_for(cfg: &RunConfig, kb: &KnowledgeBase) -> Result<PerceptronModel, CliError> {
    let m = match &cfg.model {
        Some(p) => load_model(p)?,
        None => train_model(cfg, kb, &train_records(cfg)?)?,
    };
    check_kind(cfg, &m)?;
    Ok(m)
}

/// One `id<TAB>predicted<TAB>gold<TAB>correct` line per test sentence, `-`
/// marking an absent answer. With `candidates`, each line is followed by
/// the scored candidate dump.
pub fn cmd_predict(cfg: &RunConfig, kb: &KnowledgeBase, candidates: bool) -> Result<String, CliError> {
    let model = model_for(cfg, kb)?;
    let test = test_records(cfg)?;
    let mut out = String::from("id\tpredicted\tgold\tcorrect\n");
    let p = if cfg.mode == Mode::Bow { None } else { Some(pipeline(cfg, kb)?) };
    for r in &test {
        let (pred, dump) = match &p {
            None => (predict_baseline(r, kb, &model), String::new()),
            Some(p) => {
                let a = p.analyze(r)?;
                let mut dump = String::new();
                if candidates {
                    for (c, ans) in a.candidates.iter().zip(&a.answers) {
                        let score = model.score(&crate::ranker::featurize(c));
                        let _ = writeln!(dump, "## {score:.4}\t{}\n{}", ans.join(" "), c.serialize());
                    }
                }
                (p.predict_analysis(&a, &model), dump)
            }
        };
        let ans = pred.answer.as_deref().unwrap_or("-");
        let _ = writeln!(out, "{}\t{ans}\t{}\t{}", r.id, r.answer, u8::from(ans == r.answer));
        out.push_str(&dump);
    }
    Ok(out)
}

/// Report table and its tab-separated twin.
pub fn cmd_evaluate(cfg: &RunConfig, kb: &KnowledgeBase) -> Result<(String, String), CliError> {
    let model = model_for(cfg, kb)?;
    let test = test_records(cfg)?;
    let report = if cfg.mode == Mode::Bow {
        evaluate(&test, |r| Ok::<_, CliError>(predict_baseline(r, kb, &model)))?
    } else {
        let p = pipeline(cfg, kb)?;
        evaluate(&test, |r| Ok::<_, CliError>(p.predict(r, &model)?))?
    };
    let rows = [(cfg.mode.name().to_string(), report)];
    Ok((render_table(&rows), render_tsv(&rows)))
}

/// Word-lexicon size sweep as a tab-separated table.
pub fn cmd_sweep(cfg: &RunConfig, kb: &KnowledgeBase) -> Result<String, CliError> {
    let ranked = load_lexicon(required(&cfg.word_lexicon, "word_lexicon")?, KeyKind::Word)?;
    let (train, test) = (train_records(cfg)?, test_records(cfg)?);
    let sweep = sweep_lexicon(&train, &test, kb, &ranked, &cfg.sweep_sizes, &cfg.sweep_settings())?;
    if let Some(f) = &sweep.failure {
        log::error!("sweep stopped early: {f}");
    }
    Ok(sweep.render())
}

/// Files written by [`cmd_generate`], relative to the output directory.
pub const GENERATED_FILES: [&str; 7] = [
    "kb.txt",
    "train.txt",
    "dev.txt",
    "test.txt",
    "lexicon.word.txt",
    "lexicon.pos.txt",
    "manifest.txt",
];

/// Writes a synthetic KB, corpus splits, gold-derived lexicons and manifest.
pub fn cmd_generate(cfg: &CorpusConfig, out_dir: &Path) -> Result<String, CliError> {
    let g = generate_corpus(cfg);
    let man = manifest(&g, cfg);
    let contents = [
        g.world.kb.render(),
        Corpus::render(&g.train),
        Corpus::render(&g.dev),
        Corpus::render(&g.test),
        gold_lexicon(&g.train, KeyKind::Word, LEXICON_COVERAGE).render(),
        gold_lexicon(&g.train, KeyKind::Pos, LEXICON_COVERAGE).render(),
        man.clone(),
    ];
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    for (name, text) in GENERATED_FILES.iter().zip(contents) {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(man)
}
