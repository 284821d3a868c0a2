//! Run configuration as flat `key = value` text.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::categories::InductionConfig;
use crate::eval::SweepSettings;
use crate::grounding::GroundConfig;
use crate::parser::ParseConfig;
use crate::pipeline::Mode;
use crate::ranker::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}:{line}: {message}")]
    Format { origin: String, line: usize, message: String },
    #[error("invalid {key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub epochs: usize,
    pub beam_width: usize,
    pub top_n: usize,
    pub max_category_depth: usize,
    pub max_candidates: usize,
    pub induction_rounds: usize,
    /// Word entries constrained in the semi-word tier.
    pub word_lexicon_size: usize,
    pub sweep_sizes: Vec<usize>,
    pub kb: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub word_lexicon: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Supervised,
            seed: 42,
            epochs: 10,
            beam_width: 50,
            top_n: 10,
            max_category_depth: 5,
            max_candidates: 500,
            induction_rounds: 2,
            word_lexicon_size: 200,
            sweep_sizes: vec![0, 50, 100, 200, 500],
            kb: None,
            train: None,
            test: None,
            word_lexicon: None,
            pos_lexicon: None,
            model: None,
        }
    }
}

fn positive(key: &'static str, v: usize) -> Result<usize, ConfigError> {
    if v == 0 {
        return Err(ConfigError::Invalid {
            key,
            message: "must be positive".into(),
        });
    }
    Ok(v)
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Format {
                origin: origin.to_string(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{k}: {v:?} is not a non-negative integer")));
            let path = |v: &str| Some(base.join(v));
            match k {
                "mode" => cfg.mode = v.parse().map_err(|e: crate::pipeline::UnknownMode| err(e.to_string()))?,
                "seed" => cfg.seed = v.parse().map_err(|_| err(format!("seed: {v:?} is not an integer")))?,
                "epochs" => cfg.epochs = num(v)?,
                "beam_width" => cfg.beam_width = num(v)?,
                "top_n" => cfg.top_n = num(v)?,
                "max_category_depth" => cfg.max_category_depth = num(v)?,
                "max_candidates" => cfg.max_candidates = num(v)?,
                "induction_rounds" => cfg.induction_rounds = num(v)?,
                "word_lexicon_size" => cfg.word_lexicon_size = num(v)?,
                "sweep_sizes" => {
                    cfg.sweep_sizes = v
                        .split(',')
                        .map(|s| num(s.trim()))
                        .collect::<Result<_, _>>()?
                }
                "kb" => cfg.kb = path(v),
                "train" => cfg.train = path(v),
                "test" => cfg.test = path(v),
                "word_lexicon" => cfg.word_lexicon = path(v),
                "pos_lexicon" => cfg.pos_lexicon = path(v),
                "model" => cfg.model = path(v),
                _ => return Err(err(format!("unknown key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Numeric settings must be positive; zero epochs is allowed and yields
    /// an untrained model.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("beam_width", self.beam_width)?;
        positive("top_n", self.top_n)?;
        positive("max_category_depth", self.max_category_depth)?;
        positive("max_candidates", self.max_candidates)?;
        positive("induction_rounds", self.induction_rounds)?;
        if self.seed == 0 {
            return Err(ConfigError::Invalid {
                key: "seed",
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn parse_config(&self) -> ParseConfig {
        ParseConfig {
            beam_width: self.beam_width,
            top_n: self.top_n,
            max_category_depth: self.max_category_depth,
        }
    }

    pub fn ground_config(&self) -> GroundConfig {
        GroundConfig {
            max_candidates: self.max_candidates,
            ..GroundConfig::default()
        }
    }

    pub fn induction(&self) -> InductionConfig {
        InductionConfig {
            rounds: self.induction_rounds,
            max_depth: self.max_category_depth,
            ..InductionConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            parse: self.parse_config(),
            ground: self.ground_config(),
            induction: self.induction(),
            train: self.train_config(),
        }
    }
}
