//! Sentence-level pipeline: supertag candidates under a supervision tier,
//! parsing, composition, grounding, candidate pooling and prediction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::baseline::{pair_examples, predict_bow, train_bow, PairExample};
use crate::categories::{constrain_lexicon, InductionConfig, Lexicon, LexiconError, RankedEntries};
use crate::corpus::CorpusRecord;
use crate::grounding::{ground, CandidateSet, GroundConfig};
use crate::kb::{GroundedGraph, KnowledgeBase};
use crate::parser::{parse, CandidateSource, Derivation, ParseConfig, ParseError};
use crate::ranker::{featurize, train, ModelError, PerceptronModel, TrainConfig, TrainStats};
use crate::semantics::{compose, validate, UngroundedGraph};

/// Supervision tiers plus the bag-of-words baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Unsupervised,
    SemiPos,
    SemiWord,
    Supervised,
    Bow,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Unsupervised, Mode::SemiPos, Mode::SemiWord, Mode::Supervised, Mode::Bow];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Unsupervised => "unsupervised",
            Mode::SemiPos => "semi-pos",
            Mode::SemiWord => "semi-word",
            Mode::Supervised => "supervised",
            Mode::Bow => "bow",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown mode {0:?} (expected unsupervised, semi-pos, semi-word, supervised or bow)")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMode(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("mode {0} needs gold supertags but record {1} has none")]
    MissingSupertags(Mode, String),
    #[error("mode {0} needs a {1} lexicon")]
    MissingLexicon(Mode, &'static str),
    #[error("the bag-of-words baseline has no parser")]
    NoParser,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where supertag candidates come from for one run.
#[derive(Clone, Debug)]
pub enum Supertagger {
    Gold,
    Lexicon(Lexicon),
}

impl Supertagger {
    /// Builds the candidate source for a tier. The word tier constrains the
    /// `word_size` most frequent word entries; the POS tier uses every entry.
    pub fn for_mode(
        mode: Mode,
        induction: &InductionConfig,
        word: Option<&RankedEntries>,
        pos: Option<&RankedEntries>,
        word_size: usize,
    ) -> Result<Self, PipelineError> {
        let base = Lexicon::induced(induction.clone());
        Ok(match mode {
            Mode::Supervised => Supertagger::Gold,
            Mode::Unsupervised => Supertagger::Lexicon(base),
            Mode::SemiWord => {
                let w = word.ok_or(PipelineError::MissingLexicon(mode, "word"))?;
                Supertagger::Lexicon(constrain_lexicon(&base, w, word_size))
            }
            Mode::SemiPos => {
                let p = pos.ok_or(PipelineError::MissingLexicon(mode, "POS"))?;
                Supertagger::Lexicon(constrain_lexicon(&base, p, p.len()))
            }
            Mode::Bow => return Err(PipelineError::NoParser),
        })
    }
}

/// Everything derived from one sentence before ranking.
#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub derivations: Vec<Derivation>,
    /// Valid ungrounded graphs, deduplicated, in first-seen order.
    pub ungrounded: Vec<Arc<UngroundedGraph>>,
    /// Candidates pooled over all graphs, sorted by serialization.
    pub candidates: Vec<GroundedGraph>,
    pub answers: Vec<Vec<String>>,
    pub truncated: bool,
    pub parse_error: Option<String>,
}

/// Result of predicting one sentence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prediction {
    pub answer: Option<String>,
    pub graph: Option<GroundedGraph>,
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct Pipeline<'k> {
    pub kb: &'k KnowledgeBase,
    pub tagger: Supertagger,
    pub parse: ParseConfig,
    pub ground: GroundConfig,
}

impl<'k> Pipeline<'k> {
    pub fn new(kb: &'k KnowledgeBase, tagger: Supertagger, parse: ParseConfig, ground: GroundConfig) -> Self {
        Pipeline { kb, tagger, parse, ground }
    }

    /// Derivations for a record. Sentences the parser cannot cover give the
    /// inner error; lexicon and data problems give the outer one.
    pub fn derivations(&self, rec: &CorpusRecord) -> Result<Result<Vec<Derivation>, ParseError>, PipelineError> {
        let source = match &self.tagger {
            Supertagger::Gold => {
                let tags = rec
                    .supertags
                    .as_deref()
                    .ok_or_else(|| PipelineError::MissingSupertags(Mode::Supervised, rec.id.clone()))?;
                CandidateSource::Gold(tags)
            }
            Supertagger::Lexicon(lex) => CandidateSource::Lexicon(lex),
        };
        match parse(&rec.tokens, source, &self.parse) {
            Err(ParseError::Lexicon(e)) => Err(e.into()),
            other => Ok(other),
        }
    }

    /// Valid ungrounded graphs from the top derivations, deduplicated.
    pub fn ungrounded(&self, rec: &CorpusRecord, derivations: &[Derivation]) -> Vec<Arc<UngroundedGraph>> {
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        let mut out = Vec::new();
        for d in derivations {
            let Ok(graphs) = compose(d, &rec.tokens) else { continue };
            for g in graphs {
                if validate(&g).is_err() || g.target().is_none() {
                    continue;
                }
                if seen.insert(g.serialize(), ()).is_none() {
                    out.push(Arc::new(g));
                }
            }
        }
        out
    }

    pub fn analyze(&self, rec: &CorpusRecord) -> Result<Analysis, PipelineError> {
        let (derivations, parse_error) = match self.derivations(rec)? {
            Ok(ds) => (ds, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let ungrounded = self.ungrounded(rec, &derivations);
        let mut pooled: Vec<(String, GroundedGraph, Vec<String>)> = Vec::new();
        let mut truncated = false;
        for u in &ungrounded {
            let g = ground(u, self.kb, self.ground);
            truncated |= g.truncated;
            for (mut c, a) in g.candidates.into_iter().zip(g.answers) {
                c.source = Some(u.clone());
                pooled.push((c.serialize(), c, a));
            }
        }
        // Stable: equal serializations keep graph order.
        pooled.sort_by(|a, b| a.0.cmp(&b.0));
        let (candidates, answers) = pooled.into_iter().map(|(_, c, a)| (c, a)).unzip();
        Ok(Analysis {
            derivations,
            ungrounded,
            candidates,
            answers,
            truncated,
            parse_error,
        })
    }

    /// Candidates with positives marked by first answer = gold.
    pub fn candidate_set(&self, rec: &CorpusRecord) -> Result<(CandidateSet, bool), PipelineError> {
        let a = self.analyze(rec)?;
        let positives = a
            .answers
            .iter()
            .enumerate()
            .filter(|(_, ans)| ans.first() == Some(&rec.answer))
            .map(|(i, _)| i)
            .collect();
        Ok((
            CandidateSet {
                sentence_id: rec.id.clone(),
                ungrounded: a.ungrounded,
                candidates: a.candidates,
                positives,
            },
            a.truncated,
        ))
    }

    pub fn training_sets(&self, records: &[CorpusRecord]) -> Result<Vec<CandidateSet>, PipelineError> {
        records.iter().map(|r| Ok(self.candidate_set(r)?.0)).collect()
    }

    pub fn train(&self, records: &[CorpusRecord], cfg: TrainConfig) -> Result<(PerceptronModel, TrainStats), PipelineError> {
        Ok(train(&self.training_sets(records)?, cfg)?)
    }

    /// Scores every pooled candidate and returns the first answer of the best.
    pub fn predict_analysis(&self, a: &Analysis, model: &PerceptronModel) -> Prediction {
        let scores: Vec<f64> = a.candidates.iter().map(|c| model.score(&featurize(c))).collect();
        let Some(best) = crate::ranker::argmax(&scores) else {
            return Prediction {
                truncated: a.truncated,
                ..Default::default()
            };
        };
        Prediction {
            answer: a.answers[best].first().cloned(),
            graph: Some(a.candidates[best].clone()),
            truncated: a.truncated,
        }
    }

    pub fn predict(&self, rec: &CorpusRecord, model: &PerceptronModel) -> Result<Prediction, PipelineError> {
        Ok(self.predict_analysis(&self.analyze(rec)?, model))
    }
}

/// Bag-of-words training pairs for a corpus.
pub fn bow_examples(records: &[CorpusRecord], kb: &KnowledgeBase) -> Vec<PairExample> {
    records
        .iter()
        .flat_map(|r| pair_examples(&r.id, &r.tokens, &r.answer, kb))
        .collect()
}

pub fn train_baseline(records: &[CorpusRecord], kb: &KnowledgeBase, cfg: TrainConfig) -> Result<PerceptronModel, PipelineError> {
    Ok(train_bow(&bow_examples(records, kb), kb, cfg)?)
}

pub fn predict_baseline(rec: &CorpusRecord, kb: &KnowledgeBase, model: &PerceptronModel) -> Prediction {
    Prediction {
        answer: predict_bow(&rec.tokens, kb, model),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::ranker::ModelKind;

    fn record(tokens: Vec<crate::parser::Token>, tags: Option<Vec<crate::categories::Category>>, answer: &str) -> CorpusRecord {
        let blank = tokens.iter().position(|t| t.is_blank).unwrap();
        let entity_count = tokens.iter().filter(|t| t.entity.is_some()).count() + 1;
        CorpusRecord {
            id: "t1".into(),
            tokens,
            blank,
            answer: answer.into(),
            supertags: tags,
            entity_count,
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("semi".parse::<Mode>().is_err());
    }

    #[test]
    fn gold_pipeline_marks_positive() {
        let kb = toy_kb();
        let rec = record(acquisition_cloze(), Some(acquisition_supertags()[0].clone()), "DeepMind");
        let p = Pipeline::new(&kb, Supertagger::Gold, ParseConfig::default(), GroundConfig::default());
        let (set, truncated) = p.candidate_set(&rec).unwrap();
        assert!(!truncated);
        assert!(!set.positives.is_empty());
        let sers: Vec<String> = set.candidates.iter().map(|c| c.serialize()).collect();
        let mut sorted = sers.clone();
        sorted.sort();
        assert_eq!(sers, sorted);
    }

    #[test]
    fn relative_clause_prediction_after_training() {
        let kb = toy_kb();
        let rec = record(relative_clause_cloze(), None, "Nest");
        let mut lex_sets = relative_clause_candidates();
        let tagger = {
            let mut lex = Lexicon::induced(InductionConfig::default());
            lex.mode = crate::categories::LexiconMode::WordConstrained;
            for (t, s) in rec.tokens.iter().zip(lex_sets.drain(..)) {
                if !t.is_blank {
                    lex.word_entries.insert(t.surface.clone(), s);
                }
            }
            Supertagger::Lexicon(lex)
        };
        let p = Pipeline::new(&kb, tagger, ParseConfig::default(), GroundConfig::default());
        let (model, stats) = p.train(std::slice::from_ref(&rec), TrainConfig::default()).unwrap();
        assert_eq!(stats.examples, 1);
        assert_eq!(p.predict(&rec, &model).unwrap().answer.as_deref(), Some("Nest"));
    }

    #[test]
    fn missing_supertags_is_an_error() {
        let kb = toy_kb();
        let rec = record(acquisition_cloze(), None, "Nest");
        let p = Pipeline::new(&kb, Supertagger::Gold, ParseConfig::default(), GroundConfig::default());
        assert!(matches!(p.analyze(&rec), Err(PipelineError::MissingSupertags(..))));
    }

    #[test]
    fn zero_model_picks_first_candidate() {
        let kb = toy_kb();
        let rec = record(acquisition_cloze(), Some(acquisition_supertags()[0].clone()), "Nest");
        let p = Pipeline::new(&kb, Supertagger::Gold, ParseConfig::default(), GroundConfig::default());
        let a = p.analyze(&rec).unwrap();
        let pred = p.predict_analysis(&a, &PerceptronModel::empty(ModelKind::Ranker, 0));
        assert_eq!(pred.graph.as_ref(), a.candidates.first());
    }
}
