//! Averaged structured perceptron over grounded candidates.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grounding::CandidateSet;
use crate::kb::{GroundedGraph, GroundedNode};
use crate::semantics::{NodeKind, TYPE_EDGE};

pub const BIAS: &str = "bias";

/// Sparse feature counts keyed by feature name.
pub type FeatureVector = BTreeMap<String, f64>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no usable training examples ({skipped} skipped without a correct candidate)")]
    NoUsableExamples { skipped: usize },
    #[error("{origin}:{line}: {message}")]
    Format { origin: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Alignment features between the ungrounded source and the KB labels.
pub fn featurize(c: &GroundedGraph) -> FeatureVector {
    let mut fv = FeatureVector::new();
    fv.insert(BIAS.to_string(), 1.0);
    let Some(src) = &c.source else { return fv };
    let mut add = |k: String| *fv.entry(k).or_insert(0.0) += 1.0;
    for (u, g) in src.nodes.iter().zip(&c.nodes) {
        if let (NodeKind::Event(word), GroundedNode::Event(ty)) = (&u.kind, g) {
            add(format!("ev|{word}|{ty}"));
        }
    }
    for (ue, ge) in src.edges.iter().zip(&c.edges) {
        if ue.label == TYPE_EDGE {
            if let (NodeKind::Type(lemma), GroundedNode::Type(ty)) = (&src.nodes[ue.dst].kind, &c.nodes[ge.dst]) {
                add(format!("ty|{lemma}|{ty}"));
            }
            continue;
        }
        add(format!("edge|{}|{}", ue.label, ge.role));
        if let NodeKind::Event(word) = &src.nodes[ue.src].kind {
            add(format!("edgeev|{}:{word}|{}", ue.label, ge.role));
        }
    }
    fv
}

pub fn dot(weights: &BTreeMap<String, f64>, fv: &FeatureVector) -> f64 {
    fv.iter().map(|(k, v)| weights.get(k).copied().unwrap_or(0.0) * v).sum()
}

/// Index of the highest-scoring item; ties go to the earliest.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Ranker,
    Bow,
}

impl ModelKind {
    fn tag(self) -> &'static str {
        match self {
            ModelKind::Ranker => "ranker",
            ModelKind::Bow => "bow",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronModel {
    pub kind: ModelKind,
    pub weights: BTreeMap<String, f64>,
    pub averaged: BTreeMap<String, f64>,
    pub epochs_trained: usize,
    pub seed: u64,
    pub steps: u64,
}

impl PerceptronModel {
    pub fn empty(kind: ModelKind, seed: u64) -> Self {
        PerceptronModel {
            kind,
            weights: BTreeMap::new(),
            averaged: BTreeMap::new(),
            epochs_trained: 0,
            seed,
            steps: 0,
        }
    }

    /// Score under the averaged weights, used at inference.
    pub fn score(&self, fv: &FeatureVector) -> f64 {
        dot(&self.averaged, fv)
    }

    /// Highest-scoring candidate; ties go to the earliest.
    pub fn best(&self, candidates: &[GroundedGraph]) -> Option<usize> {
        let scores: Vec<f64> = candidates.iter().map(|c| self.score(&featurize(c))).collect();
        argmax(&scores)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "spades-model\t{}", self.kind.tag());
        let _ = writeln!(out, "epochs\t{}", self.epochs_trained);
        let _ = writeln!(out, "seed\t{}", self.seed);
        let _ = writeln!(out, "steps\t{}", self.steps);
        for (name, map) in [("weights", &self.weights), ("averaged", &self.averaged)] {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in map {
                let _ = writeln!(out, "{k}\t{v}");
            }
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: String| ModelError::Format {
            origin: origin.to_string(),
            line,
            message,
        };
        let mut header = |name: &str| -> Result<String, ModelError> {
            let (i, l) = lines.next().ok_or_else(|| err(0, format!("missing {name} line")))?;
            match l.split_once('\t') {
                Some((k, v)) if k == name => Ok(v.to_string()),
                _ => Err(err(i + 1, format!("expected {name}<TAB>value"))),
            }
        };
        let kind = match header("spades-model")?.as_str() {
            "ranker" => ModelKind::Ranker,
            "bow" => ModelKind::Bow,
            other => return Err(err(1, format!("unknown model kind {other:?}"))),
        };
        let num = |v: String, line: usize| v.parse::<u64>().map_err(|e| err(line, e.to_string()));
        let epochs = num(header("epochs")?, 2)? as usize;
        let seed = num(header("seed")?, 3)?;
        let steps = num(header("steps")?, 4)?;
        let mut model = PerceptronModel {
            kind,
            epochs_trained: epochs,
            seed,
            steps,
            ..PerceptronModel::empty(kind, seed)
        };
        let mut section: Option<bool> = None;
        for (i, l) in lines {
            match l {
                "[weights]" => section = Some(false),
                "[averaged]" => section = Some(true),
                "" => {}
                _ => {
                    let (k, v) = l.split_once('\t').ok_or_else(|| err(i + 1, "expected key<TAB>weight".into()))?;
                    let v: f64 = v.parse().map_err(|_| err(i + 1, format!("bad weight {v:?}")))?;
                    let map = match section {
                        Some(false) => &mut model.weights,
                        Some(true) => &mut model.averaged,
                        None => return Err(err(i + 1, "weight outside a section".into())),
                    };
                    if map.insert(k.to_string(), v).is_some() {
                        return Err(err(i + 1, format!("duplicate key {k:?}")));
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, seed: 42 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainStats {
    pub examples: usize,
    /// Sets without any correct candidate.
    pub skipped: usize,
    /// Ranking mistakes (and therefore updates) per epoch.
    pub mistakes: Vec<usize>,
}

/// Dense weights over interned feature ids with running-average bookkeeping.
pub(crate) struct Averaged {
    pub w: Vec<f64>,
    /// Sum over updates of (step - 1) * delta.
    acc: Vec<f64>,
    pub step: u64,
}

impl Averaged {
    pub fn new(n: usize) -> Self {
        Averaged {
            w: vec![0.0; n],
            acc: vec![0.0; n],
            step: 0,
        }
    }

    /// Starts a new step; updates made until the next call belong to it.
    pub fn tick(&mut self) {
        self.step += 1;
    }

    pub fn update(&mut self, id: u32, delta: f64) {
        let i = id as usize;
        self.w[i] += delta;
        self.acc[i] += (self.step - 1) as f64 * delta;
    }

    pub fn score(&self, fv: &[(u32, f64)]) -> f64 {
        fv.iter().map(|(i, v)| self.w[*i as usize] * v).sum()
    }

    /// Average of the weight vectors after every step so far.
    pub fn averaged(&self) -> Vec<f64> {
        if self.step == 0 {
            return vec![0.0; self.w.len()];
        }
        let t = self.step as f64;
        self.w.iter().zip(&self.acc).map(|(w, a)| w - a / t).collect()
    }
}

#[derive(Default)]
pub(crate) struct Interner {
    ids: HashMap<String, u32>,
    pub names: Vec<String>,
}

impl Interner {
    pub fn id(&mut self, key: &str) -> u32 {
        if let Some(id) = self.ids.get(key) {
            return *id;
        }
        let id = self.names.len() as u32;
        self.names.push(key.to_string());
        self.ids.insert(key.to_string(), id);
        id
    }

    pub fn vector(&mut self, fv: &FeatureVector) -> Vec<(u32, f64)> {
        fv.iter().map(|(k, v)| (self.id(k), *v)).collect()
    }

    pub fn to_map(&self, dense: &[f64]) -> BTreeMap<String, f64> {
        self.names
            .iter()
            .zip(dense)
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }
}

/// Sparse candidate vectors of one sentence and which of them are correct.
pub(crate) type DenseExample = (Vec<Vec<(u32, f64)>>, Vec<bool>);

/// Latent-positive averaged perceptron: when the top candidate is not
/// correct, move toward the best-scoring correct candidate.
pub fn train(corpus: &[CandidateSet], cfg: TrainConfig) -> Result<(PerceptronModel, TrainStats), ModelError> {
    let mut interner = Interner::default();
    let mut examples: Vec<DenseExample> = Vec::new();
    let mut skipped = 0;
    for set in corpus {
        if set.candidates.is_empty() || set.positives.is_empty() {
            skipped += 1;
            continue;
        }
        let feats = set.candidates.iter().map(|c| interner.vector(&featurize(c))).collect();
        let mut pos = vec![false; set.candidates.len()];
        for &p in &set.positives {
            pos[p] = true;
        }
        examples.push((feats, pos));
    }
    train_dense(&examples, interner, skipped, cfg)
}

/// Training on pre-featurized candidate lists.
pub(crate) fn train_dense(
    examples: &[DenseExample],
    interner: Interner,
    skipped: usize,
    cfg: TrainConfig,
) -> Result<(PerceptronModel, TrainStats), ModelError> {
    if examples.is_empty() {
        return Err(ModelError::NoUsableExamples { skipped });
    }
    let mut avg = Averaged::new(interner.names.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut stats = TrainStats {
        examples: examples.len(),
        skipped,
        mistakes: Vec::new(),
    };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &i in &order {
            let (feats, pos) = &examples[i];
            avg.tick();
            let scores: Vec<f64> = feats.iter().map(|f| avg.score(f)).collect();
            let top = argmax(&scores).expect("non-empty candidate list");
            if pos[top] {
                continue;
            }
            let pos_scores: Vec<f64> = scores
                .iter()
                .zip(pos)
                .map(|(s, p)| if *p { *s } else { f64::NEG_INFINITY })
                .collect();
            let target = argmax(&pos_scores).expect("at least one positive");
            mistakes += 1;
            for (id, v) in &feats[target] {
                avg.update(*id, *v);
            }
            for (id, v) in &feats[top] {
                avg.update(*id, -*v);
            }
        }
        stats.mistakes.push(mistakes);
    }
    let model = PerceptronModel {
        kind: ModelKind::Ranker,
        weights: interner.to_map(&avg.w),
        averaged: interner.to_map(&avg.averaged()),
        epochs_trained: cfg.epochs,
        seed: cfg.seed,
        steps: avg.step,
    };
    Ok((model, stats))
}
