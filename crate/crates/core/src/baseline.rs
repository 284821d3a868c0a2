//! Bag-of-words baseline: classify the relation between the blank and each
//! other entity, then execute the conjunction of the predicted relations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kb::{execute, predicates_between, GroundedEdge, GroundedGraph, GroundedNode, KnowledgeBase};
use crate::parser::Token;
use crate::ranker::{Averaged, Interner, ModelError, ModelKind, PerceptronModel, TrainConfig};

pub const NULL_LABEL: &str = "NULL";
const SEP: &str = "##";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub event_type: String,
    pub role_blank: String,
    pub role_other: String,
}

impl Relation {
    pub fn label(&self) -> String {
        format!("{}|{}|{}", self.event_type, self.role_blank, self.role_other)
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let mut it = label.split('|');
        let (Some(t), Some(a), Some(b), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return None;
        };
        Some(Relation {
            event_type: t.into(),
            role_blank: a.into(),
            role_other: b.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairExample {
    pub sentence_id: String,
    pub other: String,
    pub features: Vec<String>,
    /// Relation label or [`NULL_LABEL`].
    pub label: String,
}

/// Lowercased word unigrams plus (word, side of `other_index`) pairs; the
/// blank is left out.
pub fn pair_features(tokens: &[Token], other_index: usize) -> Vec<String> {
    let mut out = BTreeSet::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.is_blank {
            continue;
        }
        let w = t.surface.to_lowercase();
        out.insert(format!("w={w}"));
        if i != other_index {
            let side = if i < other_index { 'L' } else { 'R' };
            out.insert(format!("s={w}|{side}"));
        }
    }
    out.into_iter().collect()
}

/// First token index of each distinct non-blank entity, in sentence order.
fn entity_positions(tokens: &[Token]) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if let Some(e) = &t.entity {
            if !out.iter().any(|(x, _)| x == e) {
                out.push((e.clone(), i));
            }
        }
    }
    out
}

/// Training pairs labelled with the first KB relation linking the gold
/// answer to each other entity, or NULL.
pub fn pair_examples(sentence_id: &str, tokens: &[Token], gold: &str, kb: &KnowledgeBase) -> Vec<PairExample> {
    entity_positions(tokens)
        .into_iter()
        .map(|(other, i)| {
            let pair: BTreeSet<String> = [gold.to_string(), other.clone()].into_iter().collect();
            let rels = predicates_between(&pair, kb);
            let label = rels
                .get(&(gold.to_string(), other.clone()))
                .and_then(|s| s.iter().next())
                .map(|(t, a, b)| {
                    Relation {
                        event_type: t.clone(),
                        role_blank: a.clone(),
                        role_other: b.clone(),
                    }
                    .label()
                })
                .unwrap_or_else(|| NULL_LABEL.to_string());
            PairExample {
                sentence_id: sentence_id.to_string(),
                other,
                features: pair_features(tokens, i),
                label,
            }
        })
        .collect()
}

/// All labels the classifier may output for a KB: NULL first, then every
/// ordered role pair of every event type.
pub fn label_space(kb: &KnowledgeBase) -> Vec<String> {
    let mut out = vec![NULL_LABEL.to_string()];
    for (t, roles) in kb.schema() {
        for a in roles {
            for b in roles {
                if a != b {
                    out.push(
                        Relation {
                            event_type: t.clone(),
                            role_blank: a.clone(),
                            role_other: b.clone(),
                        }
                        .label(),
                    );
                }
            }
        }
    }
    out
}

/// Multiclass averaged perceptron over pair examples.
pub fn train_bow(examples: &[PairExample], kb: &KnowledgeBase, cfg: TrainConfig) -> Result<PerceptronModel, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::NoUsableExamples { skipped: 0 });
    }
    let labels = label_space(kb);
    let label_id: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut feats = Interner::default();
    let data: Vec<(Vec<u32>, Option<usize>)> = examples
        .iter()
        .map(|e| (e.features.iter().map(|f| feats.id(f)).collect(), label_id.get(e.label.as_str()).copied()))
        .collect();
    let nf = feats.names.len();
    let mut avg = Averaged::new(nf * labels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (fs, gold) = &data[i];
            avg.tick();
            let Some(gold) = *gold else { continue };
            let scores: Vec<f64> = (0..labels.len())
                .map(|l| fs.iter().map(|f| avg.w[l * nf + *f as usize]).sum())
                .collect();
            let pred = crate::ranker::argmax(&scores).expect("non-empty label space");
            if pred != gold {
                for f in fs {
                    avg.update((gold * nf + *f as usize) as u32, 1.0);
                    avg.update((pred * nf + *f as usize) as u32, -1.0);
                }
            }
        }
    }
    let mut names = Interner::default();
    for l in &labels {
        for f in &feats.names {
            names.id(&format!("{l}{SEP}{f}"));
        }
    }
    Ok(PerceptronModel {
        kind: ModelKind::Bow,
        weights: names.to_map(&avg.w),
        averaged: names.to_map(&avg.averaged()),
        epochs_trained: cfg.epochs,
        seed: cfg.seed,
        steps: avg.step,
    })
}

/// Predicted label for one pair under the averaged weights.
pub fn classify_pair(features: &[String], model: &PerceptronModel, labels: &[String]) -> String {
    let scores: Vec<f64> = labels
        .iter()
        .map(|l| {
            features
                .iter()
                .map(|f| model.averaged.get(&format!("{l}{SEP}{f}")).copied().unwrap_or(0.0))
                .sum()
        })
        .collect();
    labels[crate::ranker::argmax(&scores).expect("non-empty label space")].clone()
}

/// Conjunctive query from per-entity predictions; NULL adds no constraint.
pub fn bow_query(predictions: &[(String, String)]) -> Option<GroundedGraph> {
    let mut g = GroundedGraph {
        nodes: vec![GroundedNode::Target],
        edges: Vec::new(),
        source: None,
    };
    for (other, label) in predictions {
        let Some(rel) = Relation::from_label(label) else { continue };
        let ev = g.nodes.len();
        g.nodes.push(GroundedNode::Event(rel.event_type));
        g.nodes.push(GroundedNode::Entity(other.clone()));
        g.edges.push(GroundedEdge {
            src: ev,
            role: rel.role_blank,
            dst: 0,
        });
        g.edges.push(GroundedEdge {
            src: ev,
            role: rel.role_other,
            dst: ev + 1,
        });
    }
    (!g.edges.is_empty()).then_some(g)
}

/// Per-pair predictions for a sentence.
pub fn predict_pairs(tokens: &[Token], model: &PerceptronModel, labels: &[String]) -> Vec<(String, String)> {
    entity_positions(tokens)
        .into_iter()
        .map(|(e, i)| {
            let l = classify_pair(&pair_features(tokens, i), model, labels);
            (e, l)
        })
        .collect()
}

pub fn predict_bow(tokens: &[Token], kb: &KnowledgeBase, model: &PerceptronModel) -> Option<String> {
    let labels = label_space(kb);
    let preds = predict_pairs(tokens, model, &labels);
    let q = bow_query(&preds)?;
    execute(&q, kb).ok()?.into_iter().next()
}
