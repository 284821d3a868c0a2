use std::collections::BTreeSet;

use log::warn;

use super::category::{Atom, Category};
use super::LexiconError;

/// Penn Treebank tags plus the punctuation tags that appear in tagged corpora.
pub const TAGSET: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP",
    "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", ",", ".", ":", "``", "''",
    "-LRB-", "-RRB-", "#", "$",
];

pub fn is_known_tag(tag: &str) -> bool {
    TAGSET.contains(&tag)
}

pub fn is_nominal_tag(tag: &str) -> bool {
    matches!(tag, "NN" | "NNS" | "NNP" | "NNPS" | "CD" | "PRP")
}

pub fn is_verbal_tag(tag: &str) -> bool {
    matches!(tag, "VB" | "VBD" | "VBN" | "VBZ" | "VBP" | "VBG" | "MD")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownPosPolicy {
    /// Skip induction for the token and give it `{NP}`, with a warning.
    AssignNp,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductionConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub max_arity: usize,
    pub unknown_pos: UnknownPosPolicy,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            rounds: 2,
            max_depth: 5,
            max_arity: 3,
            unknown_pos: UnknownPosPolicy::AssignNp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TokenClass {
    Nominal,
    Verbal,
    Function,
    /// Blank slot or unknown tag: fixed to `{NP}`, never grows.
    FixedNp,
}

impl TokenClass {
    fn seeds(self) -> Vec<Category> {
        match self {
            TokenClass::Nominal => vec![Category::n(), Category::np()],
            TokenClass::Verbal => vec![Category::s()],
            TokenClass::Function => vec![],
            TokenClass::FixedNp => vec![Category::np()],
        }
    }
}

pub(crate) fn classify(tag: &str, policy: UnknownPosPolicy) -> Result<TokenClass, LexiconError> {
    if is_nominal_tag(tag) {
        Ok(TokenClass::Nominal)
    } else if is_verbal_tag(tag) {
        Ok(TokenClass::Verbal)
    } else if is_known_tag(tag) {
        Ok(TokenClass::Function)
    } else {
        match policy {
            UnknownPosPolicy::AssignNp => {
                warn!("unknown POS tag {tag:?}; assigning {{NP}} without induction");
                Ok(TokenClass::FixedNp)
            }
            UnknownPosPolicy::Reject => Err(LexiconError::UnknownPos(tag.to_string())),
        }
    }
}

/// Categories a function word may modify: atoms and one-argument `S` functors.
fn modifiable(c: &Category) -> bool {
    match c {
        Category::Atomic(a) => !matches!(a, Atom::Conj | Atom::Comma),
        Category::Complex(..) => {
            c.root_atom() == Atom::S && c.arity() == 1 && c.argument().is_some_and(|a| a.is_atomic())
        }
    }
}

/// Bounded argument-growth induction from part-of-speech tags alone.
///
/// Nouns start as `{N, NP}`, verbs as `{S}`, everything else empty. Each round
/// lets verbs take adjacent seeds as arguments (subject to the left, objects to
/// the right) and lets function words become modifiers of categories seen on
/// either side, optionally taking the right neighbour's seed as an argument.
pub fn induce_categories(
    pos_tags: &[&str],
    cfg: &InductionConfig,
) -> Result<Vec<BTreeSet<Category>>, LexiconError> {
    let classes = pos_tags
        .iter()
        .map(|t| classify(t, cfg.unknown_pos))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(induce_for_classes(&classes, cfg))
}

pub(crate) fn induce_for_classes(classes: &[TokenClass], cfg: &InductionConfig) -> Vec<BTreeSet<Category>> {
    let n = classes.len();
    let seeds: Vec<Vec<Category>> = classes.iter().map(|c| c.seeds()).collect();
    let mut sets: Vec<BTreeSet<Category>> = seeds.iter().map(|s| s.iter().cloned().collect()).collect();
    let within = |c: &Category| c.depth() <= cfg.max_depth && c.arity() <= cfg.max_arity;

    for _ in 0..cfg.rounds {
        let prev = sets.clone();
        for i in 0..n {
            let left: &[Category] = if i > 0 { &seeds[i - 1] } else { &[] };
            let right: &[Category] = if i + 1 < n { &seeds[i + 1] } else { &[] };
            let mut grown = Vec::new();
            match classes[i] {
                TokenClass::Verbal => {
                    for c in &prev[i] {
                        if c.root_atom() != Atom::S {
                            continue;
                        }
                        if c.is_atom(Atom::S) {
                            for a in left {
                                let with_subj = Category::back(c.clone(), a.clone());
                                for b in right {
                                    grown.push(Category::fwd(with_subj.clone(), b.clone()));
                                }
                                grown.push(with_subj);
                            }
                        }
                        for b in right {
                            grown.push(Category::fwd(c.clone(), b.clone()));
                        }
                    }
                }
                TokenClass::Function => {
                    let pool = |range: std::ops::Range<usize>| -> BTreeSet<Category> {
                        range.flat_map(|j| prev[j].iter()).filter(|c| modifiable(c)).cloned().collect()
                    };
                    for x in pool(0..i) {
                        let m = Category::back(x.clone(), x);
                        for b in right {
                            grown.push(Category::fwd(m.clone(), b.clone()));
                        }
                        grown.push(m);
                    }
                    for x in pool(i + 1..n) {
                        grown.push(Category::fwd(x.clone(), x));
                    }
                    for b in right {
                        grown.push(Category::fwd(Category::pp(), b.clone()));
                    }
                }
                TokenClass::Nominal | TokenClass::FixedNp => {}
            }
            sets[i].extend(grown.into_iter().filter(|c| within(c)));
        }
    }
    sets
}
