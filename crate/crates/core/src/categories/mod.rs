//! CCG categories, co-indexation, lexicons and category induction.

mod category;
mod coindex;
mod induction;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub use category::{enumerate_categories, Atom, Category, CategoryParseError, Slash};
pub use coindex::{coindex, CoindexedCategory};
pub(crate) use induction::{classify, induce_for_classes, TokenClass};
pub use induction::{
    induce_categories, is_known_tag, is_nominal_tag, is_verbal_tag, InductionConfig, UnknownPosPolicy,
    TAGSET,
};

use crate::parser::Token;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("unknown POS tag {0:?}")]
    UnknownPos(String),
    #[error("lexicon lookup is not available in gold-supertag mode")]
    GoldMode,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which supervision tier a lexicon realises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LexiconMode {
    Gold,
    WordConstrained,
    PosConstrained,
    Induced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyKind {
    Word,
    Pos,
}

/// Lexicon entries ordered by key frequency, most frequent first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedEntries {
    pub kind: KeyKind,
    pub entries: Vec<(String, BTreeSet<Category>)>,
}

impl RankedEntries {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses the `key<TAB>cat1,cat2,...` format; `#` starts a comment line.
    pub fn parse(text: &str, kind: KeyKind, origin: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let fmt_err = |message: String| LexiconError::Format {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, cats) = line
                .split_once('\t')
                .ok_or_else(|| fmt_err("expected key<TAB>categories".into()))?;
            if key.is_empty() {
                return Err(fmt_err("empty key".into()));
            }
            if !seen.insert(key.to_string()) {
                return Err(fmt_err(format!("duplicate key {key:?}")));
            }
            let set: BTreeSet<Category> = Category::parse_list(cats)
                .map_err(|e| fmt_err(e.to_string()))?
                .into_iter()
                .collect();
            if set.is_empty() {
                return Err(fmt_err(format!("no categories for {key:?}")));
            }
            entries.push((key.to_string(), set));
        }
        Ok(RankedEntries { kind, entries })
    }

    pub fn load(path: &Path, kind: KeyKind) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, kind, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            KeyKind::Word => "word",
            KeyKind::Pos => "pos",
        };
        let _ = writeln!(out, "# {kind} lexicon, most frequent key first");
        for (key, cats) in &self.entries {
            let list: Vec<String> = cats.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{key}\t{}", list.join(","));
        }
        out
    }
}

/// Candidate categories per token under one supervision tier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub word_entries: BTreeMap<String, BTreeSet<Category>>,
    pub pos_entries: BTreeMap<String, BTreeSet<Category>>,
    pub mode: LexiconMode,
    pub induction: InductionConfig,
}

impl Lexicon {
    /// Unsupervised tier: every category comes from induction.
    pub fn induced(induction: InductionConfig) -> Self {
        Lexicon {
            word_entries: BTreeMap::new(),
            pos_entries: BTreeMap::new(),
            mode: LexiconMode::Induced,
            induction,
        }
    }

    /// Supertags come with the data; the lexicon itself is never consulted.
    pub fn gold() -> Self {
        Lexicon {
            mode: LexiconMode::Gold,
            ..Lexicon::induced(InductionConfig::default())
        }
    }

    /// Candidate sets for a sentence. Blank tokens always get `{NP}`.
    pub fn candidates(&self, tokens: &[Token]) -> Result<Vec<BTreeSet<Category>>, LexiconError> {
        if self.mode == LexiconMode::Gold {
            return Err(LexiconError::GoldMode);
        }
        let classes = tokens
            .iter()
            .map(|t| {
                if t.is_blank {
                    Ok(TokenClass::FixedNp)
                } else {
                    classify(&t.pos, self.induction.unknown_pos)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let induced = induce_for_classes(&classes, &self.induction);
        Ok(tokens
            .iter()
            .zip(induced)
            .map(|(t, ind)| {
                if t.is_blank {
                    return [Category::np()].into_iter().collect();
                }
                let constrained = match self.mode {
                    LexiconMode::WordConstrained => self.word_entries.get(&t.surface),
                    LexiconMode::PosConstrained => self.pos_entries.get(&t.pos),
                    _ => None,
                };
                constrained.cloned().unwrap_or(ind)
            })
            .collect())
    }
}

/// Restricts the `k` most frequent keys to exactly their listed categories.
///
/// Keys outside the top `k` keep falling back to induced candidates; `k`
/// larger than the entry list constrains every entry.
pub fn constrain_lexicon(lex: &Lexicon, ranked: &RankedEntries, k: usize) -> Lexicon {
    if k == 0 {
        return lex.clone();
    }
    let mut out = lex.clone();
    let take = ranked.entries.iter().take(k).map(|(key, set)| (key.clone(), set.clone()));
    match ranked.kind {
        KeyKind::Word => {
            out.word_entries.extend(take);
            out.mode = LexiconMode::WordConstrained;
        }
        KeyKind::Pos => {
            out.pos_entries.extend(take);
            out.mode = LexiconMode::PosConstrained;
        }
    }
    out
}

/// Signed entry point for callers holding user input.
pub fn constrain_lexicon_checked(lex: &Lexicon, ranked: &RankedEntries, k: i64) -> Result<Lexicon, LexiconError> {
    if k < 0 {
        return Err(LexiconError::Argument(format!("lexicon size must be non-negative, got {k}")));
    }
    Ok(constrain_lexicon(lex, ranked, k as usize))
}
