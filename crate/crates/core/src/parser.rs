//! CKY chart parsing over candidate supertags.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::categories::{coindex, Atom, Category, CoindexedCategory, Lexicon, LexiconError, Slash};

pub const BLANK_SURFACE: &str = "_blank_";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub pos: String,
    pub entity: Option<String>,
    pub is_blank: bool,
}

impl Token {
    pub fn word(surface: &str, pos: &str) -> Self {
        Token {
            surface: surface.to_string(),
            pos: pos.to_string(),
            entity: None,
            is_blank: false,
        }
    }

    pub fn entity(surface: &str, pos: &str, id: &str) -> Self {
        Token {
            entity: Some(id.to_string()),
            ..Token::word(surface, pos)
        }
    }

    /// The removed mention. Always an NP.
    pub fn blank() -> Self {
        Token {
            surface: BLANK_SURFACE.to_string(),
            pos: "NNP".to_string(),
            entity: None,
            is_blank: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Combinator {
    FwdApp,
    BwdApp,
    FwdComp,
    BwdComp,
    Conj,
}

impl Combinator {
    pub fn tag(self) -> &'static str {
        match self {
            Combinator::FwdApp => ">",
            Combinator::BwdApp => "<",
            Combinator::FwdComp => ">B",
            Combinator::BwdComp => "<B",
            Combinator::Conj => "&",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn is_application(self) -> bool {
        matches!(self, Combinator::FwdApp | Combinator::BwdApp)
    }
}

/// First applicable rule of: `>`, `<`, `>B`, `<B`, conjunction.
pub fn apply_combinator(left: &Category, right: &Category) -> Option<(Category, Combinator)> {
    if let Category::Complex(x, Slash::Forward, y) = left {
        if **y == *right {
            return Some(((**x).clone(), Combinator::FwdApp));
        }
    }
    if let Category::Complex(x, Slash::Backward, y) = right {
        if **y == *left {
            return Some(((**x).clone(), Combinator::BwdApp));
        }
    }
    if let (Category::Complex(x, Slash::Forward, y1), Category::Complex(y2, Slash::Forward, z)) = (left, right) {
        if y1 == y2 {
            return Some((Category::fwd((**x).clone(), (**z).clone()), Combinator::FwdComp));
        }
    }
    if let (Category::Complex(y1, Slash::Backward, z), Category::Complex(x, Slash::Backward, y2)) = (left, right) {
        if y1 == y2 {
            return Some((Category::back((**x).clone(), (**z).clone()), Combinator::BwdComp));
        }
    }
    if left.is_atom(Atom::Conj) && !right.is_atom(Atom::Conj) && !right.is_atom(Atom::Comma) {
        return Some((Category::back(right.clone(), right.clone()), Combinator::Conj));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DerivNode {
    Leaf {
        index: usize,
        category: CoindexedCategory,
    },
    Binary {
        combinator: Combinator,
        category: Category,
        left: Arc<DerivNode>,
        right: Arc<DerivNode>,
    },
}

impl DerivNode {
    pub fn category(&self) -> &Category {
        match self {
            DerivNode::Leaf { category, .. } => &category.category,
            DerivNode::Binary { category, .. } => category,
        }
    }

    pub fn span(&self) -> (usize, usize) {
        match self {
            DerivNode::Leaf { index, .. } => (*index, index + 1),
            DerivNode::Binary { left, right, .. } => (left.span().0, right.span().1),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(usize, &'a CoindexedCategory)>) {
        match self {
            DerivNode::Leaf { index, category } => out.push((*index, category)),
            DerivNode::Binary { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    fn collect_combinators(&self, out: &mut Vec<Combinator>) {
        if let DerivNode::Binary { combinator, left, right, .. } = self {
            left.collect_combinators(out);
            right.collect_combinators(out);
            out.push(*combinator);
        }
    }

    fn write_bracketed(&self, tokens: Option<&[Token]>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivNode::Leaf { index, category } => {
                write!(f, "{{{}", category.category)?;
                match tokens.and_then(|t| t.get(*index)) {
                    Some(t) => write!(f, " {}}}", t.surface),
                    None => write!(f, " {index}}}"),
                }
            }
            DerivNode::Binary { combinator, category, left, right } => {
                write!(f, "({} {} ", combinator.tag(), category)?;
                left.write_bracketed(tokens, f)?;
                f.write_str(" ")?;
                right.write_bracketed(tokens, f)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub root: Arc<DerivNode>,
    pub score: f64,
}

impl Derivation {
    pub fn new(root: Arc<DerivNode>) -> Self {
        let mut d = Derivation { root, score: 0.0 };
        d.score = score_derivation(&d);
        d
    }

    pub fn category(&self) -> &Category {
        self.root.category()
    }

    pub fn leaves(&self) -> Vec<(usize, &CoindexedCategory)> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn supertags(&self) -> Vec<Category> {
        self.leaves().into_iter().map(|(_, c)| c.category.clone()).collect()
    }

    pub fn combinators(&self) -> Vec<Combinator> {
        let mut out = Vec::new();
        self.root.collect_combinators(&mut out);
        out
    }

    /// Structural validity: every internal node reproducible by
    /// [`apply_combinator`], contiguous leaves covering the sentence, and a
    /// full-sentence root category.
    pub fn validate(&self, n_tokens: usize) -> bool {
        fn check(node: &DerivNode) -> bool {
            match node {
                DerivNode::Leaf { .. } => true,
                DerivNode::Binary { combinator, category, left, right } => {
                    left.span().1 == right.span().0
                        && apply_combinator(left.category(), right.category())
                            .is_some_and(|(c, k)| &c == category && k == *combinator)
                        && check(left)
                        && check(right)
                }
            }
        }
        let leaves = self.leaves();
        leaves.len() == n_tokens
            && leaves.iter().enumerate().all(|(i, (idx, _))| i == *idx)
            && is_sentence_root(self.category())
            && check(&self.root)
    }

    /// Canonical bracketed rendering, stable across runs.
    pub fn render(&self, tokens: Option<&[Token]>) -> String {
        struct R<'a>(&'a DerivNode, Option<&'a [Token]>);
        impl fmt::Display for R<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_bracketed(self.1, f)
            }
        }
        R(&self.root, tokens).to_string()
    }
}

fn is_sentence_root(c: &Category) -> bool {
    c.is_atom(Atom::S) || c.is_atom(Atom::NP)
}

/// `-(distinct combinator types) - 0.1 * (sum of leaf category depths)`.
pub fn score_derivation(d: &Derivation) -> f64 {
    let (mask, depth) = tree_stats(&d.root);
    score_from_stats(mask, depth)
}

fn tree_stats(node: &DerivNode) -> (u8, u32) {
    match node {
        DerivNode::Leaf { category, .. } => (0, category.category.depth() as u32),
        DerivNode::Binary { combinator, left, right, .. } => {
            let (ml, dl) = tree_stats(left);
            let (mr, dr) = tree_stats(right);
            (ml | mr | combinator.bit(), dl + dr)
        }
    }
}

// Scores are kept as integers in tenths so ties compare exactly.
fn score_tenths(mask: u8, depth: u32) -> i64 {
    -10 * i64::from(mask.count_ones()) - i64::from(depth)
}

fn score_from_stats(mask: u8, depth: u32) -> f64 {
    score_tenths(mask, depth) as f64 / 10.0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseConfig {
    pub beam_width: usize,
    pub top_n: usize,
    pub max_category_depth: usize,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            beam_width: 50,
            top_n: 10,
            max_category_depth: 5,
        }
    }
}

impl ParseConfig {
    /// No pruning at all; used for exhaustive comparisons.
    pub fn exhaustive() -> Self {
        ParseConfig {
            beam_width: usize::MAX,
            top_n: usize::MAX,
            max_category_depth: 5,
        }
    }
}

/// Where candidate supertags come from.
#[derive(Clone, Copy, Debug)]
pub enum CandidateSource<'a> {
    Lexicon(&'a Lexicon),
    /// One gold supertag per token.
    Gold(&'a [Category]),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot parse an empty sentence")]
    EmptySentence,
    #[error("no candidate category for token {index} ({surface:?})")]
    Coverage { index: usize, surface: String },
    #[error("gold supertags cover {tags} tokens but the sentence has {tokens}")]
    GoldLength { tags: usize, tokens: usize },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

pub fn candidate_sets(tokens: &[Token], source: CandidateSource<'_>) -> Result<Vec<BTreeSet<Category>>, ParseError> {
    match source {
        CandidateSource::Lexicon(lex) => Ok(lex.candidates(tokens)?),
        CandidateSource::Gold(tags) => {
            if tags.len() != tokens.len() {
                return Err(ParseError::GoldLength { tags: tags.len(), tokens: tokens.len() });
            }
            Ok(tokens
                .iter()
                .zip(tags)
                .map(|(t, c)| {
                    if t.is_blank {
                        [Category::np()].into_iter().collect()
                    } else {
                        [c.clone()].into_iter().collect()
                    }
                })
                .collect())
        }
    }
}

struct Item {
    node: Arc<DerivNode>,
    cat: u32,
    mask: u8,
    depth: u32,
}

impl Item {
    fn score(&self) -> i64 {
        score_tenths(self.mask, self.depth)
    }
}

/// (score, split, left rank, right rank, category, combinator, mask, depth).
type ChartCandidate = (i64, usize, usize, usize, u32, Combinator, u8, u32);

/// Per-sentence category interner with a memo of combinator results.
struct CatTable {
    cats: Vec<Category>,
    ids: HashMap<Category, u32>,
    memo: HashMap<(u32, u32), Option<(u32, Combinator)>>,
    max_depth: usize,
}

impl CatTable {
    fn intern(&mut self, c: Category) -> u32 {
        if let Some(id) = self.ids.get(&c) {
            return *id;
        }
        let id = self.cats.len() as u32;
        self.cats.push(c.clone());
        self.ids.insert(c, id);
        id
    }

    fn combine(&mut self, l: u32, r: u32) -> Option<(u32, Combinator)> {
        if let Some(hit) = self.memo.get(&(l, r)) {
            return *hit;
        }
        let out = apply_combinator(&self.cats[l as usize], &self.cats[r as usize])
            .filter(|(c, _)| c.depth() <= self.max_depth)
            .map(|(c, k)| (self.intern(c), k));
        self.memo.insert((l, r), out);
        out
    }
}

/// CKY parse returning complete derivations, best heuristic score first.
///
/// Each chart cell keeps at most `beam_width` sub-derivations, ordered by
/// score and then by (split point, left rank, right rank), which makes the
/// whole output order deterministic.
pub fn parse(tokens: &[Token], source: CandidateSource<'_>, cfg: &ParseConfig) -> Result<Vec<Derivation>, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptySentence);
    }
    let sets = candidate_sets(tokens, source)?;
    parse_candidates(tokens, &sets, cfg)
}

/// Parses from explicit per-token candidate sets.
pub fn parse_candidates(
    tokens: &[Token],
    sets: &[BTreeSet<Category>],
    cfg: &ParseConfig,
) -> Result<Vec<Derivation>, ParseError> {
    let n = tokens.len();
    if n == 0 {
        return Err(ParseError::EmptySentence);
    }
    if let Some((index, t)) = sets.iter().zip(tokens).enumerate().find(|(_, (s, _))| s.is_empty()).map(|(i, (_, t))| (i, t)) {
        return Err(ParseError::Coverage { index, surface: t.surface.clone() });
    }
    let mut table = CatTable {
        cats: Vec::new(),
        ids: HashMap::new(),
        memo: HashMap::new(),
        max_depth: cfg.max_category_depth,
    };
    // chart[start][len - 1]
    let mut chart: Vec<Vec<Vec<Item>>> = (0..n).map(|i| (0..n - i).map(|_| Vec::new()).collect()).collect();
    for (i, set) in sets.iter().enumerate() {
        let mut items: Vec<Item> = set
            .iter()
            .filter(|c| c.depth() <= cfg.max_category_depth)
            .map(|c| {
                let co = coindex(c).swap_remove(0);
                Item {
                    cat: table.intern(c.clone()),
                    mask: 0,
                    depth: c.depth() as u32,
                    node: Arc::new(DerivNode::Leaf { index: i, category: co }),
                }
            })
            .collect();
        // BTreeSet order already gives the tie-break among equal scores.
        items.sort_by_key(|it| std::cmp::Reverse(it.score()));
        if n == 1 {
            items.retain(|it| is_sentence_root(&table.cats[it.cat as usize]));
        }
        items.truncate(cfg.beam_width);
        chart[i][0] = items;
    }

    for len in 2..=n {
        for start in 0..=n - len {
            let mut cands: Vec<ChartCandidate> = Vec::new();
            for split in 1..len {
                let left = &chart[start][split - 1];
                let right = &chart[start + split][len - split - 1];
                if left.is_empty() || right.is_empty() {
                    continue;
                }
                let lgroups = group_by_cat(left);
                let rgroups = group_by_cat(right);
                for (lc, lidx) in &lgroups {
                    for (rc, ridx) in &rgroups {
                        let Some((res, comb)) = table.combine(*lc, *rc) else {
                            continue;
                        };
                        for &li in lidx {
                            let l = &left[li];
                            for &ri in ridx {
                                let r = &right[ri];
                                let mask = l.mask | r.mask | comb.bit();
                                let depth = l.depth + r.depth;
                                cands.push((score_tenths(mask, depth), split, li, ri, res, comb, mask, depth));
                            }
                        }
                    }
                }
            }
            if len == n {
                cands.retain(|c| is_sentence_root(&table.cats[c.4 as usize]));
            }
            let order = |a: &ChartCandidate, b: &ChartCandidate| {
                b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3))
            };
            if cands.len() > cfg.beam_width {
                cands.select_nth_unstable_by(cfg.beam_width, order);
                cands.truncate(cfg.beam_width);
            }
            cands.sort_unstable_by(order);
            let items: Vec<Item> = cands
                .into_iter()
                .map(|(_, split, li, ri, cat, comb, mask, depth)| {
                    let l = chart[start][split - 1][li].node.clone();
                    let r = chart[start + split][len - split - 1][ri].node.clone();
                    Item {
                        node: Arc::new(DerivNode::Binary {
                            combinator: comb,
                            category: table.cats[cat as usize].clone(),
                            left: l,
                            right: r,
                        }),
                        cat,
                        mask,
                        depth,
                    }
                })
                .collect();
            chart[start][len - 1] = items;
        }
    }

    Ok(chart[0][n - 1]
        .iter()
        .take(cfg.top_n)
        .map(|it| Derivation {
            root: it.node.clone(),
            score: score_from_stats(it.mask, it.depth),
        })
        .collect())
}

fn group_by_cat(items: &[Item]) -> Vec<(u32, Vec<usize>)> {
    let mut groups: Vec<(u32, Vec<usize>)> = Vec::new();
    for (i, it) in items.iter().enumerate() {
        match groups.iter_mut().find(|(c, _)| *c == it.cat) {
            Some((_, v)) => v.push(i),
            None => groups.push((it.cat, vec![i])),
        }
    }
    groups
}
