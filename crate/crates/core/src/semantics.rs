//! Composition of word-level semantics into ungrounded event graphs.
//!
//! Every atomic position of a co-indexed category carries a variable. A
//! lexical entry contributes predicates over those variables; combinators
//! unify the variables of the categories they cancel. Once the derivation is
//! reduced, each variable class becomes one graph node.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::categories::{coindex, is_verbal_tag, Atom, Category, CoindexedCategory, Slash};
use crate::parser::{Combinator, DerivNode, Derivation, Token};

pub const TYPE_EDGE: &str = "type";
pub const APPOSITION: &str = "appos";

const BE_FORMS: &[&str] = &["be", "is", "are", "was", "were", "been", "being", "am"];
const AUX_FORMS: &[&str] = &[
    "be", "is", "are", "was", "were", "been", "being", "am", "has", "have", "had", "do", "does", "did",
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Event(String),
    Entity(String),
    Type(String),
    Target,
    Variable,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    /// Token that introduced the node; orders events canonically.
    pub origin: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub label: String,
    pub dst: usize,
}

/// Event/entity/type graph whose predicates are surface words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct UngroundedGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl UngroundedGraph {
    pub fn target(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::Target)
    }

    pub fn event_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Event(_)))
            .map(|(i, _)| i)
    }

    /// Display names used by [`serialize`](Self::serialize).
    pub fn node_names(&self) -> Vec<String> {
        let mut ev = 0;
        let mut var = 0;
        self.nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Event(_) => {
                    ev += 1;
                    format!("e{ev}")
                }
                NodeKind::Entity(id) => id.clone(),
                NodeKind::Type(lemma) => lemma.clone(),
                NodeKind::Target => "x".to_string(),
                NodeKind::Variable => {
                    var += 1;
                    format!("v{var}")
                }
            })
            .collect()
    }

    /// Canonical text form: one predicate per line, sorted.
    pub fn serialize(&self) -> String {
        let names = self.node_names();
        let mut lines: Vec<String> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match &n.kind {
                NodeKind::Event(label) => lines.push(format!("{label}({})", names[i])),
                NodeKind::Target => lines.push(format!("TARGET({})", names[i])),
                _ => {}
            }
        }
        for e in &self.edges {
            lines.push(format!("{}({}, {})", e.label, names[e.src], names[e.dst]));
        }
        lines.sort();
        lines.join("\n")
    }

    /// Nodes reachable from `start` ignoring edge direction.
    fn reachable(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for e in &self.edges {
                let next = if e.src == u {
                    e.dst
                } else if e.dst == u {
                    e.src
                } else {
                    continue;
                };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen
    }
}

impl fmt::Display for UngroundedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("no semantics template for {surface:?} with category {category}")]
    NoTemplate { surface: String, category: String },
    #[error("slot arity mismatch at {category}: expected {expected} variables, found {found}")]
    Arity { category: String, expected: usize, found: usize },
    #[error("cannot unify {0} with {1}")]
    Conflict(String, String),
    #[error("unsaturated arguments remain at the root ({0})")]
    Incomplete(String),
}

/// A predicate over local variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pred {
    Event(u32, String),
    Entity(u32, String),
    Target(u32),
    Type(u32, String),
    Edge(String, u32, u32),
    Unify(u32, u32),
}

/// A composition value: predicates plus the variables of the category's
/// atomic positions. The argument slots still open are the arguments of
/// `category`, whose variables sit in `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticExpr {
    pub category: Category,
    pub vars: Vec<u32>,
    pub preds: Vec<Pred>,
    /// Variables used, including ones not tied to any category position.
    pub var_count: u32,
}

impl SemanticExpr {
    /// Variable groups of the open argument slots, outermost first.
    pub fn unsaturated(&self) -> Vec<&[u32]> {
        let mut out = Vec::new();
        let mut cur = &self.category;
        while let Category::Complex(r, _, a) = cur {
            let start = r.atom_count();
            out.push(&self.vars[start..start + a.atom_count()]);
            cur = r;
        }
        out
    }
}

/// Syntactic context the lexical templates need beyond the token itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LexicalContext {
    /// Past participle governed by a form of "be".
    pub passive: bool,
}

pub fn lemma(t: &Token) -> String {
    t.surface.to_lowercase()
}

/// Whether token `i` is a passive participle: a VBN whose closest preceding
/// verb (skipping adverbs) is a form of "be".
pub fn is_passive(tokens: &[Token], i: usize) -> bool {
    if tokens[i].pos != "VBN" {
        return false;
    }
    for t in tokens[..i].iter().rev() {
        if t.pos.starts_with("RB") {
            continue;
        }
        return is_verbal_tag(&t.pos) && BE_FORMS.contains(&lemma(t).as_str());
    }
    false
}

fn is_nominal(c: &Category) -> bool {
    c.is_atom(Atom::NP) || c.is_atom(Atom::N)
}

/// Atom offset of each spine argument, outermost first: (slash, argument, offset).
fn spine_args(c: &Category) -> Vec<(Slash, &Category, usize)> {
    let mut out = Vec::new();
    let mut cur = c;
    while let Category::Complex(r, s, a) = cur {
        out.push((*s, a.as_ref(), r.atom_count()));
        cur = r;
    }
    out
}

/// Variable of the subject NP inside an `S\NP`-shaped sub-category at `offset`.
fn subject_var(c: &Category, heads: &[u32], offset: usize) -> Option<u32> {
    match c {
        Category::Complex(r, Slash::Backward, a) if r.is_atom(Atom::S) && is_nominal(a) => Some(heads[offset + 1]),
        _ => None,
    }
}

/// Word-level semantics of a token under one co-indexed category.
pub fn lexical_semantics(t: &Token, c: &CoindexedCategory, ctx: LexicalContext) -> Result<SemanticExpr, ComposeError> {
    let cat = &c.category;
    let h = &c.heads;
    let r = c.root_head;
    let mut var_count = c.variable_count();
    let no_template = || ComposeError::NoTemplate {
        surface: t.surface.clone(),
        category: cat.to_string(),
    };
    let lem = lemma(t);
    let mut preds = Vec::new();

    if t.is_blank {
        if !is_nominal(cat) {
            return Err(no_template());
        }
        preds.push(Pred::Target(r));
    } else if let Some(id) = &t.entity {
        if !is_nominal(cat) {
            return Err(no_template());
        }
        preds.push(Pred::Entity(r, id.clone()));
    } else if is_verbal_tag(&t.pos) {
        verb_semantics(&lem, cat, c, ctx, &mut preds).ok_or_else(no_template)?;
    } else {
        match t.pos.as_str() {
            "IN" | "TO" => preposition_semantics(&lem, cat, h, &mut var_count, &mut preds).ok_or_else(no_template)?,
            "WDT" | "WP" => {
                if let (Some(res), Some(arg)) = (cat.result(), cat.argument()) {
                    if res.is_modifier() {
                        let m = match res.result() {
                            Some(y) if is_nominal(y) => Some(h[0]),
                            Some(y) => subject_var(y, h, 0),
                            None => None,
                        };
                        if let (Some(m), Some(s)) = (m, subject_var(arg, h, res.atom_count())) {
                            preds.push(Pred::Unify(m, s));
                        }
                    } else if !cat.is_modifier() {
                        return Err(no_template());
                    }
                } else {
                    return Err(no_template());
                }
            }
            "DT" => {
                if let (Some(res), Some(arg)) = (cat.result(), cat.argument()) {
                    if is_nominal(res) && is_nominal(arg) && res != arg {
                        preds.push(Pred::Unify(h[0], h[1]));
                    } else if !cat.is_modifier() {
                        return Err(no_template());
                    }
                } else if !is_nominal(cat) {
                    return Err(no_template());
                }
            }
            "NN" | "NNS" | "JJ" => {
                if is_nominal(cat) || (cat.is_modifier() && cat.result().is_some_and(is_nominal)) {
                    preds.push(Pred::Type(r, lem));
                } else {
                    return Err(no_template());
                }
            }
            "," | "CC" | ":" => {
                if cat.is_atom(Atom::Conj) || cat.is_atom(Atom::Comma) || cat.is_modifier() {
                    // punctuation and coordination words carry no predicates
                } else if let (Some(res), Some(arg)) = (cat.result(), cat.argument()) {
                    if res.is_modifier() && res.result().is_some_and(is_nominal) && is_nominal(arg) {
                        let p = var_count;
                        var_count += 1;
                        let obj = h[res.atom_count()];
                        preds.push(Pred::Event(p, APPOSITION.to_string()));
                        preds.push(Pred::Edge("arg1".into(), p, h[0]));
                        preds.push(Pred::Edge("arg2".into(), p, obj));
                    } else if !res.is_modifier() || !arg.is_modifier() {
                        return Err(no_template());
                    }
                } else {
                    return Err(no_template());
                }
            }
            _ => {
                if !cat.is_modifier() {
                    return Err(no_template());
                }
            }
        }
    }
    Ok(SemanticExpr {
        category: cat.clone(),
        vars: h.clone(),
        preds,
        var_count,
    })
}

fn verb_semantics(
    lem: &str,
    cat: &Category,
    c: &CoindexedCategory,
    ctx: LexicalContext,
    preds: &mut Vec<Pred>,
) -> Option<()> {
    let h = &c.heads;
    let r = c.root_head;
    if cat.root_atom() != Atom::S {
        return None;
    }
    if let (true, Some(res), Some(arg)) = (AUX_FORMS.contains(&lem), cat.result(), cat.argument()) {
        if res.root_atom() == Atom::S && arg.root_atom() == Atom::S {
            let arg_off = res.atom_count();
            let arg_head = h[arg_off];
            let aux_shape = cat.is_modifier() && subject_var(res, h, 0).is_some();
            if aux_shape && arg_head != r {
                // distinct-head co-indexation: control reading
                preds.push(Pred::Event(r, lem.to_string()));
                preds.push(Pred::Edge("arg1".into(), r, subject_var(res, h, 0)?));
                return Some(());
            }
            preds.push(Pred::Unify(r, arg_head));
            if let (Some(subj), None) = (subject_var(res, h, 0), subject_var(arg, h, arg_off)) {
                preds.push(Pred::Edge("arg1".into(), r, subj));
            }
            return Some(());
        }
    }
    preds.push(Pred::Event(r, lem.to_string()));
    if cat.is_modifier() {
        return Some(());
    }
    let args = spine_args(cat);
    let mut numbered = Vec::new();
    let mut subject = None;
    for (k, (slash, a, off)) in args.iter().enumerate() {
        if is_nominal(a) {
            if k == args.len() - 1 && *slash == Slash::Backward {
                subject = Some(h[*off]);
            } else {
                numbered.push(h[*off]);
            }
        } else if a.is_atom(Atom::PP) || a.root_atom() == Atom::S {
            // PP arguments share the event variable; clausal arguments are
            // tied by co-indexation only.
        } else {
            return None;
        }
    }
    let mut next = 2;
    if let Some(s) = subject {
        let label = if ctx.passive { "arg2" } else { "arg1" };
        if ctx.passive {
            next = 3;
        }
        preds.push(Pred::Edge(label.into(), r, s));
    }
    for v in numbered {
        if next > 3 {
            return None;
        }
        preds.push(Pred::Edge(format!("arg{next}"), r, v));
        next += 1;
    }
    Some(())
}

fn preposition_semantics(
    lem: &str,
    cat: &Category,
    h: &[u32],
    var_count: &mut u32,
    preds: &mut Vec<Pred>,
) -> Option<()> {
    let (Some(res), Some(arg)) = (cat.result(), cat.argument()) else {
        return None;
    };
    if !is_nominal(arg) {
        return if cat.is_modifier() { Some(()) } else { None };
    }
    let obj = h[res.atom_count()];
    if res.is_atom(Atom::PP) {
        preds.push(Pred::Edge(lem.to_string(), h[0], obj));
        return Some(());
    }
    if !res.is_modifier() {
        return if cat.is_modifier() { Some(()) } else { None };
    }
    let modified = res.result()?;
    if modified.root_atom() == Atom::S {
        preds.push(Pred::Edge(lem.to_string(), h[0], obj));
    } else if is_nominal(modified) {
        let p = *var_count;
        *var_count += 1;
        preds.push(Pred::Event(p, lem.to_string()));
        preds.push(Pred::Edge("arg1".into(), p, h[0]));
        preds.push(Pred::Edge("arg2".into(), p, obj));
    } else {
        return None;
    }
    Some(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Binding {
    Entity(String),
    Target,
    Event(String, usize),
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Entity(id) => write!(f, "entity {id}"),
            Binding::Target => f.write_str("TARGET"),
            Binding::Event(l, i) => write!(f, "event {l}@{i}"),
        }
    }
}

#[derive(Default)]
struct Store {
    parent: Vec<u32>,
    origin: Vec<usize>,
    binding: Vec<Option<Binding>>,
    types: Vec<(u32, String)>,
    edges: Vec<(String, u32, u32)>,
}

impl Store {
    fn alloc(&mut self, n: u32, origin: usize) -> u32 {
        let base = self.parent.len() as u32;
        for k in 0..n {
            self.parent.push(base + k);
            self.origin.push(origin);
            self.binding.push(None);
        }
        base
    }

    fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = v;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn bind(&mut self, v: u32, b: Binding) -> Result<(), ComposeError> {
        let root = self.find(v) as usize;
        match &self.binding[root] {
            None => {
                self.binding[root] = Some(b);
                Ok(())
            }
            Some(existing) if *existing == b => Ok(()),
            Some(existing) => Err(ComposeError::Conflict(existing.to_string(), b.to_string())),
        }
    }

    fn unify(&mut self, a: u32, b: u32) -> Result<(), ComposeError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        let moved = self.binding[drop as usize].take();
        self.parent[drop as usize] = keep;
        let o = self.origin[drop as usize].min(self.origin[keep as usize]);
        self.origin[keep as usize] = o;
        if let Some(b) = moved {
            self.bind(keep, b)?;
        }
        Ok(())
    }
}

struct Composer<'a> {
    tokens: &'a [Token],
    store: Store,
}

impl Composer<'_> {
    fn leaf(&mut self, index: usize, co: &CoindexedCategory) -> Result<(Category, Vec<u32>), ComposeError> {
        let ctx = LexicalContext {
            passive: is_passive(self.tokens, index),
        };
        let expr = lexical_semantics(&self.tokens[index], co, ctx)?;
        let base = self.store.alloc(expr.var_count, index);
        let g = |v: u32| base + v;
        for p in expr.preds {
            match p {
                Pred::Event(v, l) => self.store.bind(g(v), Binding::Event(l, index))?,
                Pred::Entity(v, id) => self.store.bind(g(v), Binding::Entity(id))?,
                Pred::Target(v) => self.store.bind(g(v), Binding::Target)?,
                Pred::Type(v, l) => self.store.types.push((g(v), l)),
                Pred::Edge(l, a, b) => self.store.edges.push((l, g(a), g(b))),
                Pred::Unify(a, b) => self.store.unify(g(a), g(b))?,
            }
        }
        Ok((expr.category, expr.vars.iter().map(|v| g(*v)).collect()))
    }

    fn unify_all(&mut self, a: &[u32], b: &[u32], at: &Category) -> Result<(), ComposeError> {
        if a.len() != b.len() {
            return Err(ComposeError::Arity {
                category: at.to_string(),
                expected: a.len(),
                found: b.len(),
            });
        }
        for (x, y) in a.iter().zip(b) {
            self.store.unify(*x, *y)?;
        }
        Ok(())
    }

    fn node(
        &mut self,
        node: &DerivNode,
        variants: &BTreeMap<usize, CoindexedCategory>,
    ) -> Result<(Category, Vec<u32>), ComposeError> {
        match node {
            DerivNode::Leaf { index, category } => {
                let co = variants.get(index).unwrap_or(category);
                self.leaf(*index, co)
            }
            DerivNode::Binary { combinator, category, left, right } => {
                let (lc, lv) = self.node(left, variants)?;
                let (rc, rv) = self.node(right, variants)?;
                let arity_err = |c: &Category, v: &[u32]| ComposeError::Arity {
                    category: c.to_string(),
                    expected: c.atom_count(),
                    found: v.len(),
                };
                if lv.len() != lc.atom_count() {
                    return Err(arity_err(&lc, &lv));
                }
                if rv.len() != rc.atom_count() {
                    return Err(arity_err(&rc, &rv));
                }
                let vars = match combinator {
                    Combinator::FwdApp => {
                        let n = lc.result().ok_or_else(|| arity_err(&lc, &lv))?.atom_count();
                        self.unify_all(&lv[n..], &rv, category)?;
                        lv[..n].to_vec()
                    }
                    Combinator::BwdApp => {
                        let n = rc.result().ok_or_else(|| arity_err(&rc, &rv))?.atom_count();
                        self.unify_all(&rv[n..], &lv, category)?;
                        rv[..n].to_vec()
                    }
                    Combinator::FwdComp => {
                        // X/Y . Y/Z
                        let nx = lc.result().ok_or_else(|| arity_err(&lc, &lv))?.atom_count();
                        let ny = rc.result().ok_or_else(|| arity_err(&rc, &rv))?.atom_count();
                        self.unify_all(&lv[nx..], &rv[..ny], category)?;
                        let mut v = lv[..nx].to_vec();
                        v.extend_from_slice(&rv[ny..]);
                        v
                    }
                    Combinator::BwdComp => {
                        // Y\Z . X\Y
                        let ny = lc.result().ok_or_else(|| arity_err(&lc, &lv))?.atom_count();
                        let nx = rc.result().ok_or_else(|| arity_err(&rc, &rv))?.atom_count();
                        self.unify_all(&rv[nx..], &lv[..ny], category)?;
                        let mut v = rv[..nx].to_vec();
                        v.extend_from_slice(&lv[ny..]);
                        v
                    }
                    Combinator::Conj => {
                        // conj . X => X\X whose result is the left conjunct;
                        // the right conjunct stays attached to nothing.
                        let n = rc.atom_count() as u32;
                        let origin = right.span().0;
                        let base = self.store.alloc(n, origin);
                        let fresh: Vec<u32> = (base..base + n).collect();
                        let mut v = fresh.clone();
                        v.extend(fresh);
                        v
                    }
                };
                if vars.len() != category.atom_count() {
                    return Err(arity_err(category, &vars));
                }
                Ok((category.clone(), vars))
            }
        }
    }

    fn into_graph(mut self, root_vars: &[u32]) -> UngroundedGraph {
        // Classes that carry content.
        let mut classes: BTreeMap<u32, NodeKind> = BTreeMap::new();
        let edges: Vec<(String, u32, u32)> = std::mem::take(&mut self.store.edges)
            .into_iter()
            .map(|(l, a, b)| (l, self.store.find(a), self.store.find(b)))
            .collect();
        let types: Vec<(u32, String)> = std::mem::take(&mut self.store.types)
            .into_iter()
            .map(|(v, l)| (self.store.find(v), l))
            .collect();
        let n = self.store.parent.len() as u32;
        for v in 0..n {
            let root = self.store.find(v);
            if root != v {
                continue;
            }
            if let Some(b) = &self.store.binding[root as usize] {
                classes.insert(
                    root,
                    match b {
                        Binding::Entity(id) => NodeKind::Entity(id.clone()),
                        Binding::Target => NodeKind::Target,
                        Binding::Event(l, _) => NodeKind::Event(l.clone()),
                    },
                );
                if let Some(Binding::Event(_, tok)) = &self.store.binding[root as usize] {
                    self.store.origin[root as usize] = *tok;
                }
            }
        }
        for (_, a, b) in &edges {
            classes.entry(*a).or_insert(NodeKind::Variable);
            classes.entry(*b).or_insert(NodeKind::Variable);
        }
        for (v, _) in &types {
            classes.entry(*v).or_insert(NodeKind::Variable);
        }
        let _ = root_vars;

        // Canonical node order: events by token, target, entities, variables,
        // then type nodes.
        let rank = |k: &NodeKind| match k {
            NodeKind::Event(_) => 0,
            NodeKind::Target => 1,
            NodeKind::Entity(_) => 2,
            NodeKind::Variable => 3,
            NodeKind::Type(_) => 4,
        };
        let mut order: Vec<(u32, NodeKind)> = classes.into_iter().collect();
        order.sort_by(|(va, ka), (vb, kb)| {
            rank(ka)
                .cmp(&rank(kb))
                .then(self.store.origin[*va as usize].cmp(&self.store.origin[*vb as usize]))
                .then(ka.cmp(kb))
                .then(va.cmp(vb))
        });
        let mut index: BTreeMap<u32, usize> = BTreeMap::new();
        let mut nodes = Vec::new();
        for (v, k) in order {
            index.insert(v, nodes.len());
            nodes.push(Node {
                kind: k,
                origin: self.store.origin[v as usize],
            });
        }
        let mut out_edges: Vec<Edge> = edges
            .into_iter()
            .map(|(l, a, b)| Edge {
                src: index[&a],
                label: l,
                dst: index[&b],
            })
            .collect();
        let mut type_pairs: Vec<(usize, String)> = types.into_iter().map(|(v, l)| (index[&v], l)).collect();
        type_pairs.sort();
        type_pairs.dedup();
        for (src, l) in type_pairs {
            let t = nodes.len();
            nodes.push(Node {
                kind: NodeKind::Type(l),
                origin: nodes[src].origin,
            });
            out_edges.push(Edge {
                src,
                label: TYPE_EDGE.to_string(),
                dst: t,
            });
        }
        out_edges.sort();
        out_edges.dedup();
        UngroundedGraph { nodes, edges: out_edges }
    }
}

/// Maximum number of co-indexation combinations expanded per derivation.
const MAX_VARIANT_COMBOS: usize = 16;

/// Composes one graph per co-indexation combination of the derivation's
/// leaves. Combinations that fail are dropped; if all fail, the first error
/// is returned.
pub fn compose(d: &Derivation, tokens: &[Token]) -> Result<Vec<UngroundedGraph>, ComposeError> {
    let leaves = d.leaves();
    let mut combos: Vec<BTreeMap<usize, CoindexedCategory>> = vec![BTreeMap::new()];
    for (index, co) in &leaves {
        let variants = coindex(&co.category);
        if variants.len() > 1 && combos.len() * variants.len() <= MAX_VARIANT_COMBOS {
            combos = combos
                .into_iter()
                .flat_map(|m| {
                    variants.iter().map(move |v| {
                        let mut m = m.clone();
                        m.insert(*index, v.clone());
                        m
                    })
                })
                .collect();
        }
    }
    let mut graphs: Vec<UngroundedGraph> = Vec::new();
    let mut first_err = None;
    for combo in &combos {
        match compose_with(d, tokens, combo) {
            Ok(g) => {
                if !graphs.contains(&g) {
                    graphs.push(g);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (graphs.is_empty(), first_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(graphs),
    }
}

fn compose_with(
    d: &Derivation,
    tokens: &[Token],
    variants: &BTreeMap<usize, CoindexedCategory>,
) -> Result<UngroundedGraph, ComposeError> {
    let mut composer = Composer {
        tokens,
        store: Store::default(),
    };
    let (cat, vars) = composer.node(&d.root, variants)?;
    if !cat.is_atomic() {
        return Err(ComposeError::Incomplete(cat.to_string()));
    }
    Ok(composer.into_graph(&vars))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rejection {
    VariableNode,
    NoEvent,
    UnreachableEntity,
    IsolatedTarget,
    Disconnected,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::VariableNode => "variable-node",
            Rejection::NoEvent => "no-event",
            Rejection::UnreachableEntity => "unreachable-entity",
            Rejection::IsolatedTarget => "isolated-target",
            Rejection::Disconnected => "disconnected",
        })
    }
}

/// Corpus-level well-formedness: no variables besides the target, at least
/// one event, every entity reachable from an event, a connected target, and
/// a single connected component.
pub fn validate(g: &UngroundedGraph) -> Result<(), Rejection> {
    if g.nodes.iter().any(|n| n.kind == NodeKind::Variable) {
        return Err(Rejection::VariableNode);
    }
    let events: Vec<usize> = g.event_nodes().collect();
    if events.is_empty() {
        return Err(Rejection::NoEvent);
    }
    let mut from_events = vec![false; g.nodes.len()];
    for &e in &events {
        for (i, r) in g.reachable(e).into_iter().enumerate() {
            from_events[i] |= r;
        }
    }
    if g
        .nodes
        .iter()
        .enumerate()
        .any(|(i, n)| matches!(n.kind, NodeKind::Entity(_)) && !from_events[i])
    {
        return Err(Rejection::UnreachableEntity);
    }
    if let Some(t) = g.target() {
        if !g.edges.iter().any(|e| e.src == t || e.dst == t) {
            return Err(Rejection::IsolatedTarget);
        }
    }
    if !g.reachable(events[0]).into_iter().all(|r| r) {
        return Err(Rejection::Disconnected);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, CandidateSource, ParseConfig};

    fn c(s: &str) -> Category {
        s.parse().unwrap()
    }

    fn co(s: &str) -> CoindexedCategory {
        coindex(&c(s)).swap_remove(0)
    }

    fn gold_graph(tokens: &[Token], tags: &[&str]) -> Vec<UngroundedGraph> {
        let tags: Vec<Category> = tags.iter().map(|t| c(t)).collect();
        let ds = parse(tokens, CandidateSource::Gold(&tags), &ParseConfig::default()).unwrap();
        assert!(!ds.is_empty());
        compose(&ds[0], tokens).unwrap()
    }

    #[test]
    fn transitive_verb_slots() {
        let e = lexical_semantics(&Token::word("acquired", "VBD"), &co("(S\\NP)/NP"), LexicalContext::default()).unwrap();
        assert_eq!(
            e.preds,
            vec![
                Pred::Event(0, "acquired".into()),
                Pred::Edge("arg1".into(), 0, 1),
                Pred::Edge("arg2".into(), 0, 2),
            ]
        );
        // Open slots, outermost first: object then subject.
        assert_eq!(e.unsaturated(), vec![&[2][..], &[1][..]]);
    }

    #[test]
    fn entity_constant() {
        let e = lexical_semantics(&Token::entity("Google", "NNP", "Google"), &co("NP"), LexicalContext::default()).unwrap();
        assert_eq!(e.preds, vec![Pred::Entity(0, "Google".into())]);
        assert!(e.unsaturated().is_empty());
    }

    #[test]
    fn adjunct_preposition_edge_from_event() {
        let e = lexical_semantics(&Token::word("in", "IN"), &co("((S\\NP)\\(S\\NP))/NP"), LexicalContext::default()).unwrap();
        assert_eq!(e.preds, vec![Pred::Edge("in".into(), 0, 2)]);
    }

    #[test]
    fn missing_template_is_an_error() {
        let err = lexical_semantics(&Token::entity("Google", "NNP", "Google"), &co("S\\NP"), LexicalContext::default()).unwrap_err();
        assert!(matches!(err, ComposeError::NoTemplate { .. }));
    }

    #[test]
    fn passive_detection() {
        let toks = vec![
            Token::entity("Nest", "NNP", "Nest"),
            Token::word("was", "VBD"),
            Token::word("also", "RB"),
            Token::word("founded", "VBN"),
        ];
        assert!(is_passive(&toks, 3));
        assert!(!is_passive(&toks, 1));
        let active = vec![Token::word("has", "VBZ"), Token::word("founded", "VBN")];
        assert!(!is_passive(&active, 1));
    }

    #[test]
    fn passive_subject_is_arg2() {
        let toks = vec![
            Token::entity("Nest", "NNP", "Nest"),
            Token::word("was", "VBD"),
            Token::word("founded", "VBN"),
            Token::word("in", "IN"),
            Token::entity("PaloAlto", "NNP", "PaloAlto"),
        ];
        let gs = gold_graph(&toks, &["NP", "(S\\NP)/(S\\NP)", "S\\NP", "((S\\NP)\\(S\\NP))/NP", "NP"]);
        assert_eq!(gs[0].serialize(), "arg2(e1, Nest)\nfounded(e1)\nin(e1, PaloAlto)");
        assert_eq!(validate(&gs[0]), Ok(()));
    }

    #[test]
    fn variable_object_is_rejected() {
        let toks = vec![
            Token::entity("Google", "NNP", "Google"),
            Token::word("acquired", "VBD"),
            Token::word("a", "DT"),
            Token::word("company", "NN"),
        ];
        let gs = gold_graph(&toks, &["NP", "(S\\NP)/NP", "NP/N", "N"]);
        assert_eq!(validate(&gs[0]), Err(Rejection::VariableNode));
        assert_eq!(gs[0].serialize(), "acquired(e1)\narg1(e1, Google)\narg2(e1, v1)\ntype(v1, company)");
    }

    #[test]
    fn empty_graph_has_no_event() {
        assert_eq!(validate(&UngroundedGraph::default()), Err(Rejection::NoEvent));
    }

    #[test]
    fn typed_entity_via_noun_modifier() {
        let toks = vec![
            Token::entity("Google", "NNP", "Google"),
            Token::word("acquired", "VBD"),
            Token::word("the", "DT"),
            Token::word("company", "NN"),
            Token::entity("Nest", "NNP", "Nest"),
        ];
        let gs = gold_graph(&toks, &["NP", "(S\\NP)/NP", "NP/N", "N/N", "N"]);
        assert_eq!(
            gs[0].serialize(),
            "acquired(e1)\narg1(e1, Google)\narg2(e1, Nest)\ntype(Nest, company)"
        );
        assert_eq!(validate(&gs[0]), Ok(()));
    }

    #[test]
    fn appositive_location_comma() {
        let toks = vec![
            Token::entity("Ada", "NNP", "Ada"),
            Token::word("was", "VBD"),
            Token::word("born", "VBN"),
            Token::word("in", "IN"),
            Token::entity("Stockholm", "NNP", "Stockholm"),
            Token::word(",", ","),
            Token::blank(),
        ];
        let gs = gold_graph(
            &toks,
            &["NP", "(S\\NP)/(S\\NP)", "S\\NP", "((S\\NP)\\(S\\NP))/NP", "NP", "(NP\\NP)/NP", "NP"],
        );
        assert_eq!(
            gs[0].serialize(),
            "TARGET(x)\nappos(e2)\narg1(e2, Stockholm)\narg2(e1, Ada)\narg2(e2, x)\nborn(e1)\nin(e1, Stockholm)"
        );
        assert_eq!(validate(&gs[0]), Ok(()));
    }

    #[test]
    fn conjunction_leaves_right_conjunct_unattached() {
        let toks = vec![
            Token::entity("Ada", "NNP", "Ada"),
            Token::word("and", "CC"),
            Token::entity("Bo", "NNP", "Bo"),
            Token::word("smiled", "VBD"),
        ];
        let gs = gold_graph(&toks, &["NP", "conj", "NP", "S\\NP"]);
        assert_eq!(validate(&gs[0]), Err(Rejection::UnreachableEntity));
    }

    #[test]
    fn control_variant_produces_second_graph() {
        let toks = vec![
            Token::entity("Ada", "NNP", "Ada"),
            Token::word("was", "VBD"),
            Token::word("born", "VBN"),
        ];
        let gs = gold_graph(&toks, &["NP", "(S\\NP)/(S\\NP)", "S\\NP"]);
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[0].serialize(), "arg2(e1, Ada)\nborn(e1)");
        assert_eq!(gs[1].serialize(), "arg1(e1, Ada)\narg2(e2, Ada)\nborn(e2)\nwas(e1)");
    }
}
