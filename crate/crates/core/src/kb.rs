//! Knowledge base of reified events and conjunctive query execution.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::semantics::{UngroundedGraph, TYPE_EDGE};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{origin}:{line}: {message}")]
    Format { origin: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query graph has no TARGET node")]
    NoTarget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventInstance {
    pub id: String,
    pub event_type: String,
    pub fillers: BTreeMap<String, String>,
}

impl EventInstance {
    pub fn filler(&self, role: &str) -> Option<&str> {
        self.fillers.get(role).map(String::as_str)
    }
}

/// Reified-event knowledge base with entity and type indexes.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    schema: BTreeMap<String, Vec<String>>,
    entity_types: BTreeMap<String, BTreeSet<String>>,
    events: Vec<EventInstance>,
    entities: BTreeSet<String>,
    by_entity: HashMap<String, Vec<usize>>,
    by_type: HashMap<String, Vec<usize>>,
    by_pair: HashMap<(String, String), Vec<usize>>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.entity_types == other.entity_types
            && self.events == other.events
            && self.entities == other.entities
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Schema,
    Types,
    Events,
}

impl KnowledgeBase {
    /// Builds a KB from parts, validating fillers against the schema.
    pub fn new(
        schema: BTreeMap<String, Vec<String>>,
        entity_types: BTreeMap<String, BTreeSet<String>>,
        events: Vec<EventInstance>,
    ) -> Result<Self, KbError> {
        let mut text = String::new();
        render_into(&mut text, &schema, &entity_types, &events);
        Self::parse(&text, "<memory>")
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::default();
        let mut section = Section::None;
        let mut ids = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| KbError::Format {
                origin: origin.to_string(),
                line: i + 1,
                message,
            };
            let line = raw.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.trim() {
                "[schema]" => {
                    section = Section::Schema;
                    continue;
                }
                "[types]" => {
                    section = Section::Types;
                    continue;
                }
                "[events]" => {
                    section = Section::Events;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::None => return Err(err("content before the first section header".into())),
                Section::Schema => {
                    let (name, roles) = line.split_once(':').ok_or_else(|| err("expected `type: role, ...`".into()))?;
                    let name = name.trim();
                    let roles: Vec<String> = roles.split(',').map(|r| r.trim().to_string()).collect();
                    if name.is_empty() || roles.iter().any(|r| r.is_empty()) {
                        return Err(err("empty event type or role".into()));
                    }
                    if roles.iter().collect::<BTreeSet<_>>().len() != roles.len() {
                        return Err(err(format!("repeated role in {name}")));
                    }
                    if kb.schema.insert(name.to_string(), roles).is_some() {
                        return Err(err(format!("event type {name} declared twice")));
                    }
                }
                Section::Types => {
                    let (entity, types) = line.split_once(':').ok_or_else(|| err("expected `entity: type, ...`".into()))?;
                    let entity = entity.trim();
                    if entity.is_empty() {
                        return Err(err("empty entity id".into()));
                    }
                    let set = kb.entity_types.entry(entity.to_string()).or_default();
                    for t in types.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        set.insert(t.to_string());
                    }
                    kb.entities.insert(entity.to_string());
                }
                Section::Events => {
                    let mut parts = line.split('\t');
                    let (Some(id), Some(ty), Some(fillers), None) = (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(err("expected id<TAB>event_type<TAB>role=filler;...".into()));
                    };
                    let roles = kb
                        .schema
                        .get(ty)
                        .ok_or_else(|| err(format!("unknown event type {ty}")))?;
                    if !ids.insert(id.to_string()) {
                        return Err(err(format!("duplicate event id {id}")));
                    }
                    let mut map = BTreeMap::new();
                    for f in fillers.split(';').filter(|f| !f.is_empty()) {
                        let (role, value) = f.split_once('=').ok_or_else(|| err(format!("malformed filler {f:?}")))?;
                        if !roles.iter().any(|r| r == role) {
                            return Err(err(format!("role {role} not in schema of {ty}")));
                        }
                        if value.is_empty() {
                            return Err(err(format!("empty filler for role {role}")));
                        }
                        if map.insert(role.to_string(), value.to_string()).is_some() {
                            return Err(err(format!("role {role} filled twice")));
                        }
                    }
                    if map.is_empty() {
                        return Err(err(format!("event {id} has no fillers")));
                    }
                    kb.events.push(EventInstance {
                        id: id.to_string(),
                        event_type: ty.to_string(),
                        fillers: map,
                    });
                }
            }
        }
        kb.reindex();
        Ok(kb)
    }

    fn reindex(&mut self) {
        let (by_entity, by_type, by_pair) = build_indexes(&self.events);
        for e in &self.events {
            self.entities.extend(e.fillers.values().cloned());
        }
        self.by_entity = by_entity;
        self.by_type = by_type;
        self.by_pair = by_pair;
    }

    /// Rebuilds every index from the event list and compares.
    pub fn audit(&self) -> bool {
        let (by_entity, by_type, by_pair) = build_indexes(&self.events);
        by_entity == self.by_entity && by_type == self.by_type && by_pair == self.by_pair
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_into(&mut out, &self.schema, &self.entity_types, &self.events);
        out
    }

    pub fn schema(&self) -> &BTreeMap<String, Vec<String>> {
        &self.schema
    }

    pub fn roles(&self, event_type: &str) -> Option<&[String]> {
        self.schema.get(event_type).map(Vec::as_slice)
    }

    pub fn events(&self) -> &[EventInstance] {
        &self.events
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn entity_types(&self, entity: &str) -> Option<&BTreeSet<String>> {
        self.entity_types.get(entity)
    }

    pub fn has_type(&self, entity: &str, ty: &str) -> bool {
        self.entity_types.get(entity).is_some_and(|s| s.contains(ty))
    }

    /// Every KB type name, sorted.
    pub fn all_types(&self) -> BTreeSet<&str> {
        self.entity_types.values().flatten().map(String::as_str).collect()
    }

    pub fn events_with_entity(&self, entity: &str) -> &[usize] {
        self.by_entity.get(entity).map_or(&[], Vec::as_slice)
    }

    pub fn events_of_type(&self, event_type: &str) -> &[usize] {
        self.by_type.get(event_type).map_or(&[], Vec::as_slice)
    }

    pub fn events_linking(&self, a: &str, b: &str) -> &[usize] {
        self.by_pair
            .get(&(a.to_string(), b.to_string()))
            .map_or(&[], Vec::as_slice)
    }
}

type Indexes = (
    HashMap<String, Vec<usize>>,
    HashMap<String, Vec<usize>>,
    HashMap<(String, String), Vec<usize>>,
);

fn build_indexes(events: &[EventInstance]) -> Indexes {
    let mut by_entity: HashMap<String, Vec<usize>> = HashMap::new();
    let mut by_type: HashMap<String, Vec<usize>> = HashMap::new();
    let mut by_pair: HashMap<(String, String), Vec<usize>> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        by_type.entry(e.event_type.clone()).or_default().push(i);
        let values: BTreeSet<&String> = e.fillers.values().collect();
        for v in &values {
            by_entity.entry((*v).clone()).or_default().push(i);
        }
        let roles: Vec<(&String, &String)> = e.fillers.iter().collect();
        for (ra, a) in &roles {
            for (rb, b) in &roles {
                if ra != rb {
                    let list = by_pair.entry(((*a).clone(), (*b).clone())).or_default();
                    if list.last() != Some(&i) {
                        list.push(i);
                    }
                }
            }
        }
    }
    (by_entity, by_type, by_pair)
}

fn render_into(
    out: &mut String,
    schema: &BTreeMap<String, Vec<String>>,
    entity_types: &BTreeMap<String, BTreeSet<String>>,
    events: &[EventInstance],
) {
    out.push_str("[schema]\n");
    for (t, roles) in schema {
        let _ = writeln!(out, "{t}: {}", roles.join(", "));
    }
    out.push_str("\n[types]\n");
    for (e, types) in entity_types {
        let list: Vec<&str> = types.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{e}: {}", list.join(", "));
    }
    out.push_str("\n[events]\n");
    for ev in events {
        let fillers: Vec<String> = ev.fillers.iter().map(|(r, v)| format!("{r}={v}")).collect();
        let _ = writeln!(out, "{}\t{}\t{}", ev.id, ev.event_type, fillers.join(";"));
    }
}

/// (event type, role of the first entity, role of the second).
pub type Predicate = (String, String, String);

/// For every ordered pair drawn from `entities`, the (event type, role of
/// first, role of second) triples of KB events linking them. Pairs with no
/// link are absent.
pub fn predicates_between(
    entities: &BTreeSet<String>,
    kb: &KnowledgeBase,
) -> BTreeMap<(String, String), BTreeSet<Predicate>> {
    let mut out = BTreeMap::new();
    for a in entities {
        for b in entities {
            let mut set = BTreeSet::new();
            for &i in kb.events_linking(a, b) {
                let ev = &kb.events[i];
                for (ra, va) in &ev.fillers {
                    for (rb, vb) in &ev.fillers {
                        if ra != rb && va == a && vb == b {
                            set.insert((ev.event_type.clone(), ra.clone(), rb.clone()));
                        }
                    }
                }
            }
            if !set.is_empty() {
                out.insert((a.clone(), b.clone()), set);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundedNode {
    Event(String),
    Entity(String),
    Type(String),
    Target,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundedEdge {
    pub src: usize,
    pub role: String,
    pub dst: usize,
}

/// KB-labelled query graph. Node `i` and edge `j` correspond to node `i` and
/// edge `j` of `source` when a source is attached.
#[derive(Clone, Debug)]
pub struct GroundedGraph {
    pub nodes: Vec<GroundedNode>,
    pub edges: Vec<GroundedEdge>,
    pub source: Option<Arc<UngroundedGraph>>,
}

impl PartialEq for GroundedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for GroundedGraph {}

impl GroundedGraph {
    pub fn target(&self) -> Option<usize> {
        self.nodes.iter().position(|n| *n == GroundedNode::Target)
    }

    pub fn serialize(&self) -> String {
        let mut ev = 0;
        let names: Vec<String> = self
            .nodes
            .iter()
            .map(|n| match n {
                GroundedNode::Event(_) => {
                    ev += 1;
                    format!("e{ev}")
                }
                GroundedNode::Entity(id) => id.clone(),
                GroundedNode::Type(t) => t.clone(),
                GroundedNode::Target => "x".to_string(),
            })
            .collect();
        let mut lines = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                GroundedNode::Event(t) => lines.push(format!("{t}({})", names[i])),
                GroundedNode::Target => lines.push("TARGET(x)".to_string()),
                _ => {}
            }
        }
        for e in &self.edges {
            lines.push(format!("{}({}, {})", e.role, names[e.src], names[e.dst]));
        }
        lines.sort();
        lines.join("\n")
    }
}

impl fmt::Display for GroundedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryOptions {
    /// Type constraints must hold; when false they are ignored.
    pub strict_types: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { strict_types: true }
    }
}

/// Answers with their support counts, ordered by support descending then id.
pub type RankedAnswers = Vec<(String, u64)>;

/// Executes the graph as one conjunctive query and returns the answer ids.
pub fn execute(g: &GroundedGraph, kb: &KnowledgeBase) -> Result<Vec<String>, QueryError> {
    Ok(execute_counts(g, kb, QueryOptions::default())?
        .into_iter()
        .map(|(e, _)| e)
        .collect())
}

#[derive(Clone)]
enum Filler<'a> {
    Const(&'a str),
    Target,
}

/// Like [`execute`], also reporting how many event assignments support each answer.
pub fn execute_counts(g: &GroundedGraph, kb: &KnowledgeBase, opts: QueryOptions) -> Result<RankedAnswers, QueryError> {
    g.target().ok_or(QueryError::NoTarget)?;
    let (counts, _) = solve(g, kb, opts);
    let mut out: RankedAnswers = counts.into_iter().map(|(e, c)| (e.to_string(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Number of satisfying assignments, with or without a TARGET node. For a
/// graph with a target this is the total support over all answers.
pub fn count_assignments(g: &GroundedGraph, kb: &KnowledgeBase, opts: QueryOptions) -> u64 {
    solve(g, kb, opts).1
}

fn solve<'a>(g: &'a GroundedGraph, kb: &'a KnowledgeBase, opts: QueryOptions) -> (BTreeMap<&'a str, u64>, u64) {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let events: Vec<usize> = (0..g.nodes.len())
        .filter(|&i| matches!(g.nodes[i], GroundedNode::Event(_)))
        .collect();
    let slot: HashMap<usize, usize> = events.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut constraints: Vec<Vec<(&str, Filler)>> = vec![Vec::new(); events.len()];
    let mut target_types: Vec<&str> = Vec::new();
    for e in &g.edges {
        let dst = &g.nodes[e.dst];
        if e.role == TYPE_EDGE {
            let GroundedNode::Type(t) = dst else { return (counts, 0) };
            if !opts.strict_types {
                continue;
            }
            match &g.nodes[e.src] {
                GroundedNode::Entity(id) => {
                    if !kb.has_type(id, t) {
                        return (counts, 0);
                    }
                }
                GroundedNode::Target => target_types.push(t),
                _ => return (counts, 0),
            }
            continue;
        }
        let Some(&k) = slot.get(&e.src) else { return (counts, 0) };
        let filler = match dst {
            GroundedNode::Entity(id) => Filler::Const(id),
            GroundedNode::Target => Filler::Target,
            _ => return (counts, 0),
        };
        constraints[k].push((e.role.as_str(), filler));
    }
    let labels: Vec<&str> = events
        .iter()
        .map(|&n| match &g.nodes[n] {
            GroundedNode::Event(t) => t.as_str(),
            _ => unreachable!(),
        })
        .collect();
    // Anchored events first so target-only events search the target's index.
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&k| !constraints[k].iter().any(|(_, f)| matches!(f, Filler::Const(_))));
    let labels: Vec<&str> = order.iter().map(|&k| labels[k]).collect();
    let constraints: Vec<Vec<(&str, Filler)>> = order.iter().map(|&k| constraints[k].clone()).collect();
    let mut search = Search {
        kb,
        labels: &labels,
        constraints: &constraints,
        target_types: &target_types,
        has_target: g.target().is_some(),
        counts: &mut counts,
        total: 0,
    };
    search.run(0, None);
    let total = search.total;
    (counts, total)
}

struct Search<'a, 'c> {
    kb: &'a KnowledgeBase,
    labels: &'c [&'a str],
    constraints: &'c [Vec<(&'a str, Filler<'a>)>],
    target_types: &'c [&'a str],
    has_target: bool,
    counts: &'c mut BTreeMap<&'a str, u64>,
    total: u64,
}

impl<'a> Search<'a, '_> {
    fn run(&mut self, k: usize, x: Option<&'a str>) {
        if k == self.labels.len() {
            if !self.has_target {
                self.total += 1;
                return;
            }
            match x {
                Some(x) => {
                    if self.target_types.iter().all(|t| self.kb.has_type(x, t)) {
                        *self.counts.entry(x).or_default() += 1;
                        self.total += 1;
                    }
                }
                None => {
                    for e in self.kb.entities() {
                        if self.target_types.iter().all(|t| self.kb.has_type(e, t)) {
                            *self.counts.entry(e.as_str()).or_default() += 1;
                            self.total += 1;
                        }
                    }
                }
            }
            return;
        }
        let cons = &self.constraints[k];
        let mut pool = self.kb.events_of_type(self.labels[k]);
        for (_, f) in cons {
            let key = match f {
                Filler::Const(c) => Some(*c),
                Filler::Target => x,
            };
            if let Some(key) = key {
                let list = self.kb.events_with_entity(key);
                if list.len() < pool.len() {
                    pool = list;
                }
            }
        }
        'inst: for &i in pool {
            let ev = &self.kb.events()[i];
            if ev.event_type != self.labels[k] {
                continue;
            }
            let mut bound = x;
            for (role, f) in cons {
                let Some(v) = ev.filler(role) else { continue 'inst };
                match f {
                    Filler::Const(c) => {
                        if v != *c {
                            continue 'inst;
                        }
                    }
                    Filler::Target => match bound {
                        Some(b) if b != v => continue 'inst,
                        Some(_) => {}
                        None => bound = Some(v),
                    },
                }
            }
            self.run(k + 1, bound);
        }
    }
}
