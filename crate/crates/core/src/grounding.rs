//! Grounding ungrounded graphs against the KB by structure-preserving relabeling.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::kb::{count_assignments, execute_counts, GroundedEdge, GroundedGraph, GroundedNode, KnowledgeBase, QueryOptions};
use crate::semantics::{NodeKind, UngroundedGraph, TYPE_EDGE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundConfig {
    pub max_candidates: usize,
    pub query: QueryOptions,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            max_candidates: 500,
            query: QueryOptions::default(),
        }
    }
}

/// Grounded candidates with their answers, sorted by serialization.
#[derive(Clone, Debug, Default)]
pub struct Grounding {
    pub candidates: Vec<GroundedGraph>,
    pub answers: Vec<Vec<String>>,
    /// The candidate cap was hit and enumeration stopped early.
    pub truncated: bool,
}

/// One labeling of an event node: KB event type and one role per incident edge.
type LocalLabel = (String, Vec<String>);

struct Plan<'u> {
    u: &'u UngroundedGraph,
    events: Vec<usize>,
    /// Non-type edge indices per event slot.
    event_edges: Vec<Vec<usize>>,
    type_nodes: Vec<usize>,
    /// Entity or target node each type node hangs off.
    type_owner: Vec<usize>,
}

impl<'u> Plan<'u> {
    /// None when the graph shape cannot be grounded at all.
    fn new(u: &'u UngroundedGraph) -> Option<Self> {
        let events: Vec<usize> = u.event_nodes().collect();
        let slot: BTreeMap<usize, usize> = events.iter().enumerate().map(|(k, &n)| (n, k)).collect();
        let mut event_edges = vec![Vec::new(); events.len()];
        let mut type_nodes = Vec::new();
        let mut type_owner = Vec::new();
        for (j, e) in u.edges.iter().enumerate() {
            let src = &u.nodes[e.src].kind;
            let dst = &u.nodes[e.dst].kind;
            if e.label == TYPE_EDGE {
                if !matches!(dst, NodeKind::Type(_)) || !matches!(src, NodeKind::Entity(_) | NodeKind::Target) {
                    return None;
                }
                type_nodes.push(e.dst);
                type_owner.push(e.src);
            } else {
                if !matches!(dst, NodeKind::Entity(_) | NodeKind::Target) {
                    return None;
                }
                event_edges[*slot.get(&e.src)?].push(j);
            }
        }
        if u.nodes.iter().any(|n| matches!(n.kind, NodeKind::Variable)) {
            return None;
        }
        Some(Plan {
            u,
            events,
            event_edges,
            type_nodes,
            type_owner,
        })
    }

    fn constant(&self, node: usize) -> Option<&str> {
        match &self.u.nodes[node].kind {
            NodeKind::Entity(id) => Some(id),
            _ => None,
        }
    }

    /// Labelings of one event node that some KB instance could realise locally.
    fn local_labels(&self, k: usize, kb: &KnowledgeBase) -> Vec<LocalLabel> {
        let edges = &self.event_edges[k];
        let consts: Vec<Option<&str>> = edges.iter().map(|&j| self.constant(self.u.edges[j].dst)).collect();
        let mut out: BTreeSet<LocalLabel> = BTreeSet::new();
        if let Some(anchor) = consts.iter().flatten().next() {
            for &i in kb.events_with_entity(anchor) {
                let ev = &kb.events()[i];
                let options: Vec<Vec<&String>> = consts
                    .iter()
                    .map(|c| {
                        ev.fillers
                            .iter()
                            .filter(|(_, v)| c.is_none_or(|c| v.as_str() == c))
                            .map(|(r, _)| r)
                            .collect()
                    })
                    .collect();
                injective(&options, &mut Vec::new(), &mut |roles| {
                    out.insert((ev.event_type.clone(), roles.iter().map(|r| r.to_string()).collect()));
                });
            }
        } else {
            for (ty, roles) in kb.schema() {
                let options: Vec<Vec<&String>> = edges.iter().map(|_| roles.iter().collect()).collect();
                injective(&options, &mut Vec::new(), &mut |rs| {
                    out.insert((ty.clone(), rs.iter().map(|r| r.to_string()).collect()));
                });
            }
        }
        out.into_iter().collect()
    }

    fn type_options(&self, t: usize, kb: &KnowledgeBase) -> Vec<String> {
        match self.constant(self.type_owner[t]) {
            Some(id) => kb
                .entity_types(id)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default(),
            None => kb.all_types().into_iter().map(str::to_string).collect(),
        }
    }

    /// Builds the grounded graph for the labelled event slots. Unlabelled
    /// events and type nodes are left out; `partial` graphs carry no source.
    fn build(&self, labels: &[&LocalLabel], types: &[&String], partial: bool) -> GroundedGraph {
        let u = self.u;
        let mut nodes: Vec<GroundedNode> = Vec::with_capacity(u.nodes.len());
        let mut map: Vec<Option<usize>> = vec![None; u.nodes.len()];
        let mut ev_label: BTreeMap<usize, &LocalLabel> = BTreeMap::new();
        for (k, l) in labels.iter().enumerate() {
            ev_label.insert(self.events[k], l);
        }
        let mut ty_label: BTreeMap<usize, &String> = BTreeMap::new();
        for (t, l) in types.iter().enumerate() {
            ty_label.insert(self.type_nodes[t], l);
        }
        for (i, n) in u.nodes.iter().enumerate() {
            let g = match &n.kind {
                NodeKind::Event(_) => match ev_label.get(&i) {
                    Some(l) => GroundedNode::Event(l.0.clone()),
                    None => continue,
                },
                NodeKind::Entity(id) => GroundedNode::Entity(id.clone()),
                NodeKind::Target => GroundedNode::Target,
                NodeKind::Type(_) => match ty_label.get(&i) {
                    Some(l) => GroundedNode::Type((*l).clone()),
                    None => continue,
                },
                NodeKind::Variable => unreachable!("variables are rejected by Plan::new"),
            };
            map[i] = Some(nodes.len());
            nodes.push(g);
        }
        let mut roles: BTreeMap<usize, &String> = BTreeMap::new();
        for (k, l) in labels.iter().enumerate() {
            for (j, r) in self.event_edges[k].iter().zip(&l.1) {
                roles.insert(*j, r);
            }
        }
        let mut edges = Vec::with_capacity(u.edges.len());
        for (j, e) in u.edges.iter().enumerate() {
            let role = if e.label == TYPE_EDGE {
                TYPE_EDGE.to_string()
            } else {
                match roles.get(&j) {
                    Some(r) => (*r).clone(),
                    None => continue,
                }
            };
            let (Some(src), Some(dst)) = (map[e.src], map[e.dst]) else { continue };
            edges.push(GroundedEdge { src, role, dst });
        }
        GroundedGraph {
            nodes,
            edges,
            source: if partial { None } else { Some(Arc::new(u.clone())) },
        }
    }
}

/// Calls `f` with every choice of one option per position with no repeats.
fn injective<'a>(options: &[Vec<&'a String>], chosen: &mut Vec<&'a String>, f: &mut impl FnMut(&[&'a String])) {
    if chosen.len() == options.len() {
        f(chosen);
        return;
    }
    for r in &options[chosen.len()] {
        if chosen.contains(r) {
            continue;
        }
        chosen.push(r);
        injective(options, chosen, f);
        chosen.pop();
    }
}

struct Enumerator<'p, 'u> {
    plan: &'p Plan<'u>,
    kb: &'p KnowledgeBase,
    cfg: GroundConfig,
    out: Vec<(GroundedGraph, Vec<String>)>,
    truncated: bool,
}

impl<'p> Enumerator<'p, '_> {
    fn events(&mut self, labels: &mut Vec<&'p LocalLabel>, local: &'p [Vec<LocalLabel>], type_opts: &'p [Vec<String>]) {
        if self.truncated {
            return;
        }
        let k = labels.len();
        if k > 0 && k < local.len() {
            let g = self.plan.build(labels, &[], true);
            if count_assignments(&g, self.kb, self.cfg.query) == 0 {
                return;
            }
        }
        if k == local.len() {
            self.types(labels, &mut Vec::new(), type_opts);
            return;
        }
        for l in &local[k] {
            labels.push(l);
            self.events(labels, local, type_opts);
            labels.pop();
        }
    }

    fn types(&mut self, labels: &[&'p LocalLabel], types: &mut Vec<&'p String>, type_opts: &'p [Vec<String>]) {
        if self.truncated {
            return;
        }
        if types.len() == type_opts.len() {
            let g = self.plan.build(labels, types, false);
            let (ok, answers) = match execute_counts(&g, self.kb, self.cfg.query) {
                Ok(a) => (!a.is_empty(), a),
                Err(_) => (count_assignments(&g, self.kb, self.cfg.query) > 0, Vec::new()),
            };
            if ok {
                if self.out.len() == self.cfg.max_candidates {
                    self.truncated = true;
                    return;
                }
                self.out.push((g, answers.into_iter().map(|(e, _)| e).collect()));
            }
            return;
        }
        for t in &type_opts[types.len()] {
            types.push(t);
            self.types(labels, types, type_opts);
            types.pop();
        }
    }
}

/// Every KB relabeling of `u` whose query returns at least one answer. A
/// graph without a TARGET node only needs to be satisfiable, and its
/// candidates carry no answers.
pub fn ground(u: &UngroundedGraph, kb: &KnowledgeBase, cfg: GroundConfig) -> Grounding {
    let Some(plan) = Plan::new(u) else {
        return Grounding::default();
    };
    let local: Vec<Vec<LocalLabel>> = (0..plan.events.len()).map(|k| plan.local_labels(k, kb)).collect();
    let type_opts: Vec<Vec<String>> = (0..plan.type_nodes.len()).map(|t| plan.type_options(t, kb)).collect();
    let mut en = Enumerator {
        plan: &plan,
        kb,
        cfg,
        out: Vec::new(),
        truncated: false,
    };
    en.events(&mut Vec::new(), &local, &type_opts);
    let truncated = en.truncated;
    let mut keyed: Vec<(String, GroundedGraph, Vec<String>)> =
        en.out.into_iter().map(|(g, a)| (g.serialize(), g, a)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut result = Grounding {
        truncated,
        ..Default::default()
    };
    for (_, g, a) in keyed {
        result.candidates.push(g);
        result.answers.push(a);
    }
    result
}

/// Grounded candidates for one sentence, pooled over its ungrounded graphs.
#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    pub sentence_id: String,
    pub ungrounded: Vec<Arc<UngroundedGraph>>,
    pub candidates: Vec<GroundedGraph>,
    /// Indices into `candidates` whose first answer is the gold entity.
    pub positives: Vec<usize>,
}

/// Marks the candidates whose first answer equals `gold`.
pub fn filter_candidates(cands: Vec<GroundedGraph>, kb: &KnowledgeBase, gold: &str) -> CandidateSet {
    let positives = cands
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            execute_counts(c, kb, QueryOptions::default())
                .ok()
                .and_then(|a| a.into_iter().next())
                .is_some_and(|(e, _)| e == gold)
        })
        .map(|(i, _)| i)
        .collect();
    let mut ungrounded: Vec<Arc<UngroundedGraph>> = Vec::new();
    for c in &cands {
        if let Some(s) = &c.source {
            if !ungrounded.iter().any(|u| u == s) {
                ungrounded.push(s.clone());
            }
        }
    }
    CandidateSet {
        sentence_id: String::new(),
        ungrounded,
        candidates: cands,
        positives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{Edge, Node};

    const KB: &str = "\
[schema]
business.acquisition: acquiring_company, company_acquired, date
organization.founding: organization, founder, location, date
people.employment: employee, employer

[types]
Google: organization.company
Nest: organization.company
DeepMind: organization.company

[events]
m1\tbusiness.acquisition\tacquiring_company=Google;company_acquired=Nest;date=2014
m2\tbusiness.acquisition\tacquiring_company=Google;company_acquired=DeepMind;date=2014
m3\torganization.founding\torganization=Nest;location=PaloAlto;date=2010
";

    fn node(kind: NodeKind) -> Node {
        Node { kind, origin: 0 }
    }

    fn edge(src: usize, label: &str, dst: usize) -> Edge {
        Edge { src, label: label.into(), dst }
    }

    #[test]
    fn acquisition_with_date() {
        let kb = KnowledgeBase::parse(KB, "t").unwrap();
        let u = UngroundedGraph {
            nodes: vec![
                node(NodeKind::Event("acquired".into())),
                node(NodeKind::Target),
                node(NodeKind::Entity("Google".into())),
                node(NodeKind::Entity("2014".into())),
            ],
            edges: vec![edge(0, "arg1", 2), edge(0, "arg2", 1), edge(0, "in", 3)],
        };
        let g = ground(&u, &kb, GroundConfig::default());
        assert!(!g.truncated);
        let ser: Vec<String> = g.candidates.iter().map(|c| c.serialize()).collect();
        assert!(ser.contains(
            &"TARGET(x)\nacquiring_company(e1, Google)\nbusiness.acquisition(e1)\ncompany_acquired(e1, x)\ndate(e1, 2014)"
                .to_string()
        ));
        for (c, a) in g.candidates.iter().zip(&g.answers) {
            assert!(!a.is_empty(), "{c}");
        }
    }

    #[test]
    fn unconnected_pair_has_no_grounding() {
        let kb = KnowledgeBase::parse(KB, "t").unwrap();
        let u = UngroundedGraph {
            nodes: vec![
                node(NodeKind::Event("works".into())),
                node(NodeKind::Target),
                node(NodeKind::Entity("PaloAlto".into())),
                node(NodeKind::Entity("DeepMind".into())),
            ],
            edges: vec![edge(0, "arg1", 2), edge(0, "arg2", 3), edge(0, "for", 1)],
        };
        assert!(ground(&u, &kb, GroundConfig::default()).candidates.is_empty());
    }

    #[test]
    fn cap_sets_truncation_flag() {
        let kb = KnowledgeBase::parse(KB, "t").unwrap();
        let u = UngroundedGraph {
            nodes: vec![node(NodeKind::Event("did".into())), node(NodeKind::Target)],
            edges: vec![edge(0, "arg1", 1)],
        };
        let all = ground(&u, &kb, GroundConfig::default());
        assert!(all.candidates.len() > 2);
        let cfg = GroundConfig {
            max_candidates: 2,
            ..Default::default()
        };
        let capped = ground(&u, &kb, cfg);
        assert!(capped.truncated);
        assert_eq!(capped.candidates.len(), 2);
    }

    #[test]
    fn filter_marks_first_answer_matches() {
        let kb = KnowledgeBase::parse(KB, "t").unwrap();
        let u = UngroundedGraph {
            nodes: vec![
                node(NodeKind::Event("acquired".into())),
                node(NodeKind::Target),
                node(NodeKind::Entity("Google".into())),
            ],
            edges: vec![edge(0, "arg1", 2), edge(0, "arg2", 1)],
        };
        let g = ground(&u, &kb, GroundConfig::default());
        let set = filter_candidates(g.candidates.clone(), &kb, "DeepMind");
        assert!(!set.positives.is_empty());
        for &p in &set.positives {
            assert_eq!(g.answers[p][0], "DeepMind");
        }
        assert!(filter_candidates(Vec::new(), &kb, "Nest").candidates.is_empty());
    }
}
