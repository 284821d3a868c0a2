//! Random KB and graph instances with brute-force reference evaluators.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spades::kb::{EventInstance, GroundedEdge, GroundedGraph, GroundedNode, KnowledgeBase};
use spades::semantics::{Edge, Node, NodeKind, UngroundedGraph, TYPE_EDGE};

pub const ENTITY_TYPES: [&str; 3] = ["t.alpha", "t.beta", "t.gamma"];

fn schema(rng: &mut ChaCha8Rng) -> BTreeMap<String, Vec<String>> {
    let roles = ["r1", "r2", "r3", "r4"];
    (0..rng.gen_range(2..=3))
        .map(|i| {
            let n = rng.gen_range(2..=4);
            (format!("ev.k{i}"), roles[..n].iter().map(|r| r.to_string()).collect())
        })
        .collect()
}

/// KB with at most 50 events over ten entities.
pub fn random_kb(rng: &mut ChaCha8Rng) -> KnowledgeBase {
    let schema = schema(rng);
    let entities: Vec<String> = (0..10).map(|i| format!("E{i}")).collect();
    let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for e in &entities {
        let n = rng.gen_range(1..=2);
        types.insert(
            e.clone(),
            ENTITY_TYPES.choose_multiple(rng, n).map(|t| t.to_string()).collect(),
        );
    }
    let types_vec: Vec<(&String, &Vec<String>)> = schema.iter().collect();
    let n_events = rng.gen_range(5..=50);
    let mut events = Vec::new();
    for i in 0..n_events {
        let (ty, roles) = types_vec.choose(rng).unwrap();
        let mut fillers = BTreeMap::new();
        for r in roles.iter() {
            if fillers.len() < 2 || rng.gen_bool(0.7) {
                fillers.insert(r.clone(), entities.choose(rng).unwrap().clone());
            }
        }
        events.push(EventInstance {
            id: format!("ev{i}"),
            event_type: (*ty).clone(),
            fillers,
        });
    }
    KnowledgeBase::new(schema, types, events).expect("random KB is well-formed")
}

fn constant(rng: &mut ChaCha8Rng) -> String {
    // Occasionally an entity the KB has never seen.
    if rng.gen_bool(0.05) {
        "Unknown".to_string()
    } else {
        format!("E{}", rng.gen_range(0..10))
    }
}

/// Ungrounded graph with one or two events, at most four edges, a target
/// on most graphs and occasional type nodes.
pub fn random_ungrounded(rng: &mut ChaCha8Rng) -> UngroundedGraph {
    let node = |kind| Node { kind, origin: 0 };
    let n_events = rng.gen_range(1..=2);
    let mut g = UngroundedGraph::default();
    for i in 0..n_events {
        g.nodes.push(node(NodeKind::Event(format!("w{i}"))));
    }
    let has_target = rng.gen_bool(0.85);
    let target = has_target.then(|| {
        g.nodes.push(node(NodeKind::Target));
        g.nodes.len() - 1
    });
    let labels = ["arg1", "arg2", "in"];
    let max_edges = 4;
    // Every event gets at least one edge; the target is used at least once.
    for ev in 0..n_events {
        let dst = match target {
            Some(t) if ev == 0 || rng.gen_bool(0.4) => t,
            _ => {
                g.nodes.push(node(NodeKind::Entity(constant(rng))));
                g.nodes.len() - 1
            }
        };
        g.edges.push(Edge {
            src: ev,
            label: labels.choose(rng).unwrap().to_string(),
            dst,
        });
    }
    while g.edges.len() < max_edges && rng.gen_bool(0.5) {
        let src = rng.gen_range(0..n_events);
        let owners: Vec<usize> = (0..g.nodes.len())
            .filter(|&i| matches!(g.nodes[i].kind, NodeKind::Entity(_) | NodeKind::Target))
            .collect();
        if rng.gen_bool(0.2) && !owners.is_empty() {
            let owner = *owners.choose(rng).unwrap();
            g.nodes.push(node(NodeKind::Type(format!("n{}", g.nodes.len()))));
            g.edges.push(Edge {
                src: owner,
                label: TYPE_EDGE.to_string(),
                dst: g.nodes.len() - 1,
            });
            continue;
        }
        let dst = if rng.gen_bool(0.5) && !owners.is_empty() {
            *owners.choose(rng).unwrap()
        } else {
            g.nodes.push(node(NodeKind::Entity(constant(rng))));
            g.nodes.len() - 1
        };
        g.edges.push(Edge {
            src,
            label: labels.choose(rng).unwrap().to_string(),
            dst,
        });
    }
    g
}

/// Grounded query with up to three events and four edges; labels are drawn
/// from the schema with occasional foreign types and roles.
pub fn random_grounded(rng: &mut ChaCha8Rng, kb: &KnowledgeBase) -> GroundedGraph {
    let types: Vec<(&String, &Vec<String>)> = kb.schema().iter().collect();
    let n_events = rng.gen_range(1..=3);
    let mut g = GroundedGraph {
        nodes: Vec::new(),
        edges: Vec::new(),
        source: None,
    };
    let mut roles_of = Vec::new();
    for _ in 0..n_events {
        let (t, roles) = types.choose(rng).unwrap();
        let t = if rng.gen_bool(0.05) { "ev.unknown".to_string() } else { (*t).clone() };
        g.nodes.push(GroundedNode::Event(t));
        roles_of.push((*roles).clone());
    }
    g.nodes.push(GroundedNode::Target);
    let target = g.nodes.len() - 1;
    let budget = rng.gen_range(n_events..=4.max(n_events));
    for k in 0..budget {
        let ev = if k < n_events { k } else { rng.gen_range(0..n_events) };
        let role = if rng.gen_bool(0.05) {
            "r9".to_string()
        } else {
            roles_of[ev].choose(rng).unwrap().clone()
        };
        let dst = if k == 0 || rng.gen_bool(0.35) {
            target
        } else {
            g.nodes.push(GroundedNode::Entity(constant(rng)));
            g.nodes.len() - 1
        };
        g.edges.push(GroundedEdge { src: ev, role, dst });
    }
    if rng.gen_bool(0.3) {
        let t = ENTITY_TYPES.choose(rng).unwrap().to_string();
        g.nodes.push(GroundedNode::Type(t));
        let dst = g.nodes.len() - 1;
        g.edges.push(GroundedEdge {
            src: target,
            role: TYPE_EDGE.to_string(),
            dst,
        });
    }
    g
}

/// Answers with support, by enumerating every event-node to instance
/// assignment. Returns (ranked answers, total satisfying assignments).
pub fn brute_execute(g: &GroundedGraph, kb: &KnowledgeBase) -> (Vec<(String, u64)>, u64) {
    let events: Vec<usize> = (0..g.nodes.len())
        .filter(|&i| matches!(g.nodes[i], GroundedNode::Event(_)))
        .collect();
    let target = g.target();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0;
    let n = kb.events().len();
    let mut assign = vec![0usize; events.len()];
    'outer: loop {
        if let Some(x) = check(g, kb, &events, &assign, target) {
            total += 1;
            if let Some(x) = x {
                *counts.entry(x).or_default() += 1;
            }
        }
        for slot in assign.iter_mut() {
            *slot += 1;
            if *slot < n {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    (ranked, total)
}

/// Some(binding) when the assignment satisfies every constraint.
fn check(
    g: &GroundedGraph,
    kb: &KnowledgeBase,
    events: &[usize],
    assign: &[usize],
    target: Option<usize>,
) -> Option<Option<String>> {
    let inst = |node: usize| -> &EventInstance {
        let k = events.iter().position(|&e| e == node).unwrap();
        &kb.events()[assign[k]]
    };
    for &e in events {
        let GroundedNode::Event(t) = &g.nodes[e] else { unreachable!() };
        if &inst(e).event_type != t {
            return None;
        }
    }
    let mut x: Option<String> = None;
    for e in &g.edges {
        if e.role == TYPE_EDGE {
            continue;
        }
        if !matches!(g.nodes[e.src], GroundedNode::Event(_)) {
            return None;
        }
        let v = inst(e.src).filler(&e.role)?;
        match &g.nodes[e.dst] {
            GroundedNode::Entity(c) if c == v => {}
            GroundedNode::Target => match &x {
                Some(b) if b != v => return None,
                Some(_) => {}
                None => x = Some(v.to_string()),
            },
            _ => return None,
        }
    }
    for e in g.edges.iter().filter(|e| e.role == TYPE_EDGE) {
        let GroundedNode::Type(t) = &g.nodes[e.dst] else { return None };
        let who = match &g.nodes[e.src] {
            GroundedNode::Entity(c) => c.clone(),
            GroundedNode::Target => x.clone()?,
            _ => return None,
        };
        if !kb.has_type(&who, t) {
            return None;
        }
    }
    if target.is_some() && x.is_none() {
        return None;
    }
    Some(x)
}

fn injective_perms(roles: &[String], k: usize) -> Vec<Vec<String>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in injective_perms(roles, k - 1) {
        for r in roles {
            if !p.contains(r) {
                let mut q = p.clone();
                q.push(r.clone());
                out.push(q);
            }
        }
    }
    out
}

/// Every relabeling of `u` (event types, injective roles per event, KB types
/// for type nodes) whose query has an answer, or is satisfiable when there
/// is no target; serialized with its answers.
pub fn brute_ground(u: &UngroundedGraph, kb: &KnowledgeBase) -> BTreeSet<(String, Vec<String>)> {
    let events: Vec<usize> = u.event_nodes().collect();
    let edges_of: Vec<Vec<usize>> = events
        .iter()
        .map(|&e| (0..u.edges.len()).filter(|&j| u.edges[j].src == e && u.edges[j].label != TYPE_EDGE).collect())
        .collect();
    let type_nodes: Vec<usize> = (0..u.nodes.len())
        .filter(|&i| matches!(u.nodes[i].kind, NodeKind::Type(_)))
        .collect();
    let mut per_event: Vec<Vec<(String, Vec<String>)>> = Vec::new();
    for es in &edges_of {
        let mut opts = Vec::new();
        for (t, roles) in kb.schema() {
            for p in injective_perms(roles, es.len()) {
                opts.push((t.clone(), p));
            }
        }
        per_event.push(opts);
    }
    let all_types: Vec<String> = kb.all_types().into_iter().map(str::to_string).collect();
    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; events.len()];
    let mut tchoice = vec![0usize; type_nodes.len()];
    if per_event.iter().any(|o| o.is_empty()) || (!type_nodes.is_empty() && all_types.is_empty()) {
        return out;
    }
    loop {
        loop {
            let mut g = GroundedGraph {
                nodes: Vec::new(),
                edges: Vec::new(),
                source: None,
            };
            let mut roles: BTreeMap<usize, String> = BTreeMap::new();
            for (k, &e) in events.iter().enumerate() {
                for (j, r) in edges_of[k].iter().zip(&per_event[k][choice[k]].1) {
                    roles.insert(*j, r.clone());
                }
                let _ = e;
            }
            for (i, n) in u.nodes.iter().enumerate() {
                g.nodes.push(match &n.kind {
                    NodeKind::Event(_) => {
                        let k = events.iter().position(|&e| e == i).unwrap();
                        GroundedNode::Event(per_event[k][choice[k]].0.clone())
                    }
                    NodeKind::Entity(id) => GroundedNode::Entity(id.clone()),
                    NodeKind::Target => GroundedNode::Target,
                    NodeKind::Type(_) => {
                        let t = type_nodes.iter().position(|&x| x == i).unwrap();
                        GroundedNode::Type(all_types[tchoice[t]].clone())
                    }
                    NodeKind::Variable => panic!("variables are not generated"),
                });
            }
            for (j, e) in u.edges.iter().enumerate() {
                let role = if e.label == TYPE_EDGE { TYPE_EDGE.to_string() } else { roles[&j].clone() };
                g.edges.push(GroundedEdge {
                    src: e.src,
                    role,
                    dst: e.dst,
                });
            }
            let (answers, total) = brute_execute(&g, kb);
            let keep = if g.target().is_some() { !answers.is_empty() } else { total > 0 };
            if keep {
                out.insert((g.serialize(), answers.into_iter().map(|(e, _)| e).collect()));
            }
            if !advance(&mut tchoice, &vec![all_types.len(); type_nodes.len()]) {
                break;
            }
        }
        let sizes: Vec<usize> = per_event.iter().map(|o| o.len()).collect();
        if !advance(&mut choice, &sizes) {
            break;
        }
    }
    out
}

/// Odometer increment; false once every combination was visited.
fn advance(c: &mut [usize], sizes: &[usize]) -> bool {
    for (x, &n) in c.iter_mut().zip(sizes) {
        *x += 1;
        if *x < n {
            return true;
        }
        *x = 0;
    }
    false
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
