//! Loads a KB from text, grounds a hand-built ungrounded query graph and
//! executes every candidate with support counts.

use spades::fixtures::TOY_KB;
use spades::grounding::{ground, GroundConfig};
use spades::kb::{execute_counts, KnowledgeBase, QueryOptions};
use spades::semantics::{Edge, Node, NodeKind, UngroundedGraph};

fn main() -> anyhow::Result<()> {
    let kb = KnowledgeBase::parse(TOY_KB, "toy")?;
    println!("{} events over {} entities", kb.events().len(), kb.entities().len());
    let node = |kind| Node { kind, origin: 0 };
    let edge = |src, label: &str, dst| Edge { src, label: label.into(), dst };
    // Which company did Google acquire in 2014?
    let query = UngroundedGraph {
        nodes: vec![
            node(NodeKind::Event("acquired".into())),
            node(NodeKind::Entity("Google".into())),
            node(NodeKind::Target),
            node(NodeKind::Entity("2014".into())),
        ],
        edges: vec![edge(0, "arg1", 1), edge(0, "arg2", 2), edge(0, "in", 3)],
    };
    println!("{}\n", query.serialize());
    let grounded = ground(&query, &kb, GroundConfig::default());
    for c in &grounded.candidates {
        let ranked = execute_counts(c, &kb, QueryOptions::default())?;
        println!("{}\n  {ranked:?}\n", c.serialize());
    }
    Ok(())
}
