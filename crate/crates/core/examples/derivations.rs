//! Parses "Google acquired Nest in 2014" under three analyses of "in" and
//! shows that every derivation composes to the same ungrounded graph, which
//! grounds to the acquisition event on the toy KB.

use spades::fixtures::{acquisition_candidates, acquisition_sentence, toy_kb};
use spades::grounding::{ground, GroundConfig};
use spades::parser::{parse_candidates, ParseConfig};
use spades::semantics::compose;

fn main() -> anyhow::Result<()> {
    let tokens = acquisition_sentence();
    let kb = toy_kb();
    let ds = parse_candidates(&tokens, &acquisition_candidates(), &ParseConfig::default())?;
    for d in &ds {
        println!("{:>5.1}  {}", d.score, d.render(Some(&tokens)));
    }
    let graph = compose(&ds[0], &tokens)?.remove(0);
    println!("\nungrounded:\n{}\n", graph.serialize());
    for c in ground(&graph, &kb, GroundConfig::default()).candidates {
        println!("grounded:\n{c}\n");
    }
    Ok(())
}
