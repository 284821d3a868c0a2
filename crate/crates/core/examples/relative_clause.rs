//! Object versus verb-phrase attachment of a relative clause. Only the
//! object attachment lets the query answer the blank with Nest.

use spades::fixtures::{relative_clause_candidates, relative_clause_cloze, toy_kb};
use spades::grounding::{ground, GroundConfig};
use spades::parser::{parse_candidates, ParseConfig};
use spades::semantics::compose;

fn main() -> anyhow::Result<()> {
    let tokens = relative_clause_cloze();
    let kb = toy_kb();
    let ds = parse_candidates(&tokens, &relative_clause_candidates(), &ParseConfig::default())?;
    for which in &relative_clause_candidates()[3] {
        let Some(d) = ds.iter().find(|d| &d.supertags()[3] == which) else { continue };
        let g = compose(d, &tokens)?.remove(0);
        println!("which := {which}\n{}", d.render(Some(&tokens)));
        println!("{}", g.serialize());
        let grounded = ground(&g, &kb, GroundConfig::default());
        for (c, answers) in grounded.candidates.iter().zip(&grounded.answers) {
            println!("  -> {}\n     {}", answers.join(" "), c.serialize().replace('\n', "; "));
        }
        println!();
    }
    Ok(())
}
