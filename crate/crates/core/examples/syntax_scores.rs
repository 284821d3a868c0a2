//! Labeled versus unlabeled dependency F1 between the adjunct and the
//! PP-argument analyses of "Google acquired Nest in 2014". The two trees
//! link the same words but with different lexical categories.

use spades::eval::{dependencies, score_syntax};
use spades::fixtures::{acquisition_sentence, acquisition_supertags};
use spades::parser::{parse, CandidateSource, ParseConfig};

fn main() -> anyhow::Result<()> {
    let tokens = acquisition_sentence();
    let tags = acquisition_supertags();
    let first = |t| -> anyhow::Result<_> {
        Ok(parse(&tokens, CandidateSource::Gold(t), &ParseConfig::default())?.remove(0))
    };
    let (adjunct, argument) = (first(&tags[0])?, first(&tags[2])?);
    for (name, d) in [("adjunct", &adjunct), ("argument", &argument)] {
        println!("{name}: {}", d.render(Some(&tokens)));
        for (head, dep, cat) in dependencies(d).labeled {
            println!("  {} -> {}  [{cat}]", tokens[head].surface, tokens[dep].surface);
        }
    }
    let s = score_syntax(&adjunct, &argument)?;
    println!("LF1 {:.1}  UF1 {:.1}", s.lf1, s.uf1);
    Ok(())
}
