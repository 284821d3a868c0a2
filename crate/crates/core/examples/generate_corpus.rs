//! Generates a small synthetic world and corpus and prints a few records,
//! the split statistics and the head of the gold-derived word lexicon.

use spades::categories::KeyKind;
use spades::generator::{generate_corpus, gold_lexicon, manifest, CorpusConfig};

fn main() {
    let cfg = CorpusConfig {
        sentences: 400,
        ..CorpusConfig::default()
    };
    let g = generate_corpus(&cfg);
    for r in g.train.iter().take(5) {
        let words: Vec<&str> = r.tokens.iter().map(|t| t.surface.as_str()).collect();
        println!("{} (answer {}, {} entities)", words.join(" "), r.answer, r.entity_count);
    }
    println!("\n{}", manifest(&g, &cfg));
    for (word, cats) in gold_lexicon(&g.train, KeyKind::Word, 0.95).entries.iter().take(10) {
        let cats: Vec<String> = cats.iter().map(|c| c.to_string()).collect();
        println!("{word:<12}{}", cats.join(", "));
    }
}
