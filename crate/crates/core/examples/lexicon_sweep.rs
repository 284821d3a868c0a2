//! Accuracy and syntactic F1 as the word lexicon grows from nothing (pure
//! induction) to the most frequent few hundred words.
//!
//! cargo run --release --example lexicon_sweep -- [n_train] [n_test]

use std::path::Path;

use spades::categories::KeyKind;
use spades::cli::{load_corpus, load_kb, load_lexicon};
use spades::config::RunConfig;
use spades::eval::sweep_lexicon;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let n_train = args.next().transpose()?.unwrap_or(3000);
    let n_test = args.next().transpose()?.unwrap_or(500);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let cfg = RunConfig::load(&data.join("spades.conf"))?;
    let kb = load_kb(&data.join("kb.txt"))?;
    let ranked = load_lexicon(&data.join("lexicon.word.txt"), KeyKind::Word)?;
    let train = load_corpus(&data.join("train.txt"))?.records;
    let test = load_corpus(&data.join("test.txt"))?.records;
    let (train, test) = (&train[..n_train.min(train.len())], &test[..n_test.min(test.len())]);
    let sweep = sweep_lexicon(train, test, &kb, &ranked, &[0, 10, 50, 200], &cfg.sweep_settings())?;
    print!("{}", sweep.render());
    Ok(())
}
