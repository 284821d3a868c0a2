//! The bag-of-words baseline: one relation classifier per (blank, entity)
//! pair, combined into a conjunctive query.
//!
//! cargo run --release --example bow_baseline -- [n_train] [n_test]

use std::path::Path;

use spades::baseline::{label_space, predict_pairs};
use spades::cli::{load_corpus, load_kb};
use spades::eval::{evaluate, render_table};
use spades::pipeline::{predict_baseline, train_baseline};
use spades::ranker::TrainConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let n_train = args.next().transpose()?.unwrap_or(5000);
    let n_test = args.next().transpose()?.unwrap_or(1000);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let kb = load_kb(&data.join("kb.txt"))?;
    let train = load_corpus(&data.join("train.txt"))?.records;
    let test = load_corpus(&data.join("test.txt"))?.records;
    let (train, test) = (&train[..n_train.min(train.len())], &test[..n_test.min(test.len())]);

    let model = train_baseline(train, &kb, TrainConfig::default())?;
    let labels = label_space(&kb);
    let r = &test[0];
    println!("{}", r.render());
    for (entity, label) in predict_pairs(&r.tokens, &model, &labels) {
        println!("  {entity}: {label}");
    }
    let report = evaluate(test, |r| Ok::<_, anyhow::Error>(predict_baseline(r, &kb, &model)))?;
    print!("{}", render_table(&[("bow".to_string(), report)]));
    Ok(())
}
