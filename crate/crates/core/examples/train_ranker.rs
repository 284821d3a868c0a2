//! Trains the averaged perceptron on a slice of the bundled training split
//! and reports accuracy on a slice of the test split.
//!
//! cargo run --release --example train_ranker -- [n_train] [n_test]

use std::path::Path;

use spades::cli::{self, load_corpus, load_kb};
use spades::config::RunConfig;
use spades::eval::{evaluate, render_table};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let n_train = args.next().transpose()?.unwrap_or(2000);
    let n_test = args.next().transpose()?.unwrap_or(500);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let cfg = RunConfig::load(&data.join("spades.conf"))?;
    let kb = load_kb(&data.join("kb.txt"))?;
    let train = load_corpus(&data.join("train.txt"))?.records;
    let test = load_corpus(&data.join("test.txt"))?.records;
    let (train, test) = (&train[..n_train.min(train.len())], &test[..n_test.min(test.len())]);

    let pipeline = cli::pipeline(&cfg, &kb)?;
    let (model, stats) = pipeline.train(train, cfg.train_config())?;
    println!(
        "{} usable sentences, {} skipped, mistakes per epoch {:?}",
        stats.examples, stats.skipped, stats.mistakes
    );
    let mut top: Vec<(&String, &f64)> = model.averaged.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(a.1));
    for (k, w) in top.iter().take(8) {
        println!("{w:>8.3}  {k}");
    }
    let report = evaluate(test, |r| pipeline.predict(r, &model))?;
    print!("{}", render_table(&[(cfg.mode.name().to_string(), report)]));
    Ok(())
}
