//! Trains and evaluates every supervision tier and the baseline on the
//! bundled corpus. Without arguments this uses the full splits and takes a
//! few minutes.
//!
//! cargo run --release --example supervision_tiers -- [n_train] [n_test]

use std::path::Path;
use std::time::Instant;

use spades::cli::{self, load_corpus, load_kb};
use spades::config::RunConfig;
use spades::eval::{evaluate, render_table};
use spades::pipeline::{predict_baseline, Mode};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let n_train = args.next().transpose()?.unwrap_or(usize::MAX);
    let n_test = args.next().transpose()?.unwrap_or(usize::MAX);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let base = RunConfig::load(&data.join("spades.conf"))?;
    let kb = load_kb(&data.join("kb.txt"))?;
    let train = load_corpus(&data.join("train.txt"))?.records;
    let test = load_corpus(&data.join("test.txt"))?.records;
    let (train, test) = (&train[..n_train.min(train.len())], &test[..n_test.min(test.len())]);

    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let start = Instant::now();
        let cfg = RunConfig { mode, ..base.clone() };
        let model = cli::train_model(&cfg, &kb, train)?;
        let report = if mode == Mode::Bow {
            evaluate(test, |r| Ok::<_, anyhow::Error>(predict_baseline(r, &kb, &model)))?
        } else {
            let p = cli::pipeline(&cfg, &kb)?;
            evaluate(test, |r| p.predict(r, &model))?
        };
        eprintln!("{mode}: {:.1}s", start.elapsed().as_secs_f64());
        rows.push((mode.name().to_string(), report));
    }
    print!("{}", render_table(&rows));
    Ok(())
}
