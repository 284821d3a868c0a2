use std::path::{Path, PathBuf};

use spades::cli::{self, Sentences, GENERATED_FILES};
use spades::config::RunConfig;
use spades::generator::CorpusConfig;
use spades::ranker::PerceptronModel;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spades-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn toy_parse_yields_one_graph() {
    let cfg = RunConfig::load(&data().join("toy/toy.conf")).unwrap();
    let kb = cli::load_kb(cfg.kb.as_ref().unwrap()).unwrap();
    let input = Sentences::from_tokens("Google|NNP|Google acquired|VBD|_ Nest|NNP|Nest in|IN|_ 2014|CD|2014").unwrap();
    let out = cli::cmd_parse(&cfg, &kb, input, true).unwrap();
    assert!(out.contains("## ungrounded graphs=1\n"), "{out}");
    assert!(out.contains("acquired(e1)\narg1(e1, Google)\narg2(e1, Nest)\nin(e1, 2014)"), "{out}");
    let n: usize = out
        .lines()
        .find_map(|l| l.strip_prefix("# input\tderivations="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(n >= 3, "{out}");
}

#[test]
fn toy_ground_answers_the_cloze() {
    let cfg = RunConfig::load(&data().join("toy/toy.conf")).unwrap();
    let kb = cli::load_kb(cfg.kb.as_ref().unwrap()).unwrap();
    let input = Sentences::from_tokens("Google|NNP|Google acquired|VBD|_ _blank_|NNP|_ in|IN|_ 2014|CD|2014").unwrap();
    let out = cli::cmd_ground(&cfg, &kb, input, false).unwrap();
    assert!(out.contains("=> DeepMind Nest\n"), "{out}");
}

#[test]
fn untrained_model_round_trips() {
    let dir = scratch("train");
    let lines: Vec<&str> = include_str!("../data/train.txt").lines().take(100).collect();
    std::fs::write(dir.join("train.txt"), lines.join("\n")).unwrap();
    let cfg = RunConfig {
        epochs: 0,
        kb: Some(data().join("kb.txt")),
        train: Some(dir.join("train.txt")),
        ..RunConfig::default()
    };
    let kb = cli::load_kb(cfg.kb.as_ref().unwrap()).unwrap();
    let text = cli::cmd_train(&cfg, &kb).unwrap();
    let model = PerceptronModel::parse(&text, "model").unwrap();
    assert_eq!(model.epochs_trained, 0);
    assert!(model.weights.values().all(|w| *w == 0.0));
    assert!(model.averaged.values().all(|w| *w == 0.0));
    assert_eq!(model.render(), text);
    assert_eq!(cli::cmd_train(&cfg, &kb).unwrap(), text);
}

#[test]
fn bundled_report_is_reproduced() {
    let cfg = RunConfig::load(&data().join("spades.conf")).unwrap();
    let kb = cli::load_kb(cfg.kb.as_ref().unwrap()).unwrap();
    let (table, tsv) = cli::cmd_evaluate(&cfg, &kb).unwrap();
    assert_eq!(table, std::fs::read_to_string(data().join("expected/supervised.report.txt")).unwrap());
    assert_eq!(tsv, std::fs::read_to_string(data().join("expected/supervised.report.tsv")).unwrap());
}

#[test]
fn generator_reproduces_bundled_data() {
    let dir = scratch("generate");
    let manifest = cli::cmd_generate(&CorpusConfig::default(), &dir).unwrap();
    assert_eq!(manifest, std::fs::read_to_string(data().join("manifest.txt")).unwrap());
    for name in GENERATED_FILES {
        let got = std::fs::read(dir.join(name)).unwrap();
        let want = std::fs::read(data().join(name)).unwrap();
        assert!(got == want, "{name} differs from the bundled copy");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_config_reports_its_exit_code() {
    let dir = scratch("config");
    let path = dir.join("bad.conf");
    std::fs::write(&path, "beam_width = 0\n").unwrap();
    let err = RunConfig::load(&path).map_err(cli::CliError::from).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
