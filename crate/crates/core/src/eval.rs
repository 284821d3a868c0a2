//! Slot-filling accuracy with entity-count buckets, lexicon-size sweeps and
//! dependency F1 between derivations.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::categories::{constrain_lexicon, InductionConfig, KeyKind, Lexicon, RankedEntries};
use crate::corpus::CorpusRecord;
use crate::grounding::GroundConfig;
use crate::kb::KnowledgeBase;
use crate::parser::{parse, CandidateSource, Combinator, DerivNode, Derivation, ParseConfig};
use crate::pipeline::{Pipeline, PipelineError, Prediction, Supertagger};
use crate::ranker::TrainConfig;

/// Reported buckets: sentences with 2, 3 and 4+ entity mentions.
pub const BUCKETS: [usize; 3] = [2, 3, 4];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BucketCounts {
    pub total: usize,
    pub correct: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub buckets: [BucketCounts; 3],
    /// Sentences without any predicted answer.
    pub unanswered: usize,
    /// Sentences whose grounding hit the candidate cap.
    pub truncated: usize,
    /// Sentences with more than four entities counted in the last bucket.
    pub folded: usize,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.total).sum()
    }

    pub fn correct(&self) -> usize {
        self.buckets.iter().map(|b| b.correct).sum()
    }

    pub fn overall(&self) -> f64 {
        percent(self.correct(), self.total())
    }

    /// Accuracy for a bucket given by entity count (2, 3 or 4).
    pub fn bucket_accuracy(&self, entities: usize) -> f64 {
        let b = &self.buckets[entities.clamp(2, 4) - 2];
        percent(b.correct, b.total)
    }

    pub fn add(&mut self, rec: &CorpusRecord, p: &Prediction) {
        let b = &mut self.buckets[rec.bucket() - 2];
        b.total += 1;
        if p.answer.as_deref() == Some(rec.answer.as_str()) {
            b.correct += 1;
        }
        self.unanswered += usize::from(p.answer.is_none());
        self.truncated += usize::from(p.truncated);
        self.folded += usize::from(rec.entity_count > 4);
    }
}

/// Scores a system over a corpus; absent answers count as wrong.
pub fn evaluate<E>(
    records: &[CorpusRecord],
    mut system: impl FnMut(&CorpusRecord) -> Result<Prediction, E>,
) -> Result<EvalReport, E> {
    let mut report = EvalReport::default();
    for r in records {
        let p = system(r)?;
        report.add(r, &p);
    }
    Ok(report)
}

/// Aligned text table, one row per system.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14}{:>9}{:>9}{:>9}{:>9}{:>8}{:>12}{:>11}",
        "system", "overall", "2-ent", "3-ent", "4-ent", "n", "unanswered", "truncated"
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<14}{:>9.1}{:>9.1}{:>9.1}{:>9.1}{:>8}{:>12}{:>11}",
            name,
            r.overall(),
            r.bucket_accuracy(2),
            r.bucket_accuracy(3),
            r.bucket_accuracy(4),
            r.total(),
            r.unanswered,
            r.truncated
        );
    }
    out
}

/// Tab-separated form of [`render_table`] with raw counts.
pub fn render_tsv(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from("system\toverall\tacc2\tacc3\tacc4\tn2\tn3\tn4\tcorrect\tunanswered\ttruncated\tfolded\n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.overall(),
            r.bucket_accuracy(2),
            r.bucket_accuracy(3),
            r.bucket_accuracy(4),
            r.buckets[0].total,
            r.buckets[1].total,
            r.buckets[2].total,
            r.correct(),
            r.unanswered,
            r.truncated,
            r.folded
        );
    }
    out
}

/// Head-dependency edges of a derivation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dependencies {
    /// (functor token, argument token, functor's lexical category).
    pub labeled: BTreeSet<(usize, usize, String)>,
    /// Unordered token pairs, smaller index first.
    pub unlabeled: BTreeSet<(usize, usize)>,
}

/// Dependencies by head percolation: every combination links the functor's
/// head to the argument's head. The functor's head heads the result unless
/// the functor is a modifier, in which case the argument's head does.
pub fn dependencies(d: &Derivation) -> Dependencies {
    fn walk(node: &DerivNode, lex: &mut Vec<String>, deps: &mut Dependencies) -> usize {
        match node {
            DerivNode::Leaf { index, category } => {
                if lex.len() <= *index {
                    lex.resize(index + 1, String::new());
                }
                lex[*index] = category.category.to_string();
                *index
            }
            DerivNode::Binary { combinator, left, right, .. } => {
                let hl = walk(left, lex, deps);
                let hr = walk(right, lex, deps);
                let (functor, f_head, a_head) = match combinator {
                    Combinator::FwdApp | Combinator::FwdComp | Combinator::Conj => (left, hl, hr),
                    Combinator::BwdApp | Combinator::BwdComp => (right, hr, hl),
                };
                deps.labeled.insert((f_head, a_head, lex[f_head].clone()));
                deps.unlabeled.insert((f_head.min(a_head), f_head.max(a_head)));
                let modifier = functor.category().is_modifier() || *combinator == Combinator::Conj;
                if modifier {
                    a_head
                } else {
                    f_head
                }
            }
        }
    }
    let mut deps = Dependencies::default();
    walk(&d.root, &mut Vec::new(), &mut deps);
    deps
}

/// Running match counts for micro-averaged F1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct F1Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl F1Counts {
    pub fn of<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Self {
        F1Counts {
            matched: pred.intersection(gold).count(),
            predicted: pred.len(),
            gold: gold.len(),
        }
    }

    pub fn add(&mut self, o: F1Counts) {
        self.matched += o.matched;
        self.predicted += o.predicted;
        self.gold += o.gold;
    }

    /// F1 in percent; 0 when either side is empty.
    pub fn f1(&self) -> f64 {
        if self.predicted == 0 || self.gold == 0 {
            return 0.0;
        }
        200.0 * self.matched as f64 / (self.predicted + self.gold) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntaxScore {
    pub lf1: f64,
    pub uf1: f64,
    /// One side had no dependencies; both scores are then 0.
    pub empty: bool,
}

pub fn score_dependencies(pred: &Dependencies, gold: &Dependencies) -> SyntaxScore {
    let l = F1Counts::of(&pred.labeled, &gold.labeled);
    let u = F1Counts::of(&pred.unlabeled, &gold.unlabeled);
    SyntaxScore {
        lf1: l.f1(),
        uf1: u.f1(),
        empty: l.predicted == 0 || l.gold == 0,
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("predicted derivation covers {0} tokens, reference {1}")]
    TokenCount(usize, usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Labeled and undirected unlabeled F1 of a derivation against a reference.
pub fn score_syntax(pred: &Derivation, reference: &Derivation) -> Result<SyntaxScore, EvalError> {
    let (np, nr) = (pred.leaves().len(), reference.leaves().len());
    if np != nr {
        return Err(EvalError::TokenCount(np, nr));
    }
    Ok(score_dependencies(&dependencies(pred), &dependencies(reference)))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSettings {
    pub parse: ParseConfig,
    pub ground: GroundConfig,
    pub induction: InductionConfig,
    pub train: TrainConfig,
}


#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub size: usize,
    /// Share of test tokens whose key is constrained by the lexicon.
    pub coverage: f64,
    pub lf1: f64,
    pub uf1: f64,
    pub accuracy: f64,
    pub report: EvalReport,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Set when a size failed; rows hold the sizes completed before it.
    pub failure: Option<String>,
}

impl Sweep {
    pub fn is_partial(&self) -> bool {
        self.failure.is_some()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("size\tcoverage\tlf1\tuf1\taccuracy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
                r.size, r.coverage, r.lf1, r.uf1, r.accuracy
            );
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "# partial: {f}");
        }
        out
    }
}

fn check_sizes(sizes: &[usize], limit: usize) -> Result<(), EvalError> {
    if sizes.is_empty() {
        return Err(EvalError::Argument("no lexicon sizes given".into()));
    }
    for w in sizes.windows(2) {
        if w[0] >= w[1] {
            return Err(EvalError::Argument(format!(
                "lexicon sizes must be strictly ascending, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > limit) {
        return Err(EvalError::Argument(format!("lexicon size {s} exceeds the {limit} available entries")));
    }
    Ok(())
}

fn coverage(lex: &Lexicon, records: &[CorpusRecord], kind: KeyKind) -> f64 {
    let (mut hit, mut total) = (0, 0);
    for t in records.iter().flat_map(|r| &r.tokens).filter(|t| !t.is_blank) {
        total += 1;
        let known = match kind {
            KeyKind::Word => lex.word_entries.contains_key(&t.surface),
            KeyKind::Pos => lex.pos_entries.contains_key(&t.pos),
        };
        hit += usize::from(known);
    }
    percent(hit, total)
}

/// For each size: constrain the lexicon to the top entries, retrain, then
/// evaluate answers and the parser's best derivation against gold supertags.
pub fn sweep_lexicon(
    train: &[CorpusRecord],
    test: &[CorpusRecord],
    kb: &KnowledgeBase,
    ranked: &RankedEntries,
    sizes: &[usize],
    settings: &SweepSettings,
) -> Result<Sweep, EvalError> {
    check_sizes(sizes, ranked.len())?;
    let references: Vec<Option<Dependencies>> = test
        .iter()
        .map(|r| {
            let tags = r.supertags.as_deref()?;
            let ds = parse(&r.tokens, CandidateSource::Gold(tags), &settings.parse).ok()?;
            ds.first().map(dependencies)
        })
        .collect();
    let base = Lexicon::induced(settings.induction.clone());
    let mut sweep = Sweep::default();
    for &size in sizes {
        let lex = constrain_lexicon(&base, ranked, size);
        let cov = coverage(&lex, test, ranked.kind);
        let pipeline = Pipeline::new(kb, Supertagger::Lexicon(lex), settings.parse.clone(), settings.ground);
        let model = match pipeline.train(train, settings.train) {
            Ok((m, _)) => m,
            Err(e) => {
                sweep.failure = Some(format!("size {size}: {e}"));
                break;
            }
        };
        let mut report = EvalReport::default();
        let mut lab = F1Counts::default();
        let mut unl = F1Counts::default();
        for (r, reference) in test.iter().zip(&references) {
            let a = pipeline.analyze(r)?;
            report.add(r, &pipeline.predict_analysis(&a, &model));
            if let Some(gold) = reference {
                let pred = a.derivations.first().map(dependencies).unwrap_or_default();
                lab.add(F1Counts::of(&pred.labeled, &gold.labeled));
                unl.add(F1Counts::of(&pred.unlabeled, &gold.unlabeled));
            }
        }
        sweep.rows.push(SweepRow {
            size,
            coverage: cov,
            lf1: lab.f1(),
            uf1: unl.f1(),
            accuracy: report.overall(),
            report,
        });
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn rec(id: &str, entities: usize, answer: &str) -> CorpusRecord {
        let mut tokens = vec![crate::parser::Token::blank()];
        for i in 1..entities {
            tokens.push(crate::parser::Token::entity(&format!("E{i}"), "NNP", &format!("E{i}")));
        }
        CorpusRecord {
            id: id.into(),
            blank: 0,
            tokens,
            answer: answer.into(),
            supertags: None,
            entity_count: entities,
        }
    }

    fn answer(a: Option<&str>) -> Result<Prediction, ()> {
        Ok(Prediction {
            answer: a.map(str::to_string),
            ..Default::default()
        })
    }

    #[test]
    fn overall_accuracy() {
        let recs = vec![rec("a", 2, "X"), rec("b", 2, "X"), rec("c", 2, "X")];
        let preds = [Some("X"), Some("Y"), None];
        let mut it = preds.iter();
        let r = evaluate(&recs, |_| answer(*it.next().unwrap())).unwrap();
        assert!((r.overall() - 33.333).abs() < 0.01);
        assert_eq!(r.unanswered, 1);
    }

    #[test]
    fn bucket_layout() {
        let recs = vec![rec("a", 2, "X"), rec("b", 2, "X"), rec("c", 3, "X")];
        let preds = [Some("X"), Some("Y"), Some("X")];
        let mut it = preds.iter();
        let r = evaluate(&recs, |_| answer(*it.next().unwrap())).unwrap();
        assert_eq!(r.bucket_accuracy(2), 50.0);
        assert_eq!(r.bucket_accuracy(3), 100.0);
        assert!((r.overall() - 66.667).abs() < 0.01);
        assert_eq!(format!("{:.1}", r.overall()), "66.7");
    }

    #[test]
    fn large_entity_counts_fold_into_last_bucket() {
        let recs = vec![rec("a", 6, "X")];
        let r = evaluate(&recs, |_| answer(Some("X"))).unwrap();
        assert_eq!(r.buckets[2].correct, 1);
        assert_eq!(r.folded, 1);
    }

    fn derivation(tags: &[crate::categories::Category]) -> Derivation {
        let tokens = acquisition_sentence();
        parse(&tokens, CandidateSource::Gold(tags), &ParseConfig::default()).unwrap().remove(0)
    }

    #[test]
    fn identical_derivations_score_full() {
        let d = derivation(&acquisition_supertags()[0]);
        let s = score_syntax(&d, &d).unwrap();
        assert_eq!((s.lf1, s.uf1, s.empty), (100.0, 100.0, false));
    }

    #[test]
    fn adjunct_versus_argument_attachment() {
        let tags = acquisition_supertags();
        let adjunct = derivation(&tags[0]);
        let argument = derivation(&tags[2]);
        // Google acquired Nest in 2014: both attach "in" to the verb.
        let a = dependencies(&adjunct);
        let b = dependencies(&argument);
        let pairs: BTreeSet<(usize, usize)> = [(0, 1), (1, 2), (1, 3), (3, 4)].into_iter().collect();
        assert_eq!(a.unlabeled, pairs);
        assert_eq!(b.unlabeled, pairs);
        let s = score_syntax(&adjunct, &argument).unwrap();
        assert_eq!(s.uf1, 100.0);
        assert_eq!(s.lf1, 0.0);
    }

    #[test]
    fn empty_sets_are_flagged() {
        let s = score_dependencies(&Dependencies::default(), &Dependencies::default());
        assert_eq!((s.lf1, s.uf1, s.empty), (0.0, 0.0, true));
    }

    #[test]
    fn sweep_size_validation() {
        let kb = toy_kb();
        let ranked = RankedEntries {
            kind: KeyKind::Word,
            entries: vec![("acquired".into(), BTreeSet::new())],
        };
        for sizes in [&[][..], &[0, 0][..], &[1, 0][..], &[0, 5][..]] {
            assert!(matches!(
                sweep_lexicon(&[], &[], &kb, &ranked, sizes, &SweepSettings::default()),
                Err(EvalError::Argument(_))
            ));
        }
    }

    #[test]
    fn failed_training_marks_sweep_partial() {
        let kb = toy_kb();
        let ranked = RankedEntries {
            kind: KeyKind::Word,
            entries: Vec::new(),
        };
        let s = sweep_lexicon(&[], &[], &kb, &ranked, &[0], &SweepSettings::default()).unwrap();
        assert!(s.is_partial());
        assert!(s.rows.is_empty());
        assert!(s.render().contains("# partial"));
    }
}
