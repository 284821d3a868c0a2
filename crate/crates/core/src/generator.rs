//! Seeded synthetic world (KB) and cloze corpus with gold supertags.
//!
//! Sentences come from templates whose tokens carry POS tags and gold
//! categories. Each template is filled from KB facts, one entity mention is
//! blanked, and the sentence is kept only when its gold derivation yields a
//! valid, groundable graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::categories::{Category, KeyKind, RankedEntries};
use crate::corpus::{CorpusRecord, CorpusStats};
use crate::grounding::{ground, GroundConfig};
use crate::kb::{EventInstance, KnowledgeBase};
use crate::parser::{parse, CandidateSource, ParseConfig, Token};
use crate::semantics::{compose, validate};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldConfig {
    pub companies: usize,
    pub persons: usize,
    pub cities: usize,
    pub countries: usize,
    pub acquisitions: usize,
    pub first_year: u32,
    pub last_year: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            companies: 960,
            persons: 640,
            cities: 480,
            countries: 40,
            acquisitions: 680,
            first_year: 1950,
            last_year: 2015,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub sentences: usize,
    /// Share of sentences with 2, 3 and 4 entity mentions.
    pub bucket_weights: [f64; 3],
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub world: WorldConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 7,
            sentences: 21_500,
            bucket_weights: [0.60, 0.32, 0.08],
            train_fraction: 0.85,
            dev_fraction: 0.05,
            world: WorldConfig::default(),
        }
    }
}

const ACQ: &str = "business.acquisition";
const FOUND: &str = "organization.founding";
const BIRTH: &str = "people.birth";
const HQ: &str = "organization.headquarters";
const CONTAIN: &str = "location.containment";
const EMPLOY: &str = "people.employment";

/// Schema of the synthetic world.
pub fn schema() -> BTreeMap<String, Vec<String>> {
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    [
        (ACQ, s(&["acquiring_company", "company_acquired", "date"])),
        (FOUND, s(&["organization", "founder", "location", "date"])),
        (BIRTH, s(&["person", "place", "date"])),
        (HQ, s(&["organization", "location"])),
        (CONTAIN, s(&["contained", "container"])),
        (EMPLOY, s(&["employee", "employer"])),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

const ONSETS: &[&str] = &[
    "b", "br", "c", "d", "dr", "f", "g", "gr", "h", "k", "kr", "l", "m", "n", "p", "pr", "r", "s", "st", "t", "tr",
    "v", "z",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "io"];
const CODAS: &[&str] = &["", "n", "r", "s", "l", "x", "m", "nd", "rt", "sk"];

fn name(rng: &mut ChaCha8Rng, syllables: usize, suffix: &str) -> String {
    let mut s = String::new();
    for i in 0..syllables {
        s.push_str(ONSETS.choose(rng).unwrap());
        s.push_str(VOWELS.choose(rng).unwrap());
        if i + 1 == syllables {
            s.push_str(CODAS.choose(rng).unwrap());
        }
    }
    s.push_str(suffix);
    let mut c = s.chars();
    let first = c.next().unwrap().to_ascii_uppercase();
    std::iter::once(first).chain(c).collect()
}

/// Entities and facts of the synthetic world.
#[derive(Clone, Debug)]
pub struct World {
    pub companies: Vec<String>,
    pub persons: Vec<String>,
    pub cities: Vec<String>,
    pub countries: Vec<String>,
    pub kb: KnowledgeBase,
    city_country: BTreeMap<String, String>,
    acquisitions: Vec<(String, String, String)>,
    /// company → (founder, city, year)
    foundings: BTreeMap<String, (String, String, String)>,
    /// person → (city, year)
    births: BTreeMap<String, (String, String)>,
    hq: BTreeMap<String, String>,
    employment: Vec<(String, String)>,
}

impl World {
    pub fn generate(cfg: &WorldConfig, rng: &mut ChaCha8Rng) -> World {
        let mut used = BTreeSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng, syl: usize, suffixes: &[&str]| loop {
            let suffix = *suffixes.choose(rng).unwrap();
            let n = name(rng, syl, suffix);
            if used.insert(n.clone()) {
                break n;
            }
        };
        let companies: Vec<String> = (0..cfg.companies)
            .map(|_| fresh(rng, 2, &["", "", "ix", "ora", "tech", "soft"]))
            .collect();
        let persons: Vec<String> = (0..cfg.persons).map(|_| fresh(rng, 3, &["", "son", "ova", "ez"])).collect();
        let cities: Vec<String> = (0..cfg.cities).map(|_| fresh(rng, 2, &["ville", "burg", "ton", "a", ""])).collect();
        let countries: Vec<String> = (0..cfg.countries).map(|_| fresh(rng, 2, &["ia", "land", "stan"])).collect();
        let year = |rng: &mut ChaCha8Rng| rng.gen_range(cfg.first_year..=cfg.last_year).to_string();

        let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut tag = |e: &String, t: &str| {
            types.entry(e.clone()).or_default().insert(t.to_string());
        };
        companies.iter().for_each(|c| tag(c, "organization.company"));
        persons.iter().for_each(|p| tag(p, "people.person"));
        cities.iter().for_each(|c| tag(c, "location.city"));
        countries.iter().for_each(|c| tag(c, "location.country"));

        let mut events = Vec::new();
        let mut push = |ty: &str, fillers: &[(&str, &String)]| {
            let id = format!("{}{}", &ty[ty.find('.').unwrap() + 1..][..3], events.len() + 1);
            events.push(EventInstance {
                id,
                event_type: ty.to_string(),
                fillers: fillers.iter().map(|(r, v)| (r.to_string(), (*v).clone())).collect(),
            });
        };
        let mut city_country = BTreeMap::new();
        for c in &cities {
            let k = countries.choose(rng).unwrap().clone();
            push(CONTAIN, &[("contained", c), ("container", &k)]);
            city_country.insert(c.clone(), k);
        }
        let mut births = BTreeMap::new();
        for p in &persons {
            let (l, y) = (cities.choose(rng).unwrap().clone(), year(rng));
            push(BIRTH, &[("person", p), ("place", &l), ("date", &y)]);
            births.insert(p.clone(), (l, y));
        }
        let mut foundings = BTreeMap::new();
        let mut hq = BTreeMap::new();
        for c in &companies {
            let (p, l, y) = (persons.choose(rng).unwrap().clone(), cities.choose(rng).unwrap().clone(), year(rng));
            push(FOUND, &[("organization", c), ("founder", &p), ("location", &l), ("date", &y)]);
            foundings.insert(c.clone(), (p, l.clone(), y));
            let h = if rng.gen_bool(0.5) { l } else { cities.choose(rng).unwrap().clone() };
            push(HQ, &[("organization", c), ("location", &h)]);
            hq.insert(c.clone(), h);
        }
        let mut employment = Vec::new();
        for p in &persons {
            let n = rng.gen_range(1..=2);
            for c in companies.choose_multiple(rng, n) {
                push(EMPLOY, &[("employee", p), ("employer", c)]);
                employment.push((p.clone(), c.clone()));
            }
        }
        let mut acquisitions = Vec::new();
        let mut targets: Vec<&String> = companies.iter().collect();
        targets.shuffle(rng);
        for b in targets.into_iter().take(cfg.acquisitions) {
            let a = loop {
                let a = companies.choose(rng).unwrap();
                if a != b {
                    break a.clone();
                }
            };
            let y = year(rng);
            push(ACQ, &[("acquiring_company", &a), ("company_acquired", b), ("date", &y)]);
            acquisitions.push((a, b.clone(), y));
        }
        let kb = KnowledgeBase::new(schema(), types, events).expect("generated KB is well-formed");
        World {
            companies,
            persons,
            cities,
            countries,
            kb,
            city_country,
            acquisitions,
            foundings,
            births,
            hq,
            employment,
        }
    }

    /// Entity bindings for a frame, keyed by placeholder name.
    fn bind(&self, frame: Frame, rng: &mut ChaCha8Rng) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        let pick_company = |rng: &mut ChaCha8Rng| self.companies.choose(rng).unwrap().clone();
        match frame {
            Frame::Acq => {
                let (a, b, y) = self.acquisitions.choose(rng).unwrap().clone();
                m.extend([("A", a), ("B", b), ("Y", y)]);
            }
            Frame::Found => {
                let c = pick_company(rng);
                let (p, l, y) = self.foundings[&c].clone();
                m.extend([("C", c), ("P", p), ("L", l), ("Y", y)]);
            }
            Frame::Birth => {
                let p = self.persons.choose(rng).unwrap().clone();
                let (l, y) = self.births[&p].clone();
                m.extend([("P", p), ("L", l), ("Y", y)]);
            }
            Frame::Hq => {
                let c = pick_company(rng);
                let l = self.hq[&c].clone();
                let k = self.city_country[&l].clone();
                m.extend([("C", c), ("L", l), ("K", k)]);
            }
            Frame::Contain => {
                let l = self.cities.choose(rng).unwrap().clone();
                let k = self.city_country[&l].clone();
                m.extend([("L", l), ("K", k)]);
            }
            Frame::Employ => {
                let (p, c) = self.employment.choose(rng).unwrap().clone();
                let l = self.hq[&c].clone();
                m.extend([("P", p), ("C", c), ("L", l)]);
            }
            Frame::AcqFound => {
                let (a, b, y) = self.acquisitions.choose(rng).unwrap().clone();
                let (p, l, _) = self.foundings[&b].clone();
                m.extend([("A", a), ("B", b), ("Y", y), ("P", p), ("L", l)]);
            }
            Frame::AcqHq => {
                let (a, b, y) = self.acquisitions.choose(rng).unwrap().clone();
                let l = self.hq[&a].clone();
                m.extend([("A", a), ("B", b), ("Y", y), ("L", l)]);
            }
            Frame::BirthFound => {
                let c = pick_company(rng);
                let (p, _, y) = self.foundings[&c].clone();
                let (l, _) = self.births[&p].clone();
                m.extend([("C", c), ("P", p), ("L", l), ("Y", y)]);
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Frame {
    Acq,
    Found,
    Birth,
    Hq,
    Contain,
    Employ,
    AcqFound,
    AcqHq,
    BirthFound,
}

struct Template {
    frame: Frame,
    weight: u32,
    /// Space-separated tokens: `{X}` is an entity placeholder, anything else
    /// is `word[,word...]|POS|category`.
    pattern: &'static str,
}

const AUX: &str = "(S\\NP)/(S\\NP)";
const ADJ: &str = "((S\\NP)\\(S\\NP))/NP";
const TV: &str = "(S\\NP)/NP";
const REL: &str = "(NP\\NP)/(S\\NP)";

macro_rules! t {
    ($frame:ident, $w:expr, $p:expr) => {
        Template {
            frame: Frame::$frame,
            weight: $w,
            pattern: $p,
        }
    };
}

fn templates() -> [Vec<Template>; 3] {
    let two = vec![
        t!(Acq, 10, "{A} acquired,bought,purchased|VBD|TV {B}"),
        t!(Acq, 6, "{B} was|VBD|AUX acquired,bought,purchased|VBN|S\\NP by|IN|ADJ {A}"),
        t!(Acq, 3, "{A} later,also|RB|AUX acquired,bought|VBD|TV {B}"),
        t!(Found, 8, "{P} founded,established,started|VBD|TV {C}"),
        t!(Found, 5, "{C} was|VBD|AUX founded,established|VBN|S\\NP by|IN|ADJ {P}"),
        t!(Found, 4, "{C} was|VBD|AUX founded,established|VBN|S\\NP in|IN|ADJ {L}"),
        t!(Found, 3, "{C} was|VBD|AUX founded,established|VBN|S\\NP in|IN|ADJ {Y}"),
        t!(Birth, 6, "{P} was|VBD|AUX born|VBN|S\\NP in|IN|ADJ {L}"),
        t!(Birth, 3, "{P} was|VBD|AUX born|VBN|S\\NP in|IN|ADJ {Y}"),
        t!(Hq, 6, "{C} is|VBZ|AUX headquartered,based|VBN|S\\NP in|IN|ADJ {L}"),
        t!(Hq, 2, "{C} is|VBZ|AUX also|RB|AUX headquartered,based|VBN|S\\NP in|IN|ADJ {L}"),
        t!(Contain, 4, "{L} is|VBZ|AUX located,situated|VBN|S\\NP in|IN|ADJ {K}"),
        t!(Employ, 5, "{P} works|VBZ|(S\\NP)/PP for|IN|PP/NP {C}"),
        t!(Employ, 3, "{P} worked|VBD|(S\\NP)/PP for|IN|PP/NP {C}"),
        t!(Employ, 3, "{P} is|VBZ|AUX employed|VBN|S\\NP by|IN|ADJ {C}"),
    ];
    let three = vec![
        t!(Acq, 8, "{A} acquired,bought,purchased|VBD|TV {B} in|IN|ADJ {Y}"),
        t!(Acq, 2, "{B} was|VBD|AUX acquired,bought|VBN|S\\NP by|IN|ADJ {A} in|IN|ADJ {Y}"),
        t!(Found, 5, "{P} founded,established|VBD|TV {C} in|IN|ADJ {L}"),
        t!(Found, 3, "{P} founded,established|VBD|TV {C} in|IN|ADJ {Y}"),
        t!(Found, 3, "{C} was|VBD|AUX founded,established|VBN|S\\NP by|IN|ADJ {P} in|IN|ADJ {L}"),
        t!(Birth, 3, "{P} was|VBD|AUX born|VBN|S\\NP in|IN|ADJ {L} in|IN|ADJ {Y}"),
        t!(AcqFound, 4, "{A} acquired,bought|VBD|TV {B} which|WDT|REL was|VBD|AUX founded|VBN|S\\NP in|IN|ADJ {L}"),
        t!(AcqFound, 3, "{A} acquired,bought|VBD|TV {B} which|WDT|REL was|VBD|AUX founded|VBN|S\\NP by|IN|ADJ {P}"),
        t!(Hq, 4, "{C} is|VBZ|AUX headquartered,based|VBN|S\\NP in|IN|ADJ {L} ,|,|(NP\\NP)/NP {K}"),
        t!(BirthFound, 3, "{P} ,|,|NP\\NP who|WP|REL was|VBD|AUX born|VBN|S\\NP in|IN|ADJ {L} ,|,|NP\\NP founded|VBD|TV {C}"),
        t!(Employ, 2, "{P} works|VBZ|(S\\NP)/PP for|IN|PP/NP {C} which|WDT|REL is|VBZ|AUX headquartered|VBN|S\\NP in|IN|ADJ {L}"),
        t!(AcqHq, 2, "{A} ,|,|NP\\NP which|WDT|REL is|VBZ|AUX based|VBN|S\\NP in|IN|ADJ {L} ,|,|NP\\NP acquired|VBD|TV {B}"),
    ];
    let four = vec![
        t!(Found, 4, "{P} founded,established|VBD|TV {C} in|IN|ADJ {L} in|IN|ADJ {Y}"),
        t!(Found, 1, "{C} was|VBD|AUX founded|VBN|S\\NP by|IN|ADJ {P} in|IN|ADJ {L} in|IN|ADJ {Y}"),
        t!(BirthFound, 2, "{P} ,|,|NP\\NP who|WP|REL was|VBD|AUX born|VBN|S\\NP in|IN|ADJ {L} ,|,|NP\\NP founded|VBD|TV {C} in|IN|ADJ {Y}"),
        t!(AcqHq, 2, "{A} ,|,|NP\\NP which|WDT|REL is|VBZ|AUX based|VBN|S\\NP in|IN|ADJ {L} ,|,|NP\\NP acquired|VBD|TV {B} in|IN|ADJ {Y}"),
        t!(AcqFound, 1, "{A} acquired|VBD|TV {B} which|WDT|REL was|VBD|AUX founded|VBN|S\\NP by|IN|ADJ {P} in|IN|ADJ {L}"),
    ];
    [two, three, four]
}

fn expand_category(raw: &str) -> &str {
    match raw {
        "AUX" => AUX,
        "ADJ" => ADJ,
        "TV" => TV,
        "REL" => REL,
        other => other,
    }
}

/// Fills a template. Returns tokens and gold supertags, or None when the
/// bound entities repeat.
fn realise(
    t: &Template,
    world: &World,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<Token>, Vec<Category>)> {
    let binding = world.bind(t.frame, rng);
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut seen = BTreeSet::new();
    for piece in t.pattern.split(' ') {
        if let Some(key) = piece.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            let id = &binding[key];
            if !seen.insert(id.clone()) {
                return None;
            }
            let pos = if id.chars().all(|c| c.is_ascii_digit()) { "CD" } else { "NNP" };
            tokens.push(Token::entity(id, pos, id));
            tags.push(Category::np());
        } else {
            let mut parts = piece.splitn(3, '|');
            let (words, pos, cat) = (parts.next()?, parts.next()?, parts.next()?);
            let word = if words == "," {
                ","
            } else {
                words.split(',').collect::<Vec<_>>().choose(rng).copied()?
            };
            tokens.push(Token::word(word, pos));
            tags.push(expand_category(cat).parse().expect("template category"));
        }
    }
    Some((tokens, tags))
}

/// Whether the gold analysis yields a valid graph with at least one grounding.
pub fn gold_groundable(tokens: &[Token], tags: &[Category], kb: &KnowledgeBase) -> bool {
    let Ok(ds) = parse(tokens, CandidateSource::Gold(tags), &ParseConfig::default()) else {
        return false;
    };
    ds.iter().take(3).any(|d| {
        compose(d, tokens).is_ok_and(|gs| {
            gs.iter()
                .any(|g| validate(g).is_ok() && !ground(g, kb, GroundConfig::default()).candidates.is_empty())
        })
    })
}

#[derive(Clone, Debug)]
pub struct GeneratedCorpus {
    pub world: World,
    pub train: Vec<CorpusRecord>,
    pub dev: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
    pub discarded: usize,
}

pub fn generate_corpus(cfg: &CorpusConfig) -> GeneratedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let world = World::generate(&cfg.world, &mut rng);
    let buckets = templates();
    let bucket_totals: Vec<u32> = buckets.iter().map(|b| b.iter().map(|t| t.weight).sum()).collect();
    let mut records = Vec::with_capacity(cfg.sentences);
    let mut discarded = 0;
    while records.len() < cfg.sentences {
        let r: f64 = rng.gen();
        let b = if r < cfg.bucket_weights[0] {
            0
        } else if r < cfg.bucket_weights[0] + cfg.bucket_weights[1] {
            1
        } else {
            2
        };
        let mut pick = rng.gen_range(0..bucket_totals[b]);
        let t = buckets[b]
            .iter()
            .find(|t| {
                if pick < t.weight {
                    true
                } else {
                    pick -= t.weight;
                    false
                }
            })
            .unwrap();
        let Some((mut tokens, mut tags)) = realise(t, &world, &mut rng) else {
            discarded += 1;
            continue;
        };
        let mentions: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].entity.is_some()).collect();
        let blank = *mentions.choose(&mut rng).unwrap();
        let answer = tokens[blank].entity.clone().unwrap();
        tokens[blank] = Token::blank();
        tags[blank] = Category::np();
        if !gold_groundable(&tokens, &tags, &world.kb) {
            discarded += 1;
            continue;
        }
        records.push(CorpusRecord {
            id: format!("s{:05}", records.len() + 1),
            tokens,
            blank,
            answer,
            supertags: Some(tags),
            entity_count: mentions.len(),
        });
    }
    let n_train = (cfg.sentences as f64 * cfg.train_fraction).round() as usize;
    let n_dev = (cfg.sentences as f64 * cfg.dev_fraction).round() as usize;
    let test = records.split_off(n_train + n_dev);
    let dev = records.split_off(n_train);
    GeneratedCorpus {
        world,
        train: records,
        dev,
        test,
        discarded,
    }
}

/// Ranked lexicon entries from gold supertags: per key, the most frequent
/// categories covering `coverage` of its occurrences; keys by frequency.
/// Commas and the blank are left out.
pub fn gold_lexicon(records: &[CorpusRecord], kind: KeyKind, coverage: f64) -> RankedEntries {
    let mut counts: BTreeMap<String, BTreeMap<Category, usize>> = BTreeMap::new();
    for r in records {
        let Some(tags) = &r.supertags else { continue };
        for (t, c) in r.tokens.iter().zip(tags) {
            if t.is_blank || t.pos == "," {
                continue;
            }
            let key = match kind {
                KeyKind::Word => t.surface.clone(),
                KeyKind::Pos => t.pos.clone(),
            };
            *counts.entry(key).or_default().entry(c.clone()).or_default() += 1;
        }
    }
    let mut keyed: Vec<(usize, String, BTreeSet<Category>)> = counts
        .into_iter()
        .map(|(k, cats)| {
            let total: usize = cats.values().sum();
            let mut by_freq: Vec<(usize, Category)> = cats.into_iter().map(|(c, n)| (n, c)).collect();
            by_freq.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let mut covered = 0;
            let mut set = BTreeSet::new();
            for (n, c) in by_freq {
                if covered as f64 >= coverage * total as f64 {
                    break;
                }
                covered += n;
                set.insert(c);
            }
            (total, k, set)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    RankedEntries {
        kind,
        entries: keyed.into_iter().map(|(_, k, s)| (k, s)).collect(),
    }
}

/// Per-split statistics in the same layout as the loader's report.
pub fn manifest(g: &GeneratedCorpus, cfg: &CorpusConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed\t{}", cfg.seed);
    let _ = writeln!(out, "discarded\t{}", g.discarded);
    for (name, recs) in [("train", &g.train), ("dev", &g.dev), ("test", &g.test)] {
        let s = CorpusStats::of(recs);
        let _ = writeln!(out, "{name}\t{}\t{}\t{}\t{}", s.sentences, s.tokens, s.types, s.entities);
    }
    out
}
