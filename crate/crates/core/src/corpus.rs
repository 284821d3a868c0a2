//! Cloze corpus records: text format, validation and statistics.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::categories::Category;
use crate::parser::{Token, BLANK_SURFACE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub tokens: Vec<Token>,
    pub blank: usize,
    pub answer: String,
    pub supertags: Option<Vec<Category>>,
    /// Entity mentions in the original sentence, the removed one included.
    pub entity_count: usize,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{origin}: {failed} of {total} records failed validation (first: {first})")]
    TooManyFailures { origin: String, failed: usize, total: usize, first: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("record {id}: {message}")]
pub struct RecordError {
    pub id: String,
    pub message: String,
}

impl CorpusRecord {
    /// Bucket used in reports: entity count clamped to 2..=4.
    pub fn bucket(&self) -> usize {
        self.entity_count.clamp(2, 4)
    }

    /// Entity ids mentioned outside the blank.
    pub fn other_entities(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for t in &self.tokens {
            if let Some(e) = &t.entity {
                if !seen.contains(&e.as_str()) {
                    seen.push(e.as_str());
                }
            }
        }
        seen
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let err = |message: String| RecordError {
            id: self.id.clone(),
            message,
        };
        let blanks: Vec<usize> = (0..self.tokens.len()).filter(|&i| self.tokens[i].is_blank).collect();
        if blanks.len() != 1 {
            return Err(err(format!("expected exactly one blank, found {}", blanks.len())));
        }
        if blanks[0] != self.blank {
            return Err(err(format!("blank index {} does not point at the blank token", self.blank)));
        }
        if self.answer.is_empty() {
            return Err(err("missing answer".into()));
        }
        if self.other_entities().contains(&self.answer.as_str()) {
            return Err(err(format!("answer {} also appears in the sentence", self.answer)));
        }
        if let Some(tags) = &self.supertags {
            if tags.len() != self.tokens.len() {
                return Err(err(format!("{} supertags for {} tokens", tags.len(), self.tokens.len())));
            }
        }
        let mentions = self.tokens.iter().filter(|t| t.entity.is_some()).count() + 1;
        if self.entity_count != mentions {
            return Err(err(format!("entity count {} but {} mentions", self.entity_count, mentions)));
        }
        Ok(())
    }

    /// One line of tab-separated `name=value` fields.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "id={}\tblank={}\tanswer={}\tentities={}\ttokens=",
            self.id, self.blank, self.answer, self.entity_count
        );
        let toks: Vec<String> = self
            .tokens
            .iter()
            .map(|t| format!("{}|{}|{}", t.surface, t.pos, t.entity.as_deref().unwrap_or("_")))
            .collect();
        out.push_str(&toks.join(" "));
        if let Some(tags) = &self.supertags {
            let tags: Vec<String> = tags.iter().map(|c| c.to_string()).collect();
            let _ = write!(out, "\tsupertags={}", tags.join(" "));
        }
        out
    }

    pub fn parse_line(line: &str, fallback_id: &str) -> Result<Self, RecordError> {
        let mut id = None;
        let mut blank = None;
        let mut answer = None;
        let mut entities = None;
        let mut tokens = None;
        let mut supertags = None;
        let err_id = |id: &Option<String>| id.clone().unwrap_or_else(|| fallback_id.to_string());
        for field in line.split('\t') {
            let Some((k, v)) = field.split_once('=') else {
                return Err(RecordError {
                    id: err_id(&id),
                    message: format!("malformed field {field:?}"),
                });
            };
            match k {
                "id" => id = Some(v.to_string()),
                "blank" => blank = Some(v.to_string()),
                "answer" => answer = Some(v.to_string()),
                "entities" => entities = Some(v.to_string()),
                "tokens" => tokens = Some(v.to_string()),
                "supertags" => supertags = Some(v.to_string()),
                _ => {}
            }
        }
        let rid = err_id(&id);
        let err = |message: String| RecordError {
            id: rid.clone(),
            message,
        };
        let need = |x: Option<String>, name: &str| x.ok_or_else(|| err(format!("missing field {name}")));
        let blank: usize = need(blank, "blank")?.parse().map_err(|_| err("blank is not an index".into()))?;
        let answer = need(answer, "answer")?;
        let entity_count: usize = need(entities, "entities")?
            .parse()
            .map_err(|_| err("entities is not a count".into()))?;
        let toks = parse_tokens(&need(tokens, "tokens")?).map_err(err)?;
        let supertags = match supertags {
            Some(s) => Some(
                s.split(' ')
                    .filter(|x| !x.is_empty())
                    .map(|c| c.parse::<Category>().map_err(|e| err(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let rec = CorpusRecord {
            id: rid.clone(),
            tokens: toks,
            blank,
            answer,
            supertags,
            entity_count,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Parses space-separated `surface|POS|entity` tokens, `_` meaning no entity.
pub fn parse_tokens(field: &str) -> Result<Vec<Token>, String> {
    let mut toks = Vec::new();
    for raw in field.split(' ').filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = raw.split('|').collect();
        let [surface, pos, entity] = parts[..] else {
            return Err(format!("token {raw:?} is not surface|pos|entity"));
        };
        toks.push(if surface == BLANK_SURFACE {
            Token::blank()
        } else if entity == "_" {
            Token::word(surface, pos)
        } else {
            Token::entity(surface, pos, entity)
        });
    }
    if toks.is_empty() {
        return Err("no tokens".into());
    }
    Ok(toks)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub types: usize,
    pub entities: usize,
}

impl CorpusStats {
    pub fn of(records: &[CorpusRecord]) -> Self {
        let mut types = BTreeSet::new();
        let mut entities = BTreeSet::new();
        let mut tokens = 0;
        for r in records {
            tokens += r.tokens.len();
            for t in &r.tokens {
                types.insert(t.surface.as_str());
                if let Some(e) = &t.entity {
                    entities.insert(e.as_str());
                }
            }
            entities.insert(r.answer.as_str());
        }
        CorpusStats {
            sentences: records.len(),
            tokens,
            types: types.len(),
            entities: entities.len(),
        }
    }

    pub fn header() -> String {
        format!("{:<8}{:>12}{:>12}{:>10}{:>10}", "", "Sentences", "Tokens", "Types", "Entities")
    }

    pub fn row(&self, name: &str) -> String {
        format!(
            "{:<8}{:>12}{:>12}{:>10}{:>10}",
            name, self.sentences, self.tokens, self.types, self.entities
        )
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n{}", Self::header(), self.row(""))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub rejected: Vec<RecordError>,
}

impl Corpus {
    pub fn stats(&self) -> CorpusStats {
        CorpusStats::of(&self.records)
    }

    pub fn render(records: &[CorpusRecord]) -> String {
        let mut out = String::new();
        for r in records {
            out.push_str(&r.render());
            out.push('\n');
        }
        out
    }

    /// Parses records, collecting invalid ones; more than 1% invalid aborts.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        let mut total = 0;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            total += 1;
            match CorpusRecord::parse_line(line, &format!("line{}", i + 1)) {
                Ok(r) => corpus.records.push(r),
                Err(e) => corpus.rejected.push(e),
            }
        }
        if corpus.rejected.len() * 100 > total {
            return Err(CorpusError::TooManyFailures {
                origin: origin.to_string(),
                failed: corpus.rejected.len(),
                total,
                first: corpus.rejected[0].to_string(),
            });
        }
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "id=s1\tblank=2\tanswer=Nest\tentities=3\ttokens=Google|NNP|Google acquired|VBD|_ _blank_|NNP|_ in|IN|_ 2014|CD|2014\tsupertags=NP (S\\NP)/NP NP ((S\\NP)\\(S\\NP))/NP NP";

    #[test]
    fn parse_and_render() {
        let r = CorpusRecord::parse_line(LINE, "x").unwrap();
        assert_eq!(r.id, "s1");
        assert_eq!(r.tokens.len(), 5);
        assert!(r.tokens[2].is_blank);
        assert_eq!(r.tokens[4].entity.as_deref(), Some("2014"));
        assert_eq!(r.supertags.as_ref().unwrap()[3].to_string(), "((S\\NP)\\(S\\NP))/NP");
        assert_eq!(r.render(), LINE);
        assert_eq!(r.bucket(), 3);
    }

    #[test]
    fn two_blanks_rejected_with_id() {
        let bad = LINE.replace("Google|NNP|Google", "_blank_|NNP|_").replace("entities=3", "entities=2");
        let e = CorpusRecord::parse_line(&bad, "x").unwrap_err();
        assert_eq!(e.id, "s1");
        assert!(e.message.contains("exactly one blank"));
    }

    #[test]
    fn answer_must_not_repeat() {
        let bad = LINE.replace("answer=Nest", "answer=Google");
        assert!(CorpusRecord::parse_line(&bad, "x").is_err());
    }

    #[test]
    fn failure_threshold() {
        let good: String = (0..99).map(|i| LINE.replace("id=s1", &format!("id=s{i}")) + "\n").collect();
        let one_bad = format!("{good}{}\n", LINE.replace("blank=2", "blank=0"));
        let c = Corpus::parse(&one_bad, "t").unwrap();
        assert_eq!(c.records.len(), 99);
        assert_eq!(c.rejected.len(), 1);
        let two_bad = format!("{one_bad}{}\n", LINE.replace("blank=2", "blank=1"));
        assert!(matches!(Corpus::parse(&two_bad, "t"), Err(CorpusError::TooManyFailures { failed: 2, .. })));
    }

    #[test]
    fn statistics() {
        let c = Corpus::parse(&format!("{LINE}\n{}\n", LINE.replace("id=s1", "id=s2")), "t").unwrap();
        let s = c.stats();
        assert_eq!(s.sentences, 2);
        assert_eq!(s.tokens, 10);
        assert_eq!(s.types, 5);
        assert_eq!(s.entities, 3);
        assert!(s.types <= s.tokens && s.entities <= s.tokens);
    }
}
