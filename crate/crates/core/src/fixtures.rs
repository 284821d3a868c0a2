//! Small hand-built sentences, candidate sets and knowledge bases used by the
//! examples, tests and the CLI smoke commands.

use std::collections::BTreeSet;

use crate::categories::Category;
use crate::kb::KnowledgeBase;
use crate::parser::Token;

fn cats(items: &[&str]) -> BTreeSet<Category> {
    items.iter().map(|s| s.parse().expect("fixture category")).collect()
}

/// "Google acquired Nest in 2014".
pub fn acquisition_sentence() -> Vec<Token> {
    vec![
        Token::entity("Google", "NNP", "Google"),
        Token::word("acquired", "VBD"),
        Token::entity("Nest", "NNP", "Nest"),
        Token::word("in", "IN"),
        Token::entity("2014", "CD", "2014"),
    ]
}

/// The acquisition sentence with the object removed.
pub fn acquisition_cloze() -> Vec<Token> {
    let mut t = acquisition_sentence();
    t[2] = Token::blank();
    t
}

/// Candidate sets admitting the adjunct, sentence-modifier and PP-argument
/// analyses of the preposition.
pub fn acquisition_candidates() -> Vec<BTreeSet<Category>> {
    vec![
        cats(&["NP"]),
        cats(&["(S\\NP)/NP", "((S\\NP)/PP)/NP"]),
        cats(&["NP"]),
        cats(&["((S\\NP)\\(S\\NP))/NP", "(S\\S)/NP", "PP/NP"]),
        cats(&["NP"]),
    ]
}

/// Supertags of the three analyses, in the order adjunct, sentence modifier,
/// PP argument.
pub fn acquisition_supertags() -> [Vec<Category>; 3] {
    let seq = |v: [&str; 5]| v.iter().map(|s| s.parse().unwrap()).collect();
    [
        seq(["NP", "(S\\NP)/NP", "NP", "((S\\NP)\\(S\\NP))/NP", "NP"]),
        seq(["NP", "(S\\NP)/NP", "NP", "(S\\S)/NP", "NP"]),
        seq(["NP", "((S\\NP)/PP)/NP", "NP", "PP/NP", "NP"]),
    ]
}

/// "Google acquired _blank_ which was founded in PaloAlto".
pub fn relative_clause_cloze() -> Vec<Token> {
    vec![
        Token::entity("Google", "NNP", "Google"),
        Token::word("acquired", "VBD"),
        Token::blank(),
        Token::word("which", "WDT"),
        Token::word("was", "VBD"),
        Token::word("founded", "VBN"),
        Token::word("in", "IN"),
        Token::entity("PaloAlto", "NNP", "PaloAlto"),
    ]
}

/// Candidate sets allowing the relative clause to attach to the object NP or
/// to the verb phrase.
pub fn relative_clause_candidates() -> Vec<BTreeSet<Category>> {
    vec![
        cats(&["NP"]),
        cats(&["(S\\NP)/NP"]),
        cats(&["NP"]),
        cats(&["(NP\\NP)/(S\\NP)", "((S\\NP)\\(S\\NP))/(S\\NP)"]),
        cats(&["(S\\NP)/(S\\NP)"]),
        cats(&["S\\NP"]),
        cats(&["((S\\NP)\\(S\\NP))/NP"]),
        cats(&["NP"]),
    ]
}

pub const TOY_KB: &str = "\
[schema]
business.acquisition: acquiring_company, company_acquired, date
organization.founding: organization, founder, location, date

[types]
Google: organization.company
Nest: organization.company
DeepMind: organization.company
PaloAlto: location.city
London: location.city

[events]
m1\tbusiness.acquisition\tacquiring_company=Google;company_acquired=Nest;date=2014
m2\tbusiness.acquisition\tacquiring_company=Google;company_acquired=DeepMind;date=2014
f1\torganization.founding\torganization=Nest;location=PaloAlto;date=2010
f2\torganization.founding\torganization=DeepMind;location=London;date=2010
f3\torganization.founding\torganization=Google;location=MenloPark;date=1998
";

pub fn toy_kb() -> KnowledgeBase {
    KnowledgeBase::parse(TOY_KB, "toy").expect("toy KB parses")
}

/// The target logical form of the acquisition sentence with the object as
/// the answer slot, in canonical serialization.
pub const ACQUISITION_QUERY: &str = "TARGET(x)\nacquiring_company(e1, Google)\nbusiness.acquisition(e1)\ncompany_acquired(e1, x)\ndate(e1, 2014)";
