use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Atomic CCG categories. No morphological features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    S,
    NP,
    N,
    PP,
    Conj,
    Comma,
}

impl Atom {
    pub const ALL: [Atom; 6] = [Atom::S, Atom::NP, Atom::N, Atom::PP, Atom::Conj, Atom::Comma];

    pub fn as_str(self) -> &'static str {
        match self {
            Atom::S => "S",
            Atom::NP => "NP",
            Atom::N => "N",
            Atom::PP => "PP",
            Atom::Conj => "conj",
            Atom::Comma => ",",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slash {
    /// `X/Y`: argument to the right.
    Forward,
    /// `X\Y`: argument to the left.
    Backward,
}

impl Slash {
    pub fn as_char(self) -> char {
        match self {
            Slash::Forward => '/',
            Slash::Backward => '\\',
        }
    }
}

/// A CCG syntactic type. Children are shared so cloning is cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atomic(Atom),
    Complex(Arc<Category>, Slash, Arc<Category>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid category {input:?} at offset {offset}: {message}")]
pub struct CategoryParseError {
    pub input: String,
    pub offset: usize,
    pub message: String,
}

impl Category {
    pub fn atom(a: Atom) -> Self {
        Category::Atomic(a)
    }

    pub fn s() -> Self {
        Category::Atomic(Atom::S)
    }

    pub fn np() -> Self {
        Category::Atomic(Atom::NP)
    }

    pub fn n() -> Self {
        Category::Atomic(Atom::N)
    }

    pub fn pp() -> Self {
        Category::Atomic(Atom::PP)
    }

    pub fn conj() -> Self {
        Category::Atomic(Atom::Conj)
    }

    pub fn complex(result: Category, slash: Slash, argument: Category) -> Self {
        Category::Complex(Arc::new(result), slash, Arc::new(argument))
    }

    pub fn fwd(result: Category, argument: Category) -> Self {
        Self::complex(result, Slash::Forward, argument)
    }

    pub fn back(result: Category, argument: Category) -> Self {
        Self::complex(result, Slash::Backward, argument)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Category::Atomic(_))
    }

    pub fn is_atom(&self, atom: Atom) -> bool {
        matches!(self, Category::Atomic(a) if *a == atom)
    }

    pub fn as_atom(&self) -> Option<Atom> {
        match self {
            Category::Atomic(a) => Some(*a),
            Category::Complex(..) => None,
        }
    }

    pub fn result(&self) -> Option<&Category> {
        match self {
            Category::Complex(r, _, _) => Some(r),
            Category::Atomic(_) => None,
        }
    }

    pub fn argument(&self) -> Option<&Category> {
        match self {
            Category::Complex(_, _, a) => Some(a),
            Category::Atomic(_) => None,
        }
    }

    pub fn slash(&self) -> Option<Slash> {
        match self {
            Category::Complex(_, s, _) => Some(*s),
            Category::Atomic(_) => None,
        }
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Category::Atomic(_) => 0,
            Category::Complex(r, _, a) => 1 + r.depth().max(a.depth()),
        }
    }

    /// Number of arguments along the result spine.
    pub fn arity(&self) -> usize {
        match self {
            Category::Atomic(_) => 0,
            Category::Complex(r, _, _) => 1 + r.arity(),
        }
    }

    /// The atom at the end of the result spine.
    pub fn root_atom(&self) -> Atom {
        match self {
            Category::Atomic(a) => *a,
            Category::Complex(r, _, _) => r.root_atom(),
        }
    }

    /// Number of atomic positions, in rendering order.
    pub fn atom_count(&self) -> usize {
        match self {
            Category::Atomic(_) => 1,
            Category::Complex(r, _, a) => r.atom_count() + a.atom_count(),
        }
    }

    /// `X|X` categories (adjuncts): result and argument are identical.
    pub fn is_modifier(&self) -> bool {
        match self {
            Category::Complex(r, _, a) => r == a,
            Category::Atomic(_) => false,
        }
    }

    /// Arguments in combination order (outermost first) together with their
    /// slash direction.
    pub fn arguments(&self) -> Vec<(Slash, &Category)> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Category::Complex(r, s, a) = cur {
            out.push((*s, a.as_ref()));
            cur = r;
        }
        out
    }

    pub fn parse(s: &str) -> Result<Category, CategoryParseError> {
        let mut p = CatParser { input: s, pos: 0 };
        p.skip_ws();
        let c = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(c)
    }

    /// Parses a comma-separated list of categories as used in lexicon files.
    ///
    /// The comma atom is also written `,`, so a comma only separates entries
    /// when the text before it already forms a complete category.
    pub fn parse_list(s: &str) -> Result<Vec<Category>, CategoryParseError> {
        let mut out = Vec::new();
        let mut seg_start = 0;
        let mut depth = 0i32;
        let bytes = s.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b',' if depth == 0 => {
                    let seg = s[seg_start..i].trim();
                    let complete = !seg.is_empty() && !seg.ends_with(['/', '\\', '(']);
                    if complete {
                        out.push(Category::parse(seg).map_err(|e| CategoryParseError {
                            offset: e.offset + seg_start,
                            input: s.to_string(),
                            message: e.message,
                        })?);
                        seg_start = i + 1;
                    }
                }
                _ => {}
            }
            i += 1;
        }
        let seg = s[seg_start..].trim();
        if !seg.is_empty() {
            out.push(Category::parse(seg).map_err(|e| CategoryParseError {
                offset: e.offset + seg_start,
                input: s.to_string(),
                message: e.message,
            })?);
        }
        Ok(out)
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Atomic(a) => f.write_str(a.as_str()),
            Category::Complex(..) => write!(f, "({})", self),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Atomic(a) => f.write_str(a.as_str()),
            Category::Complex(r, s, a) => {
                r.fmt_child(f)?;
                write!(f, "{}", s.as_char())?;
                a.fmt_child(f)
            }
        }
    }
}

impl FromStr for Category {
    type Err = CategoryParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::parse(s)
    }
}

struct CatParser<'a> {
    input: &'a str,
    pos: usize,
}

impl CatParser<'_> {
    fn error(&self, message: &str) -> CategoryParseError {
        CategoryParseError {
            input: self.input.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    // expr := primary (slash primary)*   (left-associative)
    fn expr(&mut self) -> Result<Category, CategoryParseError> {
        let mut lhs = self.primary()?;
        loop {
            self.skip_ws();
            let slash = match self.rest().chars().next() {
                Some('/') => Slash::Forward,
                Some('\\') => Slash::Backward,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            self.skip_ws();
            let rhs = self.primary()?;
            lhs = Category::complex(lhs, slash, rhs);
        }
    }

    fn primary(&mut self) -> Result<Category, CategoryParseError> {
        let rest = self.rest();
        if rest.starts_with('(') {
            self.pos += 1;
            self.skip_ws();
            let inner = self.expr()?;
            self.skip_ws();
            if !self.rest().starts_with(')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            return Ok(inner);
        }
        // Longest match first: NP before N.
        for (text, atom) in [
            ("conj", Atom::Conj),
            ("NP", Atom::NP),
            ("PP", Atom::PP),
            ("N", Atom::N),
            ("S", Atom::S),
            (",", Atom::Comma),
        ] {
            if rest.starts_with(text) {
                self.pos += text.len();
                return Ok(Category::Atomic(atom));
            }
        }
        if rest.is_empty() {
            Err(self.error("unexpected end of input"))
        } else {
            Err(self.error("expected an atom or '('"))
        }
    }
}

/// Every category over the atom inventory up to the given depth. Exponential;
/// meant for exhaustive tests at small depth.
pub fn enumerate_categories(max_depth: usize, atoms: &[Atom]) -> Vec<Category> {
    let mut by_depth: Vec<Vec<Category>> = vec![atoms.iter().map(|a| Category::atom(*a)).collect()];
    for d in 1..=max_depth {
        let mut layer = Vec::new();
        for dr in 0..d {
            for da in 0..d {
                if dr.max(da) != d - 1 {
                    continue;
                }
                for r in &by_depth[dr] {
                    for a in &by_depth[da] {
                        for s in [Slash::Forward, Slash::Backward] {
                            layer.push(Category::complex(r.clone(), s, a.clone()));
                        }
                    }
                }
            }
        }
        by_depth.push(layer);
    }
    by_depth.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Category {
        s.parse().unwrap()
    }

    #[test]
    fn transitive_verb_structure() {
        let expected = Category::fwd(Category::back(Category::s(), Category::np()), Category::np());
        assert_eq!(c("(S\\NP)/NP"), expected);
        assert_eq!(expected.to_string(), "(S\\NP)/NP");
        assert_eq!(expected.arity(), 2);
        assert_eq!(expected.depth(), 2);
    }

    #[test]
    fn atomic_np() {
        assert_eq!(c("NP"), Category::Atomic(Atom::NP));
        assert_eq!(c("N"), Category::Atomic(Atom::N));
        assert_eq!(c(","), Category::Atomic(Atom::Comma));
        assert_eq!(c("conj"), Category::Atomic(Atom::Conj));
    }

    #[test]
    fn adjunct_preposition_shape() {
        let cat = c("((S\\NP)\\(S\\NP))/NP");
        let vp = Category::back(Category::s(), Category::np());
        let expected = Category::fwd(Category::back(vp.clone(), vp), Category::np());
        assert_eq!(cat, expected);
        assert_eq!(cat.depth(), 3);
        assert!(cat.result().unwrap().is_modifier());
    }

    #[test]
    fn left_association_without_parentheses() {
        assert_eq!(c("S\\NP/NP"), c("(S\\NP)/NP"));
        assert_eq!(c("S/NP/NP"), c("(S/NP)/NP"));
    }

    #[test]
    fn malformed_strings_report_offsets() {
        let e = Category::parse("(S\\NP").unwrap_err();
        assert_eq!(e.offset, 5);
        let e = Category::parse("S\\").unwrap_err();
        assert_eq!(e.offset, 2);
        let e = Category::parse("S\\XP").unwrap_err();
        assert_eq!(e.offset, 2);
        let e = Category::parse("NP)").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(Category::parse("").is_err());
    }

    #[test]
    fn list_parsing_handles_comma_atom() {
        let cats = Category::parse_list("conj,,,(NP\\NP)/NP").unwrap();
        assert_eq!(cats, vec![c("conj"), c(","), c("(NP\\NP)/NP")]);
        let cats = Category::parse_list("(NP\\NP)/,,NP").unwrap();
        assert_eq!(cats, vec![c("(NP\\NP)/,"), c("NP")]);
        let cats = Category::parse_list(",").unwrap();
        assert_eq!(cats, vec![c(",")]);
    }

    #[test]
    fn exhaustive_round_trip_to_depth_two() {
        let all = enumerate_categories(2, &Atom::ALL);
        for cat in &all {
            let text = cat.to_string();
            assert_eq!(&Category::parse(&text).unwrap(), cat, "{text}");
        }
    }

    #[test]
    fn depth_five_round_trip_on_reduced_inventory() {
        // Full enumeration to depth 5 is astronomically large; a two-atom
        // inventory keeps the shapes exhaustive up to depth 3.
        let all = enumerate_categories(3, &[Atom::S, Atom::NP]);
        for cat in &all {
            assert_eq!(&Category::parse(&cat.to_string()).unwrap(), cat);
        }
    }
}
