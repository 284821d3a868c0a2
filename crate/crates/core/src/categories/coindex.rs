use std::fmt;

use super::category::{Atom, Category};

/// A category whose atomic positions carry head variables.
///
/// `heads[i]` is the variable of the i-th atom in rendering order. Variables
/// are numbered 0.. in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoindexedCategory {
    pub category: Category,
    pub heads: Vec<u32>,
    pub root_head: u32,
}

impl CoindexedCategory {
    pub fn variable_count(&self) -> u32 {
        self.heads.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Head variables of the result and argument parts of a complex category.
    pub fn split(&self) -> Option<(&[u32], &[u32])> {
        let r = self.category.result()?;
        let n = r.atom_count();
        Some((&self.heads[..n], &self.heads[n..]))
    }

    fn from_raw(category: Category, raw: Vec<u32>) -> Self {
        let heads = renumber(&raw);
        let root_head = heads[0];
        CoindexedCategory { category, heads, root_head }
    }
}

impl fmt::Display for CoindexedCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut idx = 0;
        write_indexed(&self.category, &self.heads, &mut idx, f, false)
    }
}

fn var_name(v: u32) -> String {
    const NAMES: [&str; 6] = ["x", "y", "z", "w", "u", "v"];
    NAMES.get(v as usize).map_or_else(|| format!("v{v}"), |s| s.to_string())
}

fn write_indexed(
    c: &Category,
    heads: &[u32],
    idx: &mut usize,
    f: &mut fmt::Formatter<'_>,
    paren: bool,
) -> fmt::Result {
    match c {
        Category::Atomic(a) => {
            let v = heads[*idx];
            *idx += 1;
            write!(f, "{}_{}", a.as_str(), var_name(v))
        }
        Category::Complex(r, s, a) => {
            if paren {
                f.write_str("(")?;
            }
            write_indexed(r, heads, idx, f, !r.is_atomic())?;
            write!(f, "{}", s.as_char())?;
            write_indexed(a, heads, idx, f, !a.is_atomic())?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

fn renumber(raw: &[u32]) -> Vec<u32> {
    let mut map: Vec<(u32, u32)> = Vec::new();
    raw.iter()
        .map(|v| match map.iter().find(|(k, _)| k == v) {
            Some((_, n)) => *n,
            None => {
                let n = map.len() as u32;
                map.push((*v, n));
                n
            }
        })
        .collect()
}

fn assign_default(c: &Category, next: &mut u32) -> Vec<u32> {
    match c {
        Category::Atomic(_) => {
            let v = *next;
            *next += 1;
            vec![v]
        }
        Category::Complex(r, _, a) => {
            let mut vars = assign_default(r, next);
            if r == a {
                vars.extend_from_within(..);
            } else {
                vars.extend(assign_default(a, next));
            }
            vars
        }
    }
}

/// Positions (in atom order) of arguments along the spine that are bare `PP`.
fn spine_pp_positions(c: &Category) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = c;
    while let Category::Complex(r, _, a) = cur {
        if a.is_atom(Atom::PP) {
            out.push(r.atom_count());
        }
        cur = r;
    }
    out
}

/// `(S|N)|(S|N)` or `(S|NP)|(S|NP)`: auxiliary and control verbs share it.
fn is_aux_control_shape(c: &Category) -> bool {
    let (Some(r), Some(a)) = (c.result(), c.argument()) else {
        return false;
    };
    let verbal = |x: &Category| {
        x.result().is_some_and(|s| s.is_atom(Atom::S))
            && x.argument().is_some_and(|n| n.is_atom(Atom::N) || n.is_atom(Atom::NP))
    };
    r == a && verbal(r)
}

/// Co-indexations of a category, default first.
///
/// The default makes the result head the functor head, unifies both halves of
/// modifier categories `X|X`, and binds `PP` arguments of `S`-rooted functors
/// to the `S` head. The auxiliary/control shape additionally yields the
/// distinct-head variant `(S_x\N_y)/(S_z\N_y)`.
pub fn coindex(c: &Category) -> Vec<CoindexedCategory> {
    let mut next = 0;
    let mut raw = assign_default(c, &mut next);
    if c.root_atom() == Atom::S {
        let root = raw[0];
        for pos in spine_pp_positions(c) {
            raw[pos] = root;
        }
    }
    let default = CoindexedCategory::from_raw(c.clone(), raw.clone());
    let mut out = vec![default];
    if is_aux_control_shape(c) {
        // Argument half: its S gets a fresh variable, its N keeps the subject.
        let half = c.result().unwrap().atom_count();
        let mut control = raw;
        control[half] = next;
        let variant = CoindexedCategory::from_raw(c.clone(), control);
        if !out.contains(&variant) {
            out.push(variant);
        }
    }
    out
}
