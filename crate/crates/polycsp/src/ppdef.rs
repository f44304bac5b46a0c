//! Primitive positive formulas as gadget graphs, pp-powers and pp-constructions.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::digraph::Digraph;
use crate::hom_search::{arc_consistency, find_homomorphism, hom_equivalent, hom_equivalent_pointed, is_core, DomainLists};

pub const POWER_LIMIT: u128 = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PpError {
    #[error("equality forces two distinct constants together")]
    ConstantClash,
    #[error("constant {0} is not a vertex of the target")]
    InvalidConstant(usize),
    #[error("free indices must be 0..d-1, each used once")]
    BadFreeIndices,
    #[error("pp-power needs an even number of free variables, got {0}")]
    OddArity(usize),
    #[error("pp-power would have {0} vertices")]
    SizeLimit(u128),
    #[error("constants are only meaningful over a core")]
    NotCore,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Free(usize),
    Exist,
    Const(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PPFormula {
    pub tags: Vec<Tag>,
    pub edges: Vec<(usize, usize)>,
    pub equalities: Vec<(usize, usize)>,
}

impl PPFormula {
    pub fn new(tags: Vec<Tag>, edges: Vec<(usize, usize)>, equalities: Vec<(usize, usize)>) -> Result<Self, PpError> {
        let mut free: Vec<usize> = tags
            .iter()
            .filter_map(|t| match t {
                Tag::Free(k) => Some(*k),
                _ => None,
            })
            .collect();
        free.sort_unstable();
        if free.iter().enumerate().any(|(i, &k)| i != k) {
            return Err(PpError::BadFreeIndices);
        }
        let n = tags.len();
        if let Some(&(u, v)) = edges.iter().chain(&equalities).find(|&&(u, v)| u >= n || v >= n) {
            return Err(PpError::Parse { line: 0, msg: format!("vertex {} out of range", u.max(v)) });
        }
        Ok(PPFormula { tags, edges, equalities })
    }

    /// `∃ z₁…z_{c-1}: x → z₁ → … → y`.
    pub fn directed_path(c: usize) -> Self {
        let mut tags = vec![Tag::Free(0)];
        tags.extend(std::iter::repeat(Tag::Exist).take(c.saturating_sub(1)));
        tags.push(Tag::Free(1));
        if c == 0 {
            return PPFormula::new(vec![Tag::Free(0), Tag::Free(1)], vec![], vec![(0, 1)]).unwrap();
        }
        let edges = (0..c).map(|i| (i, i + 1)).collect();
        PPFormula::new(tags, edges, vec![]).unwrap()
    }

    /// `x = y`.
    pub fn identity() -> Self {
        Self::directed_path(0)
    }

    /// Unsatisfiable binary formula; its pp-powers have no edges.
    pub fn bottom() -> Self {
        PPFormula::new(
            vec![Tag::Free(0), Tag::Free(1), Tag::Const(0), Tag::Const(1)],
            vec![],
            vec![(2, 3)],
        )
        .unwrap()
    }

    pub fn arity(&self) -> usize {
        self.tags.iter().filter(|t| matches!(t, Tag::Free(_))).count()
    }

    /// Distinct constant labels, ascending.
    pub fn constants(&self) -> Vec<usize> {
        self.tags
            .iter()
            .filter_map(|t| match t {
                Tag::Const(c) => Some(*c),
                _ => None,
            })
            .sorted()
            .dedup()
            .collect()
    }

    /// Replaces constant label `constants()[i]` by `targets[i]`.
    pub fn assign_constants(&self, targets: &[usize]) -> PPFormula {
        let labels = self.constants();
        assert_eq!(labels.len(), targets.len());
        let tags = self
            .tags
            .iter()
            .map(|t| match t {
                Tag::Const(c) => Tag::Const(targets[labels.binary_search(c).unwrap()]),
                t => *t,
            })
            .collect();
        PPFormula { tags, ..self.clone() }
    }

    /// Gadget text: vertex count, one tag line per vertex (`F k`, `X`, `C v`),
    /// then `u v` edges and `= u v` equalities. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, PpError> {
        let err = |line: usize, msg: String| PpError::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines.next().ok_or_else(|| err(0, "missing vertex count".into()))?;
        let n: usize = first.parse().map_err(|_| err(ln, format!("bad vertex count `{first}`")))?;
        let num = |ln: usize, s: &str| s.parse::<usize>().map_err(|_| err(ln, format!("bad number `{s}`")));
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing tag line".into()))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            tags.push(match parts[..] {
                ["F", k] => Tag::Free(num(ln, k)?),
                ["X"] => Tag::Exist,
                ["C", v] => Tag::Const(num(ln, v)?),
                _ => return Err(err(ln, format!("bad tag `{l}`"))),
            });
        }
        let mut edges = Vec::new();
        let mut equalities = Vec::new();
        for (ln, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts[..] {
                ["=", u, v] => equalities.push((num(ln, u)?, num(ln, v)?)),
                [u, v] => edges.push((num(ln, u)?, num(ln, v)?)),
                _ => return Err(err(ln, format!("bad line `{l}`"))),
            }
        }
        PPFormula::new(tags, edges, equalities)
    }
}

impl fmt::Display for PPFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.tags.len())?;
        for t in &self.tags {
            match t {
                Tag::Free(k) => writeln!(f, "F {k}")?,
                Tag::Exist => writeln!(f, "X")?,
                Tag::Const(c) => writeln!(f, "C {c}")?,
            }
        }
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        for (u, v) in &self.equalities {
            writeln!(f, "= {u} {v}")?;
        }
        Ok(())
    }
}

/// Gadget with equality classes contracted.
struct Contracted {
    graph: Digraph,
    lists: DomainLists,
    free: Vec<usize>,
}

fn contract(phi: &PPFormula, a: &Digraph) -> Result<Contracted, PpError> {
    let n = phi.tags.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v) in &phi.equalities {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru.max(rv)] = ru.min(rv);
    }
    let mut class = vec![usize::MAX; n];
    let mut k = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if class[r] == usize::MAX {
            class[r] = k;
            k += 1;
        }
        class[v] = class[r];
    }
    let mut constant = vec![None; k];
    let mut free = vec![0; phi.arity()];
    // a clash makes the formula unsatisfiable whatever the target
    for (v, t) in phi.tags.iter().enumerate() {
        match *t {
            Tag::Const(c) => {
                match constant[class[v]] {
                    Some(d) if d != c => return Err(PpError::ConstantClash),
                    _ => constant[class[v]] = Some(c),
                }
            }
            Tag::Free(i) => free[i] = class[v],
            Tag::Exist => {}
        }
    }
    if let Some(c) = constant.iter().flatten().find(|&&c| c >= a.n()) {
        return Err(PpError::InvalidConstant(*c));
    }
    let graph = Digraph::from_edges(k, phi.edges.iter().map(|&(u, v)| (class[u], class[v]))).unwrap();
    let mut lists = DomainLists::full(k, a.n());
    for (x, c) in constant.iter().enumerate() {
        if let Some(c) = c {
            lists.restrict(x, &[*c]);
        }
    }
    Ok(Contracted { graph, lists, free })
}

/// All tuples of values of the free variables satisfying `phi` in `a`.
pub fn evaluate(phi: &PPFormula, a: &Digraph) -> Result<BTreeSet<Vec<usize>>, PpError> {
    let g = contract(phi, a)?;
    let mut out = BTreeSet::new();
    let mut distinct: Vec<usize> = g.free.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut values = vec![0; g.lists.n()];
    extend(&g, a, &distinct, g.lists.clone(), &mut values, &mut out);
    Ok(out)
}

fn extend(
    g: &Contracted,
    a: &Digraph,
    todo: &[usize],
    lists: DomainLists,
    values: &mut [usize],
    out: &mut BTreeSet<Vec<usize>>,
) {
    let Some(lists) = arc_consistency(&g.graph, a, lists) else { return };
    match todo.split_first() {
        None => {
            if find_homomorphism(&g.graph, a, lists).is_some() {
                out.insert(g.free.iter().map(|&x| values[x]).collect());
            }
        }
        Some((&x, rest)) => {
            for v in lists.values(x) {
                let mut l = lists.clone();
                l.set_singleton(x, v);
                values[x] = v;
                extend(g, a, rest, l, values, out);
            }
        }
    }
}

/// Digraph on `V(a)^k` (row-major) with `s → t` iff `(s, t)` satisfies `phi`.
pub fn pp_power(a: &Digraph, phi: &PPFormula) -> Result<Digraph, PpError> {
    let d = phi.arity();
    if d % 2 != 0 {
        return Err(PpError::OddArity(d));
    }
    let k = d / 2;
    let size = (a.n() as u128).pow(k as u32);
    if size > POWER_LIMIT {
        return Err(PpError::SizeLimit(size));
    }
    let rel = match evaluate(phi, a) {
        Err(PpError::ConstantClash) => BTreeSet::new(),
        r => r?,
    };
    let index = |t: &[usize]| t.iter().fold(0, |acc, &x| acc * a.n() + x);
    Ok(Digraph::from_edges(size as usize, rel.iter().map(|t| (index(&t[..k]), index(&t[k..])))).unwrap())
}

/// `b` pp-constructs `a` through `phi`: the pp-power is homomorphically equivalent to `a`.
/// Formulas with constants need `b` to be a core.
pub fn verify_pp_construction(b: &Digraph, phi: &PPFormula, a: &Digraph) -> Result<bool, PpError> {
    if !phi.constants().is_empty() && !is_core(b) {
        return Err(PpError::NotCore);
    }
    verify_pp_construction_unchecked(b, phi, a)
}

/// [`verify_pp_construction`] without the core check on `b`.
pub fn verify_pp_construction_unchecked(b: &Digraph, phi: &PPFormula, a: &Digraph) -> Result<bool, PpError> {
    Ok(hom_equivalent(&pp_power(b, phi)?, a))
}

/// Tries every injective placement of the constant labels of `phi` on `V(b)`.
/// Returns the first placement under which `b` pp-constructs `a`.
pub fn verify_with_constant_search(b: &Digraph, phi: &PPFormula, a: &Digraph) -> Result<Option<Vec<usize>>, PpError> {
    search_constants(b, phi, |p| Ok(hom_equivalent(p, a)))
}

/// As [`verify_with_constant_search`], comparing against `a` with the vertices
/// `points` named by constants: some vertices of the pp-power must play their role.
pub fn verify_pointed_with_constant_search(
    b: &Digraph,
    phi: &PPFormula,
    a: &Digraph,
    points: &[usize],
) -> Result<Option<Vec<usize>>, PpError> {
    search_constants(b, phi, |p| {
        Ok((0..points.len())
            .map(|_| 0..p.n())
            .multi_cartesian_product()
            .any(|cp| hom_equivalent_pointed(p, &cp, a, points)))
    })
}

fn search_constants(
    b: &Digraph,
    phi: &PPFormula,
    mut accept: impl FnMut(&Digraph) -> Result<bool, PpError>,
) -> Result<Option<Vec<usize>>, PpError> {
    let labels = phi.constants();
    if !labels.is_empty() && !is_core(b) {
        return Err(PpError::NotCore);
    }
    for placement in (0..b.n()).permutations(labels.len()) {
        let p = pp_power(b, &phi.assign_constants(&placement))?;
        if accept(&p)? {
            return Ok(Some(placement));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_on_c6() {
        let rel = evaluate(&PPFormula::directed_path(2), &Digraph::cycle(6)).unwrap();
        assert_eq!(rel.len(), 6);
        assert!(rel.iter().all(|t| t[1] == (t[0] + 2) % 6));
        let p = pp_power(&Digraph::cycle(6), &PPFormula::directed_path(2)).unwrap();
        assert_eq!(p.components().len(), 2);
        assert!(verify_pp_construction(&Digraph::cycle(6), &PPFormula::directed_path(2), &Digraph::cycle(3)).unwrap());
    }

    #[test]
    fn identity_and_bottom() {
        let a = Digraph::path(3);
        let p = pp_power(&a, &PPFormula::identity()).unwrap();
        assert_eq!(p.edge_count(), 4);
        assert!((0..4).all(|v| p.has_edge(v, v)));
        assert_eq!(evaluate(&PPFormula::bottom(), &a), Err(PpError::ConstantClash));
        assert_eq!(pp_power(&a, &PPFormula::bottom()).unwrap().edge_count(), 0);
    }

    #[test]
    fn gadget_roundtrip() {
        let text = "4\nF 0\nX\nC 2\nF 1\n0 1\n1 3\n= 1 2\n";
        let phi = PPFormula::parse(text).unwrap();
        assert_eq!(phi.to_string(), text);
        assert_eq!(phi.constants(), vec![2]);
        assert!(matches!(PPFormula::parse("2\nF 0\nF 2\n"), Err(PpError::BadFreeIndices)));
    }
}
