//! Indicator structures and satisfaction of minor conditions.
//!
//! A homomorphism from `Ind(Σ, H)` to `H` is the same thing as a family of
//! polymorphisms of `H` satisfying `Σ`. In level-wise mode only argument tuples
//! whose entries share a level are considered.

use thiserror::Error;

use crate::conditions::MinorCondition;
use crate::digraph::{Digraph, DigraphError};
use crate::hom_search::{find_homomorphism, is_core, is_core_tree, DomainLists};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndicatorError {
    #[error("level-wise mode needs a balanced digraph")]
    NotBalanced,
    #[error("indicator too large: {0} terms or instances exceed the limit")]
    SizeLimit(u128),
}

pub const DEFAULT_SIZE_LIMIT: usize = 5_000_000;
/// Largest level handled by the set-indexed construction.
const MAX_SET_GROUP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Levelwise,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Yes(Witness),
    No,
    Inconclusive,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Yes(_) => "Yes",
            Verdict::No => "No",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    /// Seed `f(u,…,u) = u`. `None` decides by testing whether the target is a core.
    pub idempotent: Option<bool>,
    pub size_limit: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { idempotent: None, size_limit: DEFAULT_SIZE_LIMIT }
    }
}

/// Vertices of the target split into groups; argument tuples never mix groups.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Groups {
    members: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    pos: Vec<usize>,
}

impl Groups {
    fn single(m: usize) -> Self {
        Groups { members: vec![(0..m).collect()], group_of: vec![0; m], pos: (0..m).collect() }
    }

    fn by_level(h: &Digraph) -> Result<Self, IndicatorError> {
        let lm = h.levels_per_component().map_err(|e| match e {
            DigraphError::NotBalanced => IndicatorError::NotBalanced,
            _ => IndicatorError::NotBalanced,
        })?;
        let mut members = vec![Vec::new(); lm.height + 1];
        let mut pos = vec![0; h.n()];
        for (v, &l) in lm.levels.iter().enumerate() {
            pos[v] = members[l].len();
            members[l].push(v);
        }
        Ok(Groups { members, group_of: lm.levels, pos })
    }

    fn common(&self, args: &[usize]) -> Option<usize> {
        let g = self.group_of[*args.first()?];
        args.iter().all(|&a| self.group_of[a] == g).then_some(g)
    }
}

/// Index space of the terms of one symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Space {
    /// Tuples, grouped; `offset[g]` starts the block of group `g`.
    Tuples { arity: usize, offset: Vec<usize> },
    /// Sets of at most `arity` elements of one group, as bitmasks.
    Sets { arity: usize, offset: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TermSpace {
    groups: Groups,
    space: Space,
}

impl TermSpace {
    fn count(&self) -> usize {
        match &self.space {
            Space::Tuples { offset, .. } | Space::Sets { offset, .. } => *offset.last().unwrap(),
        }
    }

    fn index(&self, args: &[usize]) -> Option<usize> {
        let g = self.groups.common(args)?;
        match &self.space {
            Space::Tuples { arity, offset } => {
                if args.len() != *arity {
                    return None;
                }
                let size = self.groups.members[g].len();
                let mut idx = 0;
                for &a in args.iter().rev() {
                    idx = idx * size + self.groups.pos[a];
                }
                Some(offset[g] + idx)
            }
            Space::Sets { arity, offset } => {
                if args.len() != *arity {
                    return None;
                }
                Some(offset[g] + self.mask(args))
            }
        }
    }

    fn mask(&self, args: &[usize]) -> usize {
        args.iter().fold(0, |m, &a| m | 1 << self.groups.pos[a])
    }

    /// Argument tuple of a term index, if the index names a valid term.
    fn args(&self, index: usize) -> Option<Vec<usize>> {
        let (offset, arity) = match &self.space {
            Space::Tuples { arity, offset } | Space::Sets { arity, offset } => (offset, *arity),
        };
        let g = offset.partition_point(|&o| o <= index).checked_sub(1)?;
        let mem = &self.groups.members[g];
        let mut rest = index - offset[g];
        match self.space {
            Space::Tuples { .. } => Some(
                (0..arity)
                    .map(|_| {
                        let v = mem[rest % mem.len()];
                        rest /= mem.len();
                        v
                    })
                    .collect(),
            ),
            Space::Sets { .. } => {
                let set: Vec<usize> = (0..mem.len()).filter(|i| rest >> i & 1 == 1).map(|i| mem[i]).collect();
                if set.is_empty() || set.len() > arity {
                    return None;
                }
                let mut t = set.clone();
                t.resize(arity, *set.last().unwrap());
                Some(t)
            }
        }
    }
}

/// One operation of a witness, defined on every term of its index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationTable {
    pub symbol: String,
    pub arity: usize,
    terms: TermSpace,
    values: Vec<u32>,
}

const UNDEF: u32 = u32::MAX;

impl OperationTable {
    /// Value at `args`, or `None` outside the table's domain (mixed levels in level-wise mode).
    pub fn get(&self, args: &[usize]) -> Option<usize> {
        let i = self.terms.index(args)?;
        let v = *self.values.get(i)?;
        (v != UNDEF).then_some(v as usize)
    }

    /// Totally symmetric tables are stored per argument set.
    pub fn is_set_indexed(&self) -> bool {
        matches!(self.terms.space, Space::Sets { .. })
    }

    /// `(args, value)` for every stored entry; set-indexed tables list one tuple per set.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<usize>, usize)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != UNDEF)
            .filter_map(|(i, &v)| Some((self.terms.args(i)?, v as usize)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub tables: Vec<OperationTable>,
}

impl Witness {
    pub fn table(&self, symbol: &str) -> Option<&OperationTable> {
        self.tables.iter().find(|t| t.symbol == symbol)
    }
}

/// `Ind(Σ, H)` with the term class of every term.
#[derive(Debug, Clone)]
pub struct IndicatorStructure {
    pub graph: Digraph,
    pub preset_lists: DomainLists,
    symbols: Vec<String>,
    spaces: Vec<TermSpace>,
    offsets: Vec<usize>,
    class_of: Vec<u32>,
}

impl IndicatorStructure {
    /// Vertex holding the term `symbol(args)`.
    pub fn class(&self, symbol: usize, args: &[usize]) -> Option<usize> {
        let i = self.spaces[symbol].index(args)?;
        let c = self.class_of[self.offsets[symbol] + i];
        (c != UNDEF).then_some(c as usize)
    }

    /// Terms merged into vertex `v`, as `(symbol, args)`.
    pub fn vertex_tags(&self, v: usize) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (s, sp) in self.spaces.iter().enumerate() {
            for i in 0..sp.count() {
                if self.class_of[self.offsets[s] + i] == v as u32 {
                    if let Some(a) = sp.args(i) {
                        out.push((s, a));
                    }
                }
            }
        }
        out
    }

    fn witness(&self, hom: &[usize]) -> Witness {
        let tables = self
            .spaces
            .iter()
            .enumerate()
            .map(|(s, sp)| {
                let off = self.offsets[s];
                let values = (0..sp.count())
                    .map(|i| match self.class_of[off + i] {
                        UNDEF => UNDEF,
                        c => hom[c as usize] as u32,
                    })
                    .collect();
                let arity = match sp.space {
                    Space::Tuples { arity, .. } | Space::Sets { arity, .. } => arity,
                };
                OperationTable { symbol: self.symbols[s].clone(), arity, terms: sp.clone(), values }
            })
            .collect();
        Witness { tables }
    }
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] as usize != x {
            let p = self.0[x] as usize;
            self.0[x] = self.0[p];
            x = p;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            self.0[hi] = lo as u32;
        }
    }
}

/// Odometer over `len` positions, position `i` ranging over `0..radix[i]`.
fn odometer(radix: &[usize], mut f: impl FnMut(&[usize])) {
    if radix.iter().any(|&r| r == 0) {
        return;
    }
    let mut cur = vec![0; radix.len()];
    loop {
        f(&cur);
        let mut i = 0;
        loop {
            if i == cur.len() {
                return;
            }
            cur[i] += 1;
            if cur[i] < radix[i] {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

fn too_big(n: u128, limit: usize) -> Result<(), IndicatorError> {
    if n > limit as u128 {
        Err(IndicatorError::SizeLimit(n))
    } else {
        Ok(())
    }
}

pub fn build_indicator(
    c: &MinorCondition,
    h: &Digraph,
    idempotent: bool,
    levelwise: bool,
) -> Result<IndicatorStructure, IndicatorError> {
    build_indicator_with(c, h, idempotent, levelwise, DEFAULT_SIZE_LIMIT)
}

pub fn build_indicator_with(
    c: &MinorCondition,
    h: &Digraph,
    idempotent: bool,
    levelwise: bool,
    limit: usize,
) -> Result<IndicatorStructure, IndicatorError> {
    let groups = if levelwise { Groups::by_level(h)? } else { Groups::single(h.n()) };
    if c.implicit_symmetry() {
        return build_set_indexed(c, h, groups, idempotent, limit);
    }
    let m = h.n();
    let mut spaces = Vec::new();
    let mut offsets = vec![0usize];
    for s in &c.symbols {
        let mut offset = vec![0usize];
        let mut total: u128 = 0;
        for mem in &groups.members {
            total += (mem.len() as u128).pow(s.arity as u32);
            too_big(total, limit)?;
            offset.push(total as usize);
        }
        spaces.push(TermSpace { groups: groups.clone(), space: Space::Tuples { arity: s.arity, offset } });
        let next = *offsets.last().unwrap() as u128 + total;
        too_big(next, limit)?;
        offsets.push(next as usize);
    }
    let total = *offsets.last().unwrap();
    let mut uf = UnionFind((0..total as u32).collect());

    // identities, instantiated over all admissible assignments
    for id in &c.identities {
        let comp = side_components(id.vars, &id.left.args, &id.right.args);
        let ncomp = comp.iter().copied().max().map_or(0, |x| x + 1);
        let ng = groups.members.len();
        let mut work: u128 = 0;
        let mut overflow = false;
        odometer(&vec![ng; ncomp], |gsel| {
            if overflow {
                return;
            }
            let radix: Vec<usize> = comp.iter().map(|&k| groups.members[gsel[k]].len()).collect();
            work += radix.iter().map(|&r| r as u128).product::<u128>();
            if work > 8 * limit as u128 {
                overflow = true;
                return;
            }
            let (ls, rs) = (&spaces[id.left.symbol], &spaces[id.right.symbol]);
            let (lo, ro) = (offsets[id.left.symbol], offsets[id.right.symbol]);
            let mut la = vec![0; id.left.args.len()];
            let mut ra = vec![0; id.right.args.len()];
            odometer(&radix, |sel| {
                for (slot, &v) in la.iter_mut().zip(&id.left.args) {
                    *slot = groups.members[gsel[comp[v]]][sel[v]];
                }
                for (slot, &v) in ra.iter_mut().zip(&id.right.args) {
                    *slot = groups.members[gsel[comp[v]]][sel[v]];
                }
                if let (Some(a), Some(b)) = (ls.index(&la), rs.index(&ra)) {
                    uf.union(lo + a, ro + b);
                }
            });
        });
        if overflow {
            return Err(IndicatorError::SizeLimit(work));
        }
    }

    let mut class_of = vec![UNDEF; total];
    let mut classes = 0u32;
    for t in 0..total {
        let r = uf.find(t);
        if class_of[r] == UNDEF {
            class_of[r] = classes;
            classes += 1;
        }
        class_of[t] = class_of[r];
    }

    // edges: componentwise images of edge tuples
    let mut by_group: Vec<Vec<(usize, usize)>> = vec![Vec::new(); groups.members.len()];
    for (u, v) in h.edges() {
        if groups.group_of[u] + 1 == groups.group_of[v] || !levelwise {
            by_group[groups.group_of[u]].push((u, v));
        }
    }
    let mut edges = Vec::new();
    for (s, sym) in c.symbols.iter().enumerate() {
        let k = sym.arity;
        let mut work: u128 = 0;
        for es in &by_group {
            work += (es.len() as u128).pow(k as u32);
        }
        too_big(work, 4 * limit)?;
        let mut src = vec![0; k];
        let mut dst = vec![0; k];
        for es in &by_group {
            odometer(&vec![es.len(); k], |sel| {
                for i in 0..k {
                    src[i] = es[sel[i]].0;
                    dst[i] = es[sel[i]].1;
                }
                let a = spaces[s].index(&src).unwrap();
                let b = spaces[s].index(&dst).unwrap();
                edges.push((class_of[offsets[s] + a] as usize, class_of[offsets[s] + b] as usize));
            });
        }
    }
    let graph = Digraph::from_edges(classes as usize, edges).unwrap();

    let mut preset_lists = DomainLists::full(classes as usize, m);
    if idempotent {
        for (s, sym) in c.symbols.iter().enumerate() {
            for u in 0..m {
                if let Some(i) = spaces[s].index(&vec![u; sym.arity]) {
                    preset_lists.restrict(class_of[offsets[s] + i] as usize, &[u]);
                }
            }
        }
    }
    Ok(IndicatorStructure {
        graph,
        preset_lists,
        symbols: c.symbols.iter().map(|s| s.name.clone()).collect(),
        spaces,
        offsets,
        class_of,
    })
}

/// Variables joined when they occur on a common side; sides must not mix groups.
fn side_components(vars: usize, left: &[usize], right: &[usize]) -> Vec<usize> {
    let mut comp: Vec<usize> = (0..vars).collect();
    fn root(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            x = c[x];
        }
        x
    }
    for side in [left, right] {
        for w in side.windows(2) {
            let (a, b) = (root(&mut comp, w[0]), root(&mut comp, w[1]));
            comp[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; vars];
    let mut next = 0;
    let mut out = vec![0; vars];
    for v in 0..vars {
        let r = root(&mut comp, v);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[v] = label[r];
    }
    out
}

/// Totally symmetric single-symbol conditions: one vertex per argument set.
/// `S → S'` exactly when some at most `n` edges from `S` to `S'` cover both sets.
fn build_set_indexed(
    c: &MinorCondition,
    h: &Digraph,
    groups: Groups,
    idempotent: bool,
    limit: usize,
) -> Result<IndicatorStructure, IndicatorError> {
    assert_eq!(c.symbols.len(), 1, "set-indexed indicators carry one symmetric symbol");
    let n = c.symbols[0].arity;
    let big = groups.members.iter().map(Vec::len).max().unwrap_or(0);
    if big > MAX_SET_GROUP {
        return Err(IndicatorError::SizeLimit(1u128 << big));
    }
    let mut offset = vec![0usize];
    for mem in &groups.members {
        let next = *offset.last().unwrap() + (1usize << mem.len());
        too_big(next as u128, limit)?;
        offset.push(next);
    }
    let total = *offset.last().unwrap();
    let mut class_of = vec![UNDEF; total];
    let mut classes = 0u32;
    for (g, mem) in groups.members.iter().enumerate() {
        for mask in 1usize..1 << mem.len() {
            if mask.count_ones() as usize <= n {
                class_of[offset[g] + mask] = classes;
                classes += 1;
            }
        }
    }
    // local adjacency: out-masks of each vertex into each group
    let mut out_mask = vec![vec![0usize; groups.members.len()]; h.n()];
    for (u, v) in h.edges() {
        out_mask[u][groups.group_of[v]] |= 1 << groups.pos[v];
    }
    let mut edges = Vec::new();
    let mut work: u128 = 0;
    for (g, mem) in groups.members.iter().enumerate() {
        for (g2, mem2) in groups.members.iter().enumerate() {
            if mem.iter().all(|&u| out_mask[u][g2] == 0) {
                continue;
            }
            for s in 1usize..1 << mem.len() {
                if s.count_ones() as usize > n {
                    continue;
                }
                let members: Vec<usize> = (0..mem.len()).filter(|i| s >> i & 1 == 1).map(|i| mem[i]).collect();
                if members.iter().any(|&u| out_mask[u][g2] == 0) {
                    continue;
                }
                let reach = members.iter().fold(0, |a, &u| a | out_mask[u][g2]);
                let mut t = reach;
                while t != 0 {
                    work += 1;
                    if t.count_ones() as usize <= n && covers(&members, t, mem2, &out_mask, g2, n) {
                        edges.push((class_of[offset[g] + s] as usize, class_of[offset[g2] + t] as usize));
                    }
                    t = (t - 1) & reach;
                }
                too_big(work, 20 * limit)?;
            }
        }
    }
    let graph = Digraph::from_edges(classes as usize, edges).unwrap();
    let mut preset_lists = DomainLists::full(classes as usize, h.n());
    if idempotent {
        for u in 0..h.n() {
            let g = groups.group_of[u];
            preset_lists.restrict(class_of[offset[g] + (1 << groups.pos[u])] as usize, &[u]);
        }
    }
    let space = TermSpace { groups, space: Space::Sets { arity: n, offset } };
    Ok(IndicatorStructure {
        graph,
        preset_lists,
        symbols: vec![c.symbols[0].name.clone()],
        spaces: vec![space],
        offsets: vec![0, total],
        class_of,
    })
}

/// Every member of `t` has an in-neighbour in `s`, and a minimum edge cover of the
/// bipartite graph between them has at most `n` edges.
fn covers(s: &[usize], t: usize, mem2: &[usize], out_mask: &[Vec<usize>], g2: usize, n: usize) -> bool {
    let targets: Vec<usize> = (0..mem2.len()).filter(|i| t >> i & 1 == 1).collect();
    if targets.iter().any(|&j| s.iter().all(|&u| out_mask[u][g2] >> j & 1 == 0))
        || s.iter().any(|&u| out_mask[u][g2] & t == 0)
    {
        return false;
    }
    // maximum matching by augmenting paths
    let mut owner = vec![usize::MAX; mem2.len()];
    let mut matched = 0;
    for i in 0..s.len() {
        let mut seen = vec![false; mem2.len()];
        if augment(i, s, t, out_mask, g2, &mut owner, &mut seen) {
            matched += 1;
        }
    }
    s.len() + targets.len() - matched <= n
}

fn augment(
    i: usize,
    s: &[usize],
    t: usize,
    out_mask: &[Vec<usize>],
    g2: usize,
    owner: &mut [usize],
    seen: &mut [bool],
) -> bool {
    let adj = out_mask[s[i]][g2] & t;
    for j in 0..owner.len() {
        if adj >> j & 1 == 1 && !seen[j] {
            seen[j] = true;
            if owner[j] == usize::MAX || augment(owner[j], s, t, out_mask, g2, owner, seen) {
                owner[j] = i;
                return true;
            }
        }
    }
    false
}

fn decide(ind: &IndicatorStructure, h: &Digraph) -> Option<Witness> {
    find_homomorphism(&ind.graph, h, ind.preset_lists.clone()).map(|f| ind.witness(&f))
}

fn core_test(h: &Digraph) -> bool {
    if h.is_tree() {
        is_core_tree(h).unwrap()
    } else {
        is_core(h)
    }
}

pub fn satisfies(h: &Digraph, c: &MinorCondition, mode: Mode) -> Result<Verdict, IndicatorError> {
    satisfies_with(h, c, mode, &Options::default())
}

pub fn satisfies_with(h: &Digraph, c: &MinorCondition, mode: Mode, opts: &Options) -> Result<Verdict, IndicatorError> {
    let idem = opts.idempotent.unwrap_or_else(|| core_test(h));
    let full = || -> Result<Verdict, IndicatorError> {
        let ind = build_indicator_with(c, h, idem, false, opts.size_limit)?;
        Ok(decide(&ind, h).map_or(Verdict::No, Verdict::Yes))
    };
    let level = || -> Result<Option<Witness>, IndicatorError> {
        let ind = build_indicator_with(c, h, idem, true, opts.size_limit)?;
        Ok(decide(&ind, h))
    };
    match mode {
        Mode::Full => full(),
        Mode::Levelwise => Ok(match level()? {
            None => Verdict::No,
            Some(w) if c.levelwise_sound => Verdict::Yes(w),
            Some(_) => Verdict::Inconclusive,
        }),
        Mode::Auto => {
            if h.levels_per_component().is_err() {
                return full();
            }
            match level()? {
                None => Ok(Verdict::No),
                Some(w) if c.levelwise_sound => Ok(Verdict::Yes(w)),
                Some(_) => full(),
            }
        }
    }
}
