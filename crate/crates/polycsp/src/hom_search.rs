//! Arc consistency and MAC backtracking for digraph homomorphisms.

use thiserror::Error;

use crate::digraph::{Digraph, DigraphError, RootedTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error("homomorphism count overflows 64 bits")]
    Overflow,
}

/// Candidate lists `L(x) ⊆ V(h)` for every vertex `x` of an instance, as bitsets.
#[derive(Clone, PartialEq, Eq)]
pub struct DomainLists {
    m: usize,
    words: usize,
    bits: Vec<u64>,
}

impl DomainLists {
    pub fn full(n: usize, m: usize) -> Self {
        let words = m.div_ceil(64).max(1);
        let mut row = vec![!0u64; words];
        if m % 64 != 0 {
            row[words - 1] = (1u64 << (m % 64)) - 1;
        }
        if m == 0 {
            row[0] = 0;
        }
        let mut bits = Vec::with_capacity(n * words);
        for _ in 0..n {
            bits.extend_from_slice(&row);
        }
        DomainLists { m, words, bits }
    }

    pub fn n(&self) -> usize {
        self.bits.len() / self.words
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    fn row_mut(&mut self, x: usize) -> &mut [u64] {
        &mut self.bits[x * self.words..(x + 1) * self.words]
    }

    pub fn contains(&self, x: usize, a: usize) -> bool {
        self.row(x)[a / 64] >> (a % 64) & 1 == 1
    }

    pub fn remove(&mut self, x: usize, a: usize) {
        self.row_mut(x)[a / 64] &= !(1u64 << (a % 64));
    }

    pub fn set_singleton(&mut self, x: usize, a: usize) {
        assert!(a < self.m);
        let row = self.row_mut(x);
        row.fill(0);
        row[a / 64] = 1u64 << (a % 64);
    }

    /// Intersects `L(x)` with `allowed`.
    pub fn restrict(&mut self, x: usize, allowed: &[usize]) {
        let mut mask = vec![0u64; self.words];
        for &a in allowed {
            mask[a / 64] |= 1u64 << (a % 64);
        }
        for (w, k) in self.row_mut(x).iter_mut().zip(mask) {
            *w &= k;
        }
    }

    pub fn len(&self, x: usize) -> usize {
        self.row(x).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self, x: usize) -> bool {
        self.row(x).iter().all(|&w| w == 0)
    }

    pub fn values(&self, x: usize) -> Vec<usize> {
        ones(self.row(x)).collect()
    }

    pub fn singleton(&self, x: usize) -> Option<usize> {
        let mut it = ones(self.row(x));
        match (it.next(), it.next()) {
            (Some(a), None) => Some(a),
            _ => None,
        }
    }
}

impl std::fmt::Debug for DomainLists {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries((0..self.n()).map(|x| self.values(x))).finish()
    }
}

fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(i * 64 + b)
        })
    })
}

/// Neighbourhood masks of the target, precomputed when small enough.
const MASK_CAP: usize = 4096;

struct Solver<'a> {
    g: &'a Digraph,
    h: &'a Digraph,
    lists: DomainLists,
    pre: Vec<u64>,
    post: Vec<u64>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    trail: Vec<(usize, usize)>,
    saved: Vec<u64>,
    scratch: Vec<u64>,
    acc: Vec<u64>,
}

impl<'a> Solver<'a> {
    fn new(g: &'a Digraph, h: &'a Digraph, lists: DomainLists) -> Self {
        assert_eq!(lists.n(), g.n(), "one list per instance vertex");
        assert_eq!(lists.m(), h.n(), "lists range over target vertices");
        let words = lists.words;
        let (mut pre, mut post) = (Vec::new(), Vec::new());
        if h.n() <= MASK_CAP {
            pre = vec![0u64; h.n() * words];
            post = vec![0u64; h.n() * words];
            for (u, v) in h.edges() {
                pre[v * words + u / 64] |= 1u64 << (u % 64);
                post[u * words + v / 64] |= 1u64 << (v % 64);
            }
        }
        Solver {
            g,
            h,
            lists,
            pre,
            post,
            queue: Vec::new(),
            queued: vec![false; g.n()],
            trail: Vec::new(),
            saved: Vec::new(),
            scratch: vec![0; words],
            acc: vec![0; words],
        }
    }

    fn push(&mut self, x: usize) {
        if !self.queued[x] {
            self.queued[x] = true;
            self.queue.push(x);
        }
    }

    /// `scratch := {u : some v ∈ L(y) with u → v}` (`forward`) or `{u : some v ∈ L(y) with v → u}`.
    fn support(&mut self, y: usize, forward: bool) {
        let words = self.lists.words;
        self.scratch.fill(0);
        let row = &self.lists.bits[y * words..(y + 1) * words];
        if !self.pre.is_empty() {
            let masks = if forward { &self.pre } else { &self.post };
            for v in ones(row) {
                for (s, m) in self.scratch.iter_mut().zip(&masks[v * words..(v + 1) * words]) {
                    *s |= m;
                }
            }
        } else {
            for v in ones(row) {
                let nb = if forward { self.h.inn(v) } else { self.h.out(v) };
                for &u in nb {
                    self.scratch[u / 64] |= 1u64 << (u % 64);
                }
            }
        }
    }

    /// Runs the worklist to a fixed point. Returns false when a list empties.
    fn propagate(&mut self) -> bool {
        let words = self.lists.words;
        while let Some(x) = self.queue.pop() {
            self.queued[x] = false;
            self.acc.copy_from_slice(&self.lists.bits[x * words..(x + 1) * words]);
            let g = self.g;
            for &y in g.out(x) {
                self.support(y, true);
                for (a, s) in self.acc.iter_mut().zip(&self.scratch) {
                    *a &= s;
                }
            }
            for &y in g.inn(x) {
                self.support(y, false);
                for (a, s) in self.acc.iter_mut().zip(&self.scratch) {
                    *a &= s;
                }
            }
            let row = &mut self.lists.bits[x * words..(x + 1) * words];
            if row != &self.acc[..] {
                self.trail.push((x, self.saved.len()));
                self.saved.extend_from_slice(row);
                row.copy_from_slice(&self.acc);
                if self.acc.iter().all(|&w| w == 0) {
                    for &y in &self.queue {
                        self.queued[y] = false;
                    }
                    self.queue.clear();
                    return false;
                }
                for y in g.neighbours(x) {
                    self.push(y);
                }
            }
        }
        true
    }

    fn assign(&mut self, x: usize, a: usize) {
        let words = self.lists.words;
        self.trail.push((x, self.saved.len()));
        self.saved.extend_from_slice(&self.lists.bits[x * words..(x + 1) * words]);
        self.lists.set_singleton(x, a);
        for y in self.g.neighbours(x) {
            self.push(y);
        }
    }

    fn undo(&mut self, mark: usize) {
        let words = self.lists.words;
        while self.trail.len() > mark {
            let (x, off) = self.trail.pop().unwrap();
            self.lists.bits[x * words..(x + 1) * words].copy_from_slice(&self.saved[off..off + words]);
            self.saved.truncate(off);
        }
    }

    fn pick(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for x in 0..self.g.n() {
            let l = self.lists.len(x);
            if l > 1 && best.map_or(true, |(_, b)| l < b) {
                best = Some((x, l));
                if l == 2 {
                    break;
                }
            }
        }
        best.map(|(x, _)| x)
    }

    fn current(&self) -> Vec<usize> {
        (0..self.g.n()).map(|x| self.lists.singleton(x).unwrap()).collect()
    }

    /// MAC search. `on_hom` returns true to stop.
    fn search(&mut self, mut on_hom: impl FnMut(&[usize]) -> bool) {
        if (0..self.g.n()).any(|x| self.lists.is_empty(x)) {
            return;
        }
        for x in 0..self.g.n() {
            self.push(x);
        }
        if !self.propagate() {
            return;
        }
        struct Frame {
            var: usize,
            mark: usize,
            next: usize,
        }
        let mut stack: Vec<Frame> = Vec::new();
        let mut descend = true;
        loop {
            if descend {
                match self.pick() {
                    None => {
                        if on_hom(&self.current()) {
                            return;
                        }
                    }
                    Some(x) => {
                        stack.push(Frame { var: x, mark: self.trail.len(), next: 0 });
                    }
                }
            }
            let Some(top) = stack.last_mut() else { return };
            let (var, mark) = (top.var, top.mark);
            self.undo(mark);
            let next = ones(self.lists.row(var)).find(|&a| a >= top.next);
            match next {
                None => {
                    stack.pop();
                    descend = false;
                }
                Some(a) => {
                    top.next = a + 1;
                    self.assign(var, a);
                    descend = self.propagate();
                }
            }
        }
    }
}

/// Greatest arc-consistent refinement of `lists`, or `None` if some list empties.
pub fn arc_consistency(g: &Digraph, h: &Digraph, lists: DomainLists) -> Option<DomainLists> {
    if (0..g.n()).any(|x| lists.is_empty(x)) {
        return None;
    }
    let mut s = Solver::new(g, h, lists);
    for x in 0..g.n() {
        s.push(x);
    }
    s.propagate().then_some(s.lists)
}

/// Lists of the vertices in `keep`, renumbered in that order.
fn sublists(lists: &DomainLists, keep: &[usize]) -> DomainLists {
    let mut bits = Vec::with_capacity(keep.len() * lists.words);
    for &x in keep {
        bits.extend_from_slice(lists.row(x));
    }
    DomainLists { m: lists.m, words: lists.words, bits }
}

/// Weak components of `g` with more than one of them; the search then runs per component
/// so a failure in one never backtracks into another.
fn split(g: &Digraph) -> Option<Vec<Vec<usize>>> {
    let comps = g.components();
    (comps.len() > 1).then_some(comps)
}

fn find_connected(g: &Digraph, h: &Digraph, lists: DomainLists) -> Option<Vec<usize>> {
    let mut found = None;
    Solver::new(g, h, lists).search(|f| {
        found = Some(f.to_vec());
        true
    });
    found
}

/// A list-respecting homomorphism `g → h`, if one exists.
pub fn find_homomorphism(g: &Digraph, h: &Digraph, lists: DomainLists) -> Option<Vec<usize>> {
    let Some(comps) = split(g) else {
        return find_connected(g, h, lists);
    };
    let mut f = vec![0; g.n()];
    for comp in comps {
        let part = find_connected(&g.induced(&comp), h, sublists(&lists, &comp))?;
        for (&x, a) in comp.iter().zip(part) {
            f[x] = a;
        }
    }
    Some(f)
}

pub fn hom_exists(g: &Digraph, h: &Digraph) -> bool {
    find_homomorphism(g, h, DomainLists::full(g.n(), h.n())).is_some()
}

pub fn count_homomorphisms(g: &Digraph, h: &Digraph) -> Result<u64, HomError> {
    count_with_lists(g, h, DomainLists::full(g.n(), h.n()))
}

fn count_connected(g: &Digraph, h: &Digraph, lists: DomainLists) -> Result<u64, HomError> {
    let mut count = 0u64;
    let mut overflow = false;
    Solver::new(g, h, lists).search(|_| match count.checked_add(1) {
        Some(c) => {
            count = c;
            false
        }
        None => {
            overflow = true;
            true
        }
    });
    if overflow {
        Err(HomError::Overflow)
    } else {
        Ok(count)
    }
}

pub fn count_with_lists(g: &Digraph, h: &Digraph, lists: DomainLists) -> Result<u64, HomError> {
    let Some(comps) = split(g) else {
        return count_connected(g, h, lists);
    };
    let counts = comps
        .iter()
        .map(|comp| count_connected(&g.induced(comp), h, sublists(&lists, comp)))
        .collect::<Result<Vec<_>, _>>()?;
    if counts.contains(&0) {
        return Ok(0);
    }
    counts.into_iter().try_fold(1u64, |acc, c| acc.checked_mul(c).ok_or(HomError::Overflow))
}

pub fn hom_equivalent(a: &Digraph, b: &Digraph) -> bool {
    hom_exists(a, b) && hom_exists(b, a)
}

/// Hom-equivalence of digraphs expanded by constants: `ca[i]` must map to `cb[i]` and back.
pub fn hom_equivalent_pointed(a: &Digraph, ca: &[usize], b: &Digraph, cb: &[usize]) -> bool {
    assert_eq!(ca.len(), cb.len());
    let pinned = |g: &Digraph, h: &Digraph, from: &[usize], to: &[usize]| {
        let mut l = DomainLists::full(g.n(), h.n());
        for (&x, &y) in from.iter().zip(to) {
            l.restrict(x, &[y]);
        }
        find_homomorphism(g, h, l).is_some()
    };
    pinned(a, b, ca, cb) && pinned(b, a, cb, ca)
}

/// Arc consistency of `t` against itself ends with every list a singleton.
pub fn is_core_tree(t: &Digraph) -> Result<bool, DigraphError> {
    if !t.is_tree() {
        return Err(DigraphError::NotATree);
    }
    Ok(ac_all_singleton(t, DomainLists::full(t.n(), t.n())))
}

pub fn is_rooted_core(t: &RootedTree) -> bool {
    rooted_core_unchecked(&t.tree, t.root)
}

/// [`is_rooted_core`] without validating that `t` is a tree.
pub fn rooted_core_unchecked(t: &Digraph, root: usize) -> bool {
    let mut l = DomainLists::full(t.n(), t.n());
    l.set_singleton(root, root);
    ac_all_singleton(t, l)
}

fn ac_all_singleton(t: &Digraph, lists: DomainLists) -> bool {
    match arc_consistency(t, t, lists) {
        Some(l) => (0..t.n()).all(|x| l.singleton(x).is_some()),
        None => false,
    }
}

/// Every endomorphism is surjective: no vertex can be avoided.
pub fn is_core(g: &Digraph) -> bool {
    (0..g.n()).all(|v| {
        let mut l = DomainLists::full(g.n(), g.n());
        for x in 0..g.n() {
            l.remove(x, v);
        }
        find_homomorphism(g, g, l).is_none()
    })
}
