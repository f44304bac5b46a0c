//! Generation of oriented trees up to isomorphism, core trees in particular,
//! without isomorphism checks after the fact.
//!
//! Rooted trees live in a pool as nodes whose children are `(pool id, bit)` items;
//! bit 1 means the edge points from the child to its parent. A child sequence is
//! kept non-increasing in a fixed total order on items, which makes every multiset
//! of children appear once. For cores the sequence is strictly decreasing: two equal
//! children with equal bits fold onto each other.

use std::collections::HashMap;

use thiserror::Error;

use crate::digraph::{Digraph, RootedTree};
use crate::hom_search::{is_core_tree, rooted_core_unchecked};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeGenError {
    #[error("balanced cycles need an even number of vertices, got {0}")]
    OddLength(usize),
    #[error("balanced cycles need at least 4 vertices, got {0}")]
    TooShort(usize),
}

/// Size, depth and code of a rooted tree; ordered by depth, then size, then code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootedTreeClass {
    pub depth: usize,
    pub size: usize,
    pub code: Vec<u8>,
}

impl RootedTreeClass {
    pub fn of(t: &RootedTree) -> Self {
        let depth = depth_from(&t.tree, t.root);
        RootedTreeClass { depth, size: t.tree.n(), code: t.tree.rooted_code(t.root, usize::MAX) }
    }
}

fn depth_from(t: &Digraph, root: usize) -> usize {
    let mut dist = vec![usize::MAX; t.n()];
    dist[root] = 0;
    let mut stack = vec![root];
    let mut best = 0;
    while let Some(v) = stack.pop() {
        for w in t.neighbours(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                best = best.max(dist[w]);
                stack.push(w);
            }
        }
    }
    best
}

#[derive(Clone, Copy)]
struct Block {
    size: usize,
    first: u32,
    len: u32,
}

/// Memoized pools of rooted trees keyed by `(size, depth)`.
pub struct TreeGenerator {
    cores_only: bool,
    start: Vec<u32>,
    kids: Vec<u32>,
    blocks: HashMap<(usize, usize), Block>,
}

impl TreeGenerator {
    pub fn cores() -> Self {
        Self::with_mode(true)
    }

    /// Generator for all oriented trees, cores or not.
    pub fn all() -> Self {
        Self::with_mode(false)
    }

    fn with_mode(cores_only: bool) -> Self {
        TreeGenerator { cores_only, start: vec![0], kids: Vec::new(), blocks: HashMap::new() }
    }

    fn children(&self, id: u32) -> &[u32] {
        &self.kids[self.start[id as usize] as usize..self.start[id as usize + 1] as usize]
    }

    fn block(&mut self, size: usize, depth: usize) -> Block {
        if let Some(&b) = self.blocks.get(&(size, depth)) {
            return b;
        }
        let b = self.build_block(size, depth);
        self.blocks.insert((size, depth), b);
        b
    }

    /// Blocks of depth below `depth` with sizes up to `max_size`, in decreasing
    /// (depth, size) order.
    fn item_blocks(&mut self, depth: usize, max_size: usize) -> Vec<(usize, Block)> {
        let mut out = Vec::new();
        for d in (0..depth).rev() {
            for s in (d + 1..=max_size).rev() {
                let b = self.block(s, d);
                if b.len > 0 {
                    out.push((d, b));
                }
            }
        }
        out
    }

    fn build_block(&mut self, size: usize, depth: usize) -> Block {
        if depth == 0 && size == 1 {
            let first = self.push_node(&[]);
            return Block { size, first, len: 1 };
        }
        if depth == 0 || size < depth + 1 {
            return Block { size, first: self.start.len() as u32 - 1, len: 0 };
        }
        let blocks = self.item_blocks(depth, size - 1);
        let mut found: Vec<Vec<u32>> = Vec::new();
        let strict = self.cores_only;
        let mut cur = Vec::new();
        let tops = blocks.iter().take_while(|(d, _)| *d == depth - 1).count();
        self.sequences(&blocks, 0, tops, size - 1, 1, strict, &mut cur, &mut |this, seq| {
            if !strict || rooted_core_unchecked(&this.materialize(seq), 0) {
                found.push(seq.to_vec());
            }
        });
        let first = self.start.len() as u32 - 1;
        for seq in &found {
            self.push_node(seq);
        }
        Block { size, first, len: found.len() as u32 }
    }

    fn push_node(&mut self, seq: &[u32]) -> u32 {
        let id = self.start.len() as u32 - 1;
        self.kids.extend_from_slice(seq);
        self.start.push(self.kids.len() as u32);
        id
    }

    /// Enumerates child sequences. The first `need_top` items come from the
    /// first `tops` blocks; sizes sum to `remaining`.
    #[allow(clippy::too_many_arguments)]
    fn sequences(
        &self,
        blocks: &[(usize, Block)],
        pos: usize,
        tops: usize,
        remaining: usize,
        need_top: usize,
        strict: bool,
        cur: &mut Vec<u32>,
        emit: &mut dyn FnMut(&Self, &[u32]),
    ) {
        if remaining == 0 {
            if need_top == 0 {
                emit(self, cur);
            }
            return;
        }
        // a position names (block, offset, bit) in a fixed order
        let mut p = pos;
        let mut base = 0usize;
        for (bi, (_, b)) in blocks.iter().enumerate() {
            let span = 2 * b.len as usize;
            if need_top > 0 && bi >= tops {
                return;
            }
            if p >= base + span {
                base += span;
                continue;
            }
            if b.size <= remaining {
                let lo = p.max(base) - base;
                for k in lo..span {
                    let id = b.first + (k / 2) as u32;
                    cur.push(id << 1 | (k % 2) as u32);
                    let next = base + k + strict as usize;
                    self.sequences(blocks, next, tops, remaining - b.size, need_top.saturating_sub(1), strict, cur, emit);
                    cur.pop();
                }
            }
            base += span;
            p = base;
        }
    }

    /// Rooted tree with root 0 whose children are the given items.
    fn materialize(&self, seq: &[u32]) -> Digraph {
        let mut edges = Vec::new();
        let mut next = 1usize;
        let mut stack: Vec<(usize, u32)> = Vec::new();
        for &it in seq {
            stack.push((0, it));
        }
        while let Some((parent, it)) = stack.pop() {
            let v = next;
            next += 1;
            edges.push(if it & 1 == 1 { (v, parent) } else { (parent, v) });
            for &c in self.children(it >> 1) {
                stack.push((v, c));
            }
        }
        Digraph::from_edges(next, edges).unwrap()
    }

    /// Every rooted tree (rooted core, in core mode) with `n` vertices and depth `d`.
    pub fn rooted(&mut self, n: usize, d: usize) -> Vec<RootedTree> {
        let b = self.block(n, d);
        (b.first..b.first + b.len)
            .map(|id| RootedTree { tree: self.materialize(&self.children(id).to_vec()), root: 0 })
            .collect()
    }

    pub fn rooted_count(&mut self, n: usize) -> usize {
        (0..n).map(|d| self.block(n, d).len as usize).sum()
    }

    /// Streams every tree (core tree, in core mode) with `n` vertices exactly once.
    pub fn for_each_tree(&mut self, n: usize, mut f: impl FnMut(&Digraph)) {
        if n == 0 {
            return;
        }
        if n == 1 {
            f(&Digraph::empty(1));
            return;
        }
        let strict = self.cores_only;
        let keep = |t: &Digraph| !strict || is_core_tree(t).unwrap();
        // center: a root with at least two children of depth r-1
        for r in 1..=(n - 1) / 2 {
            let blocks = self.item_blocks(r, n - 1 - r);
            let tops = blocks.iter().take_while(|(d, _)| *d == r - 1).count();
            let mut cur = Vec::new();
            self.sequences(&blocks, 0, tops, n - 1, 2, strict, &mut cur, &mut |this, seq| {
                let t = this.materialize(seq);
                if keep(&t) {
                    f(&t);
                }
            });
        }
        // bicenter: two rooted trees of equal depth joined root to root
        for d in 0..n / 2 {
            for a in d + 1..=n - d - 1 {
                let (ba, bb) = (self.block(a, d), self.block(n - a, d));
                for x in ba.first..ba.first + ba.len {
                    for y in bb.first..bb.first + bb.len {
                        let t = self.join(x, y);
                        if keep(&t) {
                            f(&t);
                        }
                    }
                }
            }
        }
    }

    fn join(&self, x: u32, y: u32) -> Digraph {
        let left = self.materialize(&self.children(x).to_vec());
        let right = self.materialize(&self.children(y).to_vec());
        let k = left.n();
        let mut g = left.disjoint_union(&right);
        let edges: Vec<_> = g.edges().chain(std::iter::once((0, k))).collect();
        g = Digraph::from_edges(g.n(), edges).unwrap();
        g
    }
}

pub fn generate_rooted_cores(n: usize, d: usize) -> Vec<RootedTree> {
    TreeGenerator::cores().rooted(n, d)
}

/// Streams the core trees with `n` vertices.
pub fn for_each_core_tree(n: usize, f: impl FnMut(&Digraph)) {
    TreeGenerator::cores().for_each_tree(n, f)
}

pub fn generate_core_trees(n: usize) -> Vec<Digraph> {
    let mut out = Vec::new();
    for_each_core_tree(n, |t| out.push(t.clone()));
    out
}

/// Exactly one vertex of degree three, all others of degree one or two.
pub fn is_triad(t: &Digraph) -> bool {
    let degs: Vec<usize> = (0..t.n()).map(|v| t.undirected_degree(v)).collect();
    degs.iter().filter(|&&d| d == 3).count() == 1 && degs.iter().all(|&d| (1..=3).contains(&d))
}

pub fn filter_triads<I: IntoIterator<Item = Digraph>>(trees: I) -> impl Iterator<Item = Digraph> {
    trees.into_iter().filter(is_triad)
}

/// Oriented paths with `n` vertices that are cores, one per isomorphism class.
pub fn generate_core_paths(n: usize) -> Vec<Digraph> {
    assert!(n >= 1);
    let k = n - 1;
    let mut out = Vec::new();
    for s in 0u64..1 << k {
        let bits: Vec<bool> = (0..k).map(|i| s >> i & 1 == 1).collect();
        let flipped: Vec<bool> = bits.iter().rev().map(|b| !b).collect();
        if flipped < bits {
            continue;
        }
        let p = Digraph::path_from_bits(&bits);
        if is_core_tree(&p).unwrap() {
            out.push(p);
        }
    }
    out
}

/// Balanced orientations of a cycle with `n` vertices, one per isomorphism class.
pub fn generate_balanced_cycles(n: usize) -> Result<Vec<Digraph>, TreeGenError> {
    if n % 2 == 1 {
        return Err(TreeGenError::OddLength(n));
    }
    if n < 4 {
        return Err(TreeGenError::TooShort(n));
    }
    let mut out = Vec::new();
    for_each_balanced_word(n, |w| {
        let bits: Vec<bool> = (0..n).map(|i| w >> i & 1 == 1).collect();
        out.push(Digraph::cycle_from_bits(&bits));
    });
    Ok(out)
}

/// Calls `f` with the canonical word of each class; bit `i` set means edge `i` points back.
pub fn for_each_balanced_word(n: usize, mut f: impl FnMut(u64)) {
    assert!(n <= 62 && n % 2 == 0);
    let mask = (1u64 << n) - 1;
    let rot = |w: u64, k: usize| if k == 0 { w } else { (w >> k | w << (n - k)) & mask };
    let rc = |w: u64| {
        let mut r = 0u64;
        for i in 0..n {
            if w >> i & 1 == 0 {
                r |= 1 << (n - 1 - i);
            }
        }
        r
    };
    let mut combo = (1u64 << (n / 2)) - 1;
    while combo <= mask {
        let w = combo;
        let v = rc(w);
        if (0..n).all(|k| rot(w, k) >= w && rot(v, k) >= w) {
            f(w);
        }
        // next word with the same number of ones
        let c = combo & combo.wrapping_neg();
        let r = combo + c;
        combo = (((r ^ combo) >> 2) / c) | r;
    }
}
