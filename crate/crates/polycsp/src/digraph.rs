//! Finite digraphs on dense vertex sets `0..n`.

use std::collections::VecDeque;
use std::fmt;

use itertools::Itertools;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DigraphError {
    #[error("edge ({0},{1}) leaves the vertex range 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("digraph is not balanced")]
    NotBalanced,
    #[error("digraph is not weakly connected")]
    NotConnected,
    #[error("digraph has no edges")]
    EmptyEdgeSet,
    #[error("digraph is not an oriented tree")]
    NotATree,
    #[error("digraph too large for this operation ({0} vertices)")]
    TooLarge(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A digraph whose vertices are `0..n`. Adjacency lists are sorted and free of duplicates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn empty(n: usize) -> Self {
        Digraph { out: vec![Vec::new(); n], inn: vec![Vec::new(); n] }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, DigraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Digraph::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(DigraphError::VertexOutOfRange(u, v, n));
            }
            g.out[u].push(v);
            g.inn[v].push(u);
        }
        for l in g.out.iter_mut().chain(g.inn.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Ok(g)
    }

    /// Panicking variant of [`Digraph::from_edges`] for literals in code and tests.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        Self::from_edges(n, edges.iter().copied()).expect("edge endpoint out of range")
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn out(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    pub fn inn(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    pub fn has_loop(&self) -> bool {
        (0..self.n()).any(|v| self.has_edge(v, v))
    }

    /// Neighbours in the underlying undirected graph, with repetition for 2-cycles.
    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[v].iter().chain(self.inn[v].iter()).copied()
    }

    pub fn reverse(&self) -> Digraph {
        Digraph { out: self.inn.clone(), inn: self.out.clone() }
    }

    /// Categorical product; vertex `(a, b)` has index `a * b.n() + b`.
    pub fn product(&self, other: &Digraph) -> Digraph {
        let m = other.n();
        let mut edges = Vec::with_capacity(self.edge_count() * other.edge_count());
        for (a, a2) in self.edges() {
            for (b, b2) in other.edges() {
                edges.push((a * m + b, a2 * m + b2));
            }
        }
        Digraph::from_edges(self.n() * m, edges).unwrap()
    }

    pub fn disjoint_union(&self, other: &Digraph) -> Digraph {
        let k = self.n();
        let edges = self.edges().chain(other.edges().map(|(u, v)| (u + k, v + k)));
        Digraph::from_edges(k + other.n(), edges).unwrap()
    }

    pub fn induced(&self, keep: &[usize]) -> Digraph {
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        let edges = self
            .edges()
            .filter(|&(u, v)| pos[u] != usize::MAX && pos[v] != usize::MAX)
            .map(|(u, v)| (pos[u], pos[v]));
        Digraph::from_edges(keep.len(), edges).unwrap()
    }

    /// Weakly connected components, each as a sorted vertex list.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for w in self.neighbours(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    pub fn is_tree(&self) -> bool {
        self.n() >= 1 && self.edge_count() == self.n() - 1 && self.is_connected()
    }

    pub fn undirected_degree(&self, v: usize) -> usize {
        self.out[v].len() + self.inn[v].len()
    }

    /// Directed path with `k` edges `0 → 1 → … → k`.
    pub fn path(k: usize) -> Digraph {
        Digraph::from_edges(k + 1, (0..k).map(|i| (i, i + 1))).unwrap()
    }

    /// Directed cycle of length `k ≥ 1`.
    pub fn cycle(k: usize) -> Digraph {
        assert!(k >= 1);
        Digraph::from_edges(k, (0..k).map(|i| (i, (i + 1) % k))).unwrap()
    }

    /// Disjoint union of directed cycles, one per length, on consecutive vertex blocks.
    pub fn cycles(lengths: &[u64]) -> Digraph {
        lengths
            .iter()
            .fold(Digraph::empty(0), |g, &a| g.disjoint_union(&Digraph::cycle(a as usize)))
    }

    /// `P(n1, …, nk)`: runs of forward and backward edges, alternating, starting forward.
    pub fn oriented_path(runs: &[usize]) -> Digraph {
        let bits = runs_to_bits(runs);
        Digraph::path_from_bits(&bits)
    }

    /// `C(n1, …, nk)`: like [`Digraph::oriented_path`] but the last vertex is identified with the first.
    pub fn oriented_cycle(runs: &[usize]) -> Digraph {
        let bits = runs_to_bits(runs);
        Digraph::cycle_from_bits(&bits)
    }

    /// Bit `i` is true when the `i`-th edge points backwards (`i+1 → i`).
    pub fn path_from_bits(bits: &[bool]) -> Digraph {
        let edges = bits.iter().enumerate().map(|(i, &b)| if b { (i + 1, i) } else { (i, i + 1) });
        Digraph::from_edges(bits.len() + 1, edges).unwrap()
    }

    pub fn cycle_from_bits(bits: &[bool]) -> Digraph {
        let n = bits.len();
        let edges = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { ((i + 1) % n, i) } else { (i, (i + 1) % n) });
        Digraph::from_edges(n, edges).unwrap()
    }

    /// Parses the edge-list format: a vertex count, then one `u v` pair per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Digraph, DigraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines
            .next()
            .ok_or(DigraphError::Parse { line: 0, msg: "missing vertex count".into() })?;
        let n: usize = first
            .parse()
            .map_err(|_| DigraphError::Parse { line: ln, msg: format!("bad vertex count `{first}`") })?;
        let mut edges = Vec::new();
        for (ln, l) in lines {
            let nums: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| DigraphError::Parse { line: ln, msg: format!("bad edge `{l}`") })?;
            match nums[..] {
                [u, v] => edges.push((u, v)),
                _ => return Err(DigraphError::Parse { line: ln, msg: format!("bad edge `{l}`") }),
            }
        }
        Digraph::from_edges(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n());
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Unique level map with minimum level 0. Requires a weakly connected digraph.
    pub fn levels(&self) -> Result<LevelMap, DigraphError> {
        if !self.is_connected() {
            return Err(DigraphError::NotConnected);
        }
        self.levels_per_component()
    }

    /// Level map of every weakly connected component, each shifted to minimum 0.
    pub fn levels_per_component(&self) -> Result<LevelMap, DigraphError> {
        let n = self.n();
        let mut lvl = vec![i64::MIN; n];
        for comp in self.components() {
            let s = comp[0];
            lvl[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                let steps = self.out[v].iter().map(|&w| (w, 1)).chain(self.inn[v].iter().map(|&w| (w, -1)));
                for (w, d) in steps {
                    let want = lvl[v] + d;
                    if lvl[w] == i64::MIN {
                        lvl[w] = want;
                        q.push_back(w);
                    } else if lvl[w] != want {
                        return Err(DigraphError::NotBalanced);
                    }
                }
            }
            let lo = comp.iter().map(|&v| lvl[v]).min().unwrap();
            for &v in &comp {
                lvl[v] -= lo;
            }
        }
        let levels: Vec<usize> = lvl.into_iter().map(|l| l as usize).collect();
        let height = levels.iter().copied().max().unwrap_or(0);
        Ok(LevelMap { levels, height })
    }

    /// `L(G*)`: add a bottom vertex pointing to every source and a top vertex fed by every
    /// sink, then take the line digraph.
    pub fn line_graph_star(&self) -> Result<Digraph, DigraphError> {
        if self.edge_count() == 0 {
            return Err(DigraphError::EmptyEdgeSet);
        }
        let n = self.n();
        let (bot, top) = (n, n + 1);
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        for v in 0..n {
            if self.inn[v].is_empty() {
                edges.push((bot, v));
            }
            if self.out[v].is_empty() {
                edges.push((v, top));
            }
        }
        let star = Digraph::from_edges(n + 2, edges).unwrap();
        let ids: Vec<(usize, usize)> = star.edges().collect();
        let mut line = Vec::new();
        for (i, &(_, v)) in ids.iter().enumerate() {
            for (j, &(u, _)) in ids.iter().enumerate() {
                if v == u {
                    line.push((i, j));
                }
            }
        }
        Ok(Digraph::from_edges(ids.len(), line).unwrap())
    }

    /// Exact isomorphism test by backtracking with degree pruning. At most 10 vertices.
    pub fn is_isomorphic(&self, other: &Digraph) -> Result<bool, DigraphError> {
        const CAP: usize = 10;
        let n = self.n();
        if n > CAP || other.n() > CAP {
            return Err(DigraphError::TooLarge(n.max(other.n())));
        }
        if n != other.n() || self.edge_count() != other.edge_count() {
            return Ok(false);
        }
        let sig = |g: &Digraph, v: usize| (g.out[v].len(), g.inn[v].len(), g.has_edge(v, v));
        let mut a_sig: Vec<_> = (0..n).map(|v| sig(self, v)).collect();
        let mut b_sig: Vec<_> = (0..n).map(|v| sig(other, v)).collect();
        let (sa, sb) = (a_sig.clone(), b_sig.clone());
        a_sig.sort_unstable();
        b_sig.sort_unstable();
        if a_sig != b_sig {
            return Ok(false);
        }
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        Ok(self.iso_extend(other, 0, &mut map, &mut used, &sa, &sb))
    }

    fn iso_extend<S: PartialEq>(
        &self,
        other: &Digraph,
        v: usize,
        map: &mut [usize],
        used: &mut [bool],
        sa: &[S],
        sb: &[S],
    ) -> bool {
        if v == self.n() {
            return true;
        }
        for w in 0..other.n() {
            if used[w] || sa[v] != sb[w] {
                continue;
            }
            let ok = (0..v).all(|u| {
                self.has_edge(u, v) == other.has_edge(map[u], w) && self.has_edge(v, u) == other.has_edge(w, map[u])
            });
            if !ok {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if self.iso_extend(other, v + 1, map, used, sa, sb) {
                return true;
            }
            used[w] = false;
        }
        false
    }

    /// Canonical byte code of an oriented tree: equal codes exactly for isomorphic trees.
    pub fn tree_canonical_code(&self) -> Result<Vec<u8>, DigraphError> {
        if !self.is_tree() {
            return Err(DigraphError::NotATree);
        }
        let root = match self.tree_center() {
            Center::Vertex(c) => c,
            Center::Edge(s, _) => s,
        };
        Ok(self.rooted_code(root, usize::MAX))
    }

    /// AHU encoding of the subtree hanging from `v`; `(` child codes `)`, each child
    /// prefixed by `0` for an edge away from `v` and `1` for an edge into `v`.
    pub fn rooted_code(&self, v: usize, parent: usize) -> Vec<u8> {
        let mut kids: Vec<Vec<u8>> = Vec::new();
        for &w in &self.out[v] {
            if w != parent {
                let mut c = vec![b'0'];
                c.extend(self.rooted_code(w, v));
                kids.push(c);
            }
        }
        for &w in &self.inn[v] {
            if w != parent {
                let mut c = vec![b'1'];
                c.extend(self.rooted_code(w, v));
                kids.push(c);
            }
        }
        kids.sort_unstable();
        let mut code = vec![b'('];
        for k in kids {
            code.extend(k);
        }
        code.push(b')');
        code
    }

    /// Jordan center of a tree, found by peeling leaves. Caller guarantees a tree.
    pub fn tree_center(&self) -> Center {
        let n = self.n();
        if n == 1 {
            return Center::Vertex(0);
        }
        let mut deg: Vec<usize> = (0..n).map(|v| self.undirected_degree(v)).collect();
        let mut layer: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
        let mut left = n;
        while left > 2 {
            left -= layer.len();
            let mut next = Vec::new();
            for &v in &layer {
                for w in self.neighbours(v) {
                    deg[w] -= 1;
                    if deg[w] == 1 {
                        next.push(w);
                    }
                }
            }
            layer = next;
        }
        match layer[..] {
            [c] => Center::Vertex(c),
            [a, b] => {
                if self.has_edge(a, b) {
                    Center::Edge(a, b)
                } else {
                    Center::Edge(b, a)
                }
            }
            _ => unreachable!("tree center has one or two vertices"),
        }
    }
}

/// All digraphs (loops allowed) on `n ≤ 4` vertices, one per isomorphism class.
/// Each is the labelling with the least adjacency bitmask.
pub fn all_digraphs(n: usize) -> Vec<Digraph> {
    assert!(n <= 4, "exhaustive enumeration needs n ≤ 4");
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let bits = n * n;
    let relabel = |mask: u32, p: &[usize]| {
        let mut out = 0u32;
        for u in 0..n {
            for v in 0..n {
                if mask >> (u * n + v) & 1 == 1 {
                    out |= 1 << (p[u] * n + p[v]);
                }
            }
        }
        out
    };
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0u32..1 << bits {
        if perms.iter().all(|p| relabel(mask, p) >= mask) {
            seen.insert(mask);
        }
    }
    seen.into_iter()
        .map(|mask| {
            let edges = (0..bits).filter(|i| mask >> i & 1 == 1).map(|i| (i / n, i % n));
            Digraph::from_edges(n, edges).unwrap()
        })
        .collect()
}

fn runs_to_bits(runs: &[usize]) -> Vec<bool> {
    runs.iter().enumerate().flat_map(|(i, &r)| std::iter::repeat(i % 2 == 1).take(r)).collect()
}

/// Center or bicenter (as a directed edge `source → target`) of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Vertex(usize),
    Edge(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMap {
    pub levels: Vec<usize>,
    pub height: usize,
}

/// A tree together with a distinguished root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    pub tree: Digraph,
    pub root: usize,
}

impl RootedTree {
    pub fn new(tree: Digraph, root: usize) -> Result<Self, DigraphError> {
        if !tree.is_tree() || root >= tree.n() {
            return Err(DigraphError::NotATree);
        }
        Ok(RootedTree { tree, root })
    }
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digraph({}; ", self.n())?;
        f.debug_list().entries(self.edges()).finish()?;
        write!(f, ")")
    }
}

impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}
