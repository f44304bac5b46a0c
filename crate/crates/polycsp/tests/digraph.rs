use std::collections::VecDeque;

use itertools::Itertools;
use polycsp::digraph::all_digraphs;
use polycsp::hom_search::hom_equivalent;
use polycsp::{Digraph, DigraphError, RootedTree};
use proptest::prelude::*;

fn fixture(name: &str) -> Digraph {
    let path = format!("{}/../../fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    Digraph::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn arb_digraph(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let edges = (0..n * n).filter(|&i| bits[i]).map(|i| (i / n, i % n));
            Digraph::from_edges(n, edges).unwrap()
        })
    })
}

/// Random oriented tree: vertex `i` hangs off some earlier vertex.
fn arb_tree(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(tree_of_size)
}

fn tree_of_size(n: usize) -> impl Strategy<Value = Digraph> {
    {
        (proptest::collection::vec(any::<prop::sample::Index>(), n), proptest::collection::vec(any::<bool>(), n))
            .prop_map(move |(par, dir)| {
                let edges = (1..n).map(|i| {
                    let p = par[i].index(i);
                    if dir[i] {
                        (p, i)
                    } else {
                        (i, p)
                    }
                });
                Digraph::from_edges(n, edges).unwrap()
            })
    }
}

fn permuted(g: &Digraph, perm: &[usize]) -> Digraph {
    Digraph::from_edges(g.n(), g.edges().map(|(u, v)| (perm[u], perm[v]))).unwrap()
}

/// Brute force over all bijections.
fn iso_oracle(a: &Digraph, b: &Digraph) -> bool {
    a.n() == b.n()
        && a.edge_count() == b.edge_count()
        && (0..a.n()).permutations(a.n()).any(|p| a.edges().all(|(u, v)| b.has_edge(p[u], p[v])))
}

/// ±1 weighted BFS, shifted to start at zero.
fn level_oracle(g: &Digraph) -> Option<Vec<i64>> {
    let mut lvl = vec![None; g.n()];
    lvl[0] = Some(0i64);
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        let l = lvl[u].unwrap();
        let next = g.out(u).iter().map(|&v| (v, l + 1)).chain(g.inn(u).iter().map(|&v| (v, l - 1)));
        for (v, want) in next.collect::<Vec<_>>() {
            match lvl[v] {
                None => {
                    lvl[v] = Some(want);
                    q.push_back(v);
                }
                Some(x) if x != want => return None,
                _ => {}
            }
        }
    }
    let lv: Vec<i64> = lvl.into_iter().map(Option::unwrap).collect();
    let m = *lv.iter().min().unwrap();
    Some(lv.into_iter().map(|x| x - m).collect())
}

#[test]
fn reverse_of_edge() {
    let r = Digraph::path(1).reverse();
    assert!(r.has_edge(1, 0) && !r.has_edge(0, 1));
    assert!(Digraph::cycle(3).is_isomorphic(&Digraph::cycle(3).reverse()).unwrap());
}

#[test]
fn product_examples() {
    let c6 = Digraph::cycle(2).product(&Digraph::cycle(3));
    assert!(iso_oracle(&c6, &Digraph::cycle(6)));
    let g = Digraph::oriented_path(&[2, 1]);
    assert!(iso_oracle(&g.product(&Digraph::cycle(1)), &g));
    let c23 = Digraph::cycles(&[2, 3]);
    assert_eq!(c23.product(&c23).edge_count(), 25);
}

#[test]
fn levels_examples() {
    let lm = Digraph::path(3).levels().unwrap();
    assert_eq!(lm.levels, vec![0, 1, 2, 3]);
    assert_eq!(lm.height, 3);
    assert_eq!(Digraph::cycle(3).levels().unwrap_err(), DigraphError::NotBalanced);
    let zig = Digraph::oriented_path(&[2, 1, 2]);
    let lm = zig.levels().unwrap();
    let want = level_oracle(&zig).unwrap();
    assert_eq!(lm.levels.iter().map(|&x| x as i64).collect::<Vec<_>>(), want);
    assert_eq!(lm.height, 3);
}

#[test]
fn line_graph_examples() {
    assert!(hom_equivalent(&Digraph::path(1).line_graph_star().unwrap(), &Digraph::path(2)));
    let z = Digraph::oriented_path(&[2, 1, 2]);
    assert!(hom_equivalent(&z.line_graph_star().unwrap(), &Digraph::oriented_path(&[3, 2, 3])));
    let c = Digraph::oriented_cycle(&[2, 1]);
    assert!(hom_equivalent(&c.line_graph_star().unwrap(), &Digraph::oriented_cycle(&[3, 2])));
    assert_eq!(Digraph::empty(3).line_graph_star().unwrap_err(), DigraphError::EmptyEdgeSet);
}

#[test]
fn canonical_code_examples() {
    let b1 = fixture("trees/tree_b01");
    let perm: Vec<usize> = (0..b1.n()).rev().collect();
    assert_eq!(b1.tree_canonical_code().unwrap(), permuted(&b1, &perm).tree_canonical_code().unwrap());
    assert_ne!(b1.tree_canonical_code().unwrap(), b1.reverse().tree_canonical_code().unwrap());
    assert_ne!(
        Digraph::path(2).tree_canonical_code().unwrap(),
        Digraph::oriented_path(&[1, 1]).tree_canonical_code().unwrap()
    );
    assert_eq!(Digraph::cycle(3).tree_canonical_code().unwrap_err(), DigraphError::NotATree);
}

#[test]
fn isomorphism_examples() {
    let t3 = Digraph::new(3, &[(0, 1), (0, 2), (1, 2)]);
    assert!(!t3.is_isomorphic(&Digraph::cycle(3)).unwrap());
    let total: usize = (0..=4).map(|n| all_digraphs(n).len()).sum();
    assert_eq!(total, 3161);
}

#[test]
fn census_classes_are_distinct() {
    let three = all_digraphs(3);
    for (i, a) in three.iter().enumerate() {
        for b in &three[i + 1..] {
            assert!(!iso_oracle(a, b));
        }
    }
}

#[test]
fn parse_errors() {
    assert!(matches!(Digraph::parse(""), Err(DigraphError::Parse { .. })));
    assert!(matches!(Digraph::parse("2\n0 x\n"), Err(DigraphError::Parse { line: 2, .. })));
    assert!(matches!(Digraph::parse("2\n0 2\n"), Err(DigraphError::VertexOutOfRange { .. })));
    let g = Digraph::parse("# comment\n3\n\n0 1\n1 2\n").unwrap();
    assert_eq!(g, Digraph::path(2));
}

#[test]
fn rooted_tree_validation() {
    assert!(RootedTree::new(Digraph::path(2), 1).is_ok());
    assert!(RootedTree::new(Digraph::cycle(3), 0).is_err());
    assert!(RootedTree::new(Digraph::path(2), 7).is_err());
}

proptest! {
    #[test]
    fn reverse_is_involution(g in arb_digraph(8)) {
        prop_assert_eq!(g.reverse().reverse(), g);
    }

    #[test]
    fn edge_list_roundtrip(g in arb_digraph(6)) {
        prop_assert_eq!(Digraph::parse(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn levels_match_bfs(t in arb_tree(12), extra in arb_digraph(4)) {
        for g in [t, extra] {
            if !g.is_connected() {
                continue;
            }
            match (g.levels(), level_oracle(&g)) {
                (Ok(lm), Some(want)) => {
                    prop_assert_eq!(lm.levels.iter().map(|&x| x as i64).collect::<Vec<_>>(), want);
                    for (u, v) in g.edges() {
                        prop_assert_eq!(lm.levels[v], lm.levels[u] + 1);
                    }
                }
                (Err(DigraphError::NotBalanced), None) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }

    #[test]
    fn product_commutes_up_to_iso(a in arb_digraph(3), b in arb_digraph(3)) {
        prop_assert!(iso_oracle(&a.product(&b), &b.product(&a)));
    }

    #[test]
    fn product_associates_up_to_iso(a in arb_digraph(2), b in arb_digraph(2), c in arb_digraph(2)) {
        prop_assert!(a.product(&b).product(&c).is_isomorphic(&a.product(&b.product(&c))).unwrap());
    }

    #[test]
    fn isomorphism_matches_oracle(a in arb_digraph(5), b in arb_digraph(5)) {
        prop_assert_eq!(a.is_isomorphic(&b).unwrap(), iso_oracle(&a, &b));
    }

    #[test]
    fn canonical_code_is_invariant(t in arb_tree(14), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut perm: Vec<usize> = (0..t.n()).collect();
        perm.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        prop_assert_eq!(t.tree_canonical_code().unwrap(), permuted(&t, &perm).tree_canonical_code().unwrap());
    }

    #[test]
    fn canonical_code_decides_isomorphism((a, b) in (1..=8usize).prop_flat_map(|n| (tree_of_size(n), tree_of_size(n)))) {
        let same = a.tree_canonical_code().unwrap() == b.tree_canonical_code().unwrap();
        prop_assert_eq!(same, iso_oracle(&a, &b));
    }
}
