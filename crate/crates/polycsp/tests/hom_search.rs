use itertools::Itertools;
use polycsp::hom_search::{
    arc_consistency, count_homomorphisms, find_homomorphism, hom_equivalent, hom_exists, is_core, is_core_tree,
    is_rooted_core,
};
use polycsp::indicator::build_indicator;
use polycsp::conditions::make_condition;
use polycsp::tree_gen::generate_core_trees;
use polycsp::{Digraph, DigraphError, DomainLists, RootedTree};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn arb_digraph(lo: usize, hi: usize) -> impl Strategy<Value = Digraph> {
    (lo..=hi).prop_flat_map(|n| {
        proptest::collection::vec(proptest::bool::weighted(0.3), n * n).prop_map(move |bits| {
            Digraph::from_edges(n, (0..n * n).filter(|&i| bits[i]).map(|i| (i / n, i % n))).unwrap()
        })
    })
}

fn arb_tree(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(|n| {
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
    })
}

fn is_hom(g: &Digraph, h: &Digraph, f: &[usize]) -> bool {
    g.edges().all(|(u, v)| h.has_edge(f[u], f[v]))
}

/// Every map `g → h` that is a homomorphism, lexicographically. `g` is non-empty.
fn brute_homs(g: &Digraph, h: &Digraph) -> Vec<Vec<usize>> {
    (0..g.n()).map(|_| 0..h.n()).multi_cartesian_product().filter(|f| is_hom(g, h, f)).collect()
}

fn lists_as_sets(l: &DomainLists) -> Vec<Vec<usize>> {
    (0..l.n()).map(|x| l.values(x)).collect()
}

/// Naive AC: sweep the edges in the given order until nothing changes.
fn naive_ac(g: &Digraph, h: &Digraph, order: &[(usize, usize)]) -> Option<Vec<Vec<usize>>> {
    let mut l: Vec<Vec<usize>> = vec![(0..h.n()).collect(); g.n()];
    loop {
        let mut changed = false;
        for &(x, y) in order {
            let before = l[x].len() + l[y].len();
            l[x] = l[x].iter().copied().filter(|&u| l[y].iter().any(|&v| h.has_edge(u, v))).collect();
            l[y] = l[y].iter().copied().filter(|&v| l[x].iter().any(|&u| h.has_edge(u, v))).collect();
            changed |= l[x].len() + l[y].len() != before;
        }
        if l.iter().any(Vec::is_empty) {
            return None;
        }
        if !changed {
            return Some(l);
        }
    }
}

#[test]
fn ac_does_not_refute_k3_to_k2() {
    let sym = |n: usize| {
        Digraph::from_edges(n, (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))).unwrap()
    };
    let (k3, k2) = (sym(3), sym(2));
    let l = arc_consistency(&k3, &k2, DomainLists::full(3, 2)).unwrap();
    assert_eq!(lists_as_sets(&l), vec![vec![0, 1]; 3]);
    assert!(!hom_exists(&k3, &k2));
}

#[test]
fn ac_identity_survives() {
    for g in [Digraph::cycle(4), Digraph::oriented_path(&[2, 1, 3]), Digraph::new(3, &[(0, 1), (0, 2), (1, 2)])] {
        let l = arc_consistency(&g, &g, DomainLists::full(g.n(), g.n())).unwrap();
        assert!((0..g.n()).all(|x| l.contains(x, x)));
    }
}

#[test]
fn ac_path_into_transitive_tournament() {
    let (p, t3) = (Digraph::path(2), Digraph::new(3, &[(0, 1), (0, 2), (1, 2)]));
    let l = arc_consistency(&p, &t3, DomainLists::full(3, 3)).unwrap();
    assert_eq!(lists_as_sets(&l), vec![vec![0], vec![1], vec![2]]);
    assert_eq!(brute_homs(&p, &t3), vec![vec![0, 1, 2]]);
}

#[test]
fn cycles_wrap() {
    let f = find_homomorphism(&Digraph::cycle(6), &Digraph::cycle(3), DomainLists::full(6, 3)).unwrap();
    assert!(is_hom(&Digraph::cycle(6), &Digraph::cycle(3), &f));
    assert!(find_homomorphism(&Digraph::cycle(3), &Digraph::cycle(6), DomainLists::full(3, 6)).is_none());
}

#[test]
fn sigma2_indicator_maps_to_c3() {
    let c3 = Digraph::cycle(3);
    let ind = build_indicator(&make_condition("Sigma(2)").unwrap(), &c3, false, false).unwrap();
    assert!(hom_exists(&ind.graph, &c3));
}

#[test]
fn hom_counts() {
    let c23 = Digraph::cycles(&[2, 3]);
    assert_eq!(count_homomorphisms(&c23.product(&c23), &c23).unwrap(), 2 * 2 * 3 * 3 * 3 * 5 * 5);
    assert_eq!(count_homomorphisms(&Digraph::path(1), &Digraph::path(1)).unwrap(), 1);
    assert_eq!(count_homomorphisms(&Digraph::cycle(2), &Digraph::cycle(2)).unwrap(), 2);
}

#[test]
fn core_tree_examples() {
    assert!(is_core_tree(&Digraph::path(2)).unwrap());
    assert!(!is_core_tree(&Digraph::new(3, &[(0, 1), (0, 2)])).unwrap());
    assert_eq!(is_core_tree(&Digraph::cycle(3)), Err(DigraphError::NotATree));
}

#[test]
fn rooted_core_examples() {
    assert!(is_rooted_core(&RootedTree::new(Digraph::empty(1), 0).unwrap()));
    assert!(!is_rooted_core(&RootedTree::new(Digraph::new(3, &[(0, 1), (0, 2)]), 0).unwrap()));
    // fixing the middle of a directed path pins everything
    assert!(is_rooted_core(&RootedTree::new(Digraph::path(4), 2).unwrap()));
}

#[test]
fn equivalence_examples() {
    let two = Digraph::cycle(3).disjoint_union(&Digraph::cycle(3));
    assert!(hom_equivalent(&two, &Digraph::cycle(3)));
    assert!(!hom_equivalent(&Digraph::cycle(2), &Digraph::cycle(4)));
    let g = Digraph::oriented_path(&[1, 2, 1]);
    assert!(hom_equivalent(&g, &g));
}

/// Soundness of the tree lemma: any value AC keeps extends to a homomorphism.
#[test]
fn ac_values_extend_on_core_trees() {
    let targets = [
        Digraph::cycle(3),
        Digraph::new(3, &[(0, 1), (0, 2), (1, 2)]),
        Digraph::oriented_path(&[2, 1, 2]),
        Digraph::cycles(&[2, 3]),
    ];
    for n in 1..=9 {
        for t in generate_core_trees(n) {
            for h in &targets {
                let Some(l) = arc_consistency(&t, h, DomainLists::full(t.n(), h.n())) else {
                    assert!(!hom_exists(&t, h));
                    continue;
                };
                for x in 0..t.n() {
                    for a in l.values(x) {
                        let mut pinned = l.clone();
                        pinned.set_singleton(x, a);
                        assert!(find_homomorphism(&t, h, pinned).is_some(), "{t:?} {x}->{a}");
                    }
                }
            }
        }
    }
}

#[test]
fn core_tree_tests_agree_on_small_trees() {
    for n in 1..=8 {
        for t in generate_core_trees(n) {
            assert!(is_core(&t));
            assert!(is_core_tree(&t).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ac_fixed_point_is_order_independent(g in arb_digraph(1, 6), h in arb_digraph(1, 6), seed in any::<u64>()) {
        let mut order: Vec<(usize, usize)> = g.edges().collect();
        order.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let ours = arc_consistency(&g, &h, DomainLists::full(g.n(), h.n())).map(|l| lists_as_sets(&l));
        prop_assert_eq!(ours, naive_ac(&g, &h, &order));
    }

    #[test]
    fn ac_reject_means_no_hom(g in arb_digraph(1, 5), h in arb_digraph(1, 4)) {
        if arc_consistency(&g, &h, DomainLists::full(g.n(), h.n())).is_none() {
            prop_assert!(brute_homs(&g, &h).is_empty());
        }
    }

    #[test]
    fn search_matches_enumeration(g in arb_digraph(1, 5), h in arb_digraph(1, 4)) {
        let homs = brute_homs(&g, &h);
        let found = find_homomorphism(&g, &h, DomainLists::full(g.n(), h.n()));
        prop_assert_eq!(found.is_some(), !homs.is_empty());
        if let Some(f) = found {
            prop_assert!(is_hom(&g, &h, &f));
        }
        prop_assert_eq!(count_homomorphisms(&g, &h).unwrap(), homs.len() as u64);
    }

    #[test]
    fn lists_are_respected(g in arb_digraph(1, 5), h in arb_digraph(1, 4), x in 0usize..5, a in 0usize..4) {
        prop_assume!(x < g.n() && a < h.n());
        let mut l = DomainLists::full(g.n(), h.n());
        l.set_singleton(x, a);
        let want = brute_homs(&g, &h).iter().any(|f| f[x] == a);
        let got = find_homomorphism(&g, &h, l);
        prop_assert_eq!(got.is_some(), want);
        if let Some(f) = got {
            prop_assert_eq!(f[x], a);
        }
    }

    #[test]
    fn core_matches_enumeration(g in arb_digraph(1, 5)) {
        let want = brute_homs(&g, &g).iter().all(|f| f.iter().all_unique());
        prop_assert_eq!(is_core(&g), want);
    }

    #[test]
    fn core_tree_matches_is_core(t in arb_tree(10)) {
        prop_assert_eq!(is_core_tree(&t).unwrap(), is_core(&t));
    }

    #[test]
    fn rooted_core_matches_enumeration(t in arb_tree(6), r in any::<prop::sample::Index>()) {
        let root = r.index(t.n());
        let want = brute_homs(&t, &t).iter().filter(|f| f[root] == root).all(|f| f.iter().all_unique());
        prop_assert_eq!(is_rooted_core(&RootedTree::new(t, root).unwrap()), want);
    }
}
