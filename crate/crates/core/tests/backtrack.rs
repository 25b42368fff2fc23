use std::collections::HashSet;

use proptest::prelude::*;
use qwalk::backtrack::{detect_marked, generate_path, search, SearchConfig};
use qwalk::graph::generate::{self, Branching};
use qwalk::graph::{explore_from, Instance, LayeredDag, PathSpec, RestrictedView};
use qwalk::oracles::{dfs_prefix_set, dfs_prefix_size, dfs_sequence, marked_exists};
use qwalk::rng::stream;
use qwalk::size::{ExactSizeOracle, QuantumSizeOracle};

fn marked(dag: LayeredDag, marks: &[usize]) -> Instance {
    let mut inst = Instance::plain(dag);
    inst.annotations.marked.extend(marks.iter().copied());
    inst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restricted_view_shows_the_dfs_prefix(v in 1usize..200, seed in 0u64..5000, pick in 0usize..10_000) {
        let tree = generate::random_tree(v, 12, Branching::UpTo(3), seed).unwrap();
        let order = dfs_sequence(&tree);
        let m = 1 + pick % v;
        let path = PathSpec::to_vertex(&tree, order[m - 1]).unwrap();
        let inst = Instance::plain(tree.clone());
        let h = inst.handle();
        let view = RestrictedView::new(&h, &path).unwrap();
        let seen: HashSet<_> = explore_from(&view, 1).unwrap().global.into_iter().skip(1).collect();
        prop_assert_eq!(seen, dfs_prefix_set(&tree, m));
    }

    #[test]
    fn exact_paths_hit_their_target(v in 1usize..120, seed in 0u64..5000, m in 1u64..150) {
        let tree = generate::random_tree(v, 10, Branching::Binary, seed).unwrap();
        let inst = Instance::plain(tree.clone());
        let p = generate_path(&inst.handle(), 1, m, 0.25, 0.1, 10, &ExactSizeOracle, &mut stream(seed, m)).unwrap();
        prop_assert_eq!(dfs_prefix_size(&tree, &p).unwrap() as u64, m.min(v as u64));
    }

    #[test]
    fn search_agrees_with_exact_sizes(v in 2usize..80, seed in 0u64..5000, mark in proptest::option::of(0usize..1000)) {
        let tree = generate::random_tree(v, 9, Branching::Binary, seed).unwrap();
        let marks: Vec<usize> = mark.map(|k| 1 + k % v).into_iter().collect();
        let inst = marked(tree.clone(), &marks);
        let n = tree.depth().max(1) as u64;
        let r = search(&inst.handle(), v as u64, n, 0.05, SearchConfig::default(), &ExactSizeOracle, &mut stream(seed, 1)).unwrap();
        prop_assert_eq!(r.found, marked_exists(&inst));
        if r.found {
            let last = r.stages.last().unwrap();
            let shown: HashSet<usize> = if last.path.is_empty() && last.whole_tree {
                tree.vertices().collect()
            } else {
                last.path.restricted_vertices(&tree).unwrap().into_iter().collect()
            };
            prop_assert!(marks.iter().any(|m| shown.contains(m)));
        }
    }
}

#[test]
fn detection_without_marks_rarely_fires() {
    let tree = generate::random_tree(60, 8, Branching::Binary, 3).unwrap();
    let inst = Instance::plain(tree.clone());
    let n = tree.depth() as u64;
    let fires =
        (0..1000).filter(|&s| detect_marked(&inst.handle(), 60.0, n, 0.1, &mut stream(4, s)).unwrap().marked).count();
    assert!(fires <= 100, "{fires}");
}

#[test]
fn detection_finds_a_deep_marked_leaf() {
    let tree = generate::random_tree(60, 8, Branching::Binary, 5).unwrap();
    let n = tree.depth();
    let deep = tree.vertices().find(|&v| tree.layer(v) == n).unwrap();
    let inst = marked(tree, &[deep]);
    let hits = (0..1000)
        .filter(|&s| detect_marked(&inst.handle(), 60.0, n as u64, 0.1, &mut stream(6, s)).unwrap().marked)
        .count();
    assert!(hits >= 900, "{hits}");
}

#[test]
fn large_target_walks_to_the_last_vertex() {
    let tree = generate::random_tree(40, 7, Branching::Binary, 8).unwrap();
    let inst = Instance::plain(tree.clone());
    let p = generate_path(&inst.handle(), 1, 1000, 0.25, 0.1, 7, &ExactSizeOracle, &mut stream(0, 0)).unwrap();
    assert_eq!(*p.vertices(1).last().unwrap(), *dfs_sequence(&tree).last().unwrap());
}

#[test]
fn quantum_paths_land_near_the_target() {
    let tree = generate::random_tree(61, 9, Branching::Binary, 9).unwrap();
    let inst = Instance::plain(tree.clone());
    let oracle = QuantumSizeOracle::default();
    let n = tree.depth() as u64;
    let mut ok = 0;
    for s in 0..100 {
        let p = generate_path(&inst.handle(), 1, 20, 0.25, 0.1, n, &oracle, &mut stream(10, s)).unwrap();
        let got = dfs_prefix_size(&tree, &p).unwrap();
        ok += usize::from((15..=25).contains(&got));
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn unit_target_is_the_empty_path() {
    let inst = Instance::plain(generate::complete_binary(3).unwrap());
    let p = generate_path(&inst.handle(), 1, 1, 0.25, 0.1, 3, &ExactSizeOracle, &mut stream(0, 0)).unwrap();
    assert!(p.is_empty());
}

#[test]
fn marked_root_is_found_in_the_first_stage() {
    let inst = marked(generate::complete_binary(3).unwrap(), &[1]);
    let r =
        search(&inst.handle(), 15, 3, 0.1, SearchConfig::default(), &QuantumSizeOracle::default(), &mut stream(0, 0))
            .unwrap();
    assert!(r.found);
    assert_eq!(r.stage_reached, 1);
}

#[test]
fn unmarked_tree_is_reported_empty() {
    let inst = Instance::plain(generate::random_tree(50, 8, Branching::Binary, 12).unwrap());
    let r =
        search(&inst.handle(), 50, 8, 0.1, SearchConfig::default(), &QuantumSizeOracle::default(), &mut stream(1, 0))
            .unwrap();
    assert!(!r.found);
    assert!(r.stages.last().unwrap().whole_tree);
    assert_eq!(r.ledger.controlled_u, r.controlled_u_total);
    assert_eq!(r.stages.iter().map(|s| s.controlled_u_count).sum::<u64>(), r.controlled_u_total);
}

#[test]
fn early_mark_stops_early() {
    let tree = generate::random_tree(200, 12, Branching::Binary, 13).unwrap();
    let fifth = dfs_sequence(&tree)[4];
    let inst = marked(tree, &[fifth]);
    let oracle = QuantumSizeOracle::default();
    let r = search(&inst.handle(), 200, 12, 0.1, SearchConfig { cutover: false }, &oracle, &mut stream(2, 0)).unwrap();
    assert!(r.found);
    // ⌈log₂ 5⌉ = 3; δ = 1/2 lets the prefix fall short by one doubling.
    assert!(r.stage_reached <= 4, "stage {}", r.stage_reached);
    assert!(r.stages.iter().all(|s| !s.whole_tree));
}

#[test]
fn stage_costs_grow_with_the_stage() {
    let tree = generate::random_tree(300, 14, Branching::Binary, 14).unwrap();
    let last = *dfs_sequence(&tree).last().unwrap();
    let inst = marked(tree, &[last]);
    let r = search(&inst.handle(), 300, 14, 0.1, SearchConfig { cutover: false }, &ExactSizeOracle, &mut stream(3, 0))
        .unwrap();
    let costs: Vec<u64> = r.stages.iter().map(|s| s.controlled_u_count).collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1]), "{costs:?}");
}

#[test]
fn cutover_bounds_the_search_cost() {
    let tree = generate::random_tree(200, 12, Branching::Binary, 15).unwrap();
    let last = *dfs_sequence(&tree).last().unwrap();
    let inst = marked(tree, &[last]);
    let oracle = QuantumSizeOracle::default();
    let r = search(&inst.handle(), 200, 12, 0.1, SearchConfig::default(), &oracle, &mut stream(4, 0)).unwrap();
    assert!(r.found);
    assert!(r.cutover_used);
    assert!(r.stages.last().unwrap().whole_tree);
}
