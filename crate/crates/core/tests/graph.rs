use std::collections::BTreeSet;

use pourcause::{CausalGraph, Node, VariableKind};
use proptest::prelude::*;

/// Random DAG: nodes get a hidden rank and edges only go up in rank; names
/// are shuffled so rank and name order disagree.
fn dag() -> impl Strategy<Value = CausalGraph> {
    (1usize..=8).prop_flat_map(|n| {
        (
            Just((0..n).map(|i| format!("n{i}")).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
        )
            .prop_map(move |(names, bits)| {
                let nodes = names.iter().map(|s| Node::new(s.clone(), VariableKind::continuous(0.0, 1.0))).collect();
                let mut edges = Vec::new();
                let mut it = bits.into_iter();
                for i in 0..n {
                    for j in i + 1..n {
                        if it.next().unwrap() {
                            edges.push((names[i].clone(), names[j].clone()));
                        }
                    }
                }
                CausalGraph::new(nodes, edges).unwrap()
            })
    })
}

/// Every simple directed path by plain DFS over the edge list.
fn dfs_paths(g: &CausalGraph, x: &str, y: &str) -> BTreeSet<Vec<String>> {
    fn go(g: &CausalGraph, cur: &mut Vec<String>, y: &str, out: &mut BTreeSet<Vec<String>>) {
        let last = cur.last().unwrap().clone();
        if last == y {
            out.insert(cur.clone());
            return;
        }
        for (a, b) in g.edges() {
            if *a == last && !cur.contains(b) {
                cur.push(b.clone());
                go(g, cur, y, out);
                cur.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(g, &mut vec![x.to_string()], y, &mut out);
    out
}

proptest! {
    #[test]
    fn topological_order_respects_edges(g in dag()) {
        let order = g.topological_order();
        prop_assert_eq!(order.len(), g.len());
        let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
        for (a, b) in g.edges() {
            prop_assert!(pos(a) < pos(b));
        }
        let mut rev = order.clone();
        rev.reverse();
        for (i, child) in rev.iter().enumerate() {
            for parent in g.parents(child).unwrap() {
                prop_assert!(rev[..i].iter().all(|n| *n != parent));
            }
        }
        prop_assert_eq!(order, g.topological_order());
    }

    #[test]
    fn directed_paths_match_dfs(g in dag(), a in 0usize..8, b in 0usize..8) {
        let names: Vec<String> = g.node_names().map(String::from).collect();
        let (x, y) = (&names[a % names.len()], &names[b % names.len()]);
        prop_assume!(x != y);
        let got = g.directed_paths(x, y).unwrap();
        let set: BTreeSet<Vec<String>> = got.iter().cloned().collect();
        prop_assert_eq!(set.len(), got.len());
        prop_assert_eq!(set, dfs_paths(&g, x, y));
        prop_assert_eq!(got, g.directed_paths(x, y).unwrap());
    }

    #[test]
    fn partitions_cover_every_node(g in dag(), a in 0usize..8, b in 0usize..8) {
        let names: Vec<String> = g.node_names().map(String::from).collect();
        let (x, y) = (&names[a % names.len()], &names[b % names.len()]);
        prop_assume!(x != y);
        for path in g.directed_paths(x, y).unwrap() {
            let p = g.partition_for_path(&path, y).unwrap();
            let mut all: Vec<String> = vec![x.clone(), y.clone()];
            all.extend(p.w.iter().cloned());
            all.extend(p.z.iter().cloned());
            let set: BTreeSet<String> = all.iter().cloned().collect();
            prop_assert_eq!(set.len(), all.len());
            prop_assert_eq!(set, names.iter().cloned().collect::<BTreeSet<_>>());
        }
    }
}
