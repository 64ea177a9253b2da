use pourcause::dataset::Dataset;
use pourcause::discovery::{
    bootstrap, brute_force_skeleton, ci_test, pc, pc_from_covariance, stable_edges, stable_graph, CiKind, CiTest,
    Covariance, EdgeFrequency, EdgeFrequencyTable, EdgeMark, Tiers,
};
use pourcause::graph::{Node, VariableKind};
use pourcause::rng::seeded;
use pourcause::world::{WorldConfig, FU, RC, RD, RV, S};
use pourcause::Error;
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn gaussian(rng: &mut pourcause::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| noise(rng)).collect()
}

fn noise(rng: &mut pourcause::rng::Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn pouring_data(n: usize, seed: u64) -> Dataset {
    Dataset::from_trials(&WorldConfig::default().generate_dataset(n, seed))
}

fn pair(a: &str, b: &str) -> (String, String) {
    (a.to_string(), b.to_string())
}

#[test]
fn independent_gaussians_pass_at_nominal_rate() {
    for kind in [CiKind::FisherZ, CiKind::DgLrt] {
        let test = CiTest::new(kind, 0.05).unwrap();
        let runs = 400;
        let mut independent = 0;
        for seed in 0..runs {
            let mut rng = seeded(seed);
            let data =
                Dataset::new(names(&["x", "y"]), vec![gaussian(&mut rng, 5000), gaussian(&mut rng, 5000)]).unwrap();
            if ci_test(&data, "x", "y", &[], &test).unwrap().independent {
                independent += 1;
            }
        }
        let rate = independent as f64 / runs as f64;
        // binomial sd at 400 draws is about 0.011
        assert!((rate - 0.95).abs() < 0.035, "{kind:?}: {rate}");
    }
}

#[test]
fn near_functional_dependence() {
    let mut rng = seeded(1);
    let x = gaussian(&mut rng, 2000);
    let y: Vec<f64> = x.iter().map(|v| v + 0.01 * rng.random::<f64>()).collect();
    let data = Dataset::new(names(&["x", "y"]), vec![x, y]).unwrap();
    for kind in [CiKind::FisherZ, CiKind::DgLrt] {
        let r = ci_test(&data, "x", "y", &[], &CiTest::new(kind, 0.05).unwrap()).unwrap();
        assert!(!r.independent && r.p_value < 1e-6, "{r:?}");
    }
}

#[test]
fn capacity_and_spillage_are_separated_by_pc() {
    let data = pouring_data(6000, 3);
    let g = pc(&data, &CiTest::default(), &Tiers::pouring()).unwrap();
    assert!(!g.skeleton().contains(&pair(RC, S)));
}

// Linear tests reject this on the synthetic world: spillage is a logistic
// step in rv = fu / rc, so rc still predicts the residual of a linear fit.
#[test]
#[ignore = "fails on this generator; p is about 1e-7 at n = 6000"]
fn capacity_is_screened_off_given_all_parents() {
    let data = pouring_data(6000, 11);
    let r = ci_test(&data, RC, S, &[RV, FU, RD], &CiTest::default()).unwrap();
    assert!(r.independent, "{r:?}");
}

#[test]
fn ci_test_preconditions() {
    let data = Dataset::new(names(&["a", "b"]), vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0]]).unwrap();
    assert!(matches!(
        ci_test(&data, "a", "b", &[], &CiTest::default()),
        Err(Error::InsufficientData { rows: 3, required: 10 })
    ));
    assert!(matches!(ci_test(&data, "a", "zz", &[], &CiTest::default()), Err(Error::MissingColumn(_))));
    assert!(CiTest::new(CiKind::FisherZ, 1.0).is_err());
    assert!(CiTest::new(CiKind::FisherZ, 0.0).is_err());
}

#[test]
fn pouring_skeleton_matches_generator() {
    let data = pouring_data(6000, 3);
    let g = pc(&data, &CiTest::default(), &Tiers::pouring()).unwrap();
    let expected = vec![pair(FU, RV), pair(FU, S), pair(RC, RV), pair(RD, S), pair(RV, S)];
    assert_eq!(g.skeleton(), expected);
    let mut directed = g.directed();
    directed.sort();
    assert_eq!(directed, vec![pair(FU, RV), pair(FU, S), pair(RC, RV), pair(RD, S), pair(RV, S)]);
}

#[test]
fn independent_columns_give_empty_graph() {
    let mut rng = seeded(5);
    let data = Dataset::new(names(&["a", "b"]), vec![gaussian(&mut rng, 3000), gaussian(&mut rng, 3000)]).unwrap();
    let g = pc(&data, &CiTest::new(CiKind::FisherZ, 0.01).unwrap(), &Tiers::default()).unwrap();
    assert!(g.edges.is_empty());
}

#[test]
fn chain_has_no_shortcut() {
    let mut rng = seeded(8);
    let n = 3000;
    let a = gaussian(&mut rng, n);
    let b: Vec<f64> = a.iter().map(|v| 0.8 * v + noise(&mut rng) * 0.6).collect();
    let c: Vec<f64> = b.iter().map(|v| -0.7 * v + noise(&mut rng) * 0.7).collect();
    let data = Dataset::new(names(&["A", "B", "C"]), vec![a, b, c]).unwrap();
    let g = pc(&data, &CiTest::new(CiKind::FisherZ, 0.01).unwrap(), &Tiers::default()).unwrap();
    assert_eq!(g.skeleton(), vec![pair("A", "B"), pair("B", "C")]);
    // no v-structure and no tiers leaves a chain unoriented
    assert!(g.edges.iter().all(|e| e.2 == EdgeMark::Undirected));
}

#[test]
fn collider_is_oriented() {
    let mut rng = seeded(9);
    let n = 3000;
    let a = gaussian(&mut rng, n);
    let b = gaussian(&mut rng, n);
    let c: Vec<f64> = (0..n).map(|i| a[i] - b[i] + 0.5 * noise(&mut rng)).collect();
    let data = Dataset::new(names(&["A", "B", "C"]), vec![a, b, c]).unwrap();
    let g = pc(&data, &CiTest::new(CiKind::FisherZ, 0.01).unwrap(), &Tiers::default()).unwrap();
    let mut d = g.directed();
    d.sort();
    assert_eq!(d, vec![pair("A", "C"), pair("B", "C")]);
}

#[test]
fn tiers_orient_and_restrict() {
    let mut rng = seeded(10);
    let n = 2000;
    let a = gaussian(&mut rng, n);
    let b: Vec<f64> = a.iter().map(|v| v + 0.5 * noise(&mut rng)).collect();
    let data = Dataset::new(names(&["A", "B"]), vec![a, b]).unwrap();
    let t = Tiers::new(vec![names(&["B"]), names(&["A"])], true).unwrap();
    let g = pc(&data, &CiTest::default(), &t).unwrap();
    assert_eq!(g.directed(), vec![pair("B", "A")]);
    let same = Tiers::new(vec![names(&["A", "B"])], false).unwrap();
    assert!(pc(&data, &CiTest::default(), &same).unwrap().edges.is_empty());

    assert!(Tiers::new(vec![names(&["A"]), names(&["A"])], true).is_err());
    assert!(matches!(pc(&data, &CiTest::default(), &Tiers::pouring()), Err(Error::InvalidConfig(_))));
    let empty = Dataset::new(names(&["A"]), vec![vec![]]).unwrap();
    assert!(matches!(pc(&empty, &CiTest::default(), &Tiers::default()), Err(Error::EmptyDataset)));
}

#[test]
fn tiers_json_forms() {
    let t = Tiers::from_json(r#"[["RC","FU","RD"],["RV"],["S"]]"#).unwrap();
    assert_eq!(t, Tiers::pouring());
    let t = Tiers::from_json(r#"{"tiers":[["A"],["B"]],"allow_within_tier_edges":false}"#).unwrap();
    assert!(!t.allow_within_tier_edges);
    assert_eq!(t.tier_of("B"), Some(1));
    assert!(Tiers::from_json("{").is_err());
}

/// Population covariance of a linear SEM with weights `w[i][j]` for `j -> i`
/// and unit noise: `(I - W)^-1 (I - W)^-T`.
fn sem_covariance(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = w.len();
    // W is strictly lower triangular, so (I - W)^-1 follows by forward substitution
    let mut inv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for r in 0..k {
            let mut v = if r == c { 1.0 } else { 0.0 };
            for j in 0..r {
                v += w[r][j] * inv[j][c];
            }
            inv[r][c] = v;
        }
    }
    (0..k).map(|a| (0..k).map(|b| (0..k).map(|m| inv[a][m] * inv[b][m]).sum()).collect()).collect()
}

fn sem_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..=5).prop_flat_map(|k| {
        proptest::collection::vec((any::<bool>(), 0.4f64..1.5, any::<bool>()), k * (k - 1) / 2).prop_map(move |cells| {
            let mut w = vec![vec![0.0; k]; k];
            let mut it = cells.into_iter();
            for i in 0..k {
                for j in 0..i {
                    let (on, mag, neg) = it.next().unwrap();
                    if on {
                        w[i][j] = if neg { -mag } else { mag };
                    }
                }
            }
            w
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pc_skeleton_equals_brute_force(w in sem_strategy(), nominal in 100_000usize..10_000_000) {
        let k = w.len();
        let labels: Vec<String> = (0..k).map(|i| format!("V{i}")).collect();
        let cov = Covariance { n: nominal, matrix: sem_covariance(&w) };
        let test = CiTest::default();
        let g = pc_from_covariance(&cov, &labels, &test, &Tiers::default()).unwrap();
        prop_assert_eq!(g.skeleton(), brute_force_skeleton(&cov, &labels, &test).unwrap());
    }

    #[test]
    fn pc_ignores_row_order(seed in 0u64..1000) {
        let data = pouring_data(600, seed);
        let mut rng = seeded(seed ^ 0xabcd);
        let mut rows: Vec<usize> = (0..data.n_rows()).collect();
        for i in (1..rows.len()).rev() {
            rows.swap(i, rng.random_range(0..=i));
        }
        let shuffled = data.select_rows(&rows);
        let test = CiTest::default();
        prop_assert_eq!(pc(&data, &test, &Tiers::pouring()).unwrap(), pc(&shuffled, &test, &Tiers::pouring()).unwrap());
    }
}

#[test]
fn bootstrap_rows_sum_to_one_and_repeat() {
    let data = pouring_data(1500, 21);
    let table = bootstrap(&data, 40, &CiTest::default(), &Tiers::pouring(), 7).unwrap();
    assert_eq!(table.rows.len(), 10);
    for f in table.rows.values() {
        assert!((f.total() - 1.0).abs() < 1e-9);
    }
    assert_eq!(table, bootstrap(&data, 40, &CiTest::default(), &Tiers::pouring(), 7).unwrap());

    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("node_a,node_b,right,left,undirected,none\n"));
    assert_eq!(EdgeFrequencyTable::read_csv(&buf[..]).unwrap(), table);
}

#[test]
fn single_bootstrap_is_zero_one() {
    let data = pouring_data(1000, 4);
    let table = bootstrap(&data, 1, &CiTest::default(), &Tiers::pouring(), 0).unwrap();
    for f in table.rows.values() {
        for v in [f.right, f.left, f.undirected, f.none] {
            assert!(v == 0.0 || v == 1.0);
        }
    }
    assert!(matches!(bootstrap(&data, 0, &CiTest::default(), &Tiers::pouring(), 0), Err(Error::InvalidConfig(_))));
}

fn table(rows: &[(&str, &str, EdgeFrequency)]) -> EdgeFrequencyTable {
    EdgeFrequencyTable { rows: rows.iter().map(|(a, b, f)| (pair(a, b), *f)).collect() }
}

#[test]
fn stable_graph_threshold_is_strict() {
    let nodes = vec![Node::new("A", VariableKind::Binary), Node::new("B", VariableKind::Binary)];
    let split = table(&[("A", "B", EdgeFrequency { right: 0.5, none: 0.5, ..Default::default() })]);
    assert!(stable_graph(&split, 0.5, &Tiers::default(), nodes.clone()).unwrap().edges().is_empty());
    let none = table(&[("A", "B", EdgeFrequency { none: 1.0, ..Default::default() })]);
    assert!(stable_graph(&none, 0.5, &Tiers::default(), nodes.clone()).unwrap().edges().is_empty());
    let left = table(&[("A", "B", EdgeFrequency { left: 0.8, none: 0.2, ..Default::default() })]);
    assert_eq!(stable_graph(&left, 0.5, &Tiers::default(), nodes).unwrap().edges(), &[pair("B", "A")]);
}

#[test]
fn undirected_edges_need_tiers() {
    let t = table(&[("A", "B", EdgeFrequency { undirected: 0.9, none: 0.1, ..Default::default() })]);
    assert!(matches!(
        stable_edges(&t, 0.5, &Tiers::default()),
        Err(Error::UnresolvedUndirectedEdge(a, b)) if a == "A" && b == "B"
    ));
    let tiers = Tiers::new(vec![names(&["B"]), names(&["A"])], true).unwrap();
    assert_eq!(stable_edges(&t, 0.5, &tiers).unwrap(), vec![pair("B", "A")]);
    assert_eq!(t.get("B", "A").unwrap().undirected, 0.9);
    assert_eq!(t.directed("B", "A"), 0.0);
}
