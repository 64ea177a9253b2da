use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::citest::{CiTest, Covariance};
use super::pc::{pc_from_covariance, EdgeMark, Pdag, Tiers};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, Node, VariableKind};
use crate::rng::{derive_seed, seeded};

/// How often each edge type appeared between `node_a` and `node_b`
/// (`node_a < node_b`). `right` is `node_a -> node_b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeFrequency {
    pub right: f64,
    pub left: f64,
    pub undirected: f64,
    pub none: f64,
}

impl EdgeFrequency {
    pub fn total(&self) -> f64 {
        self.right + self.left + self.undirected + self.none
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeFrequencyTable {
    pub rows: BTreeMap<(String, String), EdgeFrequency>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    node_a: String,
    node_b: String,
    right: f64,
    left: f64,
    undirected: f64,
    none: f64,
}

impl EdgeFrequencyTable {
    pub fn get(&self, a: &str, b: &str) -> Option<EdgeFrequency> {
        if a <= b {
            self.rows.get(&(a.to_string(), b.to_string())).copied()
        } else {
            self.rows.get(&(b.to_string(), a.to_string())).map(|f| EdgeFrequency { right: f.left, left: f.right, ..*f })
        }
    }

    /// Frequency of `a -> b`.
    pub fn directed(&self, a: &str, b: &str) -> f64 {
        self.get(a, b).map_or(0.0, |f| f.right)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for ((a, b), f) in &self.rows {
            w.serialize(Row {
                node_a: a.clone(),
                node_b: b.clone(),
                right: f.right,
                left: f.left,
                undirected: f.undirected,
                none: f.none,
            })?;
        }
        if self.rows.is_empty() {
            w.write_record(["node_a", "node_b", "right", "left", "undirected", "none"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows = BTreeMap::new();
        for rec in csv::Reader::from_reader(input).deserialize() {
            let r: Row = rec.map_err(|e| Error::Schema(e.to_string()))?;
            let f = EdgeFrequency { right: r.right, left: r.left, undirected: r.undirected, none: r.none };
            let key = if r.node_a <= r.node_b { (r.node_a, r.node_b) } else { (r.node_b, r.node_a) };
            rows.insert(key, f);
        }
        Ok(EdgeFrequencyTable { rows })
    }
}

fn tally(graphs: &[Pdag], names: &[String]) -> EdgeFrequencyTable {
    let mut sorted = names.to_vec();
    sorted.sort();
    let mut counts: BTreeMap<(String, String), [usize; 4]> = BTreeMap::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            counts.insert((a.clone(), b.clone()), [0; 4]);
        }
    }
    for g in graphs {
        let mut seen = std::collections::BTreeSet::new();
        for (a, b, mark) in &g.edges {
            let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            let slot = match mark {
                EdgeMark::Undirected => 2,
                EdgeMark::Directed if a < b => 0,
                EdgeMark::Directed => 1,
            };
            counts.get_mut(&key).expect("known pair")[slot] += 1;
            seen.insert(key);
        }
        for (key, c) in counts.iter_mut() {
            if !seen.contains(key) {
                c[3] += 1;
            }
        }
    }
    let n = graphs.len() as f64;
    let rows = counts
        .into_iter()
        .map(|(k, c)| {
            let f = |i: usize| c[i] as f64 / n;
            (k, EdgeFrequency { right: f(0), left: f(1), undirected: f(2), none: f(3) })
        })
        .collect();
    EdgeFrequencyTable { rows }
}

/// Runs PC on `n_boot` row resamples; resample `b` uses seed
/// `derive_seed(seed, b)`.
pub fn bootstrap(data: &Dataset, n_boot: usize, test: &CiTest, tiers: &Tiers, seed: u64) -> Result<EdgeFrequencyTable> {
    test.validate()?;
    if n_boot == 0 {
        return Err(Error::InvalidConfig("n_boot must be at least 1".into()));
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    tiers.validate_against(data.names())?;
    let graphs = (0..n_boot as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded(derive_seed(seed, b));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let cov = Covariance::of(&data.select_rows(&rows))?;
            pc_from_covariance(&cov, data.names(), test, tiers)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(&graphs, data.names()))
}

/// Edges whose most frequent type is above `threshold`. Stable undirected
/// edges point from the earlier tier to the later one.
pub fn stable_edges(table: &EdgeFrequencyTable, threshold: f64, tiers: &Tiers) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for ((a, b), f) in &table.rows {
        let (best, freq) = [(0, f.right), (1, f.left), (2, f.undirected), (3, f.none)]
            .into_iter()
            .fold((3, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        if freq <= threshold {
            continue;
        }
        match best {
            0 => out.push((a.clone(), b.clone())),
            1 => out.push((b.clone(), a.clone())),
            2 => match (tiers.tier_of(a), tiers.tier_of(b)) {
                (Some(x), Some(y)) if x < y => out.push((a.clone(), b.clone())),
                (Some(x), Some(y)) if x > y => out.push((b.clone(), a.clone())),
                _ => return Err(Error::UnresolvedUndirectedEdge(a.clone(), b.clone())),
            },
            _ => {}
        }
    }
    Ok(out)
}

/// Stable edges as a causal graph over `nodes`.
pub fn stable_graph(
    table: &EdgeFrequencyTable,
    threshold: f64,
    tiers: &Tiers,
    nodes: Vec<Node>,
) -> Result<CausalGraph> {
    CausalGraph::new(nodes, stable_edges(table, threshold, tiers)?)
}

/// Node kinds read off data: 0/1 columns are binary, others continuous over
/// their observed range.
pub fn infer_nodes(data: &Dataset) -> Vec<Node> {
    data.names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let col = data.column_at(i);
            let kind = if col.iter().all(|&v| v == 0.0 || v == 1.0) {
                VariableKind::Binary
            } else {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                VariableKind::continuous(lo, if hi > lo { hi } else { lo + 1.0 })
            };
            Node::new(name.clone(), kind)
        })
        .collect()
}
