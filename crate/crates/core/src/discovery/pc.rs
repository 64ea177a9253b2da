use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::citest::{CiTest, Covariance};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const MAX_CONDITIONING: usize = 3;

/// Ordered groups of variables; edges never point from a later tier into an
/// earlier one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tiers {
    pub tiers: Vec<Vec<String>>,
    #[serde(default = "yes")]
    pub allow_within_tier_edges: bool,
}

fn yes() -> bool {
    true
}

impl Default for Tiers {
    fn default() -> Self {
        Tiers { tiers: vec![], allow_within_tier_edges: true }
    }
}

impl Tiers {
    pub fn new(tiers: Vec<Vec<String>>, allow_within_tier_edges: bool) -> Result<Self> {
        let t = Tiers { tiers, allow_within_tier_edges };
        let mut seen = std::collections::BTreeSet::new();
        for name in t.tiers.iter().flatten() {
            if !seen.insert(name) {
                return Err(Error::InvalidConfig(format!("`{name}` appears in two tiers")));
            }
        }
        Ok(t)
    }

    /// `{RC, FU, RD} < {RV} < {S}`, within-tier edges allowed.
    pub fn pouring() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Tiers { tiers: vec![s(&["RC", "FU", "RD"]), s(&["RV"]), s(&["S"])], allow_within_tier_edges: true }
    }

    pub fn tier_of(&self, node: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.iter().any(|n| n == node))
    }

    /// Reads either a bare list of lists or the object form.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Form {
            Lists(Vec<Vec<String>>),
            Full(Tiers),
        }
        let form: Form = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("tiers: {e}")))?;
        match form {
            Form::Lists(l) => Tiers::new(l, true),
            Form::Full(t) => Tiers::new(t.tiers, t.allow_within_tier_edges),
        }
    }

    pub fn validate_against(&self, names: &[String]) -> Result<()> {
        for n in self.tiers.iter().flatten() {
            if !names.contains(n) {
                return Err(Error::InvalidConfig(format!("tier member `{n}` is not a column")));
            }
        }
        Ok(())
    }

    fn forbids_adjacency(&self, a: &str, b: &str) -> bool {
        !self.allow_within_tier_edges && matches!((self.tier_of(a), self.tier_of(b)), (Some(x), Some(y)) if x == y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMark {
    Directed,
    Undirected,
}

/// Output of PC: a partially directed graph over named nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pdag {
    pub nodes: Vec<String>,
    /// `(a, b, Directed)` means `a -> b`; undirected edges have `a < b`.
    pub edges: Vec<(String, String, EdgeMark)>,
}

impl Pdag {
    pub fn skeleton(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|(a, b, _)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
            .collect();
        out.sort();
        out
    }

    pub fn directed(&self) -> Vec<(String, String)> {
        self.edges.iter().filter(|(_, _, m)| *m == EdgeMark::Directed).map(|(a, b, _)| (a.clone(), b.clone())).collect()
    }
}

/// Adjacency with orientation marks: `arrow[i][j]` means an arrowhead at `j`.
struct Marks {
    adj: Vec<Vec<bool>>,
    arrow: Vec<Vec<bool>>,
}

impl Marks {
    fn directed(&self, i: usize, j: usize) -> bool {
        self.adj[i][j] && self.arrow[i][j] && !self.arrow[j][i]
    }

    fn undirected(&self, i: usize, j: usize) -> bool {
        self.adj[i][j] && !self.arrow[i][j] && !self.arrow[j][i]
    }

    /// Orients `i -> j` if the edge is still undirected.
    fn orient(&mut self, i: usize, j: usize) -> bool {
        if self.undirected(i, j) {
            self.arrow[i][j] = true;
            true
        } else {
            false
        }
    }
}

/// Sepsets keyed by the ordered index pair.
type SepSets = BTreeMap<(usize, usize), Vec<usize>>;

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// PC skeleton search on a covariance matrix. Node indices follow `names`;
/// iteration runs over lexicographically sorted names.
fn skeleton(cov: &Covariance, names: &[String], test: &CiTest, tiers: &Tiers) -> Result<(Vec<Vec<bool>>, SepSets)> {
    let k = names.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let mut adj = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            adj[i][j] = i != j && !tiers.forbids_adjacency(&names[i], &names[j]);
        }
    }
    let mut sepsets = SepSets::new();
    for level in 0..=MAX_CONDITIONING {
        let mut any = false;
        for &x in &order {
            for &y in &order {
                if !adj[x][y] {
                    continue;
                }
                let others: Vec<usize> = order.iter().copied().filter(|&v| v != y && adj[x][v]).collect();
                if others.len() < level {
                    continue;
                }
                any = true;
                for s in combinations(&others, level) {
                    if cov.test(x, y, &s, test)?.independent {
                        adj[x][y] = false;
                        adj[y][x] = false;
                        sepsets.insert((x, y), s.clone());
                        sepsets.insert((y, x), s);
                        break;
                    }
                }
            }
        }
        if !any {
            break;
        }
    }
    Ok((adj, sepsets))
}

fn orient(names: &[String], adj: Vec<Vec<bool>>, sepsets: &SepSets, tiers: &Tiers) -> Marks {
    let k = names.len();
    let mut m = Marks { arrow: vec![vec![false; k]; k], adj };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));

    for &i in &order {
        for &j in &order {
            if let (Some(a), Some(b)) = (tiers.tier_of(&names[i]), tiers.tier_of(&names[j])) {
                if a < b {
                    m.orient(i, j);
                }
            }
        }
    }

    // v-structures x -> z <- y for nonadjacent x, y with z outside their sepset
    for &z in &order {
        for &x in &order {
            for &y in &order {
                if x >= y || x == z || y == z || m.adj[x][y] || !m.adj[x][z] || !m.adj[y][z] {
                    continue;
                }
                let sep = sepsets.get(&(x, y)).map_or(&[][..], |s| s.as_slice());
                if sep.contains(&z) {
                    continue;
                }
                // never reverse an edge already pointing out of z
                if !m.directed(z, x) {
                    m.arrow[x][z] = true;
                }
                if !m.directed(z, y) {
                    m.arrow[y][z] = true;
                }
            }
        }
    }

    // Meek rules 1-3 until nothing changes
    loop {
        let mut changed = false;
        for &a in &order {
            for &b in &order {
                if !m.undirected(a, b) {
                    continue;
                }
                // R1: c -> a - b, c and b nonadjacent
                let r1 = order.iter().any(|&c| c != b && m.directed(c, a) && !m.adj[c][b]);
                // R2: a -> c -> b
                let r2 = order.iter().any(|&c| m.directed(a, c) && m.directed(c, b));
                // R3: a - c -> b, a - d -> b, c and d nonadjacent
                let r3 = order.iter().any(|&c| {
                    m.undirected(a, c)
                        && m.directed(c, b)
                        && order.iter().any(|&d| d != c && m.undirected(a, d) && m.directed(d, b) && !m.adj[c][d])
                });
                if (r1 || r2 || r3) && m.orient(a, b) {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    m
}

fn to_pdag(names: &[String], m: &Marks) -> Pdag {
    let mut sorted: Vec<usize> = (0..names.len()).collect();
    sorted.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let mut edges = Vec::new();
    for (ai, &i) in sorted.iter().enumerate() {
        for &j in &sorted[ai + 1..] {
            if !m.adj[i][j] {
                continue;
            }
            let (a, b) = (names[i].clone(), names[j].clone());
            if m.directed(i, j) {
                edges.push((a, b, EdgeMark::Directed));
            } else if m.directed(j, i) {
                edges.push((b, a, EdgeMark::Directed));
            } else {
                // bidirected conflicts are reported as undirected
                edges.push((a, b, EdgeMark::Undirected));
            }
        }
    }
    Pdag { nodes: sorted.iter().map(|&i| names[i].clone()).collect(), edges }
}

/// PC from a precomputed covariance; `names` label its rows.
pub fn pc_from_covariance(cov: &Covariance, names: &[String], test: &CiTest, tiers: &Tiers) -> Result<Pdag> {
    let (adj, sepsets) = skeleton(cov, names, test, tiers)?;
    let marks = orient(names, adj, &sepsets, tiers);
    Ok(to_pdag(names, &marks))
}

/// PC over every column of `data`.
pub fn pc(data: &Dataset, test: &CiTest, tiers: &Tiers) -> Result<Pdag> {
    test.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    tiers.validate_against(data.names())?;
    pc_from_covariance(&Covariance::of(data)?, data.names(), test, tiers)
}

/// Skeleton from an exhaustive search: `a` and `b` stay adjacent unless some
/// subset of the other variables (up to [`MAX_CONDITIONING`]) separates them.
pub fn brute_force_skeleton(cov: &Covariance, names: &[String], test: &CiTest) -> Result<Vec<(String, String)>> {
    let k = names.len();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let rest: Vec<usize> = (0..k).filter(|&v| v != a && v != b).collect();
            let mut separated = false;
            'search: for size in 0..=MAX_CONDITIONING.min(rest.len()) {
                for s in combinations(&rest, size) {
                    if cov.test(a, b, &s, test)?.independent {
                        separated = true;
                        break 'search;
                    }
                }
            }
            if !separated {
                let (x, y) = (names[a].clone(), names[b].clone());
                out.push(if x < y { (x, y) } else { (y, x) });
            }
        }
    }
    out.sort();
    Ok(out)
}
