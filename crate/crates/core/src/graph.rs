//! Causal DAG over named variables.
//!
//! Nodes are addressed by name everywhere outside this module; indices are an
//! internal detail and never serialized.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard cap on [`CausalGraph::directed_paths`] output.
pub const MAX_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariableKind {
    Continuous { min: f64, max: f64 },
    Binary,
}

impl VariableKind {
    pub fn continuous(min: f64, max: f64) -> Self {
        VariableKind::Continuous { min, max }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, VariableKind::Binary)
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            VariableKind::Continuous { min, max } => Some((min, max)),
            VariableKind::Binary => None,
        }
    }

    /// Whether `value` is admissible for a variable of this kind.
    pub fn admits(&self, value: Value) -> bool {
        match (*self, value) {
            (VariableKind::Continuous { min, max }, Value::Real(v)) => v.is_finite() && v >= min && v <= max,
            (VariableKind::Binary, Value::Bool(_)) => true,
            _ => false,
        }
    }
}

/// A concrete value of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Real(f64),
}

impl Value {
    /// Numeric encoding used as network input; booleans map to 0/1.
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Real(v) => v,
            Value::Bool(b) => f64::from(u8::from(b)),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: VariableKind,
}

impl Node {
    pub fn new(name: impl Into<String>, kind: VariableKind) -> Self {
        Node { name: name.into(), kind }
    }
}

/// A validated directed acyclic graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        let mine: BTreeSet<_> = self.edges.iter().collect();
        let theirs: BTreeSet<_> = other.edges.iter().collect();
        self.nodes == other.nodes && mine == theirs
    }
}

impl CausalGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<(String, String)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if let VariableKind::Continuous { min, max } = n.kind {
                if !(min < max) {
                    return Err(Error::InvalidSupport(n.name.clone()));
                }
            }
            if index.insert(n.name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(n.name.clone()));
            }
        }

        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for (from, to) in &edges {
            let f = *index.get(from).ok_or_else(|| Error::UnknownNode(from.clone()))?;
            let t = *index.get(to).ok_or_else(|| Error::UnknownNode(to.clone()))?;
            if f == t {
                return Err(Error::SelfLoop(from.clone()));
            }
            if !seen.insert((f, t)) {
                return Err(Error::DuplicateEdge(from.clone(), to.clone()));
            }
            parents[t].push(f);
            children[f].push(t);
        }
        // parents in declaration order of nodes; children sorted by name for
        // deterministic path enumeration
        for p in &mut parents {
            p.sort_unstable();
        }
        for c in &mut children {
            c.sort_by(|&a, &b| nodes[a].name.cmp(&nodes[b].name));
        }

        let graph = CausalGraph { nodes, edges, index, parents, children };
        if let Some(cycle) = graph.find_cycle() {
            return Err(Error::CycleDetected(cycle));
        }
        Ok(graph)
    }

    pub fn empty() -> Self {
        CausalGraph::new(Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        CausalGraph::new(self.nodes.clone(), self.edges.clone()).map(|_| ())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn kind(&self, name: &str) -> Result<VariableKind> {
        Ok(self.nodes[self.idx(name)?].kind)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&f), Some(&t)) => self.children[f].contains(&t),
            _ => false,
        }
    }

    /// Parents of `name`, in node declaration order.
    pub fn parents(&self, name: &str) -> Result<Vec<String>> {
        let i = self.idx(name)?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].name.clone()).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<String>> {
        let i = self.idx(name)?;
        Ok(self.children[i].iter().map(|&c| self.nodes[c].name.clone()).collect())
    }

    /// All strict ancestors of `name`.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self.idx(name)?];
        while let Some(i) = stack.pop() {
            for &p in &self.parents[i] {
                if out.insert(self.nodes[p].name.clone()) {
                    stack.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Kahn's algorithm; among ready nodes the lexicographically smallest name
    /// goes first.
    pub fn topological_order(&self) -> Vec<String> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&str, usize)> =
            indeg.iter().enumerate().filter(|(_, &d)| d == 0).map(|(i, _)| (self.nodes[i].name.as_str(), i)).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some((name, i)) = ready.pop_first() {
            order.push(name.to_string());
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((self.nodes[c].name.as_str(), c));
                }
            }
        }
        order
    }

    /// Every simple directed path from `x` to `y`, depth-first with children
    /// visited in name order.
    pub fn directed_paths(&self, x: &str, y: &str) -> Result<Vec<Vec<String>>> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        if xi == yi {
            return Err(Error::PathInvalid(format!("source and target are both `{x}`")));
        }
        let mut paths = Vec::new();
        let mut stack = vec![xi];
        self.paths_from(xi, yi, &mut stack, &mut paths)?;
        Ok(paths)
    }

    fn paths_from(&self, at: usize, target: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<String>>) -> Result<()> {
        if at == target {
            if out.len() == MAX_PATHS {
                return Err(Error::TooManyPaths(MAX_PATHS));
            }
            out.push(stack.iter().map(|&i| self.nodes[i].name.clone()).collect());
            return Ok(());
        }
        for &c in &self.children[at] {
            stack.push(c);
            self.paths_from(c, target, stack, out)?;
            stack.pop();
        }
        Ok(())
    }

    /// Splits the graph around a directed path ending in `outcome`: `z` holds
    /// the interior (mediator) nodes, `w` everything off the path.
    pub fn partition_for_path(&self, path: &[String], outcome: &str) -> Result<PathPartition> {
        if path.len() < 2 {
            return Err(Error::PathInvalid("a path needs at least two nodes".into()));
        }
        if path.last().map(String::as_str) != Some(outcome) {
            return Err(Error::PathInvalid(format!("path does not end at `{outcome}`")));
        }
        let mut on_path = BTreeSet::new();
        for pair in path.windows(2) {
            if !self.has_edge(&pair[0], &pair[1]) {
                return Err(Error::PathInvalid(format!("no edge {} -> {}", pair[0], pair[1])));
            }
        }
        for n in path {
            if !on_path.insert(n.as_str()) {
                return Err(Error::PathInvalid(format!("`{n}` repeats")));
            }
        }
        let z: Vec<String> = path[1..path.len() - 1].to_vec();
        let w = self.nodes.iter().filter(|n| !on_path.contains(n.name.as_str())).map(|n| n.name.clone()).collect();
        Ok(PathPartition { cause: path[0].clone(), outcome: outcome.to_string(), w, z })
    }

    fn idx(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        fn visit(g: &CausalGraph, v: usize, state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<String>> {
            state[v] = 1;
            stack.push(v);
            for &c in &g.children[v] {
                if state[c] == 1 {
                    let start = stack.iter().position(|&s| s == c).unwrap();
                    let mut cyc: Vec<String> = stack[start..].iter().map(|&i| g.nodes[i].name.clone()).collect();
                    cyc.push(g.nodes[c].name.clone());
                    return Some(cyc);
                }
                if state[c] == 0 {
                    if let Some(cyc) = visit(g, c, state, stack) {
                        return Some(cyc);
                    }
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        (0..n).find_map(|v| if state[v] == 0 { visit(self, v, &mut state, &mut stack) } else { None })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPartition {
    pub cause: String,
    pub outcome: String,
    /// Off-path variables, in node declaration order.
    pub w: Vec<String>,
    /// Mediators, in path order.
    pub z: Vec<String>,
}

/// A set of do-assignments keyed by node name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InterventionSet {
    assignments: BTreeMap<String, Value>,
}

impl InterventionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, node: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set(node, value);
        self
    }

    pub fn set(&mut self, node: impl Into<String>, value: impl Into<Value>) {
        self.assignments.insert(node.into(), value.into());
    }

    pub fn remove(&mut self, node: &str) -> Option<Value> {
        self.assignments.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<Value> {
        self.assignments.get(node).copied()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.assignments.contains_key(node)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Value)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Checks every key names a node of `graph` and every value lies in that
    /// node's support.
    pub fn validate(&self, graph: &CausalGraph) -> Result<()> {
        for (name, value) in self.iter() {
            let kind = graph
                .kind(name)
                .map_err(|_| Error::InvalidIntervention(format!("`{name}` is not a node of the graph")))?;
            if !kind.admits(value) {
                return Err(Error::InvalidIntervention(format!("value {value} is outside the support of `{name}`")));
            }
        }
        Ok(())
    }
}

impl<K: Into<String>, V: Into<Value>> FromIterator<(K, V)> for InterventionSet {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut set = InterventionSet::new();
        for (k, v) in iter {
            set.set(k, v);
        }
        set
    }
}

// -- JSON form ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NodeJson {
    name: String,
    kind: String,
    support: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    nodes: Vec<NodeJson>,
    edges: Vec<[String; 2]>,
}

impl Serialize for CausalGraph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                VariableKind::Continuous { min, max } => {
                    NodeJson { name: n.name.clone(), kind: "continuous".into(), support: Some([min, max]) }
                }
                VariableKind::Binary => NodeJson { name: n.name.clone(), kind: "binary".into(), support: None },
            })
            .collect();
        let edges = self.edges.iter().map(|(a, b)| [a.clone(), b.clone()]).collect();
        GraphJson { nodes, edges }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CausalGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GraphJson::deserialize(d)?;
        let mut nodes = Vec::with_capacity(raw.nodes.len());
        for n in raw.nodes {
            let kind = match (n.kind.as_str(), n.support) {
                ("continuous", Some([min, max])) => VariableKind::Continuous { min, max },
                ("continuous", None) => return Err(D::Error::custom(format!("node `{}` needs a support", n.name))),
                ("binary", _) => VariableKind::Binary,
                (other, _) => return Err(D::Error::custom(format!("unknown variable kind `{other}`"))),
            };
            nodes.push(Node { name: n.name, kind });
        }
        let edges = raw.edges.into_iter().map(|[a, b]| (a, b)).collect();
        CausalGraph::new(nodes, edges).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pouring() -> CausalGraph {
        let c = VariableKind::continuous(0.0, 3.0);
        CausalGraph::new(
            vec![
                Node::new("RC", c),
                Node::new("FU", c),
                Node::new("RD", c),
                Node::new("RV", c),
                Node::new("S", VariableKind::Binary),
            ],
            [("RC", "RV"), ("FU", "RV"), ("FU", "S"), ("RD", "S"), ("RV", "S")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
        .unwrap()
    }

    fn toy(names: &[&str], edges: &[(&str, &str)]) -> Result<CausalGraph> {
        CausalGraph::new(
            names.iter().map(|n| Node::new(*n, VariableKind::continuous(0.0, 1.0))).collect(),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        )
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pouring_graph_validates() {
        assert!(pouring().validate().is_ok());
        assert!(CausalGraph::empty().validate().is_ok());
    }

    #[test]
    fn two_cycle_is_rejected() {
        match toy(&["A", "B"], &[("A", "B"), ("B", "A")]) {
            Err(Error::CycleDetected(c)) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(toy(&["A"], &[("A", "B")]), Err(Error::UnknownNode(n)) if n == "B"));
        assert!(matches!(toy(&["A", "B"], &[("A", "B"), ("A", "B")]), Err(Error::DuplicateEdge(..))));
        assert!(matches!(toy(&["A"], &[("A", "A")]), Err(Error::SelfLoop(_))));
        assert!(matches!(toy(&["A", "A"], &[]), Err(Error::DuplicateNode(_))));
        let bad = CausalGraph::new(vec![Node::new("X", VariableKind::continuous(1.0, 1.0))], vec![]);
        assert!(matches!(bad, Err(Error::InvalidSupport(_))));
    }

    #[test]
    fn topological_orders() {
        assert_eq!(pouring().topological_order(), strs(&["FU", "RC", "RD", "RV", "S"]));
        assert_eq!(toy(&["only"], &[]).unwrap().topological_order(), strs(&["only"]));
        let chain = toy(&["C", "B", "A"], &[("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(chain.topological_order(), strs(&["A", "B", "C"]));
    }

    #[test]
    fn pouring_order_is_one_of_the_brute_force_orders() {
        // enumerate all 120 permutations and keep the valid ones
        let g = pouring();
        let names: Vec<String> = g.node_names().map(String::from).collect();
        let mut valid = Vec::new();
        let mut perm: Vec<usize> = (0..5).collect();
        permute(&mut perm, 0, &mut |p| {
            let order: Vec<String> = p.iter().map(|&i| names[i].clone()).collect();
            let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
            if g.edges().iter().all(|(a, b)| pos(a) < pos(b)) {
                valid.push(order);
            }
        });
        assert!(valid.iter().all(|o| o.last().unwrap() == "S"));
        assert!(valid.contains(&g.topological_order()));
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn pouring_paths() {
        let g = pouring();
        assert_eq!(g.directed_paths("FU", "S").unwrap(), vec![strs(&["FU", "RV", "S"]), strs(&["FU", "S"])]);
        assert_eq!(g.directed_paths("RD", "S").unwrap(), vec![strs(&["RD", "S"])]);
        assert!(g.directed_paths("S", "RD").unwrap().is_empty());
        assert!(matches!(g.directed_paths("S", "S"), Err(Error::PathInvalid(_))));
    }

    #[test]
    fn path_cap_is_enforced() {
        // layered graph with 3 nodes per layer, 10 layers: 3^9 > 10_000 paths
        let mut names = vec!["src".to_string()];
        let mut edges = Vec::new();
        let mut prev = vec!["src".to_string()];
        for layer in 0..9 {
            let cur: Vec<String> = (0..3).map(|k| format!("n{layer}_{k}")).collect();
            for p in &prev {
                for c in &cur {
                    edges.push((p.clone(), c.clone()));
                }
            }
            names.extend(cur.iter().cloned());
            prev = cur;
        }
        names.push("dst".into());
        for p in &prev {
            edges.push((p.clone(), "dst".into()));
        }
        let g =
            CausalGraph::new(names.into_iter().map(|n| Node::new(n, VariableKind::Binary)).collect(), edges).unwrap();
        assert!(matches!(g.directed_paths("src", "dst"), Err(Error::TooManyPaths(MAX_PATHS))));
    }

    #[test]
    fn partitions() {
        let g = pouring();
        let p = g.partition_for_path(&strs(&["RD", "S"]), "S").unwrap();
        assert_eq!(p.w, strs(&["RC", "FU", "RV"]));
        assert!(p.z.is_empty());
        let p = g.partition_for_path(&strs(&["FU", "RV", "S"]), "S").unwrap();
        assert_eq!(p.w, strs(&["RC", "RD"]));
        assert_eq!(p.z, strs(&["RV"]));

        let two = toy(&["A", "B"], &[("A", "B")]).unwrap();
        let p = two.partition_for_path(&strs(&["A", "B"]), "B").unwrap();
        assert!(p.w.is_empty() && p.z.is_empty());

        assert!(matches!(g.partition_for_path(&strs(&["RC", "S"]), "S"), Err(Error::PathInvalid(_))));
        assert!(matches!(g.partition_for_path(&strs(&["RD", "S"]), "RV"), Err(Error::PathInvalid(_))));
    }

    #[test]
    fn json_shape() {
        let g = pouring();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["nodes"][4]["kind"], "binary");
        assert_eq!(v["nodes"][0]["support"][1], 3.0);
        assert_eq!(v["edges"][0], serde_json::json!(["RC", "RV"]));
        let back: CausalGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);

        let cyclic = serde_json::json!({
            "nodes": [{"name": "A", "kind": "binary"}, {"name": "B", "kind": "binary"}],
            "edges": [["A", "B"], ["B", "A"]]
        });
        assert!(serde_json::from_value::<CausalGraph>(cyclic).is_err());
    }

    #[test]
    fn intervention_validation() {
        let g = pouring();
        assert!(InterventionSet::new().with("RD", 1.0).validate(&g).is_ok());
        assert!(InterventionSet::new().with("RD", 9.0).validate(&g).is_err());
        assert!(InterventionSet::new().with("RD", true).validate(&g).is_err());
        assert!(InterventionSet::new().with("XX", 1.0).validate(&g).is_err());
        assert!(InterventionSet::new().with("S", false).validate(&g).is_ok());
    }
}
