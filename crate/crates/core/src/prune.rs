//! Removal of linearly correlated lab parameters.
//!
//! Parameters within one measurement group are linked when their Pearson
//! coefficient reaches the threshold in absolute value. Each connected
//! component is then reduced independently:
//!
//! - a lone node is kept;
//! - of a pair, the lexicographically smaller name is kept;
//! - if every node has the same degree, the node with the largest sum of
//!   `|r|` over its edges is kept;
//! - otherwise the highest-degree node is kept as a hub, together with every
//!   neighbour of the hub that has a second edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::{self, CaseRecord, IngestError};

/// Laboratory compartment a parameter is measured in. Parameters from
/// different groups are never correlated with each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterGroup {
    #[serde(rename = "biochem")]
    Biochemical,
    Hematologic,
}

impl ParameterGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ParameterGroup::Biochemical => "biochem",
            ParameterGroup::Hematologic => "hematologic",
        }
    }
}

impl fmt::Display for ParameterGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParameterGroup {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "biochem" | "biochemical" => Ok(ParameterGroup::Biochemical),
            "hematologic" => Ok(ParameterGroup::Hematologic),
            other => Err(IngestError::UnknownGroup(other.to_owned())),
        }
    }
}

/// Parameter-to-group assignment, read from a `parameter,group` CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterGroups(BTreeMap<String, ParameterGroup>);

impl ParameterGroups {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, parameter: impl Into<String>, group: ParameterGroup) {
        self.0.insert(parameter.into(), group);
    }

    pub fn group_of(&self, parameter: &str) -> Option<ParameterGroup> {
        self.0.get(parameter).copied()
    }

    pub fn members(&self, group: ParameterGroup) -> Vec<String> {
        self.0
            .iter()
            .filter(|(_, g)| **g == group)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let p = headers
            .iter()
            .position(|h| h == "parameter")
            .ok_or(IngestError::MissingColumn("parameter"))?;
        let g = headers
            .iter()
            .position(|h| h == "group")
            .ok_or(IngestError::MissingColumn("group"))?;
        let mut out = ParameterGroups::new();
        for record in rdr.records() {
            let record = record?;
            let name = record.get(p).unwrap_or("").to_owned();
            if out.0.contains_key(&name) {
                return Err(IngestError::DuplicateParameter(name));
            }
            out.insert(name, record.get(g).unwrap_or("").parse()?);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_reader(ingest::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,group\n");
        for (p, g) in &self.0 {
            out.push_str(&format!("{p},{g}\n"));
        }
        out
    }
}

/// Symmetric matrix of Pearson coefficients; `None` where the data cannot
/// support one.
#[derive(Debug, Clone, PartialEq)]
pub struct PearsonMatrix {
    pub params: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl PearsonMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.r[a][b]
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson coefficients over pairwise-complete cases. An entry is absent
/// when fewer than `min_pairs` cases have both values or either column is
/// constant over those cases. The diagonal is always absent.
pub fn pearson_matrix(cases: &[CaseRecord], params: &[String], min_pairs: usize) -> PearsonMatrix {
    let k = params.len();
    let mut r = vec![vec![None; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = cases
                .iter()
                .filter_map(|c| match (c.values.get(&params[i]), c.values.get(&params[j])) {
                    (Some(Some(x)), Some(Some(y))) => Some((*x, *y)),
                    _ => None,
                })
                .unzip();
            if xs.len() < min_pairs.max(2) {
                continue;
            }
            let v = pearson(&xs, &ys);
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    PearsonMatrix {
        params: params.to_vec(),
        r,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    pub group: ParameterGroup,
    pub threshold: f64,
    nodes: BTreeSet<String>,
    edges: Vec<Edge>,
}

impl CorrelationGraph {
    /// An edgeless graph; edges are added with [`CorrelationGraph::add_edge`].
    pub fn new(group: ParameterGroup, threshold: f64, nodes: impl IntoIterator<Item = String>) -> Self {
        CorrelationGraph {
            group,
            threshold,
            nodes: nodes.into_iter().collect(),
            edges: Vec::new(),
        }
    }

    /// Adds an undirected edge if `|r|` reaches the threshold. Self-loops
    /// and unknown nodes are ignored; returns whether an edge was added.
    pub fn add_edge(&mut self, a: &str, b: &str, r: f64) -> bool {
        if a == b || !self.nodes.contains(a) || !self.nodes.contains(b) || r.abs() < self.threshold {
            return false;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.retain(|e| !(e.a == a && e.b == b));
        self.edges.push(Edge {
            a: a.to_owned(),
            b: b.to_owned(),
            r,
        });
        self.edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        true
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn neighbours(&self) -> BTreeMap<&str, Vec<(&str, f64)>> {
        let mut adj: BTreeMap<&str, Vec<(&str, f64)>> = self.nodes.iter().map(|n| (n.as_str(), Vec::new())).collect();
        for e in &self.edges {
            adj.get_mut(e.a.as_str())
                .expect("edge endpoint is a node")
                .push((e.b.as_str(), e.r));
            adj.get_mut(e.b.as_str())
                .expect("edge endpoint is a node")
                .push((e.a.as_str(), e.r));
        }
        adj
    }
}

/// Links every pair of `matrix` parameters whose coefficient satisfies
/// `|r| ≥ threshold`. Only parameters of the matrix become nodes, so a matrix
/// built from one group's parameters yields that group's graph.
pub fn build_graph(matrix: &PearsonMatrix, threshold: f64, group: ParameterGroup) -> CorrelationGraph {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold must lie in (0, 1]");
    let mut g = CorrelationGraph::new(group, threshold, matrix.params.iter().cloned());
    for i in 0..matrix.params.len() {
        for j in (i + 1)..matrix.params.len() {
            if let Some(r) = matrix.get(i, j) {
                g.add_edge(&matrix.params[i], &matrix.params[j], r);
            }
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    Singleton,
    Pair,
    UniformDegree,
    Hub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDecision {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub rule_applied: PruneRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResult {
    pub group: ParameterGroup,
    pub components: Vec<ComponentDecision>,
    pub removed_all: Vec<String>,
}

impl PruneResult {
    pub fn kept(&self) -> BTreeSet<&str> {
        self.components
            .iter()
            .flat_map(|c| c.kept.iter().map(String::as_str))
            .collect()
    }

    pub fn removed(&self) -> BTreeSet<&str> {
        self.removed_all.iter().map(String::as_str).collect()
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string_shallow(self, 4)
    }

    /// One removed parameter per line.
    pub fn removal_list(&self) -> String {
        self.removed_all.iter().map(|p| format!("{p}\n")).collect()
    }
}

fn components<'a>(adj: &BTreeMap<&'a str, Vec<(&'a str, f64)>>) -> Vec<Vec<&'a str>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &(m, _) in &adj[n] {
                if seen.insert(m) {
                    comp.push(m);
                    stack.push(m);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Reduces each connected component to the parameters worth keeping.
pub fn prune_components(g: &CorrelationGraph) -> PruneResult {
    let adj = g.neighbours();
    let degree = |n: &str| adj[n].len();
    let strength = |n: &str| adj[n].iter().map(|(_, r)| r.abs()).sum::<f64>();
    // Larger degree, then larger |r| sum, then smaller name.
    let rank = |a: &&str, b: &&str| {
        degree(b)
            .cmp(&degree(a))
            .then(strength(b).total_cmp(&strength(a)))
            .then(a.cmp(b))
    };

    let mut decisions = Vec::new();
    for comp in components(&adj) {
        let (kept, rule): (BTreeSet<&str>, PruneRule) = match comp.len() {
            1 => (comp.iter().copied().collect(), PruneRule::Singleton),
            2 => ([comp[0]].into_iter().collect(), PruneRule::Pair),
            _ if comp.iter().all(|n| degree(n) == degree(comp[0])) => {
                let best = *comp.iter().min_by(|a, b| rank(a, b)).expect("component is non-empty");
                ([best].into_iter().collect(), PruneRule::UniformDegree)
            }
            _ => {
                let hub = *comp.iter().min_by(|a, b| rank(a, b)).expect("component is non-empty");
                let mut kept: BTreeSet<&str> = adj[hub].iter().map(|(n, _)| *n).filter(|n| degree(n) >= 2).collect();
                kept.insert(hub);
                (kept, PruneRule::Hub)
            }
        };
        let members: BTreeSet<&str> = comp.iter().copied().collect();
        decisions.push(ComponentDecision {
            nodes: comp.iter().map(|s| s.to_string()).collect(),
            edges: g
                .edges
                .iter()
                .filter(|e| members.contains(e.a.as_str()))
                .cloned()
                .collect(),
            kept: kept.iter().map(|s| s.to_string()).collect(),
            removed: comp
                .iter()
                .filter(|n| !kept.contains(*n))
                .map(|s| s.to_string())
                .collect(),
            rule_applied: rule,
        });
    }
    let removed_all: BTreeSet<String> = decisions.iter().flat_map(|d| d.removed.iter().cloned()).collect();
    PruneResult {
        group: g.group,
        components: decisions,
        removed_all: removed_all.into_iter().collect(),
    }
}

/// Runs the whole pruning step for one group: correlation matrix over the
/// group's parameters, thresholded graph, per-component reduction.
pub fn prune_group(
    cases: &[CaseRecord],
    params: &[String],
    group: ParameterGroup,
    threshold: f64,
    min_pairs: usize,
) -> PruneResult {
    let matrix = pearson_matrix(cases, params, min_pairs);
    prune_components(&build_graph(&matrix, threshold, group))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cases_from_columns(columns: &[(&str, Vec<Option<f64>>)]) -> Vec<CaseRecord> {
        let n = columns[0].1.len();
        (0..n)
            .map(|i| CaseRecord {
                case_id: format!("c{i}"),
                outcome: "1".into(),
                values: columns.iter().map(|(p, v)| (p.to_string(), v[i])).collect(),
            })
            .collect()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_correlations() {
        let x: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let cases = cases_from_columns(&[
            ("X", x.clone()),
            ("Y", x.iter().map(|v| v.map(|v| 2.0 * v + 1.0)).collect()),
            ("Z", x.iter().map(|v| v.map(|v| -v)).collect()),
            ("K", vec![Some(3.0); 10]),
        ]);
        let m = pearson_matrix(&cases, &names(&["X", "Y", "Z", "K"]), 10);
        assert!((m.get(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.get(0, 2).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(m.get(0, 3), None);
        assert_eq!(m.get(0, 0), None);
    }

    #[test]
    fn too_few_complete_pairs() {
        let x: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let mut y = x.clone();
        y[0] = None;
        let cases = cases_from_columns(&[("X", x), ("Y", y)]);
        assert_eq!(pearson_matrix(&cases, &names(&["X", "Y"]), 10).get(0, 1), None);
        assert!(pearson_matrix(&cases, &names(&["X", "Y"]), 9).get(0, 1).is_some());
    }

    fn matrix(params: &[&str], entries: &[(&str, &str, f64)]) -> PearsonMatrix {
        let params = names(params);
        let mut r = vec![vec![None; params.len()]; params.len()];
        for (a, b, v) in entries {
            let i = params.iter().position(|p| p == a).unwrap();
            let j = params.iter().position(|p| p == b).unwrap();
            r[i][j] = Some(*v);
            r[j][i] = Some(*v);
        }
        PearsonMatrix { params, r }
    }

    #[test]
    fn threshold_filter() {
        let m = matrix(&["A", "B", "C"], &[("A", "B", 0.6), ("A", "C", 0.3)]);
        let g = build_graph(&m, 0.5, ParameterGroup::Biochemical);
        assert_eq!(g.edges().len(), 1);
        assert_eq!((g.edges()[0].a.as_str(), g.edges()[0].b.as_str()), ("A", "B"));
        let m = matrix(&["A", "B"], &[("A", "B", -0.55)]);
        assert_eq!(build_graph(&m, 0.5, ParameterGroup::Biochemical).edges().len(), 1);
        let empty = build_graph(&matrix(&["A", "B"], &[]), 0.5, ParameterGroup::Hematologic);
        assert!(empty.edges().is_empty());
        assert_eq!(prune_components(&empty).removed_all, Vec::<String>::new());
    }

    #[test]
    fn pair_keeps_smaller_name() {
        let m = matrix(&["Q", "P"], &[("P", "Q", 0.7)]);
        let res = prune_components(&build_graph(&m, 0.5, ParameterGroup::Biochemical));
        assert_eq!(res.components[0].kept, names(&["P"]));
        assert_eq!(res.removed_all, names(&["Q"]));
        assert_eq!(res.components[0].rule_applied, PruneRule::Pair);
    }

    #[test]
    fn triangle_keeps_strongest() {
        // |r| sums: P 0.6+0.7=1.3, Q 0.6+0.5=1.1, R 0.7+0.5=1.2
        let m = matrix(&["P", "Q", "R"], &[("P", "Q", 0.6), ("P", "R", -0.7), ("Q", "R", 0.5)]);
        let res = prune_components(&build_graph(&m, 0.5, ParameterGroup::Biochemical));
        assert_eq!(res.components[0].kept, names(&["P"]));
        assert_eq!(res.removed_all, names(&["Q", "R"]));
        assert_eq!(res.components[0].rule_applied, PruneRule::UniformDegree);
    }

    #[test]
    fn star_plus_edge() {
        let m = matrix(
            &["A", "B", "C", "D"],
            &[("A", "B", 0.8), ("A", "C", 0.8), ("A", "D", 0.8), ("B", "C", 0.6)],
        );
        let res = prune_components(&build_graph(&m, 0.5, ParameterGroup::Biochemical));
        assert_eq!(res.components[0].kept, names(&["A", "B", "C"]));
        assert_eq!(res.removed_all, names(&["D"]));
        assert_eq!(res.components[0].rule_applied, PruneRule::Hub);
    }

    #[test]
    fn node_away_from_hub_is_removed() {
        // A hub of B, C, D; E hangs off D only.
        let m = matrix(
            &["A", "B", "C", "D", "E"],
            &[("A", "B", 0.9), ("A", "C", 0.9), ("A", "D", 0.9), ("D", "E", 0.9)],
        );
        let res = prune_components(&build_graph(&m, 0.5, ParameterGroup::Biochemical));
        assert_eq!(res.components[0].kept, names(&["A", "D"]));
        assert_eq!(res.removed_all, names(&["B", "C", "E"]));
    }

    #[test]
    fn groups_csv() {
        let g = ParameterGroups::from_reader("parameter,group\nAALB,biochem\nHCT,hematologic\n".as_bytes()).unwrap();
        assert_eq!(g.members(ParameterGroup::Biochemical), names(&["AALB"]));
        assert_eq!(ParameterGroups::from_reader(g.to_csv().as_bytes()).unwrap(), g);
        assert!(ParameterGroups::from_reader("parameter,group\nX,plasma\n".as_bytes()).is_err());
    }

    #[allow(clippy::needless_range_loop)]
    fn arb_matrix() -> impl Strategy<Value = PearsonMatrix> {
        (2usize..8).prop_flat_map(|k| {
            prop::collection::vec(prop::option::of(-1.0f64..1.0), k * (k - 1) / 2).prop_map(move |vals| {
                let params: Vec<String> = (0..k).map(|i| format!("P{i}")).collect();
                let mut r = vec![vec![None; k]; k];
                let mut it = vals.into_iter();
                for i in 0..k {
                    for j in (i + 1)..k {
                        let v = it.next().unwrap();
                        r[i][j] = v;
                        r[j][i] = v;
                    }
                }
                PearsonMatrix { params, r }
            })
        })
    }

    proptest! {
        #[test]
        fn partition_and_determinism(m in arb_matrix(), t in 0.05f64..1.0) {
            let g = build_graph(&m, t, ParameterGroup::Biochemical);
            let a = prune_components(&g);
            let b = prune_components(&g);
            prop_assert_eq!(&a, &b);
            let kept = a.kept();
            let removed = a.removed();
            prop_assert!(kept.is_disjoint(&removed));
            let all: BTreeSet<&str> = g.nodes().collect();
            prop_assert_eq!(kept.union(&removed).copied().collect::<BTreeSet<_>>(), all);
            for c in &a.components {
                prop_assert!(!c.kept.is_empty());
            }
        }

        #[test]
        fn raising_threshold_only_drops_edges(m in arb_matrix(), t in 0.05f64..0.9, dt in 0.0f64..0.5) {
            let lo = build_graph(&m, t, ParameterGroup::Biochemical);
            let hi = build_graph(&m, (t + dt).min(1.0), ParameterGroup::Biochemical);
            for e in hi.edges() {
                prop_assert!(lo.edges().contains(e));
            }
            let above = build_graph(&m, 1.0, ParameterGroup::Biochemical);
            if above.edges().is_empty() {
                prop_assert!(prune_components(&above).removed_all.is_empty());
            }
        }
    }
}
