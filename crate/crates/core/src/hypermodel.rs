//! Hypergraph models: a vertex set, a multiset of edges, and one cycle-type
//! weight table per edge.
//!
//! Representing each edge measure as a weight table over cycle types makes
//! the measure a class function by construction; sampling picks a type by
//! weight and then a uniform permutation of that type. Duplicate edges are
//! allowed and ring independently.
//!
//! A model is *valid* when the maximal per-vertex fixed-point probability is
//! at most 1/5, every vertex has the same degree, and the interchange
//! process is irreducible for the requested particle counts. [`validate`]
//! reports each check separately; the simulation and analysis entry points
//! only require what they actually use.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{enumerate_class, sample_class, CycleType, Permutation};
use crate::Vertex;

/// Default cap on enumerable state spaces (reachability and generators).
pub const DEFAULT_STATE_CAP: usize = 200_000;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Vertex set plus edge multiset. Edges are vertex subsets of size ≥ 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: Vec<Vertex>,
    edges: Vec<Vec<Vertex>>,
}

impl Hypergraph {
    pub fn new(mut vertices: Vec<Vertex>, edges: Vec<Vec<Vertex>>) -> Result<Self> {
        vertices.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("duplicate vertex label".into()));
        }
        if vertices.is_empty() {
            return Err(Error::InvalidModel("empty vertex set".into()));
        }
        let vset: BTreeSet<Vertex> = vertices.iter().copied().collect();
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, edge) in edges.into_iter().enumerate() {
            let mut e = edge;
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidModel(format!("edge {i} repeats a vertex")));
            }
            if e.len() < 2 {
                return Err(Error::InvalidModel(format!(
                    "edge {i} has {} vertices (need at least 2)",
                    e.len()
                )));
            }
            if let Some(&v) = e.iter().find(|v| !vset.contains(v)) {
                return Err(Error::InvalidModel(format!(
                    "edge {i} mentions unknown vertex {v}"
                )));
            }
            normalized.push(e);
        }
        Ok(Self {
            vertices,
            edges: normalized,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[Vertex] {
        &self.edges[i]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges containing `v` (duplicates count separately).
    pub fn degree(&self, v: Vertex) -> usize {
        self.edges.iter().filter(|e| e.contains(&v)).count()
    }

    pub fn is_regular(&self) -> bool {
        let mut degrees = self.vertices.iter().map(|&v| self.degree(v));
        match degrees.next() {
            Some(first) => degrees.all(|d| d == first),
            None => true,
        }
    }
}

/// Weight table over cycle types for one edge; weights sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMeasure {
    weights: BTreeMap<CycleType, f64>,
}

impl EdgeMeasure {
    pub fn new(weights: BTreeMap<CycleType, f64>, edge_size: usize) -> Result<Self> {
        let mut total = 0.0;
        for (t, &w) in &weights {
            if !(0.0..=1.0).contains(&w) || !w.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "weight {w} for cycle type {t} is not in [0, 1]"
                )));
            }
            if !t.fits(edge_size) {
                return Err(Error::InvalidModel(format!(
                    "cycle type {t} does not fit an edge of size {edge_size}"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "edge weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &BTreeMap<CycleType, f64> {
        &self.weights
    }

    /// Types with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (&CycleType, f64)> {
        self.weights.iter().filter(|(_, &w)| w > 0.0).map(|(t, &w)| (t, w))
    }

    pub fn sample_type<R: Rng + ?Sized>(&self, rng: &mut R) -> &CycleType {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = None;
        for (t, &w) in &self.weights {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(t);
            if u < acc {
                return t;
            }
        }
        last.expect("measure has positive support")
    }
}

/// A hypergraph together with one edge measure per edge, keyed by position.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    graph: Hypergraph,
    measures: Vec<EdgeMeasure>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    vertices: Vec<Vertex>,
    edges: Vec<Vec<Vertex>>,
    measures: Vec<MeasureEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureEntry {
    edge: usize,
    weights: BTreeMap<String, f64>,
}

impl Model {
    pub fn new(graph: Hypergraph, measures: Vec<EdgeMeasure>) -> Result<Self> {
        if measures.len() != graph.n_edges() {
            return Err(Error::InvalidModel(format!(
                "{} measures for {} edges",
                measures.len(),
                graph.n_edges()
            )));
        }
        Ok(Self { graph, measures })
    }

    /// Convenience constructor from raw parts with string-keyed weights.
    pub fn from_parts(
        vertices: Vec<Vertex>,
        edges: Vec<Vec<Vertex>>,
        weights_per_edge: Vec<Vec<(&str, f64)>>,
    ) -> Result<Self> {
        let graph = Hypergraph::new(vertices, edges)?;
        if weights_per_edge.len() != graph.n_edges() {
            return Err(Error::InvalidModel(format!(
                "{} weight tables for {} edges",
                weights_per_edge.len(),
                graph.n_edges()
            )));
        }
        let measures = weights_per_edge
            .into_iter()
            .enumerate()
            .map(|(i, table)| {
                let mut weights = BTreeMap::new();
                for (key, w) in table {
                    let t: CycleType = key.parse()?;
                    if weights.insert(t, w).is_some() {
                        return Err(Error::InvalidModel(format!(
                            "edge {i} repeats cycle type {key}"
                        )));
                    }
                }
                EdgeMeasure::new(weights, graph.edge(i).len())
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(graph, measures)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        let graph = Hypergraph::new(file.vertices, file.edges)?;
        let mut measures: Vec<Option<EdgeMeasure>> = vec![None; graph.n_edges()];
        for entry in file.measures {
            if entry.edge >= graph.n_edges() {
                return Err(Error::InvalidModel(format!(
                    "measure refers to unknown edge {}",
                    entry.edge
                )));
            }
            if measures[entry.edge].is_some() {
                return Err(Error::InvalidModel(format!(
                    "edge {} has more than one measure",
                    entry.edge
                )));
            }
            let mut weights = BTreeMap::new();
            for (key, w) in entry.weights {
                let t: CycleType = key.parse()?;
                if weights.insert(t, w).is_some() {
                    return Err(Error::InvalidModel(format!(
                        "edge {} repeats cycle type {key} (normalized)",
                        entry.edge
                    )));
                }
            }
            measures[entry.edge] = Some(EdgeMeasure::new(weights, graph.edge(entry.edge).len())?);
        }
        let measures = measures
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| Error::InvalidModel(format!("edge {i} has no measure"))))
            .collect::<Result<Vec<_>>>()?;
        Model::new(graph, measures)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::InvalidModel(format!("cannot read model file: {e}")))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            vertices: self.graph.vertices.clone(),
            edges: self.graph.edges.clone(),
            measures: self
                .measures
                .iter()
                .enumerate()
                .map(|(i, m)| MeasureEntry {
                    edge: i,
                    weights: m
                        .weights
                        .iter()
                        .map(|(t, &w)| (t.to_string(), w))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn vertices(&self) -> &[Vertex] {
        self.graph.vertices()
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    pub fn edge(&self, i: usize) -> &[Vertex] {
        self.graph.edge(i)
    }

    pub fn measure(&self, i: usize) -> &EdgeMeasure {
        &self.measures[i]
    }

    /// Draws a permutation for edge `i`: type by weight, then uniform in the
    /// class.
    pub fn sample_edge_perm<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Permutation {
        let t = self.measures[i].sample_type(rng).clone();
        sample_class(&t, self.graph.edge(i), rng).expect("measure types fit their edge")
    }

    /// Every permutation with positive probability on some edge, extended to
    /// the full vertex set, deduplicated.
    pub fn support_permutations(&self) -> Vec<Permutation> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for i in 0..self.n_edges() {
            for (t, _) in self.measures[i].support() {
                if t.is_identity() {
                    continue;
                }
                for p in enumerate_class(self.graph.edge(i), t).expect("type fits edge") {
                    let lifted = p
                        .with_domain(self.vertices().iter().copied())
                        .expect("edge is a subset of the vertex set");
                    if seen.insert(lifted.clone()) {
                        out.push(lifted);
                    }
                }
            }
        }
        out
    }
}

/// Probability that `v` is a fixed point of a permutation drawn from the
/// measure of edge `edge_idx`. Uniform class sampling is exchangeable over
/// the edge, so this is the weighted fixed-point fraction of each type.
pub fn fixed_point_prob(m: &Model, edge_idx: usize, v: Vertex) -> Result<f64> {
    let edge = m.edge(edge_idx);
    if !edge.contains(&v) {
        return Err(Error::VertexNotInEdge {
            vertex: v,
            edge: edge_idx,
        });
    }
    let size = edge.len() as f64;
    Ok(m.measure(edge_idx)
        .weights()
        .iter()
        .map(|(t, &w)| w * (t.fixed_points(edge.len()) as f64) / size)
        .sum())
}

/// Outcome of one irreducibility check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrreducibilityStatus {
    Irreducible,
    Reducible,
    UndecidedAtCap,
}

/// Per-check results of [`validate`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    /// Always true: weight tables over cycle types cannot encode anything
    /// else. Reported for provenance.
    pub class_function: bool,
    pub max_fixed_point_prob: f64,
    /// Max fixed-point probability over edges and vertices is at most 1/5.
    pub fixed_point_ok: bool,
    pub regular: bool,
    pub degrees: BTreeMap<Vertex, usize>,
    /// One entry per requested particle count.
    pub irreducibility: Vec<(usize, IrreducibilityStatus)>,
    pub pass: bool,
}

/// Checks the model requirements: class-function measures (true by
/// construction), fixed-point probability at most 1/5, regularity, and
/// irreducibility of the interchange process for each requested `k`.
pub fn validate(m: &Model, ks: &[usize]) -> ValidationReport {
    let mut max_fp: f64 = 0.0;
    for i in 0..m.n_edges() {
        for &v in m.edge(i) {
            let fp = fixed_point_prob(m, i, v).expect("vertex is in its own edge");
            max_fp = max_fp.max(fp);
        }
    }
    let degrees: BTreeMap<Vertex, usize> = m
        .vertices()
        .iter()
        .map(|&v| (v, m.graph().degree(v)))
        .collect();
    let regular = m.graph().is_regular();
    let irreducibility: Vec<(usize, IrreducibilityStatus)> = ks
        .iter()
        .map(|&k| {
            let status = match irreducible(m, k) {
                Ok(true) => IrreducibilityStatus::Irreducible,
                Ok(false) => IrreducibilityStatus::Reducible,
                Err(_) => IrreducibilityStatus::UndecidedAtCap,
            };
            (k, status)
        })
        .collect();
    let fixed_point_ok = max_fp <= 0.2 + 1e-15;
    let pass = fixed_point_ok
        && regular
        && irreducibility
            .iter()
            .all(|(_, s)| *s == IrreducibilityStatus::Irreducible);
    ValidationReport {
        class_function: true,
        max_fixed_point_prob: max_fp,
        fixed_point_ok,
        regular,
        degrees,
        irreducibility,
        pass,
    }
}

/// Number of `k`-tuples of distinct vertices.
pub fn distinct_tuple_count(n: usize, k: usize) -> u128 {
    let mut count: u128 = 1;
    for i in 0..k {
        count = count.saturating_mul((n - i) as u128);
    }
    count
}

/// Whether the `k`-particle interchange process on the model is irreducible,
/// decided by breadth-first reachability over the state graph under the
/// support of the measures. The support is closed under inverses (classes
/// are), so one-directional search decides strong connectivity.
pub fn irreducible(m: &Model, k: usize) -> Result<bool> {
    irreducible_with_cap(m, k, DEFAULT_STATE_CAP)
}

pub fn irreducible_with_cap(m: &Model, k: usize, cap: usize) -> Result<bool> {
    let n = m.n_vertices();
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!(
            "particle count {k} out of range for {n} vertices"
        )));
    }
    let total = distinct_tuple_count(n, k);
    if total > cap as u128 {
        return Err(Error::StateCapExceeded {
            space: format!("interchange process with {k} particles"),
            count: total,
            cap: cap as u128,
        });
    }
    let support = m.support_permutations();
    if support.is_empty() {
        // only the identity has positive weight
        return Ok(total == 1);
    }
    let start: Vec<Vertex> = m.vertices()[..k].to_vec();
    let mut visited: HashSet<Vec<Vertex>> = HashSet::new();
    let mut queue = vec![start.clone()];
    visited.insert(start);
    while let Some(state) = queue.pop() {
        for p in &support {
            let next = p.apply_tuple(&state);
            if !visited.contains(&next) {
                visited.insert(next.clone());
                queue.push(next);
            }
        }
    }
    Ok(visited.len() as u128 == total)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn four_vertex_delta(delta: f64) -> Model {
        Model::from_parts(
            vec![1, 2, 3, 4],
            vec![vec![1, 2, 3, 4]],
            vec![vec![("2+2", 1.0 - delta), ("4", delta)]],
        )
        .unwrap()
    }

    pub(crate) fn three_vertex_delta(delta: f64) -> Model {
        Model::from_parts(
            vec![1, 2, 3],
            vec![vec![1, 2, 3]],
            vec![vec![("3", 1.0 - delta), ("2", delta)]],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let json = r#"{
            "vertices": [1, 2, 3, 4],
            "edges": [[1, 2, 3, 4]],
            "measures": [{"edge": 0, "weights": {"2+2": 0.9, "4": 0.1}}]
        }"#;
        let m = Model::from_json(json).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_edges(), 1);
        let again = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn rejects_bad_weight_sum() {
        let json = r#"{
            "vertices": [1, 2, 3, 4],
            "edges": [[1, 2, 3, 4]],
            "measures": [{"edge": 0, "weights": {"2+2": 0.9, "4": 0.2}}]
        }"#;
        assert!(Model::from_json(json).is_err());
    }

    #[test]
    fn rejects_missing_measure_and_unknown_fields() {
        let json = r#"{
            "vertices": [1, 2],
            "edges": [[1, 2]],
            "measures": []
        }"#;
        assert!(Model::from_json(json).is_err());
        let json = r#"{
            "vertices": [1, 2],
            "edges": [[1, 2]],
            "measures": [{"edge": 0, "weights": {"2": 1.0}}],
            "extra": 1
        }"#;
        assert!(Model::from_json(json).is_err());
    }

    #[test]
    fn rejects_type_that_does_not_fit() {
        let json = r#"{
            "vertices": [1, 2, 3],
            "edges": [[1, 2]],
            "measures": [{"edge": 0, "weights": {"3": 1.0}}]
        }"#;
        assert!(Model::from_json(json).is_err());
    }

    #[test]
    fn fixed_point_probabilities() {
        // (2,2) on an edge of size 4 has no fixed points
        let m = four_vertex_delta(0.0);
        assert_eq!(fixed_point_prob(&m, 0, 1).unwrap(), 0.0);
        // a transposition on a 3-edge fixes one of three vertices
        let m = three_vertex_delta(1.0);
        let fp = fixed_point_prob(&m, 0, 2).unwrap();
        assert!((fp - 1.0 / 3.0).abs() < 1e-15);
        // mixed weights on a 5-edge: 0.5 * 0 + 0.5 * 1/5
        let m = Model::from_parts(
            vec![1, 2, 3, 4, 5],
            vec![vec![1, 2, 3, 4, 5]],
            vec![vec![("5", 0.5), ("2+2", 0.5)]],
        )
        .unwrap();
        assert!((fixed_point_prob(&m, 0, 3).unwrap() - 0.1).abs() < 1e-15);
        // vertex not in edge
        assert!(fixed_point_prob(&m, 0, 9).is_err());
    }

    #[test]
    fn fixed_point_prob_same_for_all_vertices() {
        let m = Model::from_parts(
            vec![1, 2, 3, 4, 5],
            vec![vec![1, 2, 3], vec![3, 4, 5]],
            vec![
                vec![("3", 0.9), ("2", 0.1)],
                vec![("3", 0.5), ("2", 0.5)],
            ],
        )
        .unwrap();
        for edge_idx in 0..2 {
            let probs: Vec<f64> = m
                .edge(edge_idx)
                .iter()
                .map(|&v| fixed_point_prob(&m, edge_idx, v).unwrap())
                .collect();
            for w in probs.windows(2) {
                assert!((w[0] - w[1]).abs() < 1e-15, "exchangeability violated");
            }
        }
    }

    #[test]
    fn validate_passes_for_delta_model() {
        let m = four_vertex_delta(0.1);
        let report = validate(&m, &[1, 2]);
        assert!(report.class_function);
        assert_eq!(report.max_fixed_point_prob, 0.0);
        assert!(report.fixed_point_ok);
        assert!(report.regular);
        assert!(report
            .irreducibility
            .iter()
            .all(|(_, s)| *s == IrreducibilityStatus::Irreducible));
        assert!(report.pass);
    }

    #[test]
    fn validate_fails_identity_measure() {
        let m = Model::from_parts(
            vec![1, 2, 3, 4],
            vec![vec![1, 2, 3, 4]],
            vec![vec![("id", 1.0)]],
        )
        .unwrap();
        let report = validate(&m, &[1]);
        assert_eq!(report.max_fixed_point_prob, 1.0);
        assert!(!report.fixed_point_ok);
        assert!(!report.pass);
    }

    #[test]
    fn irreducibility_flips_at_delta_zero() {
        // with only double transpositions the 2-particle process is stuck in
        // pair-swapping components; any positive 4-cycle weight frees it
        let m0 = four_vertex_delta(0.0);
        assert!(!irreducible(&m0, 2).unwrap());
        let m1 = four_vertex_delta(0.01);
        assert!(irreducible(&m1, 2).unwrap());
        // the three-vertex analogue: 3-cycles alone cannot mix two labelled
        // particles
        let m0 = three_vertex_delta(0.0);
        assert!(!irreducible(&m0, 2).unwrap());
        let m1 = three_vertex_delta(0.01);
        assert!(irreducible(&m1, 2).unwrap());
    }

    #[test]
    fn irreducibility_cap_is_explicit() {
        let m = four_vertex_delta(0.1);
        let err = irreducible_with_cap(&m, 3, 10).unwrap_err();
        assert!(matches!(err, Error::StateCapExceeded { .. }));
    }

    #[test]
    fn non_regular_flagged() {
        let m = Model::from_parts(
            vec![1, 2, 3],
            vec![vec![1, 2], vec![2, 3], vec![1, 2, 3]],
            vec![
                vec![("2", 1.0)],
                vec![("2", 1.0)],
                vec![("3", 0.8), ("2", 0.2)],
            ],
        )
        .unwrap();
        let report = validate(&m, &[1]);
        assert!(!report.regular);
        assert!(!report.pass);
        assert_eq!(report.degrees[&2], 3);
    }

    #[test]
    fn degree_counts_duplicate_edges() {
        let m = Model::from_parts(
            vec![1, 2],
            vec![vec![1, 2], vec![1, 2]],
            vec![vec![("2", 1.0)], vec![("2", 1.0)]],
        )
        .unwrap();
        assert_eq!(m.graph().degree(1), 2);
        assert!(m.graph().is_regular());
    }
}
