//! Exact desk-scale analysis: generator assembly for the four chain kinds,
//! transition probabilities by uniformization, total-variation distances,
//! mixing times, and the verification experiments built on them.
//!
//! Everything here enumerates its state space explicitly and fails with an
//! explicit cap error when that is not possible; Monte Carlo estimation
//! lives in [`crate::engine`] and is never silently substituted.

mod experiments;
mod mixing;

pub use experiments::{
    check_relations, delta_ratio_experiments, neg_corr_experiment, DeltaRatioReport,
    DeltaRatioRow, NegCorrReport, NegCorrRow, RelationRow, RelationsReport,
};
pub use mixing::{
    mixing_time, mixing_time_with_cap, tv, tv_curve, worst_start_tv, MixingTime, TvCurve,
};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypermodel::{distinct_tuple_count, Model, DEFAULT_STATE_CAP};
use crate::permgroup::enumerate_class;
use crate::Vertex;

/// The four chain kinds built from a model.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    /// Single random walker.
    Rw,
    /// `k` independent walkers (product chain).
    Rwk,
    /// Exclusion: `k` indistinguishable particles, one per vertex.
    Ex,
    /// Interchange: `k` labelled particles, one per vertex.
    Ip,
}

impl ChainKind {
    pub fn name(self, k: usize) -> String {
        match self {
            ChainKind::Rw => "RW".to_string(),
            ChainKind::Rwk => format!("RW({k})"),
            ChainKind::Ex => format!("EX({k})"),
            ChainKind::Ip => format!("IP({k})"),
        }
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainKind::Rw => f.write_str("rw"),
            ChainKind::Rwk => f.write_str("rwk"),
            ChainKind::Ex => f.write_str("ex"),
            ChainKind::Ip => f.write_str("ip"),
        }
    }
}

/// Enumerated state space of a chain. States are vertex vectors: a single
/// vertex for RW, arbitrary tuples for RW(k), sorted subsets for EX, and
/// distinct tuples for IP.
#[derive(Debug)]
pub struct StateSpace {
    pub kind: ChainKind,
    pub k: usize,
    pub states: Vec<Vec<Vertex>>,
    index: HashMap<Vec<Vertex>, usize>,
}

impl StateSpace {
    pub fn count(kind: ChainKind, n: usize, k: usize) -> u128 {
        match kind {
            ChainKind::Rw => n as u128,
            ChainKind::Rwk => (n as u128).saturating_pow(k as u32),
            ChainKind::Ex => binomial(n, k),
            ChainKind::Ip => distinct_tuple_count(n, k),
        }
    }

    pub fn enumerate(kind: ChainKind, m: &Model, k: usize, cap: usize) -> Result<Self> {
        let n = m.n_vertices();
        if kind != ChainKind::Rw && (k < 1 || k > n) {
            return Err(Error::InvalidArgument(format!(
                "particle count {k} out of range for {n} vertices"
            )));
        }
        let count = Self::count(kind, n, k);
        if count > cap as u128 {
            return Err(Error::StateCapExceeded {
                space: kind.name(k),
                count,
                cap: cap as u128,
            });
        }
        let vs = m.vertices();
        let mut states: Vec<Vec<Vertex>> = Vec::with_capacity(count as usize);
        let mut prefix: Vec<Vertex> = Vec::with_capacity(k);
        match kind {
            ChainKind::Rw => states.extend(vs.iter().map(|&v| vec![v])),
            ChainKind::Rwk => enumerate_tuples(vs, k, false, &mut prefix, &mut states),
            ChainKind::Ip => enumerate_tuples(vs, k, true, &mut prefix, &mut states),
            ChainKind::Ex => enumerate_subsets(vs, k, 0, &mut prefix, &mut states),
        }
        debug_assert_eq!(states.len() as u128, count);
        Ok(Self::from_states(kind, k, states))
    }

    fn from_states(kind: ChainKind, k: usize, states: Vec<Vec<Vertex>>) -> Self {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            kind,
            k,
            states,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: &[Vertex]) -> Option<usize> {
        match self.kind {
            ChainKind::Ex => {
                let mut s = state.to_vec();
                s.sort_unstable();
                self.index.get(&s).copied()
            }
            _ => self.index.get(state).copied(),
        }
    }

    /// Image of a state under an edge permutation.
    pub fn apply_perm(&self, state: &[Vertex], p: &crate::permgroup::Permutation) -> Vec<Vertex> {
        let mut image = p.apply_tuple(state);
        if self.kind == ChainKind::Ex {
            image.sort_unstable();
        }
        image
    }
}

fn enumerate_tuples(
    vs: &[Vertex],
    k: usize,
    distinct: bool,
    prefix: &mut Vec<Vertex>,
    out: &mut Vec<Vec<Vertex>>,
) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    for &v in vs {
        if distinct && prefix.contains(&v) {
            continue;
        }
        prefix.push(v);
        enumerate_tuples(vs, k, distinct, prefix, out);
        prefix.pop();
    }
}

fn enumerate_subsets(
    vs: &[Vertex],
    k: usize,
    from: usize,
    prefix: &mut Vec<Vertex>,
    out: &mut Vec<Vec<Vertex>>,
) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    let needed = k - prefix.len();
    for i in from..=vs.len().saturating_sub(needed) {
        prefix.push(vs[i]);
        enumerate_subsets(vs, k, i + 1, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    num / den
}

/// Sparse symmetric rate matrix: off-diagonal rates per row plus the
/// diagonal (negative row sums).
#[derive(Debug)]
pub struct Generator {
    pub n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl Generator {
    fn from_rate_maps(maps: Vec<HashMap<usize, f64>>) -> Self {
        let n = maps.len();
        let mut rows = Vec::with_capacity(n);
        let mut diag = vec![0.0; n];
        for (i, map) in maps.into_iter().enumerate() {
            let mut row: Vec<(usize, f64)> = map.into_iter().collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            diag[i] = -row.iter().map(|&(_, q)| q).sum::<f64>();
            rows.push(row);
        }
        Self { n, rows, diag }
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Uniformization rate: the largest total exit rate.
    pub fn uniformization_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, &d| m.max(-d))
    }

    /// Largest asymmetry `|q(i,j) - q(j,i)|`; zero for class-function
    /// measures.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for &(j, q) in &self.rows[i] {
                worst = worst.max((q - self.rate(j, i)).abs());
            }
        }
        worst
    }

    /// Largest column-sum magnitude; the uniform distribution is stationary
    /// exactly when this vanishes.
    pub fn stationarity_defect(&self) -> f64 {
        let mut col = self.diag.clone();
        for row in &self.rows {
            for &(j, q) in row {
                col[j] += q;
            }
        }
        col.iter().fold(0.0, |m, &c| m.max(c.abs()))
    }

    /// Whether the support graph is connected (rates are symmetric, so this
    /// decides irreducibility).
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, q) in &self.rows[i] {
                if q > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }

    /// One step of the uniformized kernel: `out = p (I + Q/lambda)`.
    fn uniformized_step(&self, lambda: f64, p: &[f64], out: &mut [f64]) {
        for j in 0..self.n {
            out[j] = p[j] * (1.0 + self.diag[j] / lambda);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let pi = p[i];
            if pi == 0.0 {
                continue;
            }
            for &(j, q) in row {
                out[j] += pi * q / lambda;
            }
        }
    }

    /// `q_t(start, ·)` by uniformization, truncated when the Poisson tail is
    /// below 1e-13 (row-sum deficit well under 1e-12).
    pub fn transition_row(&self, start: usize, t: f64) -> Result<Vec<f64>> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::TimeOutOfRange(format!("t = {t} must be >= 0")));
        }
        let mut e = vec![0.0; self.n];
        e[start] = 1.0;
        self.evolve_distribution(&e, t)
    }

    /// Pushes a distribution forward by time `t`.
    pub fn evolve_distribution(&self, p0: &[f64], t: f64) -> Result<Vec<f64>> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::TimeOutOfRange(format!("t = {t} must be >= 0")));
        }
        if p0.len() != self.n {
            return Err(Error::LengthMismatch {
                left: p0.len(),
                right: self.n,
            });
        }
        let lambda = self.uniformization_rate();
        if t == 0.0 || lambda == 0.0 {
            return Ok(p0.to_vec());
        }
        // keep the Poisson mean per pass moderate; split long horizons
        let max_mean = 600.0;
        let passes = (lambda * t / max_mean).ceil().max(1.0) as usize;
        let dt = t / passes as f64;
        let mut p = p0.to_vec();
        for _ in 0..passes {
            p = self.uniformized_pass(lambda, &p, dt);
        }
        #[cfg(debug_assertions)]
        {
            let total_in: f64 = p0.iter().sum();
            let total: f64 = p.iter().sum();
            debug_assert!((total - total_in).abs() < 1e-10, "mass drift {total}");
            debug_assert!(p.iter().all(|&x| x >= 0.0), "negative probability");
        }
        Ok(p)
    }

    fn uniformized_pass(&self, lambda: f64, p0: &[f64], t: f64) -> Vec<f64> {
        let mean = lambda * t;
        let mut weight = (-mean).exp();
        let mut cumulative = weight;
        let mut acc: Vec<f64> = p0.iter().map(|&x| x * weight).collect();
        let mut p = p0.to_vec();
        let mut buf = vec![0.0; self.n];
        let mut n_term = 0usize;
        let max_terms = (mean + 12.0 * mean.sqrt() + 64.0) as usize;
        while cumulative < 1.0 - 1e-13 && n_term <= max_terms {
            n_term += 1;
            self.uniformized_step(lambda, &p, &mut buf);
            std::mem::swap(&mut p, &mut buf);
            weight *= mean / n_term as f64;
            cumulative += weight;
            for (a, &x) in acc.iter_mut().zip(&p) {
                *a += weight * x;
            }
        }
        acc
    }

    /// Full transition matrix `q_t` as dense rows.
    pub fn transition_matrix(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        (0..self.n).map(|i| self.transition_row(i, t)).collect()
    }

    /// Coordinate-list text form: one `row col rate` line per off-diagonal
    /// entry, then `row row diag` lines.
    pub fn to_coordinate_list(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, q) in row {
                out.push_str(&format!("{i} {j} {q:.17e}\n"));
            }
        }
        for (i, &d) in self.diag.iter().enumerate() {
            if d != 0.0 {
                out.push_str(&format!("{i} {i} {d:.17e}\n"));
            }
        }
        out
    }
}

/// A state space together with its generator.
#[derive(Debug)]
pub struct Chain {
    pub space: StateSpace,
    pub gen: Generator,
}

impl Chain {
    pub fn name(&self) -> String {
        self.space.kind.name(self.space.k)
    }
}

/// Assembles the generator of the requested chain. Rates:
/// `q(a, b) = sum over edges and permutations mapping a to b of
/// weight(type)/|class|`, with each class enumerated once per edge.
pub fn build_generator(m: &Model, kind: ChainKind, k: usize, cap: usize) -> Result<Chain> {
    let space = StateSpace::enumerate(kind, m, k, cap)?;
    if kind == ChainKind::Rwk {
        return build_product_chain(m, k, space, cap);
    }
    let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); space.n()];
    for edge_idx in 0..m.n_edges() {
        let edge = m.edge(edge_idx);
        for (t, w) in m.measure(edge_idx).support() {
            if t.is_identity() {
                continue;
            }
            let class = enumerate_class(edge, t)?;
            let p = w / class.len() as f64;
            for (si, state) in space.states.iter().enumerate() {
                for perm in &class {
                    let image = space.apply_perm(state, perm);
                    if image != *state {
                        let ti = space
                            .index_of(&image)
                            .expect("permutation image stays in the state space");
                        *maps[si].entry(ti).or_insert(0.0) += p;
                    }
                }
            }
        }
    }
    Ok(Chain {
        space,
        gen: Generator::from_rate_maps(maps),
    })
}

/// Product of `k` independent walkers: single-coordinate moves at the
/// walker rates.
fn build_product_chain(m: &Model, k: usize, space: StateSpace, cap: usize) -> Result<Chain> {
    let rw = build_generator(m, ChainKind::Rw, 1, cap)?;
    let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); space.n()];
    for (si, state) in space.states.iter().enumerate() {
        for coord in 0..k {
            let vi = rw
                .space
                .index_of(&[state[coord]])
                .expect("vertex indexes the walker space");
            for &(vj, q) in &rw.gen.rows()[vi] {
                let mut image = state.clone();
                image[coord] = rw.space.states[vj][0];
                let ti = space.index_of(&image).expect("tuple stays in the space");
                *maps[si].entry(ti).or_insert(0.0) += q;
            }
        }
    }
    Ok(Chain {
        space,
        gen: Generator::from_rate_maps(maps),
    })
}

/// Convenience: build with the default state cap.
pub fn build_generator_default(m: &Model, kind: ChainKind, k: usize) -> Result<Chain> {
    build_generator(m, kind, k, DEFAULT_STATE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypermodel::Model;

    fn four_vertex(delta: f64) -> Model {
        Model::from_parts(
            vec![1, 2, 3, 4],
            vec![vec![1, 2, 3, 4]],
            vec![vec![("2+2", 1.0 - delta), ("4", delta)]],
        )
        .unwrap()
    }

    #[test]
    fn rw_rates_on_double_transposition_model() {
        // each of the three double transpositions moves u to a distinct
        // vertex, so every off-diagonal rate is 1/3
        let chain = build_generator_default(&four_vertex(0.0), ChainKind::Rw, 1).unwrap();
        assert_eq!(chain.gen.n, 4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((chain.gen.rate(i, j) - 1.0 / 3.0).abs() < 1e-15);
                }
            }
            assert!((chain.gen.diag()[i] + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ex2_reachability_at_delta_zero() {
        let chain = build_generator_default(&four_vertex(0.0), ChainKind::Ex, 2).unwrap();
        let from = chain.space.index_of(&[1, 2]).unwrap();
        let targets: Vec<usize> = chain.gen.rows()[from].iter().map(|&(j, _)| j).collect();
        let other = chain.space.index_of(&[3, 4]).unwrap();
        assert_eq!(targets, vec![other]);
        assert!(!chain.gen.is_connected());
    }

    #[test]
    fn generators_symmetric_with_zero_row_sums() {
        let models = [four_vertex(0.3), four_vertex(1.0)];
        for m in &models {
            for (kind, k) in [
                (ChainKind::Rw, 1),
                (ChainKind::Rwk, 2),
                (ChainKind::Ex, 2),
                (ChainKind::Ip, 2),
            ] {
                let chain = build_generator_default(m, kind, k).unwrap();
                assert!(chain.gen.symmetry_defect() < 1e-14, "{kind:?} asymmetric");
                assert!(chain.gen.stationarity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn transition_at_zero_is_identity() {
        let chain = build_generator_default(&four_vertex(0.3), ChainKind::Rw, 1).unwrap();
        let rows = chain.gen.transition_matrix(0.0).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                assert_eq!(p, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn transition_matches_spectral_form() {
        // complete-graph walker with pair rate 1/3:
        // q_t(1,1) = 1/4 + (3/4) exp(-4t/3)
        let chain = build_generator_default(&four_vertex(0.0), ChainKind::Rw, 1).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let row = chain.gen.transition_row(0, t).unwrap();
            let expected = 0.25 + 0.75 * (-4.0 * t / 3.0).exp();
            assert!(
                (row[0] - expected).abs() < 1e-9,
                "t={t}: {} vs {expected}",
                row[0]
            );
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_doubling() {
        let chain = build_generator_default(&four_vertex(0.3), ChainKind::Ex, 2).unwrap();
        let t = 0.7;
        let p1 = chain.gen.transition_matrix(t).unwrap();
        let p2 = chain.gen.transition_matrix(2.0 * t).unwrap();
        let n = chain.gen.n;
        for i in 0..n {
            for j in 0..n {
                let composed: f64 = (0..n).map(|l| p1[i][l] * p1[l][j]).sum();
                assert!(
                    (composed - p2[i][j]).abs() < 1e-8,
                    "doubling violated at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn product_chain_factorizes() {
        let m = four_vertex(0.3);
        let rw = build_generator_default(&m, ChainKind::Rw, 1).unwrap();
        let rwk = build_generator_default(&m, ChainKind::Rwk, 2).unwrap();
        let t = 0.7;
        let row = rw.gen.transition_row(0, t).unwrap();
        let row2 = rw.gen.transition_row(1, t).unwrap();
        let start = rwk.space.index_of(&[1, 2]).unwrap();
        let joint = rwk.gen.transition_row(start, t).unwrap();
        for (si, state) in rwk.space.states.iter().enumerate() {
            let i = rw.space.index_of(&[state[0]]).unwrap();
            let j = rw.space.index_of(&[state[1]]).unwrap();
            assert!(
                (joint[si] - row[i] * row2[j]).abs() < 1e-10,
                "independence violated"
            );
        }
    }

    #[test]
    fn negative_time_rejected() {
        let chain = build_generator_default(&four_vertex(0.3), ChainKind::Rw, 1).unwrap();
        assert!(chain.gen.transition_row(0, -1.0).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_generator(&four_vertex(0.3), ChainKind::Ip, 4, 10).unwrap_err();
        assert!(matches!(err, Error::StateCapExceeded { .. }));
    }

    #[test]
    fn coordinate_list_lines() {
        let chain = build_generator_default(&four_vertex(0.0), ChainKind::Rw, 1).unwrap();
        let text = chain.gen.to_coordinate_list();
        assert_eq!(text.lines().count(), 12 + 4);
    }
}
