//! Distributional checks on the graphical construction: lazy-mode
//! equivalence, inverse-map symmetry, and the meeting-time law against an
//! independently built absorbing-chain oracle.

use std::collections::HashMap;

use hyperex::engine::{gen_events, interval_map, meeting_time};
use hyperex::hypermodel::Model;
use hyperex::permgroup::enumerate_class;
use hyperex::rng::stream_rng;
use hyperex::Vertex;

fn four_vertex() -> Model {
    Model::from_parts(
        vec![1, 2, 3, 4],
        vec![vec![1, 2, 3, 4]],
        vec![vec![("2+2", 0.7), ("4", 0.3)]],
    )
    .unwrap()
}

fn empirical_tv(a: &HashMap<String, usize>, b: &HashMap<String, usize>, n: f64) -> f64 {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / n;
            let pb = *b.get(k).unwrap_or(&0) as f64 / n;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

#[test]
fn lazy_and_standard_interval_maps_agree_in_law() {
    // thinning: the doubled-rate lazy stream induces the same law on the
    // composed map over [0, 1]
    let m = four_vertex();
    let n = 100_000u64;
    let mut standard: HashMap<String, usize> = HashMap::new();
    let mut lazy: HashMap<String, usize> = HashMap::new();
    for i in 0..n {
        let s = gen_events(&m, 1.0, false, stream_rng(100, i));
        let map = interval_map(&s, 0.0, 1.0).unwrap();
        *standard.entry(map.perm.to_cycle_string()).or_default() += 1;
        let s = gen_events(&m, 1.0, true, stream_rng(101, i));
        let map = interval_map(&s, 0.0, 1.0).unwrap();
        *lazy.entry(map.perm.to_cycle_string()).or_default() += 1;
    }
    let tv = empirical_tv(&standard, &lazy, n as f64);
    assert!(tv < 0.02, "empirical TV between modes is {tv}");
}

#[test]
fn interval_map_law_symmetric_under_inversion() {
    let m = four_vertex();
    let n = 100_000u64;
    let mut forward: HashMap<String, usize> = HashMap::new();
    let mut inverse: HashMap<String, usize> = HashMap::new();
    for i in 0..n {
        let s = gen_events(&m, 1.5, false, stream_rng(102, i));
        let map = interval_map(&s, 0.25, 1.5).unwrap();
        *forward.entry(map.perm.to_cycle_string()).or_default() += 1;
        *inverse
            .entry(map.perm.inverse().to_cycle_string())
            .or_default() += 1;
    }
    let tv = empirical_tv(&forward, &inverse, n as f64);
    assert!(tv < 0.02, "empirical TV between map and inverse is {tv}");
}

/// Absorbing product chain for the two-walker meeting time, built directly
/// from the definition (test-local oracle, independent of the samplers).
struct MeetingOracle {
    n: usize,
    rates: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
    index: HashMap<(Vertex, Vertex), usize>,
}

impl MeetingOracle {
    fn build(m: &Model) -> Self {
        let vs = m.vertices();
        let mut index = HashMap::new();
        for &u in vs {
            for &v in vs {
                let next = index.len();
                index.insert((u, v), next);
            }
        }
        let absorbed = index.len();
        let n = absorbed + 1;
        let mut rates = vec![Vec::new(); n];
        let mut exit = vec![0.0; n];
        for (&(u, v), &si) in &index {
            let mut row: HashMap<usize, f64> = HashMap::new();
            for e_idx in 0..m.n_edges() {
                let edge = m.edge(e_idx);
                if edge.contains(&u) && edge.contains(&v) {
                    // either stream ringing this edge stops the pair
                    *row.entry(absorbed).or_insert(0.0) += 2.0;
                    continue;
                }
                for (t, w) in m.measure(e_idx).support() {
                    let class = enumerate_class(edge, t).unwrap();
                    let p = w / class.len() as f64;
                    for perm in &class {
                        let u2 = perm.apply(u);
                        if u2 != u {
                            *row.entry(index[&(u2, v)]).or_insert(0.0) += p;
                        }
                        let v2 = perm.apply(v);
                        if v2 != v {
                            *row.entry(index[&(u, v2)]).or_insert(0.0) += p;
                        }
                    }
                }
            }
            exit[si] = row.values().sum();
            rates[si] = row.into_iter().collect();
        }
        Self {
            n,
            rates,
            exit,
            index,
        }
    }

    /// P(absorbed by t) from `start`, via a test-local uniformization.
    fn absorption_cdf(&self, start: (Vertex, Vertex), grid: &[f64]) -> Vec<f64> {
        let lambda = self
            .exit
            .iter()
            .fold(0.0f64, |m, &x| m.max(x))
            .max(1e-9);
        let mut p = vec![0.0; self.n];
        p[self.index[&start]] = 1.0;
        let mut out = Vec::with_capacity(grid.len());
        let mut t_now = 0.0;
        for &t in grid {
            let dt = t - t_now;
            assert!(dt >= 0.0, "grid must be increasing");
            if dt > 0.0 {
                p = self.step(&p, lambda, dt);
                t_now = t;
            }
            out.push(p[self.n - 1]);
        }
        out
    }

    fn step(&self, p0: &[f64], lambda: f64, dt: f64) -> Vec<f64> {
        let mean = lambda * dt;
        let mut weight = (-mean).exp();
        let mut cum = weight;
        let mut acc: Vec<f64> = p0.iter().map(|&x| x * weight).collect();
        let mut p = p0.to_vec();
        let mut k = 0usize;
        while cum < 1.0 - 1e-12 {
            k += 1;
            let mut next = vec![0.0; self.n];
            for i in 0..self.n {
                if p[i] == 0.0 {
                    continue;
                }
                next[i] += p[i] * (1.0 - self.exit[i] / lambda);
                for &(j, q) in &self.rates[i] {
                    next[j] += p[i] * q / lambda;
                }
            }
            p = next;
            weight *= mean / k as f64;
            cum += weight;
            for (a, &x) in acc.iter_mut().zip(&p) {
                *a += weight * x;
            }
        }
        acc
    }
}

#[test]
fn meeting_time_law_matches_absorbing_chain() {
    let m = Model::from_parts(
        vec![1, 2, 3, 4, 5],
        vec![vec![1, 2, 3], vec![3, 4, 5]],
        vec![vec![("3", 0.8), ("2", 0.2)]; 2],
    )
    .unwrap();
    let start = (1u32, 5u32);
    let n = 100_000usize;
    let horizon = 80.0;
    let mut rng = stream_rng(103, 0);
    let mut samples: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        match meeting_time(&m, start, horizon, &mut rng) {
            Some(t) => samples.push(t),
            None => samples.push(f64::INFINITY),
        }
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.2).collect();
    let oracle = MeetingOracle::build(&m);
    let exact = oracle.absorption_cdf(start, &grid);

    let mut worst = 0.0f64;
    for (g, f_exact) in grid.iter().zip(&exact) {
        let emp = samples.partition_point(|&s| s <= *g) as f64 / n as f64;
        worst = worst.max((emp - f_exact).abs());
    }
    assert!(worst < 0.02, "Kolmogorov distance on the grid is {worst}");
    // sanity: the tail beyond the grid is negligible
    let unmet = samples.iter().filter(|s| !s.is_finite()).count();
    assert!(unmet < n / 1000, "{unmet} walks never met");
}
