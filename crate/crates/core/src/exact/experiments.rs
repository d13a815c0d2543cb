//! Verification experiments over exact computations: the inequality toolbox,
//! the correlation-failure table on the one-edge four-vertex model, and the
//! two small-model ratio families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{build_generator, mixing_time_with_cap, tv, ChainKind};
use crate::hypermodel::{Model, DEFAULT_STATE_CAP};

/// Slack below which an inequality counts as violated (absolute).
pub const RELATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct RelationRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the relation asserts `lhs <= rhs`.
    pub slack: f64,
    pub pass: bool,
}

impl RelationRow {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= -RELATION_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationsReport {
    pub rows: Vec<RelationRow>,
    pub skipped: Vec<String>,
    pub all_pass: bool,
}

/// Instantiates the mixing-time inequalities with exactly computed values:
/// the projection chain `RW <= EX(k) <= IP(k)` at each epsilon, the
/// epsilon-rescaling bound, the independent-walker bound
/// `T_RW(2^m)(2^-n) <= (n+m) T_RW(1/4)`, and the product-chain TV bound.
/// Chains whose state space exceeds the cap are listed as skipped.
pub fn check_relations(
    m: &Model,
    ks: &[usize],
    epss: &[f64],
    cap: usize,
) -> Result<RelationsReport> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for &eps in epss {
        let t_rw = mixing_time_with_cap(m, ChainKind::Rw, 1, eps, cap)?.time;
        for &k in ks {
            let t_ex = match mixing_time_with_cap(m, ChainKind::Ex, k, eps, cap) {
                Ok(t) => t.time,
                Err(Error::StateCapExceeded { space, .. }) => {
                    skipped.push(format!("{space} at eps={eps}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let t_ip = match mixing_time_with_cap(m, ChainKind::Ip, k, eps, cap) {
                Ok(t) => t.time,
                Err(Error::StateCapExceeded { space, .. }) => {
                    skipped.push(format!("{space} at eps={eps}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            rows.push(RelationRow::new(
                format!("projection RW <= EX({k}) at eps={eps}"),
                t_rw,
                t_ex,
            ));
            rows.push(RelationRow::new(
                format!("projection EX({k}) <= IP({k}) at eps={eps}"),
                t_ex,
                t_ip,
            ));
            rows.push(RelationRow::new(
                format!("projection RW <= IP({k}) at eps={eps}"),
                t_rw,
                t_ip,
            ));
        }
    }

    // epsilon rescaling: T(eps2) <= ceil(log eps2 / log(2 eps1)) T(eps1)
    for &eps1 in epss {
        if !(0.0..0.5).contains(&eps1) {
            continue;
        }
        for &eps2 in epss {
            if !(0.0..0.5).contains(&eps2) {
                continue;
            }
            let factor = (eps2.ln() / (2.0 * eps1).ln()).ceil();
            let t1 = mixing_time_with_cap(m, ChainKind::Rw, 1, eps1, cap)?.time;
            let t2 = mixing_time_with_cap(m, ChainKind::Rw, 1, eps2, cap)?.time;
            rows.push(RelationRow::new(
                format!("rescaling RW: T({eps2}) <= ceil * T({eps1})"),
                t2,
                factor * t1,
            ));
        }
    }

    // independent walkers: T_RW(2^m)(2^-n) <= (n+m) T_RW(1/4)
    let t_rw_quarter = mixing_time_with_cap(m, ChainKind::Rw, 1, 0.25, cap)?.time;
    for (mm, nn) in [(1u32, 2u32), (2, 2)] {
        let walkers = 2usize.pow(mm);
        let eps = 0.5f64.powi(nn as i32);
        match mixing_time_with_cap(m, ChainKind::Rwk, walkers, eps, cap) {
            Ok(t) => rows.push(RelationRow::new(
                format!("independent walkers: T_RW({walkers})({eps}) <= {}T_RW(1/4)", mm + nn),
                t.time,
                f64::from(mm + nn) * t_rw_quarter,
            )),
            Err(Error::StateCapExceeded { space, .. }) => {
                skipped.push(format!("{space} at eps={eps}"))
            }
            Err(e) => return Err(e),
        }
    }

    // product TV bound at a fixed probe time
    let t_probe = 0.5;
    let rw = build_generator(m, ChainKind::Rw, 1, cap)?;
    let rows_t = rw.gen.transition_matrix(t_probe)?;
    let n = rw.gen.n;
    let start_pairs = [
        ((0usize, 1 % n), (n - 1, 0usize)),
        ((0, 0), (n - 1, n - 1)),
        ((0, n / 2), (1 % n, n - 1)),
    ];
    for ((u, v), (u2, v2)) in start_pairs {
        let mut joint = Vec::with_capacity(n * n);
        let mut joint2 = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                joint.push(rows_t[u][i] * rows_t[v][j]);
                joint2.push(rows_t[u2][i] * rows_t[v2][j]);
            }
        }
        let lhs = tv(&joint, &joint2)?;
        let rhs = tv(&rows_t[u], &rows_t[u2])? + tv(&rows_t[v], &rows_t[v2])?;
        rows.push(RelationRow::new(
            format!("product TV bound at t={t_probe}, starts ({u},{v}) vs ({u2},{v2})"),
            lhs,
            rhs,
        ));
    }

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(RelationsReport {
        rows,
        skipped,
        all_pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NegCorrRow {
    pub t: f64,
    /// Exact P(both independent walkers in {3,4}) from start (1,2).
    pub product: f64,
    /// Exact P(two-particle exclusion occupies {3,4}) from start {1,2}.
    pub exclusion: f64,
    pub product_upper: f64,
    pub exclusion_lower: f64,
    pub bounds_ok: bool,
    /// Strict reversal `product < exclusion` is asserted on (0, 0.33).
    pub strict_applicable: bool,
    pub strict_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NegCorrReport {
    pub rows: Vec<NegCorrRow>,
    pub all_pass: bool,
}

/// The correlation-failure table: one 4-vertex edge, uniform 4-cycles.
/// Independent walkers are anti-correlated with the exclusion process here:
/// for small `t` the exclusion process is strictly more likely to have both
/// particles in `{3,4}` than two independent walkers are.
pub fn neg_corr_experiment(grid: &[f64]) -> Result<NegCorrReport> {
    let m = Model::from_parts(
        vec![1, 2, 3, 4],
        vec![vec![1, 2, 3, 4]],
        vec![vec![("4", 1.0)]],
    )?;
    let product_chain = build_generator(&m, ChainKind::Rwk, 2, DEFAULT_STATE_CAP)?;
    let exclusion_chain = build_generator(&m, ChainKind::Ex, 2, DEFAULT_STATE_CAP)?;
    let start_prod = product_chain
        .space
        .index_of(&[1, 2])
        .expect("start tuple exists");
    let start_ex = exclusion_chain
        .space
        .index_of(&[1, 2])
        .expect("start set exists");
    let target_ex = exclusion_chain
        .space
        .index_of(&[3, 4])
        .expect("target set exists");

    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        if t < 0.0 {
            return Err(Error::TimeOutOfRange(format!("t = {t}")));
        }
        let joint = product_chain.gen.transition_row(start_prod, t)?;
        let product: f64 = product_chain
            .space
            .states
            .iter()
            .zip(&joint)
            .filter(|(state, _)| state[0] >= 3 && state[1] >= 3)
            .map(|(_, &p)| p)
            .sum();
        let exclusion = exclusion_chain.gen.transition_row(start_ex, t)?[target_ex];
        let product_upper = (1.0 - (-t).exp()).powi(2);
        let exclusion_lower = t * (-t).exp() / 3.0;
        let bounds_ok =
            product <= product_upper + 1e-12 && exclusion >= exclusion_lower - 1e-12;
        let strict_applicable = t > 0.0 && t < 0.33;
        let strict_ok = product < exclusion;
        rows.push(NegCorrRow {
            t,
            product,
            exclusion,
            product_upper,
            exclusion_lower,
            bounds_ok,
            strict_applicable,
            strict_ok,
        });
    }
    let all_pass = rows
        .iter()
        .all(|r| r.bounds_ok && (!r.strict_applicable || r.strict_ok));
    Ok(NegCorrReport { rows, all_pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaRatioRow {
    pub delta: f64,
    /// Four-vertex model {(2,2): 1-delta, (4): delta}.
    pub t_ex2_4v: f64,
    pub t_ex1_4v: f64,
    pub ex2_over_ex1: f64,
    /// Three-vertex model {(3): 1-delta, (2): delta}.
    pub t_ip2_3v: f64,
    pub t_ex2_3v: f64,
    pub ip2_over_ex2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaRatioReport {
    /// Rows in decreasing-delta order.
    pub rows: Vec<DeltaRatioRow>,
    /// Both ratio columns strictly increase as delta decreases.
    pub monotone_ok: bool,
}

fn four_vertex_delta(delta: f64) -> Result<Model> {
    Model::from_parts(
        vec![1, 2, 3, 4],
        vec![vec![1, 2, 3, 4]],
        vec![vec![("2+2", 1.0 - delta), ("4", delta)]],
    )
}

fn three_vertex_delta(delta: f64) -> Result<Model> {
    Model::from_parts(
        vec![1, 2, 3],
        vec![vec![1, 2, 3]],
        vec![vec![("3", 1.0 - delta), ("2", delta)]],
    )
}

/// Exact mixing-time ratios for the two one-edge families, per delta. At
/// delta = 0 the relevant chain is reducible and the error surfaces instead
/// of a value.
pub fn delta_ratio_experiments(deltas: &[f64]) -> Result<DeltaRatioReport> {
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("deltas are comparable"));
    sorted.dedup();
    let cap = DEFAULT_STATE_CAP;
    let mut rows = Vec::with_capacity(sorted.len());
    for &delta in &sorted {
        let m4 = four_vertex_delta(delta)?;
        let t_ex2_4v = mixing_time_with_cap(&m4, ChainKind::Ex, 2, 0.25, cap)?.time;
        let t_ex1_4v = mixing_time_with_cap(&m4, ChainKind::Ex, 1, 0.25, cap)?.time;
        let m3 = three_vertex_delta(delta)?;
        let t_ip2_3v = mixing_time_with_cap(&m3, ChainKind::Ip, 2, 0.25, cap)?.time;
        let t_ex2_3v = mixing_time_with_cap(&m3, ChainKind::Ex, 2, 0.25, cap)?.time;
        rows.push(DeltaRatioRow {
            delta,
            t_ex2_4v,
            t_ex1_4v,
            ex2_over_ex1: t_ex2_4v / t_ex1_4v,
            t_ip2_3v,
            t_ex2_3v,
            ip2_over_ex2: t_ip2_3v / t_ex2_3v,
        });
    }
    let monotone_ok = rows.windows(2).all(|w| {
        w[1].ex2_over_ex1 > w[0].ex2_over_ex1 && w[1].ip2_over_ex2 > w[0].ip2_over_ex2
    });
    Ok(DeltaRatioReport { rows, monotone_ok })
}
