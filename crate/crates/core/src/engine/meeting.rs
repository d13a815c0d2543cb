//! Meeting times of independent walkers and the easy-model classifier.
//!
//! The meeting time of two walkers is the first time both positions (left
//! limits) lie in an edge that rings in either walker's stream — the walkers
//! need not occupy the same vertex. A model is classified *easy* when, from
//! every ordered start pair, meeting within `c_time` two-particle mixing
//! times fails with probability at most `c_prob`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{mixing_time_with_cap, ChainKind};
use crate::hypermodel::{Model, DEFAULT_STATE_CAP};
use crate::Vertex;

use super::{exp_gap, EventStream};

/// Samples the meeting time of two independent walkers started at `y`,
/// each driven by its own rate-`|E|` stream. Returns `None` when they have
/// not met by `horizon`.
pub fn meeting_time<R: Rng + ?Sized>(
    m: &Model,
    y: (Vertex, Vertex),
    horizon: f64,
    rng: &mut R,
) -> Option<f64> {
    let mut positions = [y.0, y.1];
    let rate = m.n_edges() as f64;
    let mut clocks = [exp_gap(rng, rate), exp_gap(rng, rate)];
    loop {
        let w = if clocks[0] <= clocks[1] { 0 } else { 1 };
        let t = clocks[w];
        if t > horizon {
            return None;
        }
        let edge_idx = rng.random_range(0..m.n_edges());
        let edge = m.edge(edge_idx);
        if edge.contains(&positions[0]) && edge.contains(&positions[1]) {
            return Some(t);
        }
        let perm = m.sample_edge_perm(edge_idx, rng);
        positions[w] = perm.apply(positions[w]);
        clocks[w] = t + exp_gap(rng, rate);
    }
}

/// Meeting time evaluated on two pre-generated streams (for pathwise
/// coupling tests). `None` when not met before both streams run out.
pub fn meeting_time_on_streams(
    m: &Model,
    y: (Vertex, Vertex),
    streams: &[&EventStream; 2],
) -> Option<f64> {
    let mut positions = [y.0, y.1];
    let mut cursors = [0usize; 2];
    loop {
        let mut next: Option<(f64, usize)> = None;
        for w in 0..2 {
            if let Some(ev) = streams[w].events.get(cursors[w]) {
                if next.is_none_or(|(t, _)| ev.time < t) {
                    next = Some((ev.time, w));
                }
            }
        }
        let (t, w) = next?;
        let ev = &streams[w].events[cursors[w]];
        cursors[w] += 1;
        let edge = m.edge(ev.edge);
        if edge.contains(&positions[0]) && edge.contains(&positions[1]) {
            return Some(t);
        }
        positions[w] = ev.perm.apply(positions[w]);
    }
}

/// First time *any two* of four independent walkers sit in an edge that then
/// rings in one of their streams.
pub fn bar_meeting_time<R: Rng + ?Sized>(
    m: &Model,
    x: [Vertex; 4],
    horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let mut sorted = x.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != 4 {
        return Err(Error::InvalidArgument(
            "the four start vertices must be distinct".into(),
        ));
    }
    let rate = m.n_edges() as f64;
    let mut positions = x;
    let mut clocks = [
        exp_gap(rng, rate),
        exp_gap(rng, rate),
        exp_gap(rng, rate),
        exp_gap(rng, rate),
    ];
    loop {
        let w = (0..4)
            .min_by(|&a, &b| clocks[a].partial_cmp(&clocks[b]).expect("finite clocks"))
            .expect("four clocks");
        let t = clocks[w];
        if t > horizon {
            return Ok(None);
        }
        let edge_idx = rng.random_range(0..m.n_edges());
        let edge = m.edge(edge_idx);
        // any ringing edge holding two walkers counts, whichever stream rang
        let on_edge = (0..4).filter(|&i| edge.contains(&positions[i])).count();
        if on_edge >= 2 {
            return Ok(Some(t));
        }
        let perm = m.sample_edge_perm(edge_idx, rng);
        positions[w] = perm.apply(positions[w]);
        clocks[w] = t + exp_gap(rng, rate);
    }
}

/// Four-walker meeting time on pre-generated streams.
pub fn bar_meeting_time_on_streams(
    m: &Model,
    x: [Vertex; 4],
    streams: &[&EventStream; 4],
) -> Result<Option<f64>> {
    let mut sorted = x.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != 4 {
        return Err(Error::InvalidArgument(
            "the four start vertices must be distinct".into(),
        ));
    }
    let mut positions = x;
    let mut cursors = [0usize; 4];
    loop {
        let mut next: Option<(f64, usize)> = None;
        for w in 0..4 {
            if let Some(ev) = streams[w].events.get(cursors[w]) {
                if next.is_none_or(|(t, _)| ev.time < t) {
                    next = Some((ev.time, w));
                }
            }
        }
        let Some((t, w)) = next else { return Ok(None) };
        let ev = &streams[w].events[cursors[w]];
        cursors[w] += 1;
        let edge = m.edge(ev.edge);
        let on_edge = (0..4).filter(|&i| edge.contains(&positions[i])).count();
        if on_edge >= 2 {
            return Ok(Some(t));
        }
        positions[w] = ev.perm.apply(positions[w]);
    }
}

/// Classifier configuration. Defaults use the multiplier 1e10 and threshold
/// 1/1000; [`EasyConfig::desk_scale`] is a cheaper preset (multiplier 100,
/// threshold 0.01) for small experiments.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EasyConfig {
    /// Horizon multiplier applied to the two-particle quarter mixing time.
    pub c_time: f64,
    /// Acceptable exceedance probability per start pair.
    pub c_prob: f64,
    pub replicas: usize,
    /// Two-particle exclusion quarter mixing time, if already known.
    pub t_ex2: Option<f64>,
    /// Wilson interval critical value.
    pub wilson_z: f64,
}

impl Default for EasyConfig {
    fn default() -> Self {
        Self {
            c_time: 1e10,
            c_prob: 1e-3,
            replicas: 1000,
            t_ex2: None,
            wilson_z: 1.959964,
        }
    }
}

impl EasyConfig {
    /// Desk-scale preset: multiplier 100, threshold 0.01.
    pub fn desk_scale() -> Self {
        Self {
            c_time: 100.0,
            c_prob: 0.01,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairEstimate {
    pub start: (Vertex, Vertex),
    /// Replicas with meeting time above the threshold.
    pub exceed: usize,
    pub replicas: usize,
    pub p_hat: f64,
    pub wilson_upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EasyReport {
    pub easy: bool,
    pub t_ex2: f64,
    pub threshold: f64,
    pub c_time: f64,
    pub c_prob: f64,
    pub wilson_z: f64,
    pub replicas: usize,
    pub worst: PairEstimate,
    pub pairs: Vec<PairEstimate>,
}

fn wilson_upper(successes: usize, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    ((p + z2 / (2.0 * n) + z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()) / (1.0 + z2 / n))
        .min(1.0)
}

/// Estimates, for every ordered start pair, the probability that the meeting
/// time exceeds `c_time` times the two-particle quarter mixing time; the
/// verdict is easy when every pair's Wilson upper bound is at most `c_prob`.
pub fn classify_easy<R: Rng + ?Sized>(m: &Model, cfg: &EasyConfig, rng: &mut R) -> Result<EasyReport> {
    if cfg.replicas == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    let t_ex2 = match cfg.t_ex2 {
        Some(t) => t,
        None => mixing_time_with_cap(m, ChainKind::Ex, 2, 0.25, DEFAULT_STATE_CAP)?.time,
    };
    let threshold = cfg.c_time * t_ex2;
    let mut pairs = Vec::new();
    for &u in m.vertices() {
        for &v in m.vertices() {
            let mut exceed = 0usize;
            for _ in 0..cfg.replicas {
                if meeting_time(m, (u, v), threshold, rng).is_none() {
                    exceed += 1;
                }
            }
            pairs.push(PairEstimate {
                start: (u, v),
                exceed,
                replicas: cfg.replicas,
                p_hat: exceed as f64 / cfg.replicas as f64,
                wilson_upper: wilson_upper(exceed, cfg.replicas, cfg.wilson_z),
            });
        }
    }
    let worst = *pairs
        .iter()
        .max_by(|a, b| {
            a.wilson_upper
                .partial_cmp(&b.wilson_upper)
                .expect("bounds are finite")
        })
        .expect("at least one pair");
    Ok(EasyReport {
        easy: worst.wilson_upper <= cfg.c_prob,
        t_ex2,
        threshold,
        c_time: cfg.c_time,
        c_prob: cfg.c_prob,
        wilson_z: cfg.wilson_z,
        replicas: cfg.replicas,
        worst,
        pairs,
    })
}
