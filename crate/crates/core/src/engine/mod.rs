//! The graphical construction: Poisson event streams shared by every process.
//!
//! An event stream carries incident times, edge choices, permutations, and
//! (in lazy mode, where the clock rate is doubled) fair coins that thin the
//! events back to the standard rate. All processes — random walks, exclusion,
//! interchange, the chameleon process — are deterministic functionals of a
//! stream, so any two of them can be coupled pathwise by sharing one.

mod meeting;

pub use meeting::{
    bar_meeting_time, bar_meeting_time_on_streams, classify_easy, meeting_time,
    meeting_time_on_streams, EasyConfig, EasyReport, PairEstimate,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypermodel::Model;
use crate::permgroup::Permutation;
use crate::rng::{stream_rng, StreamDescriptor};
use crate::Vertex;

/// One clock ring: time, the edge that rang, the permutation drawn for it,
/// and — in lazy mode only — the thinning coin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub edge: usize,
    pub perm: Permutation,
    pub theta: Option<bool>,
}

impl Event {
    /// The permutation the event actually applies: identity when a lazy
    /// event's coin came up zero.
    pub fn effective_perm(&self) -> Option<&Permutation> {
        match self.theta {
            Some(false) => None,
            _ => Some(&self.perm),
        }
    }
}

/// A materialized event stream over `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct EventStream {
    pub vertices: Vec<Vertex>,
    pub horizon: f64,
    pub lazy: bool,
    pub events: Vec<Event>,
}

/// Incremental event generator; [`gen_events`] materializes it, the meeting
/// samplers and the chameleon runner consume it event by event.
pub struct EventSource<'m, R> {
    model: &'m Model,
    lazy: bool,
    rate: f64,
    t: f64,
    rng: R,
}

impl<'m, R: Rng> EventSource<'m, R> {
    /// Total rate is `|E|`, doubled in lazy mode; duplicate edges each ring
    /// independently.
    pub fn new(model: &'m Model, lazy: bool, rng: R) -> Self {
        let rate = model.n_edges() as f64 * if lazy { 2.0 } else { 1.0 };
        Self {
            model,
            lazy,
            rate,
            t: 0.0,
            rng,
        }
    }

    pub fn next_event(&mut self) -> Event {
        self.t += exp_gap(&mut self.rng, self.rate);
        let edge = self.rng.random_range(0..self.model.n_edges());
        let perm = self.model.sample_edge_perm(edge, &mut self.rng);
        let theta = self.lazy.then(|| self.rng.random_bool(0.5));
        Event {
            time: self.t,
            edge,
            perm,
            theta,
        }
    }
}

/// Strictly positive exponential gap.
fn exp_gap<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return -u.ln() / rate;
        }
    }
}

/// Samples an event stream up to `horizon`. Incident gaps are exponential at
/// total rate `|E|` (doubled in lazy mode), edges are uniform, permutations
/// are drawn type-by-weight then uniformly within the class, and lazy mode
/// attaches fair coins.
pub fn gen_events<R: Rng>(m: &Model, horizon: f64, lazy: bool, rng: R) -> EventStream {
    let mut source = EventSource::new(m, lazy, rng);
    let mut events = Vec::new();
    if horizon > 0.0 {
        loop {
            let ev = source.next_event();
            if ev.time > horizon {
                break;
            }
            events.push(ev);
        }
    }
    EventStream {
        vertices: m.vertices().to_vec(),
        horizon: horizon.max(0.0),
        lazy,
        events,
    }
}

impl EventStream {
    /// Regenerates the stream a descriptor points at.
    pub fn replay(m: &Model, desc: &StreamDescriptor) -> EventStream {
        gen_events(m, desc.horizon, desc.lazy, stream_rng(desc.seed, desc.stream_id))
    }
}

/// The composed permutation of an interval of a stream.
#[derive(Clone, Debug)]
pub struct IntervalMap {
    pub s: f64,
    pub t: f64,
    pub perm: Permutation,
}

/// Composes the (effective) permutations of the events in `(s, t]`, as a
/// permutation of the full vertex set. The empty interval gives the
/// identity, and maps over adjacent intervals compose:
/// `interval_map(0, t) = interval_map(s, t) ∘ interval_map(0, s)`.
pub fn interval_map(stream: &EventStream, s: f64, t: f64) -> Result<IntervalMap> {
    if !(0.0 <= s && s <= t && t <= stream.horizon) {
        return Err(Error::TimeOutOfRange(format!(
            "need 0 <= s <= t <= horizon, got s={s}, t={t}, horizon={}",
            stream.horizon
        )));
    }
    let mut perm = Permutation::identity(stream.vertices.iter().copied());
    for ev in &stream.events {
        if ev.time <= s {
            continue;
        }
        if ev.time > t {
            break;
        }
        if let Some(p) = ev.effective_perm() {
            perm = p.compose(&perm);
        }
    }
    Ok(IntervalMap {
        s,
        t,
        perm: perm.with_domain(stream.vertices.iter().copied())?,
    })
}

/// Initial condition of a stream-lifted process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcessInit {
    /// Single walker.
    Walk(Vertex),
    /// Unlabelled particle set.
    Exclusion(Vec<Vertex>),
    /// Labelled particle tuple (distinct entries).
    Interchange(Vec<Vertex>),
}

/// A state along a trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ProcState {
    Walk(Vertex),
    Set(Vec<Vertex>),
    Tuple(Vec<Vertex>),
}

impl ProcState {
    /// Forgets labels: a tuple becomes the sorted set it occupies.
    pub fn unlabel(&self) -> ProcState {
        match self {
            ProcState::Tuple(xs) => {
                let mut s = xs.clone();
                s.sort_unstable();
                ProcState::Set(s)
            }
            other => other.clone(),
        }
    }
}

/// Piecewise-constant path recorded at time 0 and at every event time.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub states: Vec<(f64, ProcState)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &ProcState {
        &self.states.last().expect("trajectory has an initial state").1
    }

    /// CSV rows `time,state` with the state space-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,state\n");
        for (t, state) in &self.states {
            let cell = match state {
                ProcState::Walk(v) => v.to_string(),
                ProcState::Set(xs) | ProcState::Tuple(xs) => xs
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            out.push_str(&format!("{t},{cell}\n"));
        }
        out
    }
}

fn check_members(xs: &[Vertex], stream: &EventStream) -> Result<()> {
    for &x in xs {
        if stream.vertices.binary_search(&x).is_err() {
            return Err(Error::InvalidArgument(format!(
                "vertex {x} is not in the model"
            )));
        }
    }
    Ok(())
}

/// Runs a stream-lifted process: the state at each event is the image of the
/// previous state under the event's effective permutation. With a shared
/// stream, forgetting interchange labels reproduces the exclusion path
/// exactly.
pub fn evolve(init: &ProcessInit, stream: &EventStream) -> Result<Trajectory> {
    let mut state = match init {
        ProcessInit::Walk(v) => {
            check_members(&[*v], stream)?;
            ProcState::Walk(*v)
        }
        ProcessInit::Exclusion(xs) => {
            check_members(xs, stream)?;
            let mut sorted = xs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != xs.len() {
                return Err(Error::InvalidArgument(
                    "exclusion state repeats a vertex".into(),
                ));
            }
            ProcState::Set(sorted)
        }
        ProcessInit::Interchange(xs) => {
            check_members(xs, stream)?;
            let mut sorted = xs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != xs.len() {
                return Err(Error::InvalidArgument(
                    "interchange tuple entries must be distinct".into(),
                ));
            }
            ProcState::Tuple(xs.clone())
        }
    };
    let mut states = Vec::with_capacity(stream.events.len() + 1);
    states.push((0.0, state.clone()));
    for ev in &stream.events {
        if let Some(p) = ev.effective_perm() {
            state = match state {
                ProcState::Walk(v) => ProcState::Walk(p.apply(v)),
                ProcState::Set(xs) => {
                    let mut image = p.apply_tuple(&xs);
                    image.sort_unstable();
                    ProcState::Set(image)
                }
                ProcState::Tuple(xs) => ProcState::Tuple(p.apply_tuple(&xs)),
            };
        }
        states.push((ev.time, state.clone()));
    }
    Ok(Trajectory { states })
}

/// `k` independent walkers, one stream each, on a merged timeline. The
/// recorded states are position tuples at every event of any stream.
pub fn evolve_walkers(inits: &[Vertex], streams: &[EventStream]) -> Result<Trajectory> {
    if inits.len() != streams.len() {
        return Err(Error::LengthMismatch {
            left: inits.len(),
            right: streams.len(),
        });
    }
    let mut positions = inits.to_vec();
    let mut cursors = vec![0usize; streams.len()];
    let mut states = vec![(0.0, ProcState::Tuple(positions.clone()))];
    loop {
        let mut next: Option<(f64, usize)> = None;
        for (w, stream) in streams.iter().enumerate() {
            if let Some(ev) = stream.events.get(cursors[w]) {
                if next.is_none_or(|(t, _)| ev.time < t) {
                    next = Some((ev.time, w));
                }
            }
        }
        let Some((_, w)) = next else { break };
        let ev = &streams[w].events[cursors[w]];
        cursors[w] += 1;
        if let Some(p) = ev.effective_perm() {
            positions[w] = p.apply(positions[w]);
        }
        states.push((ev.time, ProcState::Tuple(positions.clone())));
    }
    Ok(Trajectory { states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn four_vertex(delta: f64) -> Model {
        Model::from_parts(
            vec![1, 2, 3, 4],
            vec![vec![1, 2, 3, 4]],
            vec![vec![("2+2", 1.0 - delta), ("4", delta)]],
        )
        .unwrap()
    }

    #[test]
    fn empty_horizon_means_empty_stream() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 0.0, false, stream_rng(1, 0));
        assert!(s.events.is_empty());
    }

    #[test]
    fn event_count_matches_poisson_mean() {
        // one edge at unit rate over [0, 10]: mean count 10
        let m = four_vertex(0.3);
        let reps = 10_000;
        let mut total = 0usize;
        for i in 0..reps {
            total += gen_events(&m, 10.0, false, stream_rng(2, i)).events.len();
        }
        let mean = total as f64 / reps as f64;
        let se = (10.0f64 / reps as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn lazy_coins_are_fair_and_rate_doubles() {
        let m = four_vertex(0.3);
        let mut ones = 0usize;
        let mut count = 0usize;
        for i in 0..2_000 {
            let s = gen_events(&m, 10.0, true, stream_rng(3, i));
            count += s.events.len();
            ones += s
                .events
                .iter()
                .filter(|e| e.theta == Some(true))
                .count();
        }
        let frac = ones as f64 / count as f64;
        let se = (0.25f64 / count as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se);
        let mean = count as f64 / 2_000.0;
        let se_mean = (20.0f64 / 2_000.0).sqrt();
        assert!((mean - 20.0).abs() < 3.0 * se_mean, "lazy rate should double");
    }

    #[test]
    fn times_strictly_increase() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 50.0, true, stream_rng(4, 0));
        for w in s.events.windows(2) {
            assert!(w[0].time < w[1].time);
        }
    }

    #[test]
    fn interval_map_identity_and_cocycle() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 8.0, false, stream_rng(5, 0));
        let id = interval_map(&s, 3.0, 3.0).unwrap();
        assert!(id.perm.is_identity());
        let mut rng = stream_rng(5, 1);
        use rand::Rng;
        for _ in 0..50 {
            let a: f64 = rng.random::<f64>() * 8.0;
            let b: f64 = rng.random::<f64>() * 8.0;
            let (s0, t0) = if a <= b { (a, b) } else { (b, a) };
            let whole = interval_map(&s, 0.0, t0).unwrap();
            let left = interval_map(&s, 0.0, s0).unwrap();
            let right = interval_map(&s, s0, t0).unwrap();
            assert_eq!(whole.perm, right.perm.compose(&left.perm));
        }
    }

    #[test]
    fn interval_map_rejects_bad_times() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 1.0, false, stream_rng(5, 2));
        assert!(interval_map(&s, -0.1, 0.5).is_err());
        assert!(interval_map(&s, 0.5, 0.2).is_err());
        assert!(interval_map(&s, 0.0, 2.0).is_err());
    }

    #[test]
    fn all_tails_zero_means_identity_map() {
        let m = four_vertex(0.3);
        let mut s = gen_events(&m, 5.0, true, stream_rng(5, 3));
        for ev in &mut s.events {
            ev.theta = Some(false);
        }
        let map = interval_map(&s, 0.0, 5.0).unwrap();
        assert!(map.perm.is_identity());
    }

    #[test]
    fn exclusion_is_unlabelled_interchange_pathwise() {
        let m = four_vertex(0.3);
        for i in 0..200 {
            let s = gen_events(&m, 4.0, i % 2 == 0, stream_rng(6, i));
            let ip = evolve(&ProcessInit::Interchange(vec![1, 2, 3]), &s).unwrap();
            let ex = evolve(&ProcessInit::Exclusion(vec![1, 2, 3]), &s).unwrap();
            assert_eq!(ip.states.len(), ex.states.len());
            for ((t1, a), (t2, b)) in ip.states.iter().zip(&ex.states) {
                assert_eq!(t1, t2);
                assert_eq!(a.unlabel(), *b);
            }
        }
    }

    #[test]
    fn empty_stream_constant_trajectory() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 0.0, false, stream_rng(6, 1000));
        let tr = evolve(&ProcessInit::Walk(2), &s).unwrap();
        assert_eq!(tr.states.len(), 1);
        assert_eq!(*tr.final_state(), ProcState::Walk(2));
    }

    #[test]
    fn interchange_rejects_duplicates() {
        let m = four_vertex(0.3);
        let s = gen_events(&m, 1.0, false, stream_rng(6, 1001));
        assert!(evolve(&ProcessInit::Interchange(vec![1, 1, 2]), &s).is_err());
    }

    #[test]
    fn walker_return_probability_matches_spectral_value() {
        // empirical q_1(1,1) on the double-transposition model vs
        // 1/4 + (3/4) exp(-4/3)
        let m = four_vertex(0.0);
        let reps = 40_000;
        let mut returns = 0usize;
        for i in 0..reps {
            let s = gen_events(&m, 1.0, false, stream_rng(7, i));
            let tr = evolve(&ProcessInit::Walk(1), &s).unwrap();
            if *tr.final_state() == ProcState::Walk(1) {
                returns += 1;
            }
        }
        let p = 0.25 + 0.75 * (-4.0f64 / 3.0).exp();
        let freq = returns as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "{freq} vs {p}");
    }

    #[test]
    fn independent_walkers_match_single_walks() {
        // with per-walker streams, the tuple path decomposes into the
        // single-walker paths run on the same streams, at every event time
        let m = four_vertex(0.3);
        let streams: Vec<EventStream> = (0..3)
            .map(|w| gen_events(&m, 5.0, false, stream_rng(8, w)))
            .collect();
        let inits = [1u32, 2, 4];
        let joint = evolve_walkers(&inits, &streams).unwrap();
        for (w, init) in inits.into_iter().enumerate() {
            let single = evolve(&ProcessInit::Walk(init), &streams[w]).unwrap();
            let position_at = |t: f64| -> Vertex {
                let mut pos = init;
                for (s, state) in &single.states {
                    if *s > t {
                        break;
                    }
                    let ProcState::Walk(v) = state else { unreachable!() };
                    pos = *v;
                }
                pos
            };
            for (t, state) in &joint.states {
                let ProcState::Tuple(xs) = state else {
                    panic!("walker trajectory is a tuple");
                };
                assert_eq!(xs[w], position_at(*t), "walker {w} deviates at t={t}");
            }
        }
    }

    #[test]
    fn replay_descriptor_reproduces_stream() {
        let m = four_vertex(0.3);
        let desc = StreamDescriptor {
            seed: 11,
            stream_id: 4,
            horizon: 6.0,
            lazy: true,
        };
        let a = EventStream::replay(&m, &desc);
        let b = EventStream::replay(&m, &desc);
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            assert_eq!(x.time, y.time);
            assert_eq!(x.edge, y.edge);
            assert_eq!(x.perm, y.perm);
            assert_eq!(x.theta, y.theta);
        }
    }
}
