//! The chameleon process: a recolouring process built on top of a lazy
//! interchange process.
//!
//! The state is an ordered tuple of black particles plus disjoint red, pink
//! and white vertex sets partitioning the vertex set. Time alternates
//! between constant-colour and colour-changing phases of equal length; in a
//! colour-changing phase, matched red/white pairs selected through the
//! window machinery of [`crate::permgroup`] are recoloured pink, and at the
//! end of each colour-changing phase a fair coin may recolour every pink
//! particle red or white at once (a depinking). Ink — one unit per red, half
//! per pink — is a martingale, and the black particles follow the underlying
//! interchange process exactly.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::engine::{Event, EventSource, EventStream};
use crate::error::{Error, Result};
use crate::exact::{mixing_time_with_cap, ChainKind};
use crate::hypermodel::{Model, DEFAULT_STATE_CAP};
use crate::permgroup::{beta_tilde, build_a, cycle_window, decompose, Permutation};
use crate::Vertex;

/// Particle colour at a vertex.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    Black,
    Red,
    Pink,
    White,
}

/// Chameleon state: ordered black tuple plus red/pink/white sets. The four
/// components partition the vertex set.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ChameleonState {
    pub blacks: Vec<Vertex>,
    pub reds: BTreeSet<Vertex>,
    pub pinks: BTreeSet<Vertex>,
    pub whites: BTreeSet<Vertex>,
}

impl ChameleonState {
    /// Starting state for a labelled tuple `x` of `k` distinct vertices: the
    /// first `k-1` entries are black, the last is the single red particle,
    /// and every other vertex is white.
    pub fn init(x: &[Vertex], vertices: &[Vertex]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        let mut sorted = x.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != x.len() {
            return Err(Error::InvalidArgument(
                "start tuple entries must be distinct".into(),
            ));
        }
        for &v in x {
            if !vertices.contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} is not in the model"
                )));
            }
        }
        let blacks = x[..x.len() - 1].to_vec();
        let red = x[x.len() - 1];
        let whites: BTreeSet<Vertex> = vertices
            .iter()
            .copied()
            .filter(|v| !x.contains(v))
            .collect();
        Ok(Self {
            blacks,
            reds: BTreeSet::from([red]),
            pinks: BTreeSet::new(),
            whites,
        })
    }

    pub fn colour_of(&self, v: Vertex) -> Option<Colour> {
        if self.blacks.contains(&v) {
            Some(Colour::Black)
        } else if self.reds.contains(&v) {
            Some(Colour::Red)
        } else if self.pinks.contains(&v) {
            Some(Colour::Pink)
        } else if self.whites.contains(&v) {
            Some(Colour::White)
        } else {
            None
        }
    }

    /// Twice the total ink: two half-units per red, one per pink.
    pub fn half_ink(&self) -> u32 {
        2 * self.reds.len() as u32 + self.pinks.len() as u32
    }

    /// Ink at a single vertex.
    pub fn ink_at(&self, v: Vertex) -> f64 {
        if self.reds.contains(&v) {
            1.0
        } else if self.pinks.contains(&v) {
            0.5
        } else {
            0.0
        }
    }

    /// No further recolouring possible: no pinks and one of red/white empty.
    pub fn is_absorbed(&self) -> bool {
        self.pinks.is_empty() && (self.reds.is_empty() || self.whites.is_empty())
    }

    /// The four components are disjoint and cover `vertices`.
    pub fn partition_ok(&self, vertices: &[Vertex]) -> bool {
        let mut all: Vec<Vertex> = self
            .blacks
            .iter()
            .chain(self.reds.iter())
            .chain(self.pinks.iter())
            .chain(self.whites.iter())
            .copied()
            .collect();
        all.sort_unstable();
        let mut expected = vertices.to_vec();
        expected.sort_unstable();
        all == expected
    }

    fn apply_perm(&mut self, p: &Permutation) {
        for b in &mut self.blacks {
            *b = p.apply(*b);
        }
        self.reds = p.apply_set(&self.reds);
        self.pinks = p.apply_set(&self.pinks);
        self.whites = p.apply_set(&self.whites);
    }
}

/// Alternating schedule: `(2(i-1)T, (2i-1)T]` constant-colour,
/// `((2i-1)T, 2iT]` colour-changing, depinking checks at `2iT`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseSchedule {
    pub phase_length: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Phase {
    ConstantColour,
    ColourChanging,
}

impl PhaseSchedule {
    pub fn new(phase_length: f64) -> Result<Self> {
        if !phase_length.is_finite() || phase_length <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "phase length {phase_length} must be positive and finite"
            )));
        }
        Ok(Self { phase_length })
    }

    pub fn phase_at(&self, time: f64) -> Phase {
        if time <= 0.0 {
            return Phase::ConstantColour;
        }
        let s = time / self.phase_length;
        let frac = s - 2.0 * (s / 2.0).floor();
        if frac > 0.0 && frac <= 1.0 {
            Phase::ConstantColour
        } else {
            Phase::ColourChanging
        }
    }

    /// The `j`th depinking-check time, `j >= 1`.
    pub fn depink_time(&self, j: u64) -> f64 {
        2.0 * self.phase_length * j as f64
    }
}

/// Default phase length: twenty times the four-particle exclusion quarter
/// mixing time.
pub fn default_phase_length(m: &Model) -> Result<f64> {
    let t = mixing_time_with_cap(m, ChainKind::Ex, 4, 0.25, DEFAULT_STATE_CAP)?.time;
    if t <= 0.0 {
        return Err(Error::InvalidArgument(
            "four-particle exclusion is degenerate here; supply a phase length explicitly".into(),
        ));
    }
    Ok(20.0 * t)
}

/// A matched red/white pair selected for pinkening.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct LPair {
    /// 0 for the transposition block, `i` for the `i`th cycle (1-based).
    pub block: usize,
    pub window: usize,
    pub red: Vertex,
    pub white: Vertex,
}

/// All candidate pairs plus the size of the capped selection. Pairs are in
/// lexicographic `(block, window)` order and the capped selection is the
/// prefix of length `selected`.
#[derive(Clone, Debug, Serialize)]
pub struct LSets {
    pub pairs: Vec<LPair>,
    pub selected: usize,
}

impl LSets {
    pub fn capped(&self) -> &[LPair] {
        &self.pairs[..self.selected]
    }

    pub fn union(pairs: &[LPair]) -> BTreeSet<Vertex> {
        pairs.iter().flat_map(|p| [p.red, p.white]).collect()
    }
}

fn classify_pair(
    state: &ChameleonState,
    a: Vertex,
    b: Vertex,
    block: usize,
    window: usize,
) -> LPair {
    debug_assert!(
        (state.reds.contains(&a) && state.whites.contains(&b))
            || (state.reds.contains(&b) && state.whites.contains(&a)),
        "selected pair must be one red, one white"
    );
    if state.reds.contains(&a) {
        LPair {
            block,
            window,
            red: a,
            white: b,
        }
    } else {
        LPair {
            block,
            window,
            red: b,
            white: a,
        }
    }
}

/// Computes the candidate pinkening pairs of a colour-changing event and the
/// capped selection size. Every pair has one red and one white vertex; the
/// cap keeps `|P| + 3|selection| <= min(|R|, |W|)`, choosing pairs in
/// lexicographic `(block, window)` order.
pub fn build_l(state: &ChameleonState, sigma: &Permutation) -> Result<LSets> {
    let sel = build_a(&state.reds, &state.whites, sigma)?;
    let dec = decompose(sigma);
    let mut pairs = Vec::new();

    for &j in &sel.block {
        let (a1, a2) = dec.transpositions[2 * j - 2];
        let (a3, a4) = dec.transpositions[2 * j - 1];
        if a3 > a2 {
            // this window's rewrite is vacuous and selects no pair
            continue;
        }
        let reds_in = [a1, a2, a3, a4]
            .iter()
            .filter(|v| state.reds.contains(v))
            .count();
        let first = [a1, a3];
        let first_reds = first.iter().filter(|v| state.reds.contains(v)).count();
        let (x, y) = if reds_in == 1 {
            if first_reds == 1 {
                (a1, a3)
            } else {
                (a2, a4)
            }
        } else {
            let first_whites = first.iter().filter(|v| state.whites.contains(v)).count();
            if first_whites == 1 {
                (a1, a3)
            } else {
                (a2, a4)
            }
        };
        pairs.push(classify_pair(state, x, y, 0, j));
    }

    for (i, cycle) in dec.cycles.iter().enumerate() {
        for &j in &sel.cycles[i] {
            if cycle.len() == 3 {
                let reds_in = cycle
                    .elems()
                    .iter()
                    .filter(|v| state.reds.contains(v))
                    .count();
                let lone = if reds_in == 1 {
                    *cycle
                        .elems()
                        .iter()
                        .find(|v| state.reds.contains(v))
                        .expect("one red in the cycle")
                } else {
                    *cycle
                        .elems()
                        .iter()
                        .find(|v| state.whites.contains(v))
                        .expect("one white in the cycle")
                };
                pairs.push(classify_pair(state, lone, cycle.apply(lone), i + 1, j));
            } else {
                let w = cycle_window(cycle, j)?;
                // window order: positions 2j-2, 2j-1, 2d'+2j-2, 2d'+2j-1
                let reds_in = w.iter().filter(|v| state.reds.contains(v)).count();
                let even = [w[0], w[2]];
                let (x, y) = if reds_in == 1 {
                    if even.iter().filter(|v| state.reds.contains(v)).count() == 1 {
                        (w[0], w[2])
                    } else {
                        (w[1], w[3])
                    }
                } else {
                    if even.iter().filter(|v| state.whites.contains(v)).count() == 1 {
                        (w[0], w[2])
                    } else {
                        (w[1], w[3])
                    }
                };
                pairs.push(classify_pair(state, x, y, i + 1, j));
            }
        }
    }

    let min_rw = state.reds.len().min(state.whites.len());
    let allowance = (min_rw.saturating_sub(state.pinks.len())) / 3;
    let selected = pairs.len().min(allowance);
    Ok(LSets { pairs, selected })
}

/// What a single update did.
#[derive(Clone, Debug, Serialize)]
pub struct StepOutcome {
    pub pinkened: Vec<LPair>,
    /// Whether the event's permutation was applied to the state.
    pub moved: bool,
}

/// Applies one event of the lazy stream to the state, following the update
/// rules of the phase. In a colour-changing phase, pinkening happens when
/// there are fewer pinks than reds or whites (the gate; dropped in the
/// modified process) and either the edge has more than two vertices, the
/// coin is 1 and the permutation is not the identity — in which case the
/// capped selection (the full candidate set in the modified process) is
/// pinkened and the permutation applied — or the edge is exactly one red and
/// one white vertex with a non-identity permutation, in which case both are
/// pinkened and nothing moves.
pub fn cham_step(
    state: &mut ChameleonState,
    event: &Event,
    phase: Phase,
    modified: bool,
) -> Result<StepOutcome> {
    let theta = event.theta.ok_or_else(|| {
        Error::InvalidArgument("chameleon events must come from a lazy stream".into())
    })?;
    let sigma = &event.perm;
    let interchange_move = |state: &mut ChameleonState| -> bool {
        if theta {
            state.apply_perm(sigma);
            true
        } else {
            false
        }
    };
    if phase == Phase::ConstantColour {
        let moved = interchange_move(state);
        return Ok(StepOutcome {
            pinkened: Vec::new(),
            moved,
        });
    }

    let gate = modified || state.pinks.len() < state.reds.len().min(state.whites.len());
    let edge_size = sigma.domain().len();

    if gate && edge_size > 2 && theta && !sigma.is_identity() {
        let l = build_l(state, sigma)?;
        let chosen: Vec<LPair> = if modified {
            l.pairs.clone()
        } else {
            l.capped().to_vec()
        };
        for p in &chosen {
            state.reds.remove(&p.red);
            state.whites.remove(&p.white);
            state.pinks.insert(p.red);
            state.pinks.insert(p.white);
        }
        state.apply_perm(sigma);
        return Ok(StepOutcome {
            pinkened: chosen,
            moved: true,
        });
    }

    if gate && edge_size == 2 && !sigma.is_identity() {
        let (a, b) = (sigma.domain()[0], sigma.domain()[1]);
        let red_white = (state.reds.contains(&a) && state.whites.contains(&b))
            || (state.reds.contains(&b) && state.whites.contains(&a));
        if red_white {
            // both particles are pinkened and nothing moves
            let pair = classify_pair(state, a, b, 0, 0);
            state.reds.remove(&pair.red);
            state.whites.remove(&pair.white);
            state.pinks.insert(pair.red);
            state.pinks.insert(pair.white);
            return Ok(StepOutcome {
                pinkened: vec![pair],
                moved: false,
            });
        }
    }

    let moved = interchange_move(state);
    Ok(StepOutcome {
        pinkened: Vec::new(),
        moved,
    })
}

/// Depinking check: when at least as many pinks as the smaller of the red
/// and white counts (and any pinks at all), the coin recolours every pink
/// red (`true`) or white (`false`). Returns whether a depinking happened —
/// the coin is consumed only in that case.
pub fn depink(state: &mut ChameleonState, coin: impl FnOnce() -> bool) -> bool {
    if state.pinks.is_empty() || state.pinks.len() < state.reds.len().min(state.whites.len()) {
        return false;
    }
    let pinks = std::mem::take(&mut state.pinks);
    if coin() {
        state.reds.extend(pinks);
    } else {
        state.whites.extend(pinks);
    }
    true
}

/// How a run ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// All non-black particles ended red.
    Fill,
    /// All non-black particles ended white.
    Empty,
    Unabsorbed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pinkening {
    pub time: f64,
    pub block: usize,
    pub window: usize,
    pub red: Vertex,
    pub white: Vertex,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSnapshot {
    pub time: f64,
    pub state: ChameleonState,
}

/// Full record of one chameleon run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub phase_length: f64,
    pub modified: bool,
    /// `(time, half-ink)` at time zero and at every depinking.
    pub ink_trace: Vec<(f64, u32)>,
    pub depink_times: Vec<f64>,
    pub outcome: Outcome,
    pub absorbed_at: Option<f64>,
    pub final_time: f64,
    pub final_state: ChameleonState,
    pub pinkenings: Vec<Pinkening>,
    pub probes: Vec<ProbeSnapshot>,
    pub z_path: Option<Vec<(f64, Vec<Vertex>)>>,
    /// Red count at the start and end of each completed colour-changing
    /// phase (end taken before the depinking check), for decrement reports.
    pub phase_red_span: Vec<(usize, usize)>,
}

impl RunRecord {
    /// Half-ink in force at time `t` (the trace is piecewise constant).
    pub fn half_ink_at(&self, t: f64) -> u32 {
        let mut value = self.ink_trace[0].1;
        for &(s, v) in &self.ink_trace {
            if s <= t {
                value = v;
            } else {
                break;
            }
        }
        value
    }

    /// CSV rows `time,block,window,red,white` of the pinkening log.
    pub fn pinkenings_csv(&self) -> String {
        let mut out = String::from("time,block,window,red,white\n");
        for p in &self.pinkenings {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.time, p.block, p.window, p.red, p.white
            ));
        }
        out
    }
}

/// Run parameters. `horizon` bounds the run; `probes` are times at which the
/// full state is snapshotted.
#[derive(Clone, Debug)]
pub struct ChameleonParams {
    pub phase_length: f64,
    pub horizon: f64,
    pub modified: bool,
    pub probes: Vec<f64>,
    pub record_pinkenings: bool,
    pub record_z_path: bool,
    /// Verify the structural invariants after every update (partition,
    /// red/white monotonicity between depinkings, pair colours, and — in
    /// non-modified mode — the pink cap after capped pinkenings).
    pub check_invariants: bool,
}

impl ChameleonParams {
    pub fn new(phase_length: f64, horizon: f64) -> Self {
        Self {
            phase_length,
            horizon,
            modified: false,
            probes: Vec::new(),
            record_pinkenings: false,
            record_z_path: false,
            check_invariants: false,
        }
    }
}

struct Driver {
    schedule: PhaseSchedule,
    modified: bool,
    state: ChameleonState,
    ink_trace: Vec<(f64, u32)>,
    depink_times: Vec<f64>,
    pinkenings: Vec<Pinkening>,
    record_pinkenings: bool,
    probes: Vec<f64>,
    probe_cursor: usize,
    probe_snaps: Vec<ProbeSnapshot>,
    z_path: Option<Vec<(f64, Vec<Vertex>)>>,
    next_depink: u64,
    absorbed_at: Option<f64>,
    t_now: f64,
    checks: Option<InvariantTracker>,
    phase_start_reds: usize,
    phase_red_span: Vec<(usize, usize)>,
}

struct InvariantTracker {
    vertices: Vec<Vertex>,
    prev_reds: usize,
    prev_whites: usize,
}

impl Driver {
    fn new(state: ChameleonState, vertices: &[Vertex], params: &ChameleonParams) -> Result<Self> {
        let schedule = PhaseSchedule::new(params.phase_length)?;
        let mut probes = params.probes.clone();
        probes.sort_by(|a, b| a.partial_cmp(b).expect("probe times are comparable"));
        if probes.iter().any(|&p| p.is_nan() || p < 0.0 || p > params.horizon) {
            return Err(Error::TimeOutOfRange(
                "probe times must lie in [0, horizon]".into(),
            ));
        }
        let absorbed0 = state.is_absorbed();
        let checks = params.check_invariants.then(|| InvariantTracker {
            vertices: vertices.to_vec(),
            prev_reds: state.reds.len(),
            prev_whites: state.whites.len(),
        });
        let phase_start_reds = state.reds.len();
        let mut driver = Self {
            schedule,
            modified: params.modified,
            ink_trace: vec![(0.0, state.half_ink())],
            z_path: params.record_z_path.then(|| vec![(0.0, state.blacks.clone())]),
            state,
            depink_times: Vec::new(),
            pinkenings: Vec::new(),
            record_pinkenings: params.record_pinkenings,
            probes,
            probe_cursor: 0,
            probe_snaps: Vec::new(),
            next_depink: 1,
            absorbed_at: absorbed0.then_some(0.0),
            t_now: 0.0,
            checks,
            phase_start_reds,
            phase_red_span: Vec::new(),
        };
        // probes at exactly zero see the initial state
        driver.take_probes_at(0.0);
        Ok(driver)
    }

    fn verify_step(&mut self, outcome: &StepOutcome, edge_size: usize, t: f64) -> Result<()> {
        let Some(tracker) = &mut self.checks else {
            return Ok(());
        };
        if !self.state.partition_ok(&tracker.vertices) {
            return Err(Error::Invariant(format!("partition broken at t={t}")));
        }
        if outcome.pinkened.iter().any(|p| p.red == p.white) {
            return Err(Error::Invariant(format!("degenerate pinkened pair at t={t}")));
        }
        if self.state.reds.len() > tracker.prev_reds
            || self.state.whites.len() > tracker.prev_whites
        {
            return Err(Error::Invariant(format!(
                "red/white count grew between depinkings at t={t}"
            )));
        }
        if !self.modified
            && edge_size > 2
            && !outcome.pinkened.is_empty()
            && self.state.pinks.len() > self.state.reds.len().min(self.state.whites.len())
        {
            return Err(Error::Invariant(format!(
                "pink cap exceeded after a capped pinkening at t={t}"
            )));
        }
        tracker.prev_reds = self.state.reds.len();
        tracker.prev_whites = self.state.whites.len();
        Ok(())
    }

    fn next_probe(&self) -> Option<f64> {
        self.probes.get(self.probe_cursor).copied()
    }

    fn take_probes_at(&mut self, t: f64) {
        while self
            .next_probe()
            .is_some_and(|p| p == t)
        {
            self.probe_cursor += 1;
            self.probe_snaps.push(ProbeSnapshot {
                time: t,
                state: self.state.clone(),
            });
        }
    }

    fn note_absorption(&mut self, t: f64) {
        if self.absorbed_at.is_none() && self.state.is_absorbed() {
            self.absorbed_at = Some(t);
        }
    }

    fn handle_event(&mut self, ev: &Event) -> Result<()> {
        let phase = self.schedule.phase_at(ev.time);
        let outcome = cham_step(&mut self.state, ev, phase, self.modified)?;
        self.verify_step(&outcome, ev.perm.domain().len(), ev.time)?;
        if self.record_pinkenings {
            for p in &outcome.pinkened {
                self.pinkenings.push(Pinkening {
                    time: ev.time,
                    block: p.block,
                    window: p.window,
                    red: p.red,
                    white: p.white,
                });
            }
        }
        self.t_now = ev.time;
        if let Some(path) = &mut self.z_path {
            path.push((ev.time, self.state.blacks.clone()));
        }
        self.note_absorption(ev.time);
        Ok(())
    }

    fn handle_depink(&mut self, t: f64, coin: &mut impl FnMut() -> bool) {
        // a colour-changing phase just ended; record its red span (only
        // while the process is still live)
        if self.absorbed_at.is_none() {
            self.phase_red_span
                .push((self.phase_start_reds, self.state.reds.len()));
        }
        if depink(&mut self.state, &mut *coin) {
            self.depink_times.push(t);
            self.ink_trace.push((t, self.state.half_ink()));
            if let Some(tracker) = &mut self.checks {
                tracker.prev_reds = self.state.reds.len();
                tracker.prev_whites = self.state.whites.len();
            }
        }
        self.phase_start_reds = self.state.reds.len();
        self.t_now = t;
        self.note_absorption(t);
    }

    /// Processes depinkings and probes due strictly before `t`; at equal
    /// times a depinking precedes a probe.
    fn timeline_until(&mut self, t: f64, coin: &mut impl FnMut() -> bool) {
        loop {
            let t_dep = self.schedule.depink_time(self.next_depink);
            let t_probe = self.next_probe().unwrap_or(f64::INFINITY);
            let t_item = t_dep.min(t_probe);
            if t_item >= t {
                return;
            }
            if t_dep <= t_probe {
                self.next_depink += 1;
                self.handle_depink(t_dep, coin);
            } else {
                self.probe_cursor += 1;
                self.probe_snaps.push(ProbeSnapshot {
                    time: t_probe,
                    state: self.state.clone(),
                });
                self.t_now = t_probe;
            }
        }
    }

    fn done_early(&self) -> bool {
        self.absorbed_at.is_some() && self.next_probe().is_none() && self.z_path.is_none()
    }

    fn finish(mut self, params: &ChameleonParams, coin: &mut impl FnMut() -> bool) -> RunRecord {
        if !self.done_early() {
            // flush timeline items up to and including the horizon
            let bound = params.horizon + f64::EPSILON * params.horizon.max(1.0);
            self.timeline_until(bound, coin);
        }
        let outcome = if self.absorbed_at.is_some() {
            if self.state.whites.is_empty() && self.state.pinks.is_empty() {
                Outcome::Fill
            } else {
                Outcome::Empty
            }
        } else {
            Outcome::Unabsorbed
        };
        RunRecord {
            phase_length: self.schedule.phase_length,
            modified: self.modified,
            ink_trace: self.ink_trace,
            depink_times: self.depink_times,
            outcome,
            absorbed_at: self.absorbed_at,
            final_time: self.t_now,
            final_state: self.state,
            pinkenings: self.pinkenings,
            probes: self.probe_snaps,
            z_path: self.z_path,
            phase_red_span: self.phase_red_span,
        }
    }
}

/// Runs the chameleon process from the tuple `x`, generating a fresh lazy
/// event stream from `event_rng`; depinking coins come from the dedicated
/// `coin_rng`, independent of movement randomness. The run stops at
/// absorption (once all probes are collected) or at the horizon.
pub fn run_chameleon<R1: Rng, R2: Rng>(
    m: &Model,
    x: &[Vertex],
    params: &ChameleonParams,
    event_rng: R1,
    mut coin_rng: R2,
) -> Result<RunRecord> {
    let state = ChameleonState::init(x, m.vertices())?;
    let mut driver = Driver::new(state, m.vertices(), params)?;
    let mut source = EventSource::new(m, true, event_rng);
    let mut coin = move || coin_rng.random_bool(0.5);
    let mut pending = source.next_event();
    while !driver.done_early() {
        if pending.time > params.horizon {
            break;
        }
        driver.timeline_until(pending.time, &mut coin);
        if driver.done_early() {
            break;
        }
        driver.handle_event(&pending)?;
        pending = source.next_event();
    }
    Ok(driver.finish(params, &mut coin))
}

/// Runs the chameleon process over a pre-generated lazy stream, for pathwise
/// comparisons against processes sharing the same stream.
pub fn run_chameleon_on_stream<R: Rng>(
    m: &Model,
    x: &[Vertex],
    params: &ChameleonParams,
    stream: &EventStream,
    mut coin_rng: R,
) -> Result<RunRecord> {
    if !stream.lazy {
        return Err(Error::InvalidArgument(
            "the chameleon process needs a lazy stream".into(),
        ));
    }
    let state = ChameleonState::init(x, m.vertices())?;
    let mut driver = Driver::new(state, m.vertices(), params)?;
    let mut coin = move || coin_rng.random_bool(0.5);
    let horizon = params.horizon.min(stream.horizon);
    for ev in &stream.events {
        if ev.time > horizon || driver.done_early() {
            break;
        }
        driver.timeline_until(ev.time, &mut coin);
        if driver.done_early() {
            break;
        }
        driver.handle_event(ev)?;
    }
    let mut trimmed = params.clone();
    trimmed.horizon = horizon;
    Ok(driver.finish(&trimmed, &mut coin))
}

/// The vertex relabelling connecting an event's permutation to its rewritten
/// form, with the verification report of its defining properties: pinkened
/// vertices swap red and white under `g`, unpinkened vertices keep their
/// colour, and `rewritten(g(u)) = sigma(u)` everywhere. Pinkening here means
/// the uncapped candidate set.
#[derive(Clone, Debug)]
pub struct GMapReport {
    pub g: Permutation,
    pub pinken_swap_ok: bool,
    pub colour_preserved_ok: bool,
    pub conjugation_ok: bool,
}

impl GMapReport {
    pub fn all_ok(&self) -> bool {
        self.pinken_swap_ok && self.colour_preserved_ok && self.conjugation_ok
    }
}

pub fn g_map(state: &ChameleonState, sigma: &Permutation) -> Result<GMapReport> {
    if sigma.domain().len() <= 2 {
        return Err(Error::InvalidArgument(
            "the relabelling is defined for edges with more than two vertices".into(),
        ));
    }
    let sel = build_a(&state.reds, &state.whites, sigma)?;
    let rewritten = beta_tilde(&sel, sigma)?;
    let g = rewritten.inverse().compose(sigma);
    let l = build_l(state, sigma)?;
    let pinkened = LSets::union(&l.pairs);

    let mut pinken_swap_ok = true;
    let mut colour_preserved_ok = true;
    let mut conjugation_ok = true;
    for &u in sigma.domain() {
        let gu = g.apply(u);
        if pinkened.contains(&u) {
            let swap = (state.reds.contains(&u) == state.whites.contains(&gu))
                && (state.whites.contains(&u) == state.reds.contains(&gu));
            pinken_swap_ok &= swap;
        } else {
            colour_preserved_ok &= state.colour_of(gu) == state.colour_of(u);
        }
        conjugation_ok &= rewritten.apply(gu) == sigma.apply(u);
    }
    Ok(GMapReport {
        g,
        pinken_swap_ok,
        colour_preserved_ok,
        conjugation_ok,
    })
}
