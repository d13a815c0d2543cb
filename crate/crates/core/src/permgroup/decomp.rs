//! Canonical cyclic decomposition: an ordered transposition block plus
//! cycles of length at least 3, fixed points omitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::Vertex;

/// A cycle of length ≥ 3, listed from its minimal element.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Cycle {
    elems: Vec<Vertex>,
}

impl Cycle {
    /// Accepts any rotation and canonicalizes to start at the minimal label.
    pub fn new(elems: Vec<Vertex>) -> Result<Self> {
        if elems.len() < 3 {
            return Err(Error::MalformedDecomposition(format!(
                "cycle of length {} (need at least 3)",
                elems.len()
            )));
        }
        let mut sorted = elems.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedDecomposition(
                "repeated label within a cycle".into(),
            ));
        }
        let min_pos = elems
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .map(|(i, _)| i)
            .unwrap();
        let mut rotated = elems;
        rotated.rotate_left(min_pos);
        Ok(Self { elems: rotated })
    }

    /// Minimal element, always at position 0.
    pub fn min(&self) -> Vertex {
        self.elems[0]
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elems(&self) -> &[Vertex] {
        &self.elems
    }

    /// Successor of `v` within the cycle.
    pub fn apply(&self, v: Vertex) -> Vertex {
        match self.elems.iter().position(|&x| x == v) {
            Some(i) => self.elems[(i + 1) % self.elems.len()],
            None => v,
        }
    }
}

/// A permutation split into its ordered transposition block `rho_0` and its
/// cycles of length ≥ 3, sorted by minimal element.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CyclicDecomposition {
    /// Transpositions `(a, b)` with `a < b`, ordered by smaller element.
    pub transpositions: Vec<(Vertex, Vertex)>,
    /// Cycles of length ≥ 3, ordered by minimal element.
    pub cycles: Vec<Cycle>,
}

impl CyclicDecomposition {
    /// Number of cycles of length ≥ 3.
    pub fn k(&self) -> usize {
        self.cycles.len()
    }

    /// Number of labels in the transposition block (`d_0`).
    pub fn block_size(&self) -> usize {
        2 * self.transpositions.len()
    }

    pub fn is_identity(&self) -> bool {
        self.transpositions.is_empty() && self.cycles.is_empty()
    }
}

/// Checks the transposition-block ordering invariant: each pair `(a, b)` has
/// `a < b`, pairs are sorted by smaller element, and labels are distinct.
pub fn validate_block(block: &[(Vertex, Vertex)]) -> Result<()> {
    let mut labels = Vec::with_capacity(block.len() * 2);
    for &(a, b) in block {
        if a >= b {
            return Err(Error::MalformedDecomposition(format!(
                "transposition ({a} {b}) is not written smaller-first"
            )));
        }
        labels.push(a);
        labels.push(b);
    }
    if block.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::MalformedDecomposition(
            "transpositions are not ordered by smaller element".into(),
        ));
    }
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::MalformedDecomposition(
            "transpositions are not disjoint".into(),
        ));
    }
    Ok(())
}

/// Splits a permutation into its canonical cyclic decomposition. The
/// identity yields an empty decomposition.
pub fn decompose(p: &Permutation) -> CyclicDecomposition {
    let mut transpositions = Vec::new();
    let mut cycles = Vec::new();
    for orbit in p.cycles() {
        if orbit.len() == 2 {
            // orbit starts at its minimum, so the pair is already (min, max)
            transpositions.push((orbit[0], orbit[1]));
        } else {
            cycles.push(Cycle::new(orbit).expect("orbit of length >= 3"));
        }
    }
    // p.cycles() returns orbits sorted by minimal element, and the two kinds
    // keep their relative order after splitting
    CyclicDecomposition {
        transpositions,
        cycles,
    }
}

/// Rebuilds a permutation from a decomposition; the domain is the union of
/// the mentioned labels. Overlapping labels are rejected.
pub fn recompose(d: &CyclicDecomposition) -> Result<Permutation> {
    let labels: Vec<Vertex> = d
        .transpositions
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(d.cycles.iter().flat_map(|c| c.elems().iter().copied()))
        .collect();
    recompose_on(d, labels)
}

/// Rebuilds a permutation from a decomposition on an explicit domain, so
/// fixed points survive a `decompose`/`recompose` round trip.
pub fn recompose_on(
    d: &CyclicDecomposition,
    domain: impl IntoIterator<Item = Vertex>,
) -> Result<Permutation> {
    validate_block(&d.transpositions)?;
    let mut parts: Vec<Vec<Vertex>> = d
        .transpositions
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
    parts.extend(d.cycles.iter().map(|c| c.elems().to_vec()));
    Permutation::from_cycles_on(domain, &parts).map_err(|e| match e {
        Error::InvalidPermutation(msg) => Error::MalformedDecomposition(msg),
        other => other,
    })
}
