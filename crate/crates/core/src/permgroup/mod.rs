//! Permutations on finite label sets, cycle types, canonical cyclic
//! decomposition, uniform conjugacy-class sampling, and the window-rewriting
//! maps used by the chameleon process.
//!
//! Composition convention, fixed crate-wide: `a.compose(&b)` applies `b`
//! first and `a` second. Products written in source follow the same rule
//! (right factor acts first).

mod beta;
mod decomp;

pub use beta::{
    beta_cycle, beta_tilde, beta_trans, build_a, cycle_window, window_positions, ASelection,
};
pub use decomp::{decompose, recompose, recompose_on, validate_block, Cycle, CyclicDecomposition};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::Vertex;

/// A permutation of a finite set of vertex labels, stored in one-line form:
/// `images[i]` is the image of `domain[i]`, with `domain` sorted ascending.
///
/// Labels outside the domain are treated as fixed points by [`apply`],
/// so a permutation supported on an edge acts on the whole vertex set.
///
/// [`apply`]: Permutation::apply
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    domain: Vec<Vertex>,
    images: Vec<Vertex>,
}

impl Permutation {
    /// Builds a permutation from parallel `domain`/`images` slices.
    pub fn new(domain: Vec<Vertex>, images: Vec<Vertex>) -> Result<Self> {
        if domain.len() != images.len() {
            return Err(Error::InvalidPermutation(format!(
                "domain has {} labels but images has {}",
                domain.len(),
                images.len()
            )));
        }
        let mut pairs: Vec<(Vertex, Vertex)> = domain.into_iter().zip(images).collect();
        pairs.sort_unstable_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidPermutation("duplicate domain label".into()));
        }
        let domain: Vec<Vertex> = pairs.iter().map(|p| p.0).collect();
        let images: Vec<Vertex> = pairs.iter().map(|p| p.1).collect();
        let mut sorted_images = images.clone();
        sorted_images.sort_unstable();
        if sorted_images != domain {
            return Err(Error::InvalidPermutation(
                "images are not a bijection of the domain".into(),
            ));
        }
        Ok(Self { domain, images })
    }

    /// One-line form: the domain is the sorted set of the array's elements.
    pub fn from_one_line(images: Vec<Vertex>) -> Result<Self> {
        let mut domain = images.clone();
        domain.sort_unstable();
        Self::new(domain, images)
    }

    pub fn identity(domain: impl IntoIterator<Item = Vertex>) -> Self {
        let mut domain: Vec<Vertex> = domain.into_iter().collect();
        domain.sort_unstable();
        domain.dedup();
        let images = domain.clone();
        Self { domain, images }
    }

    /// Builds a permutation from disjoint cycles; the domain is exactly the
    /// labels mentioned.
    pub fn from_cycles(cycles: &[Vec<Vertex>]) -> Result<Self> {
        let mut labels: Vec<Vertex> = cycles.iter().flatten().copied().collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPermutation("cycles are not disjoint".into()));
        }
        Self::from_cycles_on(labels, cycles)
    }

    /// Builds a permutation from disjoint cycles on an explicit domain;
    /// labels of the domain not mentioned in any cycle are fixed.
    pub fn from_cycles_on(
        domain: impl IntoIterator<Item = Vertex>,
        cycles: &[Vec<Vertex>],
    ) -> Result<Self> {
        let mut p = Self::identity(domain);
        let mut seen = BTreeSet::new();
        for cycle in cycles {
            for &v in cycle {
                if !seen.insert(v) {
                    return Err(Error::InvalidPermutation(format!(
                        "label {v} appears in more than one cycle"
                    )));
                }
            }
            for (i, &v) in cycle.iter().enumerate() {
                let image = cycle[(i + 1) % cycle.len()];
                let pos = p.position(v).ok_or_else(|| {
                    Error::InvalidPermutation(format!("cycle label {v} is outside the domain"))
                })?;
                p.images[pos] = image;
            }
        }
        // cycles were disjoint, so the result is still a bijection
        Ok(p)
    }

    pub fn domain(&self) -> &[Vertex] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    fn position(&self, v: Vertex) -> Option<usize> {
        self.domain.binary_search(&v).ok()
    }

    /// Image of `v`; labels outside the domain are fixed.
    pub fn apply(&self, v: Vertex) -> Vertex {
        match self.position(v) {
            Some(i) => self.images[i],
            None => v,
        }
    }

    pub fn apply_tuple(&self, xs: &[Vertex]) -> Vec<Vertex> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn apply_set(&self, xs: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.domain == self.images
    }

    /// Labels moved by the permutation.
    pub fn support(&self) -> Vec<Vertex> {
        self.domain
            .iter()
            .zip(&self.images)
            .filter(|(d, i)| d != i)
            .map(|(&d, _)| d)
            .collect()
    }

    pub fn inverse(&self) -> Self {
        let mut pairs: Vec<(Vertex, Vertex)> = self
            .images
            .iter()
            .zip(&self.domain)
            .map(|(&i, &d)| (i, d))
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);
        Self {
            domain: pairs.iter().map(|p| p.0).collect(),
            images: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`. The result lives
    /// on the union of the two domains.
    pub fn compose(&self, other: &Self) -> Self {
        let mut domain: Vec<Vertex> = self
            .domain
            .iter()
            .chain(other.domain.iter())
            .copied()
            .collect();
        domain.sort_unstable();
        domain.dedup();
        let images = domain.iter().map(|&v| self.apply(other.apply(v))).collect();
        Self { domain, images }
    }

    /// The same mapping on a larger domain; extra labels become fixed points.
    pub fn with_domain(&self, domain: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut p = Self::identity(domain);
        for (&d, &i) in self.domain.iter().zip(&self.images) {
            if d == i {
                continue;
            }
            let pos = p.position(d).ok_or_else(|| {
                Error::InvalidPermutation(format!("new domain does not contain moved label {d}"))
            })?;
            if p.position(i).is_none() {
                return Err(Error::InvalidPermutation(format!(
                    "new domain does not contain image label {i}"
                )));
            }
            p.images[pos] = i;
        }
        Ok(p)
    }

    /// Non-trivial cycles, each starting at its minimal element, ordered by
    /// minimal element.
    pub fn cycles(&self) -> Vec<Vec<Vertex>> {
        let mut visited = vec![false; self.domain.len()];
        let mut out = Vec::new();
        for start in 0..self.domain.len() {
            if visited[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut pos = start;
            loop {
                visited[pos] = true;
                cycle.push(self.domain[pos]);
                let next = self.images[pos];
                pos = self.position(next).expect("image stays in domain");
                if pos == start {
                    break;
                }
            }
            if cycle.len() >= 2 {
                out.push(cycle);
            }
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        CycleType::new(self.cycles().iter().map(|c| c.len()).collect())
            .expect("cycle lengths are >= 2")
    }

    /// Parses either accepted text form: a JSON array in one-line form
    /// (`"[12,22,3]"`) or cycle notation (`"(3 12 22)"`).
    pub fn parse(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.starts_with('[') {
            let images: Vec<Vertex> = serde_json::from_str(trimmed)?;
            return Self::from_one_line(images);
        }
        trimmed.parse()
    }

    /// Cycle-notation string, e.g. `"(1 4)(2 9)(3 7 6 8 5)"`; identity is `"()"`.
    pub fn to_cycle_string(&self) -> String {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return "()".into();
        }
        cycles
            .iter()
            .map(|c| {
                let inner = c
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                format!("({inner})")
            })
            .collect()
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{}]", self.to_cycle_string())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cycle_string())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses cycle notation: `"(5 21)(8 10)"`, with labels separated by
    /// whitespace or commas. `"()"` and `"id"` denote the identity on an
    /// empty domain.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "id" || s == "()" || s.is_empty() {
            return Ok(Self::identity([]));
        }
        let mut cycles = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let open = rest.find('(').ok_or_else(|| {
                Error::InvalidPermutation(format!("expected '(' at: {rest:?}"))
            })?;
            if !rest[..open].trim().is_empty() {
                return Err(Error::InvalidPermutation(format!(
                    "unexpected text before '(': {rest:?}"
                )));
            }
            let close = rest.find(')').ok_or_else(|| {
                Error::InvalidPermutation(format!("unbalanced '(' in: {rest:?}"))
            })?;
            if close < open {
                return Err(Error::InvalidPermutation(format!("unbalanced ')' in: {s:?}")));
            }
            let inner = &rest[open + 1..close];
            let labels = inner
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<Vertex>()
                        .map_err(|_| Error::InvalidPermutation(format!("bad label {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if labels.len() == 1 {
                return Err(Error::InvalidPermutation(
                    "singleton cycle (fixed points are omitted)".into(),
                ));
            }
            if !labels.is_empty() {
                cycles.push(labels);
            }
            rest = &rest[close + 1..];
        }
        Self::from_cycles(&cycles)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.images.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<Vertex>::deserialize(deserializer)?;
        Self::from_one_line(images).map_err(D::Error::custom)
    }
}

/// Cycle type: the multiset of non-trivial cycle lengths, stored descending.
/// Fixed points are implied by the ambient edge size.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType(Vec<usize>);

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&p| p < 2) {
            return Err(Error::InvalidArgument(
                "cycle-type parts must be at least 2".into(),
            ));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self(parts))
    }

    /// The type of the identity: no non-trivial cycles.
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of labels moved.
    pub fn moved(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn fits(&self, n: usize) -> bool {
        self.moved() <= n
    }

    pub fn fixed_points(&self, n: usize) -> usize {
        n - self.moved()
    }

    /// Size of the conjugacy class with this type inside the symmetric group
    /// on `n` labels.
    pub fn class_size(&self, n: usize) -> u128 {
        assert!(self.fits(n), "type does not fit");
        let fixed = self.fixed_points(n);
        let mut denom: u128 = factorial(fixed);
        let mut mult: u128 = 1;
        let mut prev = 0usize;
        for &d in &self.0 {
            denom *= d as u128;
            if d == prev {
                mult += 1;
            } else {
                mult = 1;
                prev = d;
            }
            denom *= mult;
        }
        factorial(n) / denom
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("id");
        }
        let s = self
            .0
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("+");
        f.write_str(&s)
    }
}

impl fmt::Debug for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycleType({self})")
    }
}

impl FromStr for CycleType {
    type Err = Error;

    /// Parses `"+"`-joined part lists: `"2+2"`, `"4"`; `""` and `"id"` are
    /// the identity type.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "id" {
            return Ok(Self::identity());
        }
        let parts = s
            .split('+')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad cycle-type part {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

impl Serialize for CycleType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CycleType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All permutations of the given labels with the given cycle type.
///
/// Enumeration is by filtering the full symmetric group, so it is intended
/// for labels sets of size at most 8.
pub fn enumerate_class(labels: &[Vertex], t: &CycleType) -> Result<Vec<Permutation>> {
    if !t.fits(labels.len()) {
        return Err(Error::TypeTooLarge {
            cycle_type: t.to_string(),
            needed: t.moved(),
            available: labels.len(),
        });
    }
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut images = sorted.clone();
    heap_permutations(&mut images, &mut |imgs| {
        let p = Permutation {
            domain: sorted.clone(),
            images: imgs.to_vec(),
        };
        if p.cycle_type() == *t {
            out.push(p);
        }
    });
    debug_assert_eq!(out.len() as u128, t.class_size(labels.len()));
    Ok(out)
}

fn heap_permutations(items: &mut [Vertex], visit: &mut impl FnMut(&[Vertex])) {
    let n = items.len();
    if n == 0 {
        visit(items);
        return;
    }
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Uniform sample from the conjugacy class with cycle type `t` on `labels`:
/// shuffle the labels, cut the prefix into cycles of the given lengths, and
/// leave the rest fixed. Rejection-free.
pub fn sample_class<R: Rng + ?Sized>(
    t: &CycleType,
    labels: &[Vertex],
    rng: &mut R,
) -> Result<Permutation> {
    if !t.fits(labels.len()) {
        return Err(Error::TypeTooLarge {
            cycle_type: t.to_string(),
            needed: t.moved(),
            available: labels.len(),
        });
    }
    let mut shuffled = labels.to_vec();
    shuffled.shuffle(rng);
    let mut cycles = Vec::with_capacity(t.parts().len());
    let mut offset = 0;
    for &d in t.parts() {
        cycles.push(shuffled[offset..offset + d].to_vec());
        offset += d;
    }
    Permutation::from_cycles_on(labels.iter().copied(), &cycles)
}
