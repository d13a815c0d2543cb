//! Window-rewriting maps on cycles and transposition blocks.
//!
//! A cycle of length `d` is handled through its exponent sequence
//! `s_j = rho^j(m)`, `j = 0..d`, where `m` is the minimal element (so
//! `s_0 = m`). For each window index `j` the rewriting map swaps two
//! positions of that sequence, leaving position 0 fixed; on a transposition
//! block it multiplies by a pair of disjoint transpositions chosen from two
//! adjacent block pairs. Every map is self-inverse, maps between distinct
//! windows commute, and the rewritten permutation stays in the conjugacy
//! class of the input — so rewriting a class-function-distributed
//! permutation does not change its law.
//!
//! The window selector [`build_a`] picks exactly the windows whose label
//! sets split 3:1 (or, for 3-cycles, 2:1) between red and white vertices;
//! that choice is stable under the rewrite it induces, which is what makes
//! the rewrite an involution on (permutation, selection) pairs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{decompose, validate_block, Cycle, Permutation};
use crate::Vertex;

/// Per-block window selections: one index set for the transposition block
/// and one per cycle of length ≥ 3 (decomposition order).
///
/// Valid indices: for a cycle of length 3 the only window is `0`; for length
/// `d ≥ 4` windows are `1..=d/4`; for a transposition block on `d0` labels
/// windows are `1..=d0/4`.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct ASelection {
    pub block: BTreeSet<usize>,
    pub cycles: Vec<BTreeSet<usize>>,
}

impl ASelection {
    pub fn empty(k: usize) -> Self {
        Self {
            block: BTreeSet::new(),
            cycles: vec![BTreeSet::new(); k],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.block.is_empty() && self.cycles.iter().all(|c| c.is_empty())
    }
}

fn check_cycle_index(d: usize, j: usize) -> Result<()> {
    let ok = if d == 3 { j == 0 } else { (1..=d / 4).contains(&j) };
    if ok {
        Ok(())
    } else {
        Err(Error::WindowOutOfRange { index: j, size: d })
    }
}

/// The index map on exponent positions `0..d` induced by a window set:
/// each `j` in the set swaps positions `2j-1` and `2(d/4)+2j-1`
/// (for `d = 3`, positions 1 and 2). Position 0 is always fixed.
fn beta_index_map(d: usize, a: &BTreeSet<usize>) -> Result<Vec<usize>> {
    let mut map: Vec<usize> = (0..d).collect();
    let dq = d / 4;
    for &j in a {
        check_cycle_index(d, j)?;
        if d == 3 {
            map.swap(1, 2);
        } else {
            map.swap(2 * j - 1, 2 * dq + 2 * j - 1);
        }
    }
    Ok(map)
}

/// Exponent positions of window `j` in a cycle of length `d`:
/// `{2j-2, 2j-1, 2(d/4)+2j-2, 2(d/4)+2j-1}`, or `{0, 1, 2}` when `d = 3`.
pub fn window_positions(d: usize, j: usize) -> Result<Vec<usize>> {
    check_cycle_index(d, j)?;
    if d == 3 {
        return Ok(vec![0, 1, 2]);
    }
    let dq = d / 4;
    Ok(vec![2 * j - 2, 2 * j - 1, 2 * dq + 2 * j - 2, 2 * dq + 2 * j - 1])
}

/// The labels of window `j` of a cycle.
pub fn cycle_window(cycle: &Cycle, j: usize) -> Result<Vec<Vertex>> {
    let pos = window_positions(cycle.len(), j)?;
    Ok(pos.iter().map(|&p| cycle.elems()[p]).collect())
}

/// Rewrites a cycle through the index map of the window set `a`. The output
/// is a cycle of the same length on the same labels with the same minimal
/// element; applying the same `a` again restores the input.
pub fn beta_cycle(a: &BTreeSet<usize>, cycle: &Cycle) -> Result<Cycle> {
    let d = cycle.len();
    let map = beta_index_map(d, a)?;
    let elems = cycle.elems();
    let rewritten: Vec<Vertex> = (0..d).map(|j| elems[map[j]]).collect();
    Cycle::new(rewritten)
}

/// Rewrites an ordered transposition block: for each selected window `j`
/// whose pairs `(a1 a2)(a3 a4)` satisfy `a3 < a2`, multiplies on the right
/// by `(a1 a3)(a2 a4)`, re-pairing the four labels as `(a1 a4)(a3 a2)`.
/// Windows failing the `a3 < a2` test are left untouched, which is exactly
/// what makes the map self-inverse.
pub fn beta_trans(
    a: &BTreeSet<usize>,
    block: &[(Vertex, Vertex)],
) -> Result<Vec<(Vertex, Vertex)>> {
    validate_block(block)?;
    let windows = block.len() / 2;
    let mut out = block.to_vec();
    for &j in a {
        if j < 1 || j > windows {
            return Err(Error::WindowOutOfRange {
                index: j,
                size: 2 * block.len(),
            });
        }
        let (a1, a2) = block[2 * j - 2];
        let (a3, a4) = block[2 * j - 1];
        if a3 < a2 {
            out[2 * j - 2] = (a1, a4);
            out[2 * j - 1] = (a3, a2);
        }
    }
    // pair minima are unchanged, but normalize anyway
    for pair in &mut out {
        if pair.0 > pair.1 {
            *pair = (pair.1, pair.0);
        }
    }
    out.sort_unstable_by_key(|p| p.0);
    Ok(out)
}

/// Rewrites a general permutation by applying the block and cycle maps of
/// `a` to each part of its canonical cyclic decomposition. The result lives
/// on the same domain and in the same conjugacy class.
pub fn beta_tilde(a: &ASelection, sigma: &Permutation) -> Result<Permutation> {
    let d = decompose(sigma);
    if a.cycles.len() != d.k() {
        return Err(Error::ShapeMismatch(format!(
            "selection has {} cycle entries but the permutation has {} cycles",
            a.cycles.len(),
            d.k()
        )));
    }
    if !a.block.is_empty() && d.transpositions.is_empty() {
        return Err(Error::ShapeMismatch(
            "selection has block windows but the permutation has no transpositions".into(),
        ));
    }
    let new_block = beta_trans(&a.block, &d.transpositions)?;
    let mut parts: Vec<Vec<Vertex>> = new_block.iter().map(|&(x, y)| vec![x, y]).collect();
    for (sel, cycle) in a.cycles.iter().zip(&d.cycles) {
        parts.push(beta_cycle(sel, cycle)?.elems().to_vec());
    }
    Permutation::from_cycles_on(sigma.domain().iter().copied(), &parts)
}

fn colour_split(
    labels: &[Vertex],
    reds: &BTreeSet<Vertex>,
    whites: &BTreeSet<Vertex>,
) -> (usize, usize) {
    let r = labels.iter().filter(|v| reds.contains(v)).count();
    let w = labels.iter().filter(|v| whites.contains(v)).count();
    (r, w)
}

/// Selects, per decomposition part of `sigma`, the windows whose labels are
/// all red or white and split 3:1 or 1:3 (2:1 or 1:2 for 3-cycles) between
/// the two colours.
///
/// The selection is stable: rewriting `sigma` by the selection and selecting
/// again yields the same window sets.
pub fn build_a(
    reds: &BTreeSet<Vertex>,
    whites: &BTreeSet<Vertex>,
    sigma: &Permutation,
) -> Result<ASelection> {
    if let Some(&v) = reds.intersection(whites).next() {
        return Err(Error::RedWhiteOverlap(v));
    }
    let d = decompose(sigma);
    let mut sel = ASelection::empty(d.k());
    for j in 1..=d.transpositions.len() / 2 {
        let (a1, a2) = d.transpositions[2 * j - 2];
        let (a3, a4) = d.transpositions[2 * j - 1];
        let (r, w) = colour_split(&[a1, a2, a3, a4], reds, whites);
        if (r == 1 && w == 3) || (r == 3 && w == 1) {
            sel.block.insert(j);
        }
    }
    for (i, cycle) in d.cycles.iter().enumerate() {
        if cycle.len() == 3 {
            let (r, w) = colour_split(cycle.elems(), reds, whites);
            if (r == 1 && w == 2) || (r == 2 && w == 1) {
                sel.cycles[i].insert(0);
            }
        } else {
            for j in 1..=cycle.len() / 4 {
                let window = cycle_window(cycle, j)?;
                let (r, w) = colour_split(&window, reds, whites);
                if (r == 1 && w == 3) || (r == 3 && w == 1) {
                    sel.cycles[i].insert(j);
                }
            }
        }
    }
    Ok(sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgroup::{enumerate_class, sample_class, CycleType};
    use crate::rng::stream_rng;
    use rand::Rng;
    use std::str::FromStr;

    fn cyc(s: &str) -> Cycle {
        let p = Permutation::from_str(s).unwrap();
        let c = p.cycles();
        assert_eq!(c.len(), 1);
        Cycle::new(c.into_iter().next().unwrap()).unwrap()
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn vset(xs: &[Vertex]) -> BTreeSet<Vertex> {
        xs.iter().copied().collect()
    }

    #[test]
    fn index_maps_self_inverse_and_commuting() {
        for d in 3..=7usize {
            let windows: Vec<usize> = if d == 3 { vec![0] } else { (1..=d / 4).collect() };
            for &i in &windows {
                let m = beta_index_map(d, &set(&[i])).unwrap();
                for j in 0..d {
                    assert_eq!(m[m[j]], j, "self-inverse fails at d={d} i={i}");
                }
                for &jj in &windows {
                    if i == jj {
                        continue;
                    }
                    let mi = beta_index_map(d, &set(&[i])).unwrap();
                    let mj = beta_index_map(d, &set(&[jj])).unwrap();
                    for x in 0..d {
                        assert_eq!(mi[mj[x]], mj[mi[x]], "commutation fails at d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn three_cycle_rewrite() {
        // window {0} on (3 12 22) reverses it to (3 22 12)
        let c = cyc("(3 12 22)");
        let out = beta_cycle(&set(&[0]), &c).unwrap();
        assert_eq!(out.elems(), &[3, 22, 12]);
        // empty selection leaves the cycle unchanged
        let same = beta_cycle(&set(&[]), &c).unwrap();
        assert_eq!(same.elems(), c.elems());
    }

    #[test]
    fn sixteen_cycle_rewrite_matches_worked_example() {
        let c = cyc("(1 6 17 18 19 2 13 25 24 9 7 15 14 4 11 23)");
        let out = beta_cycle(&set(&[1, 3]), &c).unwrap();
        let expected = cyc("(1 9 17 18 19 4 13 25 24 6 7 15 14 2 11 23)");
        assert_eq!(out.elems(), expected.elems());
    }

    #[test]
    fn cycle_rewrite_out_of_range() {
        let c = cyc("(1 2 3 4 5)");
        assert!(beta_cycle(&set(&[2]), &c).is_err()); // d=5 has only window 1
        assert!(beta_cycle(&set(&[0]), &c).is_err());
        let c3 = cyc("(1 2 3)");
        assert!(beta_cycle(&set(&[1]), &c3).is_err());
    }

    #[test]
    fn cycle_rewrite_exhaustive_involution() {
        // all cycles of length 3..=7 on {1..d}, all window subsets
        for d in 3..=7usize {
            let t = CycleType::new(vec![d]).unwrap();
            let labels: Vec<Vertex> = (1..=d as Vertex).collect();
            let class = enumerate_class(&labels, &t).unwrap();
            let windows: Vec<usize> = if d == 3 { vec![0] } else { (1..=d / 4).collect() };
            for p in &class {
                let c = Cycle::new(p.cycles().into_iter().next().unwrap()).unwrap();
                for mask in 0..(1u32 << windows.len()) {
                    let a: BTreeSet<usize> = windows
                        .iter()
                        .enumerate()
                        .filter(|(bit, _)| mask >> bit & 1 == 1)
                        .map(|(_, &w)| w)
                        .collect();
                    let once = beta_cycle(&a, &c).unwrap();
                    assert_eq!(once.len(), d);
                    assert_eq!(once.min(), c.min());
                    let twice = beta_cycle(&a, &once).unwrap();
                    assert_eq!(twice.elems(), c.elems(), "involution fails d={d}");
                }
            }
        }
    }

    #[test]
    fn block_rewrite_matches_worked_example() {
        let block = vec![(5, 21), (8, 10), (16, 20)];
        let out = beta_trans(&set(&[1]), &block).unwrap();
        assert_eq!(out, vec![(5, 10), (8, 21), (16, 20)]);
        // empty selection: unchanged
        assert_eq!(beta_trans(&set(&[]), &block).unwrap(), block);
    }

    #[test]
    fn block_rewrite_rejects_unordered_input() {
        assert!(beta_trans(&set(&[1]), &[(8, 10), (5, 21)]).is_err());
        assert!(beta_trans(&set(&[1]), &[(21, 5), (8, 10)]).is_err());
    }

    #[test]
    fn block_rewrite_skips_windows_without_inversion() {
        // (1 2)(3 4): a3 = 3 > a2 = 2, so window 1 must do nothing
        let block = vec![(1, 2), (3, 4)];
        assert_eq!(beta_trans(&set(&[1]), &block).unwrap(), block);
    }

    #[test]
    fn figure_selection_and_rewrite() {
        let sigma = Permutation::from_str(
            "(5 21)(8 10)(16 20)(3 12 22)(1 6 17 18 19 2 13 25 24 9 7 15 14 4 11 23)",
        )
        .unwrap()
        .with_domain(1..=25)
        .unwrap();
        let reds = vset(&[1, 2, 5, 6, 9, 12, 20, 22]);
        let whites = vset(&[3, 4, 8, 10, 14, 16, 19, 21, 24]);
        let a = build_a(&reds, &whites, &sigma).unwrap();
        assert_eq!(a.block, set(&[1]));
        assert_eq!(a.cycles.len(), 2);
        // cycles in decomposition order (by minimal element): the 16-cycle
        // rooted at 1 selects windows {1, 3}, the 3-cycle rooted at 3
        // selects {0}
        let d = decompose(&sigma);
        assert_eq!(d.cycles[0].min(), 1);
        assert_eq!(d.cycles[1].min(), 3);
        assert_eq!(a.cycles[0], set(&[1, 3]));
        assert_eq!(a.cycles[1], set(&[0]));

        let rewritten = beta_tilde(&a, &sigma).unwrap();
        let expected = Permutation::from_str(
            "(5 10)(8 21)(16 20)(3 22 12)(1 9 17 18 19 4 13 25 24 6 7 15 14 2 11 23)",
        )
        .unwrap()
        .with_domain(1..=25)
        .unwrap();
        assert_eq!(rewritten, expected);
    }

    #[test]
    fn beta_tilde_empty_selection_is_identity_map() {
        let sigma = Permutation::from_str("(1 4)(2 9)(3 7 6 8 5)").unwrap();
        let a = ASelection::empty(1);
        assert_eq!(beta_tilde(&a, &sigma).unwrap(), sigma);
    }

    #[test]
    fn beta_tilde_shape_mismatch() {
        let sigma = Permutation::from_str("(1 2 3)").unwrap();
        let a = ASelection::empty(2);
        assert!(beta_tilde(&a, &sigma).is_err());
        let b = ASelection {
            block: set(&[1]),
            cycles: vec![BTreeSet::new()],
        };
        assert!(beta_tilde(&b, &sigma).is_err());
    }

    #[test]
    fn build_a_requires_disjoint_sets() {
        let sigma = Permutation::from_str("(1 2 3)").unwrap();
        assert!(build_a(&vset(&[1, 2]), &vset(&[2, 3]), &sigma).is_err());
    }

    #[test]
    fn build_a_empty_whites_selects_nothing() {
        let sigma = Permutation::from_str("(1 2 3 4 5 6 7 8)").unwrap();
        let a = build_a(&vset(&[1, 2, 3, 4, 5, 6, 7, 8]), &vset(&[]), &sigma).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn random_rewrites_preserve_type_and_invert() {
        let mut rng = stream_rng(3, 20);
        let labels: Vec<Vertex> = (1..=10).collect();
        let types = ["2+2", "3", "5", "4+3", "2+2+3", "8", "6+2", "10"];
        for _ in 0..1000 {
            let ty: CycleType = types[rng.random_range(0..types.len())].parse().unwrap();
            let sigma = sample_class(&ty, &labels, &mut rng).unwrap();
            let d = decompose(&sigma);
            // random valid selection
            let mut a = ASelection::empty(d.k());
            for j in 1..=d.transpositions.len() / 2 {
                if rng.random_bool(0.5) {
                    a.block.insert(j);
                }
            }
            for (i, c) in d.cycles.iter().enumerate() {
                if c.len() == 3 {
                    if rng.random_bool(0.5) {
                        a.cycles[i].insert(0);
                    }
                } else {
                    for j in 1..=c.len() / 4 {
                        if rng.random_bool(0.5) {
                            a.cycles[i].insert(j);
                        }
                    }
                }
            }
            let out = beta_tilde(&a, &sigma).unwrap();
            assert_eq!(out.cycle_type(), ty, "class not preserved");
            let back = beta_tilde(&a, &out).unwrap();
            assert_eq!(back, sigma, "rewrite with fixed selection must invert");
        }
    }

    #[test]
    fn build_a_stability_under_rewrite() {
        // selection recomputed after the induced rewrite is unchanged
        let mut rng = stream_rng(3, 21);
        let labels: Vec<Vertex> = (1..=10).collect();
        let types = ["2+2", "3", "5", "4+3", "2+2+3", "8", "6+2"];
        for _ in 0..1000 {
            let ty: CycleType = types[rng.random_range(0..types.len())].parse().unwrap();
            let sigma = sample_class(&ty, &labels, &mut rng).unwrap();
            let mut pool: Vec<Vertex> = labels.clone();
            let split = rng.random_range(0..=pool.len());
            use rand::seq::SliceRandom;
            pool.shuffle(&mut rng);
            let reds: BTreeSet<Vertex> = pool[..split].iter().copied().collect();
            let keep = rng.random_range(0..=pool.len() - split);
            let whites: BTreeSet<Vertex> = pool[split..split + keep].iter().copied().collect();
            let a = build_a(&reds, &whites, &sigma).unwrap();
            let rewritten = beta_tilde(&a, &sigma).unwrap();
            let a2 = build_a(&reds, &whites, &rewritten).unwrap();
            assert_eq!(a, a2, "selection must be stable under its own rewrite");
            // and the induced rewrite is an involution on the permutation
            assert_eq!(beta_tilde(&a2, &rewritten).unwrap(), sigma);
        }
    }

    #[test]
    fn off_window_agreement() {
        // the rewritten cycle agrees with the input off the selected windows
        for d in 4..=7usize {
            let t = CycleType::new(vec![d]).unwrap();
            let labels: Vec<Vertex> = (1..=d as Vertex).collect();
            let class = enumerate_class(&labels, &t).unwrap();
            for p in class.iter().take(60) {
                let c = Cycle::new(p.cycles().into_iter().next().unwrap()).unwrap();
                for j in 1..=d / 4 {
                    let a = set(&[j]);
                    let out = beta_cycle(&a, &c).unwrap();
                    let touched: BTreeSet<Vertex> = window_positions(d, j)
                        .unwrap()
                        .iter()
                        .map(|&pos| c.elems()[pos])
                        .collect();
                    for &x in c.elems() {
                        if !touched.contains(&x) {
                            assert_eq!(out.apply(x), c.apply(x), "off-window image changed");
                        }
                    }
                }
            }
        }
    }
}
