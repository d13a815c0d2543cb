//! Total-variation distances, worst-start TV curves, and mixing times.
//!
//! Rates are symmetric for every chain built from a class-function model, so
//! the stationary distribution is uniform; the worst-start TV distance to
//! uniform is non-increasing in time, and a mixing time is found by bracket
//! doubling followed by bisection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{build_generator, Chain, ChainKind};
use crate::hypermodel::{Model, DEFAULT_STATE_CAP};

/// Total-variation distance: half the L1 distance, which equals the maximal
/// discrepancy over events.
pub fn tv(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::LengthMismatch {
            left: mu.len(),
            right: nu.len(),
        });
    }
    Ok(0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn tv_to_uniform(row: &[f64]) -> f64 {
    let u = 1.0 / row.len() as f64;
    0.5 * row.iter().map(|&p| (p - u).abs()).sum::<f64>()
}

/// Worst-start TV distance to uniform at time `t`.
pub fn worst_start_tv(chain: &Chain, t: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for start in 0..chain.gen.n {
        let row = chain.gen.transition_row(start, t)?;
        worst = worst.max(tv_to_uniform(&row));
    }
    Ok(worst)
}

/// Worst-start TV curve over a time grid.
#[derive(Clone, Debug, Serialize)]
pub struct TvCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TvCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

pub fn tv_curve(m: &Model, kind: ChainKind, k: usize, grid: &[f64], cap: usize) -> Result<TvCurve> {
    let eval = WorstTv::new(m, kind, k, cap)?;
    let values = grid
        .iter()
        .map(|&t| eval.at(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TvCurve {
        times: grid.to_vec(),
        values,
    })
}

/// A mixing time with the bracket and tolerance the bisection used.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MixingTime {
    pub time: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
}

/// Worst-start TV evaluator. Product chains of independent walkers factorize
/// through the single-walker matrix, so their exact worst-start TV is
/// computed from walker rows without assembling the product generator.
enum WorstTv {
    Direct(Chain),
    Product { rw: Chain, k: usize },
}

impl WorstTv {
    fn new(m: &Model, kind: ChainKind, k: usize, cap: usize) -> Result<Self> {
        match kind {
            ChainKind::Rwk => {
                let count = super::StateSpace::count(kind, m.n_vertices(), k);
                if count > cap as u128 {
                    return Err(Error::StateCapExceeded {
                        space: kind.name(k),
                        count,
                        cap: cap as u128,
                    });
                }
                let rw = build_generator(m, ChainKind::Rw, 1, cap)?;
                if !rw.gen.is_connected() {
                    return Err(Error::Reducible {
                        chain: kind.name(k),
                    });
                }
                Ok(WorstTv::Product { rw, k })
            }
            _ => {
                let chain = build_generator(m, kind, k, cap)?;
                if !chain.gen.is_connected() {
                    return Err(Error::Reducible {
                        chain: chain.name(),
                    });
                }
                Ok(WorstTv::Direct(chain))
            }
        }
    }

    fn states(&self) -> u128 {
        match self {
            WorstTv::Direct(chain) => chain.gen.n as u128,
            WorstTv::Product { rw, k } => (rw.gen.n as u128).saturating_pow(*k as u32),
        }
    }

    fn at(&self, t: f64) -> Result<f64> {
        match self {
            WorstTv::Direct(chain) => worst_start_tv(chain, t),
            WorstTv::Product { rw, k } => {
                let rows = rw.gen.transition_matrix(t)?;
                let n = rw.gen.n;
                let uniform = 1.0 / (n as f64).powi(*k as i32);
                // worst start: every coordinate-start combination
                let mut worst: f64 = 0.0;
                let mut starts = vec![0usize; *k];
                loop {
                    let picked: Vec<&[f64]> = starts.iter().map(|&s| rows[s].as_slice()).collect();
                    let mut acc = 0.0;
                    product_l1(&picked, 1.0, &mut acc, uniform);
                    worst = worst.max(0.5 * acc);
                    // next start tuple
                    let mut pos = *k;
                    loop {
                        if pos == 0 {
                            return Ok(worst);
                        }
                        pos -= 1;
                        starts[pos] += 1;
                        if starts[pos] < n {
                            break;
                        }
                        starts[pos] = 0;
                    }
                }
            }
        }
    }
}

/// Accumulates `sum over tuples |prod_i rows[i][x_i] - uniform|` in `acc`.
fn product_l1(rows: &[&[f64]], prefix: f64, acc: &mut f64, uniform: f64) {
    match rows.split_first() {
        None => *acc += (prefix - uniform).abs(),
        Some((first, rest)) => {
            for &p in first.iter() {
                product_l1(rest, prefix * p, acc, uniform);
            }
        }
    }
}

/// The first time at which the worst-start TV distance to uniform drops to
/// `eps`: bracket by doubling from 1, then bisect to an absolute tolerance
/// of 1e-6 times the initial bracket width.
pub fn mixing_time(m: &Model, kind: ChainKind, k: usize, eps: f64) -> Result<MixingTime> {
    mixing_time_with_cap(m, kind, k, eps, DEFAULT_STATE_CAP)
}

pub fn mixing_time_with_cap(
    m: &Model,
    kind: ChainKind,
    k: usize,
    eps: f64,
    cap: usize,
) -> Result<MixingTime> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be in (0, 1)"
        )));
    }
    let eval = WorstTv::new(m, kind, k, cap)?;
    let d0 = 1.0 - 1.0 / eval.states() as f64;
    if eps >= d0 {
        // already mixed at time zero
        return Ok(MixingTime {
            time: 0.0,
            bracket: (0.0, 0.0),
            tolerance: 0.0,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while eval.at(hi)? > eps {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::TimeOutOfRange(
                "mixing-time bracket exceeded 1e12".into(),
            ));
        }
    }
    let bracket = (lo, hi);
    let tolerance = 1e-6 * hi;
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if eval.at(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MixingTime {
        time: hi,
        bracket,
        tolerance,
    })
}
