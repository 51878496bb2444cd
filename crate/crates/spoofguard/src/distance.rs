//! Elastic and lock-step dissimilarity kernels.
//!
//! The point-to-point ground cost is `|a_i - b_j|`: the source formulas place
//! the square root inside the summation, so the "Euclidean" lock-step measure
//! evaluates to the L1 distance and the elastic kernel accumulates absolute
//! differences along the warping path. Both kernels are implemented as
//! written for internal consistency.
//!
//! All kernels are pure functions; they may be called from many threads at
//! once.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Warping-corridor constraint for [`dtw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandSpec {
    /// Full dynamic-programming matrix.
    Unbounded,
    /// Sakoe-Chiba corridor of the given radius around the (rescaled) diagonal.
    Radius(usize),
}

/// How a pipeline picks the band radius for each pair of series.
///
/// [`BandSpec`] fixes a radius for one call; embedding code sees series of
/// many lengths, so configuration is expressed as a policy and resolved per
/// pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandPolicy {
    Unbounded,
    Radius(usize),
    /// Radius = ceil(fraction * longer length), at least 1.
    FractionOfLonger(f64),
}

impl BandPolicy {
    pub fn resolve(&self, n: usize, m: usize) -> BandSpec {
        match *self {
            BandPolicy::Unbounded => BandSpec::Unbounded,
            BandPolicy::Radius(r) => BandSpec::Radius(r),
            BandPolicy::FractionOfLonger(f) => {
                let longer = n.max(m) as f64;
                BandSpec::Radius(((f * longer).ceil() as usize).max(1))
            }
        }
    }
}

impl Default for BandPolicy {
    /// A 10% corridor is a common convention; the radius is configuration,
    /// not a fixed constant of the method.
    fn default() -> Self {
        BandPolicy::FractionOfLonger(0.10)
    }
}

static DTW_CALLS: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of [`dtw`] invocations. Diagnostic only; tests that
/// assert on call counts must run in their own process.
pub fn dtw_call_count() -> u64 {
    DTW_CALLS.load(Ordering::Relaxed)
}

/// Lock-step distance, sum of per-position absolute differences.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// Inclusive 1-based column range of the corridor in row `i` (1-based).
///
/// Unequal lengths rescale the diagonal: feasible cells satisfy
/// `|i * m/n - j| <= r`, so the corridor always tracks the corner-to-corner
/// line rather than the unit diagonal.
fn band_range(i: usize, n: usize, m: usize, r: usize) -> (usize, usize) {
    let center = i as f64 * m as f64 / n as f64;
    let lo = (center - r as f64).ceil().max(1.0) as usize;
    let hi = (center + r as f64).floor().min(m as f64) as usize;
    (lo, hi)
}

/// True when radius `r` keeps (1,1) and (n,m) corridor-connected.
fn band_feasible(n: usize, m: usize, r: usize) -> bool {
    let (lo1, hi1) = band_range(1, n, m, r);
    if lo1 > 1 || hi1 < 1 {
        return false;
    }
    let (lon, hin) = band_range(n, n, m, r);
    if lon > m || hin < m {
        return false;
    }
    let mut prev_hi = hi1;
    for i in 2..=n {
        let (lo, hi) = band_range(i, n, m, r);
        if lo > hi || lo > prev_hi + 1 {
            return false;
        }
        prev_hi = hi;
    }
    true
}

/// Smallest radius >= `r` whose corridor connects start to end.
fn effective_radius(n: usize, m: usize, r: usize) -> usize {
    if band_feasible(n, m, r) {
        return r;
    }
    // Feasibility is monotone in the radius and max(n, m) always works.
    let (mut lo, mut hi) = (r + 1, n.max(m));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if band_feasible(n, m, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Elastic distance under the classic three-way step pattern, optionally
/// constrained to a Sakoe-Chiba corridor.
///
/// Storage is two rolling rows; only the distance is produced, never a path.
/// If the requested radius disconnects the first cell from the last (possible
/// with very unequal lengths), the kernel falls back to the minimum feasible
/// radius so the distance is always defined.
pub fn dtw(a: &[f64], b: &[f64], band: BandSpec) -> Result<f64> {
    DTW_CALLS.fetch_add(1, Ordering::Relaxed);
    let (cost, cells) = dtw_counted(a, b, band)?;
    if let BandSpec::Radius(r) = band {
        // Corridor width is at most 2r+1 columns per row.
        let r = effective_radius(a.len(), b.len(), r);
        debug_assert!(
            cells <= a.len() * (2 * r + 1),
            "banded DTW touched {} cells for n={} r={}",
            cells,
            a.len(),
            r
        );
    }
    Ok(cost)
}

/// Same as [`dtw`], also reporting how many DP cells were evaluated.
pub(crate) fn dtw_counted(a: &[f64], b: &[f64], band: BandSpec) -> Result<(f64, usize)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let (n, m) = (a.len(), b.len());
    let radius = match band {
        BandSpec::Unbounded => None,
        BandSpec::Radius(r) => Some(effective_radius(n, m, r)),
    };

    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    let (mut prev_lo, mut prev_hi) = (0usize, 0usize); // empty range before row 1
    let mut cells = 0usize;

    for i in 1..=n {
        let (lo, hi) = match radius {
            Some(r) => band_range(i, n, m, r),
            None => (1, m),
        };
        let ai = a[i - 1];
        for j in lo..=hi {
            cells += 1;
            let cost = (ai - b[j - 1]).abs();
            let best = if i == 1 && j == 1 {
                0.0
            } else {
                let up = if j >= prev_lo && j <= prev_hi {
                    prev[j]
                } else {
                    f64::INFINITY
                };
                let diag = if j >= 1 + prev_lo && j <= prev_hi + 1 && j > 1 {
                    prev[j - 1]
                } else {
                    f64::INFINITY
                };
                let left = if j > lo { cur[j - 1] } else { f64::INFINITY };
                up.min(diag).min(left)
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
        prev_lo = lo;
        prev_hi = hi;
    }
    Ok((prev[m], cells))
}

const BRUTEFORCE_MAX: usize = 10;

/// Exhaustive warping-path oracle.
///
/// Enumerates every monotone, boundary-complete, step-continuous path through
/// the cost matrix and returns the minimum path cost. Exponential: inputs are
/// capped at length 10. Exists so the DP kernel can be checked against an
/// implementation that shares nothing with it.
pub fn dtw_bruteforce(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    for len in [a.len(), b.len()] {
        if len > BRUTEFORCE_MAX {
            return Err(Error::SeriesTooLong {
                max: BRUTEFORCE_MAX,
                got: len,
            });
        }
    }
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i == a.len() - 1 && j == b.len() - 1 {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    Ok(best)
}
