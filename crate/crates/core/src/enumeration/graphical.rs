//! Erdős–Gallai graphicality tests.
//!
//! For a nonincreasing sequence `d_1 >= ... >= d_n` with even sum, the
//! sequence is graphical iff for every `k`
//! `sum_{i<=k} d_i <= k(k-1) + sum_{i>k} min(d_i, k)`.
//! With `c_k = #{i : d_i >= k}` the right-hand tail sum is
//! `k * (c_k - k) + sum_{i>c_k} d_i` when `c_k > k` and `sum_{i>k} d_i`
//! otherwise, which makes every check O(1) after O(n) preprocessing.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Checks every index and reports the first violated one (1-based).
pub fn check_graphical(degrees: &[u32]) -> Result<()> {
    let n = degrees.len();
    let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    if sum % 2 == 1 {
        return Err(Error::OddDegreeSum { sum });
    }
    if n == 0 {
        return Ok(());
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let max = sorted[0] as usize;
    // prefix[m] = sum of the m largest degrees.
    let mut prefix = vec![0u64; n + 1];
    for (i, &d) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + d as u64;
    }
    // count_ge[x] = #{i : d_i >= x}
    let mut count_ge = vec![0u64; max + 2];
    for &d in &sorted {
        count_ge[d as usize] += 1;
    }
    for x in (0..=max).rev() {
        count_ge[x] += count_ge[x + 1];
    }
    for k in 1..=n {
        let ku = k as u64;
        let lhs = prefix[k];
        let c = if k <= max { count_ge[k] } else { 0 } as usize;
        let tail = if c > k {
            ku * (c - k) as u64 + (sum - prefix[c])
        } else {
            sum - prefix[k]
        };
        if lhs > ku * (ku - 1) + tail {
            return Err(Error::NonGraphical { index: k });
        }
    }
    Ok(())
}

pub fn is_graphical(degrees: &[u32]) -> bool {
    check_graphical(degrees).is_ok()
}

/// Reusable buffers for histogram-form graphicality tests.
#[derive(Debug, Default, Clone)]
pub(crate) struct HistogramScratch {
    count_ge: Vec<u64>,
    sum_ge: Vec<u64>,
}

/// Graphicality of the multiset with `hist[x]` vertices of degree `x`
/// (`hist[0]` ignored). Only the ends of runs of equal degrees are checked,
/// which suffices for Erdős–Gallai.
pub(crate) fn histogram_is_graphical(hist: &[u64], scratch: &mut HistogramScratch) -> bool {
    let Some(max) = hist.iter().rposition(|&c| c > 0).filter(|&m| m > 0) else {
        return true;
    };
    let count_ge = &mut scratch.count_ge;
    let sum_ge = &mut scratch.sum_ge;
    count_ge.clear();
    count_ge.resize(max + 2, 0);
    sum_ge.clear();
    sum_ge.resize(max + 2, 0);
    for x in (1..=max).rev() {
        count_ge[x] = count_ge[x + 1] + hist[x];
        sum_ge[x] = sum_ge[x + 1] + hist[x] * x as u64;
    }
    let total = sum_ge[1];
    if total % 2 == 1 {
        return false;
    }
    let mut k = 0u64;
    let mut lhs = 0u64;
    for x in (1..=max).rev() {
        if hist[x] == 0 {
            continue;
        }
        k += hist[x];
        lhs += hist[x] * x as u64;
        let c = if (k as usize) <= max { count_ge[k as usize] } else { 0 };
        let tail = if c > k {
            k * (c - k) + (total - sum_ge[k as usize])
        } else {
            total - lhs
        };
        if lhs > k * (k - 1) + tail {
            return false;
        }
    }
    true
}
