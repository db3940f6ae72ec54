//! Closed-form volume factors: the edge-count and type-mixing classes are
//! products of binomial coefficients.

use alloc::format;

use super::{VolumeEstimate, VolumeMethod};
use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::math::ln_choose;

/// `ln C(n(n-1)/2, m)`: graphs on `n` labeled vertices with `m` edges.
pub fn log_volume_edges(n: u64, m: u64) -> Result<VolumeEstimate> {
    let pairs = n * n.saturating_sub(1) / 2;
    if m > pairs {
        return Err(Error::domain(format!("{m} edges exceed the {pairs} vertex pairs of n = {n}")));
    }
    Ok(VolumeEstimate::exact(LogValue::ln_unchecked(ln_choose(pairs, m)), VolumeMethod::Exact))
}

/// Block capacities `(pp, ps, ss)` for `n_p` primary and `n_s` specialty vertices.
pub fn type_block_capacities(n_primary: u64, n_specialty: u64) -> [u64; 3] {
    [
        n_primary * n_primary.saturating_sub(1) / 2,
        n_primary * n_specialty,
        n_specialty * n_specialty.saturating_sub(1) / 2,
    ]
}

/// `sum_b ln C(capacity_b, e_b)` over the three provider-type blocks.
pub fn log_volume_type_mixing(
    n_primary: u64,
    n_specialty: u64,
    e_pp: u64,
    e_ps: u64,
    e_ss: u64,
) -> Result<VolumeEstimate> {
    let caps = type_block_capacities(n_primary, n_specialty);
    let mut total = 0.0;
    for ((name, cap), e) in ["primary-primary", "primary-specialty", "specialty-specialty"]
        .into_iter()
        .zip(caps)
        .zip([e_pp, e_ps, e_ss])
    {
        if e > cap {
            return Err(Error::domain(format!("{e} {name} edges exceed the block capacity {cap}")));
        }
        total += ln_choose(cap, e);
    }
    Ok(VolumeEstimate::exact(LogValue::ln_unchecked(total), VolumeMethod::Exact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_edge_classes() {
        assert_eq!(log_volume_edges(3, 3).unwrap().log_count.ln(), 0.0);
        assert!((log_volume_edges(4, 2).unwrap().log_count.ln() - 15f64.ln()).abs() < 1e-12);
        assert!(log_volume_edges(4, 7).is_err());
        assert_eq!(log_volume_edges(1, 0).unwrap().log_count.ln(), 0.0);
    }

    #[test]
    fn type_blocks() {
        assert_eq!(log_volume_type_mixing(1, 1, 0, 1, 0).unwrap().log_count.ln(), 0.0);
        assert_eq!(log_volume_type_mixing(2, 2, 1, 0, 1).unwrap().log_count.ln(), 0.0);
        assert!((log_volume_type_mixing(2, 2, 0, 2, 0).unwrap().log_count.ln() - 6f64.ln()).abs() < 1e-12);
        assert!(log_volume_type_mixing(2, 2, 2, 0, 0).is_err());
    }
}
