//! Distribution of `sigma_min(V) / sqrt(d)` for i.i.d. random inputs.

use rand::Rng;
use rayon::prelude::*;

use crate::affine_fit::{assemble_v, InputSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::rng::{substream, StreamTag};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionRow {
    pub d: usize,
    pub summary: Summary,
}

/// One trial: `d + 1` inputs uniform on `[-0.5, 0.5]^m`, optionally
/// normalized to unit length, returning `sigma_min(V) / sqrt(d)`.
pub fn sample_ratio(m: usize, d: usize, normalize: bool, seed: u64, trial: u64) -> Result<f64> {
    let mut rng = substream(seed, StreamTag::MonteCarlo, ((d as u64) << 32) | trial);
    let inputs = (0..=d)
        .map(|_| {
            let u = Vector::from_fn(m, |_, _| rng.random_range(-0.5..0.5));
            if normalize {
                let n = u.norm();
                if n > 0.0 {
                    return u / n;
                }
            }
            u
        })
        .collect();
    let set = InputSet::new(m, inputs)?;
    let s = linalg::sigma_min(&assemble_v(&set))?;
    Ok(s / (d as f64).sqrt())
}

/// Quantile table over `trials` seeded draws for each `d`. Trials run in
/// parallel on the current rayon pool; each trial owns its own substream so
/// the table does not depend on the thread count.
pub fn monte_carlo_sigma(
    m: usize,
    d_list: &[usize],
    trials: usize,
    normalize: bool,
    seed: u64,
) -> Result<Vec<DistributionRow>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    if m == 0 {
        return Err(Error::Domain("m must be >= 1".into()));
    }
    d_list
        .iter()
        .map(|&d| {
            if d == 0 {
                return Err(Error::Domain("d must be >= 1".into()));
            }
            let values = (0..trials as u64)
                .into_par_iter()
                .map(|t| sample_ratio(m, d, normalize, seed, t))
                .collect::<Result<Vec<f64>>>()?;
            Ok(DistributionRow {
                d,
                summary: Summary::of(&values),
            })
        })
        .collect()
}
