//! Produces prompt preliminary estimates of an aggregate indicator from a
//! biased real-time sample.
//!
//! The unbiased population for the target period is not observable yet, so it
//! is reconstructed in stages: per-channel sample counts are forecast with
//! SARIMA (or an auxiliary monthly series), attributes are resampled from the
//! year-ago table, the biased sample is importance-weighted against that
//! reconstruction by direct density-ratio estimation (uLSIF), optionally a
//! weighted predictor is trained under covariate shift, and a constant
//! residual-bias factor is applied to the final average.
//!
//! The crate also ships the evaluation machinery (MAE, HLN forecast-comparison
//! test, report assembly) and a synthetic generator with known ground truth
//! for every quantity the pipeline estimates.
//!
//! By default the heavy inner loops (cross-validation grids, order searches,
//! tree ensembles, evaluation cells) run on rayon; build with
//! `--no-default-features` for a fully sequential binary.

pub mod datamodel;
pub mod density_ratio;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod forecast;
pub mod period;
pub mod pipeline;
pub mod synthgen;
pub mod weighted;

pub(crate) mod linalg;

pub use error::{Error, Result};
pub use period::{Half, HalfYearPeriod};

/// Derives a named sub-seed from a root seed. Every stochastic stage draws
/// from its own stream so that stages stay reproducible in isolation.
pub fn stage_seed(root: u64, name: &str) -> u64 {
    // FNV-1a over the name, then a splitmix64 finalizer; stable across
    // platforms and rustc versions, unlike the std hasher.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
