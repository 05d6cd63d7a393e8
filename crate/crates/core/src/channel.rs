//! Channel realizations and their deterministic sampling.
//!
//! A realization is one fading draw of the whole network: the selected
//! relay's uplink gain (best of K antenna-sum gains) plus the M+1 downlink
//! gains sorted ascending, with the worst gain assigned to the primary
//! receiver (the pessimistic grouping the model analyses).
//!
//! Sampling is keyed by `(seed, trial)`: every trial owns an independent
//! ChaCha stream, so trial `t` reproduces bit-identically no matter how
//! trials are batched or scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::params::SystemParams;
use crate::scalar::Real;

/// Invalid channel realization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("gains must be nonnegative, got {value}")]
    NegativeGain { value: f64 },
    #[error("receiver gains must be sorted ascending at index {index}")]
    NotSorted { index: usize },
    #[error("a realization needs at least one receiver gain")]
    Empty,
}

/// One fading draw: uplink gain after relay selection plus ascending
/// downlink gains, primary receiver first (worst).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    best_gain: T,
    sorted_gains: Vec<T>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn new(best_gain: T, sorted_gains: Vec<T>) -> Result<Self, ChannelError> {
        if sorted_gains.is_empty() {
            return Err(ChannelError::Empty);
        }
        if !(best_gain >= T::zero()) {
            return Err(ChannelError::NegativeGain {
                value: best_gain.to_f64_lossy(),
            });
        }
        for (i, &g) in sorted_gains.iter().enumerate() {
            if !(g >= T::zero()) {
                return Err(ChannelError::NegativeGain {
                    value: g.to_f64_lossy(),
                });
            }
            if i > 0 && g < sorted_gains[i - 1] {
                return Err(ChannelError::NotSorted { index: i });
            }
        }
        Ok(Self {
            best_gain,
            sorted_gains,
        })
    }

    /// g, the uplink gain of the selected relay.
    pub fn best_gain(&self) -> T {
        self.best_gain
    }

    /// All downlink gains ascending; index 0 belongs to the primary receiver,
    /// index m ≥ 1 to secondary receiver m.
    pub fn sorted_gains(&self) -> &[T] {
        &self.sorted_gains
    }

    /// Downlink gain of receiver `node` (0 = primary receiver).
    pub fn gain(&self, node: usize) -> T {
        self.sorted_gains[node]
    }

    /// Number of receivers, M+1.
    pub fn receivers(&self) -> usize {
        self.sorted_gains.len()
    }
}

/// Independent random stream for one trial of a seeded experiment.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Exponential variate of the given mean by inverse transform.
pub fn sample_exponential<T: Real, R: Rng>(mean: T, rng: &mut R) -> T {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u: f64 = rng.random();
    -mean * T::of(1.0 - u).ln()
}

/// Sum of `shape` exponential variates: a Gamma(shape, scale) draw for
/// integer shape.
pub fn sample_gamma_int<T: Real, R: Rng>(shape: usize, scale: T, rng: &mut R) -> T {
    let mut sum = T::zero();
    for _ in 0..shape {
        sum += sample_exponential(scale, rng);
    }
    sum
}

/// Draws one realization. The draw order is fixed (K relay candidates of N
/// element gains each, then the primary-receiver gain, then the M secondary
/// gains) so a `(seed, trial)` pair pins the realization exactly.
pub fn sample_realization<T: Real, R: Rng>(
    params: &SystemParams<T>,
    rng: &mut R,
) -> ChannelRealization<T> {
    let mut best = T::zero();
    for _ in 0..params.n_sts {
        let candidate = sample_gamma_int(params.n_antennas, params.lambda_ps, rng);
        if candidate > best {
            best = candidate;
        }
    }

    let mut gains = Vec::with_capacity(params.n_srs + 1);
    gains.push(sample_exponential(params.lambda_sp, rng));
    for _ in 0..params.n_srs {
        gains.push(sample_exponential(params.lambda_sr, rng));
    }
    gains.sort_by(|a, b| a.partial_cmp(b).expect("gains are finite"));

    ChannelRealization {
        best_gain: best,
        sorted_gains: gains,
    }
}
