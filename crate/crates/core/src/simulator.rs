//! Monte Carlo ground truth: per-realization rates and trial-averaged
//! outage/throughput estimators.
//!
//! Rates follow the decode-and-forward chain: the relay listens through the
//! selected uplink (splitting power β into the harvester), and only if it
//! decodes the primary message does it superimpose and forward everything.
//! Receivers strip messages in power order, so receiver m succeeds only if
//! every stage up to its own index clears that stage's SINR threshold.
//!
//! Estimators are deterministic for a fixed seed under any parallelism:
//! every trial owns an indexed counter-mode RNG stream, batches tally
//! integer failure counts, and batch merges are associative.

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{sample_realization, trial_rng, ChannelRealization};
use crate::params::{DuplexMode, ParamsError, PowerAllocation, SystemParams};
use crate::scalar::Real;

/// Batch granularity for parallel tallies. Fixed so that regrouping work
/// across threads can never regroup floating-point arithmetic.
const TRIALS_PER_BATCH: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Instantaneous achievable rates for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile<T> {
    /// Relay's rate for the primary message on the selected uplink.
    pub r_st_decode: T,
    /// Rate of message i at its own receiver (index 0 = primary receiver).
    /// All zero when the relay could not decode: nothing is forwarded.
    pub r_node: Vec<T>,
    /// Whether the relay decoded the primary message (r_st_decode ≥ R̄₀).
    pub st_decoded: bool,
}

/// Trial-averaged outage frequencies with a 95% normal-approximation CI.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageEstimate<T> {
    pub trials: u64,
    /// Failure counts per receiver (primary first).
    pub failures: Vec<u64>,
    /// failures / trials.
    pub probability: Vec<T>,
    /// 1.96·√(p(1−p)/trials).
    pub ci_halfwidth: Vec<T>,
}

/// Delay-limited throughput: each target rate weighted by its estimated
/// success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate<T> {
    pub primary: T,
    pub secondary: T,
    /// Conservative CI: rate-weighted sum of the per-node outage CIs
    /// (per-node failures share trials, so independence is not assumed).
    pub primary_ci: T,
    pub secondary_ci: T,
    pub outage: OutageEstimate<T>,
}

/// SIC decode SINR of message `message` at a receiver whose composite power
/// coefficient is `a_node` = ργ̄·g·g_node: earlier (stronger) messages are
/// still unstripped interference, later ones have been removed.
pub fn noma_sinr<T: Real>(alpha: &PowerAllocation<T>, a_node: T, message: usize) -> T {
    alpha.get(message) * a_node / (alpha.tail_sum(message) * a_node + T::one())
}

/// Relay decode SINR on the selected uplink: the (1−β) share of the receive
/// power against residual self-interference (scaled by the relay's own
/// transmit coefficient) plus unit noise.
fn relay_decode_sinr<T: Real>(params: &SystemParams<T>, mode: DuplexMode, best_gain: T) -> T {
    let listen_power = (T::one() - params.beta) * params.gamma_bar() * best_gain;
    let si_floor = match mode {
        DuplexMode::Fd => {
            (T::one() - params.beta)
                * params.effective_rho(mode)
                * params.gamma_bar()
                * params.i_si
                * best_gain
        }
        // Listening and forwarding are time-separated: no self-interference.
        DuplexMode::Hd | DuplexMode::OmaTdma => T::zero(),
    };
    listen_power / (si_floor + T::one())
}

/// Fraction of the block each forwarded rate is scaled by.
fn downlink_prelog<T: Real>(params: &SystemParams<T>, mode: DuplexMode) -> T {
    match mode {
        DuplexMode::Fd => T::one(),
        DuplexMode::Hd => T::of(0.5),
        DuplexMode::OmaTdma => {
            (T::one() - params.kappa) / T::of_usize(params.n_srs + 1)
        }
    }
}

fn uplink_prelog<T: Real>(params: &SystemParams<T>, mode: DuplexMode) -> T {
    match mode {
        DuplexMode::Fd => T::one(),
        DuplexMode::Hd => T::of(0.5),
        DuplexMode::OmaTdma => params.kappa,
    }
}

/// Per-slot relay power coefficient, after the OMA policy knobs.
fn slot_rho<T: Real>(params: &SystemParams<T>, mode: DuplexMode) -> T {
    let mut rho = params.effective_rho(mode);
    if mode == DuplexMode::OmaTdma {
        if params.oma_duty_cycle_harvest {
            rho *= params.kappa / (T::one() - params.kappa);
        }
        if params.oma_split_power {
            rho /= T::of_usize(params.n_srs + 1);
        }
    }
    rho
}

/// Achievable rates of one realization under `alpha`, per the mode's
/// prelogs and power policy. The allocation is ignored in OMA-TDMA, where
/// each receiver owns a clean slot.
pub fn instantaneous_rates<T: Real>(
    real: &ChannelRealization<T>,
    alpha: &PowerAllocation<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> RateProfile<T> {
    let nodes = params.n_srs + 1;
    assert_eq!(alpha.len(), nodes, "allocation size must match receivers");
    assert_eq!(real.receivers(), nodes, "realization size must match receivers");

    let r_st_decode =
        uplink_prelog(params, mode) * (T::one() + relay_decode_sinr(params, mode, real.best_gain())).log2();
    let st_decoded = r_st_decode >= params.target_rates[0];
    if !st_decoded {
        return RateProfile {
            r_st_decode,
            r_node: vec![T::zero(); nodes],
            st_decoded,
        };
    }

    let prelog = downlink_prelog(params, mode);
    let rho = slot_rho(params, mode);
    let r_node = (0..nodes)
        .map(|i| {
            let a_node = rho * params.gamma_bar() * real.best_gain() * real.gain(i);
            let sinr = match mode {
                DuplexMode::Fd | DuplexMode::Hd => noma_sinr(alpha, a_node, i),
                DuplexMode::OmaTdma => a_node,
            };
            prelog * (T::one() + sinr).log2()
        })
        .collect();

    RateProfile {
        r_st_decode,
        r_node,
        st_decoded,
    }
}

/// Per-stage SINR thresholds precomputed once per estimator run. Decode
/// checks compare SINRs against these instead of taking logarithms per
/// trial; the comparisons are equivalent because 2^(R/prelog) − 1 inverts
/// the rate map exactly.
struct DecodeThresholds<T> {
    relay: T,
    /// NOMA modes: threshold of message m' in every receiver's SIC chain.
    /// OMA: threshold of receiver m's own clean-slot SNR.
    stage: Vec<T>,
}

impl<T: Real> DecodeThresholds<T> {
    fn new(params: &SystemParams<T>, mode: DuplexMode) -> Self {
        let up = uplink_prelog(params, mode);
        let down = downlink_prelog(params, mode);
        let relay = T::of(2.0).powf(params.target_rates[0] / up) - T::one();
        let stage = params
            .target_rates
            .iter()
            .map(|&r| T::of(2.0).powf(r / down) - T::one())
            .collect();
        Self { relay, stage }
    }
}

/// Marks each receiver's failure for one realization into `failures`.
fn tally_trial<T: Real>(
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
    thresholds: &DecodeThresholds<T>,
    failures: &mut [u64],
) {
    let relay_ok = relay_decode_sinr(params, mode, real.best_gain()) >= thresholds.relay;
    if !relay_ok {
        for f in failures.iter_mut() {
            *f += 1;
        }
        return;
    }

    let rho = slot_rho(params, mode);
    let scale = rho * params.gamma_bar() * real.best_gain();
    match mode {
        DuplexMode::Fd | DuplexMode::Hd => {
            // Receiver m must clear every stage m' ≤ m; a stage failure at
            // m' dooms m' itself and everyone later in the SIC order.
            let nodes = params.n_srs + 1;
            for m in 0..nodes {
                let a_node = scale * real.gain(m);
                let failed = (0..=m)
                    .any(|stage| noma_sinr(&params.alpha, a_node, stage) < thresholds.stage[stage]);
                if failed {
                    failures[m] += 1;
                }
            }
        }
        DuplexMode::OmaTdma => {
            for (m, f) in failures.iter_mut().enumerate() {
                if scale * real.gain(m) < thresholds.stage[m] {
                    *f += 1;
                }
            }
        }
    }
}

/// Estimates per-receiver outage over `trials` independent realizations.
///
/// Deterministic for a fixed `(params, mode, trials, seed)` tuple under any
/// thread count: trial i always uses RNG stream i of `seed`.
pub fn estimate_outage<T: Real>(
    params: &SystemParams<T>,
    mode: DuplexMode,
    trials: u64,
    seed: u64,
) -> Result<OutageEstimate<T>, SimError> {
    params.validate()?;
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    let nodes = params.n_srs + 1;
    let thresholds = DecodeThresholds::new(params, mode);
    let n_batches = trials.div_ceil(TRIALS_PER_BATCH);

    let failures = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let start = batch * TRIALS_PER_BATCH;
            let end = (start + TRIALS_PER_BATCH).min(trials);
            let mut tally = vec![0u64; nodes];
            for trial in start..end {
                let mut rng = trial_rng(seed, trial);
                let real = sample_realization(params, &mut rng);
                tally_trial(&real, params, mode, &thresholds, &mut tally);
            }
            tally
        })
        .reduce(
            || vec![0u64; nodes],
            |mut acc, tally| {
                for (a, t) in acc.iter_mut().zip(tally) {
                    *a += t;
                }
                acc
            },
        );

    let total = T::of(trials as f64);
    let probability: Vec<T> = failures.iter().map(|&f| T::of(f as f64) / total).collect();
    let ci_halfwidth = probability
        .iter()
        .map(|&p| T::of(1.96) * (p * (T::one() - p) / total).sqrt())
        .collect();
    Ok(OutageEstimate {
        trials,
        failures,
        probability,
        ci_halfwidth,
    })
}

/// Estimates delay-limited throughput from outage frequencies: target rate
/// times success probability, summed over the secondary receivers.
pub fn estimate_throughput<T: Real>(
    params: &SystemParams<T>,
    mode: DuplexMode,
    trials: u64,
    seed: u64,
) -> Result<ThroughputEstimate<T>, SimError> {
    let outage = estimate_outage(params, mode, trials, seed)?;
    let primary = (T::one() - outage.probability[0]) * params.target_rates[0];
    let primary_ci = outage.ci_halfwidth[0] * params.target_rates[0];
    let mut secondary = T::zero();
    let mut secondary_ci = T::zero();
    for m in 1..=params.n_srs {
        secondary += (T::one() - outage.probability[m]) * params.target_rates[m];
        secondary_ci += outage.ci_halfwidth[m] * params.target_rates[m];
    }
    Ok(ThroughputEstimate {
        primary,
        secondary,
        primary_ci,
        secondary_ci,
        outage,
    })
}
