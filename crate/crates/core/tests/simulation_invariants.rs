//! Reproducibility and structural invariants of the Monte Carlo path.

use nomalab_core::channel::{sample_realization, trial_rng};
use nomalab_core::params::{DuplexMode, PowerAllocation};
use nomalab_core::simulator::{estimate_outage, noma_sinr};
use nomalab_core::SystemParams;
use rand::Rng;

/// Identical failure counts regardless of how many worker threads run the
/// batches.
#[test]
fn outage_counts_are_thread_count_invariant() {
    let mut params = SystemParams::default();
    params.snr_db = -9.0;
    let mut counts = Vec::new();
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let est = pool.install(|| estimate_outage(&params, DuplexMode::Fd, 300_000, 11).unwrap());
        counts.push(est.failures.clone());
    }
    assert_eq!(counts[0], counts[1], "1 vs 2 worker threads");
    assert_eq!(counts[0], counts[2], "1 vs 4 worker threads");
}

/// Same seed twice gives bit-identical results; a different seed does not.
#[test]
fn seed_controls_the_estimate_exactly() {
    let mut params = SystemParams::default();
    params.snr_db = -9.0;
    let a = estimate_outage(&params, DuplexMode::Hd, 150_000, 5).unwrap();
    let b = estimate_outage(&params, DuplexMode::Hd, 150_000, 5).unwrap();
    let c = estimate_outage(&params, DuplexMode::Hd, 150_000, 6).unwrap();
    assert_eq!(a.failures, b.failures);
    assert_ne!(a.failures, c.failures);
}

/// With gain-sorted receivers, every message's smallest SINR across the
/// receivers that must decode it occurs at its own receiver. Checked on
/// ten thousand random channel/allocation instances.
#[test]
fn own_receiver_is_the_decoding_bottleneck() {
    let params = SystemParams::default();
    let nodes = params.n_srs + 1;
    let mut violations = 0u32;
    for trial in 0..10_000u64 {
        let mut rng = trial_rng(2817, trial);
        let real = sample_realization(&params, &mut rng);
        // Random ordered allocation on the simplex.
        let mut raw: Vec<f64> = (0..nodes).map(|_| rng.random::<f64>()).collect();
        raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = raw.iter().sum();
        let alpha =
            PowerAllocation::new(raw.iter().map(|v| v / total).collect()).unwrap();
        let scale = params.effective_rho(DuplexMode::Fd) * params.gamma_bar() * real.best_gain();
        for message in 0..nodes {
            let own = noma_sinr(&alpha, scale * real.gain(message), message);
            for receiver in message..nodes {
                let other = noma_sinr(&alpha, scale * real.gain(receiver), message);
                if other < own - 1e-15 * own.abs() {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

/// Failure counts and reported probabilities stay mutually consistent, and
/// the binomial confidence interval matches its definition.
#[test]
fn probabilities_follow_counts() {
    let mut params = SystemParams::default();
    params.snr_db = -6.0;
    let trials = 123_456u64;
    let est = estimate_outage(&params, DuplexMode::Fd, trials, 77).unwrap();
    assert_eq!(est.trials, trials);
    for node in 0..est.failures.len() {
        let p = est.failures[node] as f64 / trials as f64;
        assert_eq!(est.probability[node], p);
        let ci = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
        assert!((est.ci_halfwidth[node] - ci).abs() < 1e-15);
    }
}

/// Outage is monotone nonincreasing along the SNR grid for every node and
/// mode, allowing combined Monte Carlo noise.
#[test]
fn outage_never_rises_with_snr() {
    for mode in [DuplexMode::Fd, DuplexMode::Hd, DuplexMode::OmaTdma] {
        let mut previous: Option<nomalab_core::OutageEstimate> = None;
        for snr in [-18.0, -12.0, -6.0, 0.0, 6.0] {
            let mut params = SystemParams::default();
            params.snr_db = snr;
            let est = estimate_outage(&params, mode, 150_000, 13).unwrap();
            if let Some(prev) = previous {
                for node in 0..est.probability.len() {
                    assert!(
                        est.probability[node]
                            <= prev.probability[node]
                                + prev.ci_halfwidth[node]
                                + est.ci_halfwidth[node],
                        "{mode:?} node {node} rose from {} to {} at {snr} dB",
                        prev.probability[node],
                        est.probability[node]
                    );
                }
            }
            previous = Some(est);
        }
    }
}
