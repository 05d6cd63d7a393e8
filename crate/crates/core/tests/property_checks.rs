//! Randomized property checks over parameters, allocations, and the
//! closed-form expressions.

use nomalab_core::analytic::ordered_gain_cdf;
use nomalab_core::params::DuplexMode;
use nomalab_core::simulator::{estimate_throughput, noma_sinr};
use nomalab_core::{OutageModel, PowerAllocation, SystemParams};
use proptest::prelude::*;

/// Random valid parameter sets: small topologies, shared secondary-link
/// mean (so the closed form applies), ordered allocations on the simplex.
fn arb_params() -> impl Strategy<Value = SystemParams> {
    (
        1usize..=5,
        1usize..=5,
        1usize..=3,
        0.2f64..20.0,
        0.2f64..20.0,
        -20.0f64..15.0,
        0.05f64..0.95,
        proptest::collection::vec(0.05f64..1.0, 4),
        proptest::collection::vec(0.1f64..1.2, 4),
        0.5f64..0.999,
    )
        .prop_map(
            |(
                n_antennas,
                n_sts,
                n_srs,
                lambda_ps,
                lambda_s,
                snr_db,
                beta,
                raw_alpha,
                rates,
                budget,
            )| {
                let nodes = n_srs + 1;
                let mut params = SystemParams::default();
                params.n_antennas = n_antennas;
                params.n_sts = n_sts;
                params.n_srs = n_srs;
                params.lambda_ps = lambda_ps;
                params.lambda_sp = lambda_s;
                params.lambda_sr = lambda_s;
                params.snr_db = snr_db;
                params.beta = beta;
                let mut alpha = raw_alpha[..nodes].to_vec();
                alpha.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let total: f64 = alpha.iter().sum();
                for a in &mut alpha {
                    *a *= budget / total;
                }
                params.alpha = PowerAllocation::new(alpha).unwrap();
                params.target_rates = rates[..nodes].to_vec();
                params
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Serializing and re-reading a parameter set reproduces it exactly.
    #[test]
    fn params_survive_a_json_round_trip(params in arb_params()) {
        let text = params.to_json();
        let back = SystemParams::from_json(&text).unwrap();
        prop_assert_eq!(params, back);
    }

    /// Closed-form outage always lands in [0, 1] for both duplex modes,
    /// every receiver, across random valid parameter sets.
    #[test]
    fn closed_form_outage_is_a_probability(
        params in arb_params(),
        fd in proptest::bool::ANY,
    ) {
        let mode = if fd { DuplexMode::Fd } else { DuplexMode::Hd };
        let model = OutageModel::for_params(&params);
        let primary = model.primary(&params, mode).unwrap();
        prop_assert!(
            (0.0..=1.0).contains(&primary.probability),
            "primary gave {}", primary.probability
        );
        for m in 1..=params.n_srs {
            let secondary = model.secondary(&params, mode, m).unwrap();
            prop_assert!(
                (0.0..=1.0).contains(&secondary.probability),
                "receiver {m} gave {}", secondary.probability
            );
        }
    }
}

proptest! {
    /// The order-statistic CDF is monotone nondecreasing and stays within
    /// [0, 1] for every rank.
    #[test]
    fn ordered_gain_cdf_is_a_monotone_cdf(
        (big_q, q) in (1usize..=6).prop_flat_map(|b| (Just(b), 1usize..=b)),
        lambda in 0.2f64..20.0,
        x0 in 0.0f64..100.0,
        dx in 0.0f64..100.0,
    ) {
        let lo = ordered_gain_cdf(x0, q, big_q, lambda).unwrap();
        let hi = ordered_gain_cdf(x0 + dx, q, big_q, lambda).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lo), "cdf({x0}) = {lo}");
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&hi));
        prop_assert!(hi >= lo - 1e-9, "cdf fell from {lo} to {hi}");
    }

    /// Ordered simplex vectors are accepted and suffix sums match a manual
    /// computation.
    #[test]
    fn ordered_simplex_vectors_are_accepted(
        raw in proptest::collection::vec(0.01f64..1.0, 1..6),
        budget in 0.1f64..1.0,
    ) {
        let mut sorted = raw;
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = sorted.iter().sum();
        for v in &mut sorted {
            *v *= budget / total;
        }
        let alloc = PowerAllocation::new(sorted.clone()).unwrap();
        for m in 0..sorted.len() {
            let manual: f64 = sorted[m + 1..].iter().sum();
            prop_assert!((alloc.tail_sum(m) - manual).abs() < 1e-12);
        }
    }

    /// Any upward step between adjacent coefficients is rejected, both by
    /// the constructor and when decoding from JSON.
    #[test]
    fn out_of_order_vectors_are_rejected(
        head in 0.01f64..0.4,
        boost in 0.01f64..0.5,
    ) {
        let bad = vec![head, head + boost];
        prop_assert!(PowerAllocation::new(bad.clone()).is_err());
        let text = serde_json::to_string(&bad).unwrap();
        prop_assert!(serde_json::from_str::<PowerAllocation>(&text).is_err());
    }

    /// Budgets above one are rejected.
    #[test]
    fn over_budget_vectors_are_rejected(excess in 0.01f64..2.0) {
        let share = (1.0 + excess) / 2.0;
        prop_assert!(PowerAllocation::new(vec![share, share]).is_err());
    }

    /// The SIC decode rate is monotone in the composite receive power.
    #[test]
    fn decode_sinr_grows_with_receive_power(
        a_lo in 0.0f64..50.0,
        gap in 0.0f64..50.0,
        message in 0usize..3,
    ) {
        let alpha = PowerAllocation::new(vec![0.5, 0.3, 0.2]).unwrap();
        let lo = noma_sinr(&alpha, a_lo, message);
        let hi = noma_sinr(&alpha, a_lo + gap, message);
        prop_assert!(hi >= lo);
        // Interference-limited ceiling.
        let ceiling = if message + 1 < 3 {
            alpha.get(message) / alpha.tail_sum(message)
        } else {
            f64::INFINITY
        };
        prop_assert!(hi <= ceiling + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Estimated throughput never exceeds the sum of target rates and is
    /// internally consistent with the outage estimate it came from.
    #[test]
    fn throughput_is_bounded_by_the_targets(params in arb_params(), seed in 0u64..1000) {
        let est = estimate_throughput(&params, DuplexMode::Fd, 2_000, seed).unwrap();
        prop_assert!(est.primary >= 0.0 && est.primary <= params.target_rates[0]);
        let secondary_budget: f64 = params.target_rates[1..].iter().sum();
        prop_assert!(est.secondary >= 0.0 && est.secondary <= secondary_budget);
        let rebuilt: f64 = (1.0 - est.outage.probability[0]) * params.target_rates[0];
        prop_assert!((est.primary - rebuilt).abs() < 1e-12);
    }
}
