//! Statistical agreement between the sampling path and the closed-form
//! distributions, plus quadrature oracles for the outage tail.

use nomalab_core::analytic::{ordered_gain_cdf, OutageInputs, OutageModel};
use nomalab_core::channel::{sample_realization, trial_rng};
use nomalab_core::oracles::{adaptive_simpson, ks_statistic_against_cdf, ks_two_sample};
use nomalab_core::params::DuplexMode;
use nomalab_core::simulator::estimate_outage;
use nomalab_core::SystemParams;
use rand::Rng;

fn reference_params() -> SystemParams {
    SystemParams::default()
}

/// Selected-relay gain samples against the closed-form CDF at one million
/// draws.
#[test]
fn best_gain_samples_match_closed_form_cdf() {
    let params = reference_params();
    let model = OutageModel::for_params(&params);
    let dist = model.best_channel();
    let mut samples: Vec<f64> = (0..1_000_000u64)
        .map(|trial| {
            let mut rng = trial_rng(2024, trial);
            sample_realization(&params, &mut rng).best_gain()
        })
        .collect();
    let ks = ks_statistic_against_cdf(&mut samples, &|x| dist.cdf(x).unwrap());
    assert!(ks < 4e-3, "KS statistic {ks} too large");
}

/// Each receiver's sorted gain against the order-statistic CDF.
#[test]
fn sorted_gain_samples_match_order_statistic_cdf() {
    let params = reference_params();
    let big_q = params.n_srs + 1;
    for node in 0..big_q {
        let lambda = if node == 0 { params.lambda_sp } else { params.lambda_sr };
        let mut samples: Vec<f64> = (0..300_000u64)
            .map(|trial| {
                let mut rng = trial_rng(81, trial);
                sample_realization(&params, &mut rng).gain(node)
            })
            .collect();
        let ks = ks_statistic_against_cdf(&mut samples, &|x| {
            ordered_gain_cdf(x, node + 1, big_q, lambda).unwrap()
        });
        assert!(ks < 7e-3, "node {node}: KS statistic {ks} too large");
    }
}

/// The crate's inverse-transform Gamma route against an independently
/// implemented sampler from a separate library.
#[test]
fn best_gain_two_route_agreement() {
    use rand_distr::{Distribution, Gamma};
    let params = reference_params();
    let n = 200_000u64;
    let mut route_a: Vec<f64> = (0..n)
        .map(|trial| {
            let mut rng = trial_rng(7, trial);
            sample_realization(&params, &mut rng).best_gain()
        })
        .collect();
    let gamma = Gamma::new(params.n_antennas as f64, params.lambda_ps).unwrap();
    let mut rng = trial_rng(8, 0);
    let mut route_b: Vec<f64> = (0..n)
        .map(|_| {
            (0..params.n_sts)
                .map(|_| gamma.sample(&mut rng))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (d, p_value) = ks_two_sample(&mut route_a, &mut route_b);
    assert!(p_value > 1e-4, "two-route KS d={d}, p={p_value}");
}

/// The selected-gain density against a central finite difference of its
/// CDF.
#[test]
fn best_gain_pdf_is_the_cdf_derivative() {
    let params = reference_params();
    let model = OutageModel::for_params(&params);
    let dist = model.best_channel();
    let h = 1e-5;
    for x in [0.5f64, 2.0, 5.0, 11.0, 20.0, 40.0, 75.0] {
        let numeric = (dist.cdf(x + h).unwrap() - dist.cdf(x - h).unwrap()) / (2.0 * h);
        let direct = dist.pdf(x).unwrap();
        assert!(
            (numeric - direct).abs() < 1e-7 * (1.0 + direct.abs()),
            "x={x}: pdf {direct} vs finite difference {numeric}"
        );
    }
}

/// Exact outage tail (joint probability that the relay decodes but the
/// receiving link fails) by adaptive quadrature, against the closed form's
/// large-argument expansion. The expansion keeps only the first-order term
/// of exp(−nΘ/(λγ̄x)), which is exact to ~1% for the primary receiver and
/// vanishes identically for the secondaries (their order-statistic CDF is
/// quadratic or higher at the origin, and the surviving linear term
/// cancels under the alternating binomial sums).
#[test]
fn closed_form_tail_matches_quadrature_within_expansion_error() {
    let mut params = reference_params();
    params.snr_db = -9.0;
    let inputs = OutageInputs::for_mode(&params, DuplexMode::Fd).unwrap();
    let model = OutageModel::for_params(&params);
    let dist = model.best_channel();
    let gamma_bar = params.gamma_bar();
    let lower = inputs.mu / gamma_bar;
    let big_q = params.n_srs + 1;

    let exact_tail = |q: usize, lambda_node: f64| {
        let theta = inputs.theta_through(q - 1);
        adaptive_simpson(
            &|x: f64| {
                ordered_gain_cdf(theta / (gamma_bar * x), q, big_q, lambda_node).unwrap()
                    * dist.pdf(x).unwrap()
            },
            lower,
            lower + 400.0,
            1e-13,
        )
    };

    let phi1 = dist.cdf(lower).unwrap();
    let primary_closed = model.primary(&params, DuplexMode::Fd).unwrap().probability - phi1;
    let primary_exact = exact_tail(1, params.lambda_sp);
    assert!(
        (primary_closed - primary_exact).abs() <= 0.02 * primary_exact,
        "primary tail: closed {primary_closed} vs exact {primary_exact}"
    );

    for m in 1..=params.n_srs {
        let closed = model.secondary(&params, DuplexMode::Fd, m).unwrap().probability - phi1;
        let exact = exact_tail(m + 1, params.lambda_sr);
        assert!(
            closed.abs() < 1e-12,
            "secondary {m}: expansion should cancel, got {closed}"
        );
        assert!(
            exact < 5e-4,
            "secondary {m}: exact tail {exact} is not negligible here"
        );
    }
}

/// Frozen cross-validation values: analytic probabilities and seeded Monte
/// Carlo estimates at the reference configuration, γ̄ = −9 dB, 10⁶ trials.
#[test]
fn frozen_reference_point_cross_validation() {
    let mut params = reference_params();
    params.snr_db = -9.0;
    let model = OutageModel::for_params(&params);

    let analytic_fd = [0.124880, 0.109177, 0.109177];
    let analytic_hd = [0.753161, 0.721913, 0.721913];
    let mc_fd = [0.124698, 0.109307, 0.109055];
    let mc_hd = [0.751882, 0.723554, 0.722563];

    for (mode, frozen_analytic, frozen_mc) in [
        (DuplexMode::Fd, analytic_fd, mc_fd),
        (DuplexMode::Hd, analytic_hd, mc_hd),
    ] {
        let values = [
            model.primary(&params, mode).unwrap().probability,
            model.secondary(&params, mode, 1).unwrap().probability,
            model.secondary(&params, mode, 2).unwrap().probability,
        ];
        for (node, (&value, &frozen)) in values.iter().zip(&frozen_analytic).enumerate() {
            assert!(
                (value - frozen).abs() < 5e-7,
                "{mode:?} node {node}: analytic {value} drifted from frozen {frozen}"
            );
        }
        let est = estimate_outage(&params, mode, 1_000_000, 42).unwrap();
        for node in 0..3 {
            assert!(
                (est.probability[node] - frozen_mc[node]).abs() < 5e-7,
                "{mode:?} node {node}: MC {} drifted from frozen {}",
                est.probability[node],
                frozen_mc[node]
            );
            assert!(
                (values[node] - est.probability[node]).abs()
                    <= (0.02f64).max(0.10 * est.probability[node]),
                "{mode:?} node {node}: analytic {} vs MC {}",
                values[node],
                est.probability[node]
            );
        }
    }
}

/// Monte Carlo responds smoothly to parameters the closed form does not
/// support: with unequal receiver-link means the estimator still works.
#[test]
fn unequal_link_means_simulate_but_have_no_closed_form() {
    let mut params = reference_params();
    params.snr_db = -9.0;
    params.lambda_sr = 25.0;
    let est = estimate_outage(&params, DuplexMode::Fd, 100_000, 3).unwrap();
    assert!(est.probability.iter().all(|p| (0.0..=1.0).contains(p)));
    let model = OutageModel::for_params(&params);
    assert!(model.primary(&params, DuplexMode::Fd).is_err());
}

/// The deliberately-corrupted coefficient tables must push the closed form
/// outside the Monte Carlo tolerance band — the validation harness relies
/// on this to prove it can detect a broken table.
#[test]
fn corrupted_tables_break_the_agreement() {
    let mut params = reference_params();
    params.snr_db = -9.0;
    let mut model = OutageModel::for_params(&params);
    model.corrupt_tables(1.5);
    let bad = model.primary(&params, DuplexMode::Fd).unwrap().probability;
    let est = estimate_outage(&params, DuplexMode::Fd, 200_000, 42).unwrap();
    let tolerance = (0.02f64).max(0.10 * est.probability[0]);
    assert!(
        (bad - est.probability[0]).abs() > tolerance,
        "corruption too mild to detect: {bad} vs {}",
        est.probability[0]
    );
}

/// Independent draw of the relay-selection route: sampling the maximum of
/// K Gamma draws directly from uniform bits, checked against the model CDF
/// at a handful of quantiles.
#[test]
fn best_gain_quantiles_match_secondary_route() {
    let params = reference_params();
    let model = OutageModel::for_params(&params);
    let dist = model.best_channel();
    let mut rng = trial_rng(55, 0);
    let n = 400_000usize;
    let mut samples: Vec<f64> = (0..n)
        .map(|_| {
            (0..params.n_sts)
                .map(|_| {
                    // Sum of N unit exponentials scaled by the mean.
                    (0..params.n_antennas)
                        .map(|_| -params.lambda_ps * (1.0 - rng.random::<f64>()).ln())
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for quantile in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let x = samples[(quantile * n as f64) as usize];
        let cdf = dist.cdf(x).unwrap();
        assert!(
            (cdf - quantile).abs() < 5e-3,
            "quantile {quantile}: CDF {cdf} at sample {x}"
        );
    }
}
