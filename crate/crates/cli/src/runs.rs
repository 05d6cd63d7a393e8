//! Subcommand implementations. Every sweep builds its whole CSV in memory
//! (draws and trials run in parallel inside the core estimators) and the
//! file is written once at the end, so failures never leave partial output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nomalab_core::analytic::{ordered_gain_cdf, throughput_analytic, AnalyticError};
use nomalab_core::channel::{sample_exponential, sample_realization, trial_rng};
use nomalab_core::optimizer::{
    achievable_sum_rate, exhaustive_search, sca_optimize, OptimError,
};
use nomalab_core::oracles::{
    ks_statistic_against_cdf, series_power_coefficients, upper_incomplete_gamma_quadrature,
};
use nomalab_core::simulator::{estimate_outage, estimate_throughput, noma_sinr};
use nomalab_core::special::{c_coefficients_exact, upper_incomplete_gamma_int};
use nomalab_core::{DuplexMode, OutageModel, PowerAllocation, SystemParams};
use rayon::prelude::*;

use crate::config::Config;
use crate::CliError;

/// Nine significant digits; the stable CSV number format.
fn fmt9(value: f64) -> String {
    format!("{value:.8e}")
}

/// `p` for the primary receiver, `r1…rM` for the secondary receivers.
fn node_label(node: usize) -> String {
    if node == 0 {
        "p".to_string()
    } else {
        format!("r{node}")
    }
}

/// Closed forms exist for FD/HD with identical receiver gain means only.
fn analytic_supported(params: &SystemParams, mode: DuplexMode) -> bool {
    mode != DuplexMode::OmaTdma && params.lambda_sp == params.lambda_sr
}

fn analytic_failure(error: AnalyticError) -> CliError {
    CliError::Solver(format!("closed-form evaluation failed: {error}"))
}

/// Per-node closed-form outage through `model` (primary first).
fn closed_form_with_model(
    model: &OutageModel,
    params: &SystemParams,
    mode: DuplexMode,
) -> Result<Vec<f64>, CliError> {
    let mut out = vec![
        model
            .primary(params, mode)
            .map_err(analytic_failure)?
            .probability,
    ];
    for m in 1..=params.n_srs {
        out.push(
            model
                .secondary(params, mode, m)
                .map_err(analytic_failure)?
                .probability,
        );
    }
    Ok(out)
}

/// Per-node closed-form outage, or `None` where no closed form exists.
fn closed_form_outages(
    params: &SystemParams,
    mode: DuplexMode,
) -> Result<Option<Vec<f64>>, CliError> {
    if !analytic_supported(params, mode) {
        return Ok(None);
    }
    let model = OutageModel::for_params(params);
    closed_form_with_model(&model, params, mode).map(Some)
}

fn write_report(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Io(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn run_outage(config: &Config) -> Result<PathBuf, CliError> {
    let csv = build_outage_csv(config)?;
    write_report(&config.sweep.output_path, &csv)?;
    Ok(config.sweep.output_path.clone())
}

pub fn build_outage_csv(config: &Config) -> Result<String, CliError> {
    let sweep = &config.sweep;
    let mut csv = String::from(
        "swept_value,mode,node,mc_probability,ci_halfwidth,analytic_probability,trials,seed\n",
    );
    for &value in &sweep.grid {
        let params = sweep.swept_parameter.apply(&config.params, value)?;
        for &mode in &sweep.modes {
            let estimate = estimate_outage(&params, mode, sweep.trials, sweep.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let analytic = closed_form_outages(&params, mode)?;
            for node in 0..=params.n_srs {
                let analytic_cell = match &analytic {
                    Some(values) => fmt9(values[node]),
                    None => String::new(),
                };
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    fmt9(value),
                    mode.name(),
                    node_label(node),
                    fmt9(estimate.probability[node]),
                    fmt9(estimate.ci_halfwidth[node]),
                    analytic_cell,
                    sweep.trials,
                    sweep.seed
                )
                .expect("writing to a string cannot fail");
            }
        }
    }
    Ok(csv)
}

pub fn run_throughput(config: &Config) -> Result<PathBuf, CliError> {
    let csv = build_throughput_csv(config)?;
    write_report(&config.sweep.output_path, &csv)?;
    Ok(config.sweep.output_path.clone())
}

pub fn build_throughput_csv(config: &Config) -> Result<String, CliError> {
    let sweep = &config.sweep;
    let mut csv = String::from(
        "swept_value,mode,mc_primary,mc_primary_ci,mc_secondary,mc_secondary_ci,\
         analytic_primary,analytic_secondary,trials,seed\n",
    );
    for &value in &sweep.grid {
        let params = sweep.swept_parameter.apply(&config.params, value)?;
        for &mode in &sweep.modes {
            let estimate = estimate_throughput(&params, mode, sweep.trials, sweep.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let (analytic_primary, analytic_secondary) = if analytic_supported(&params, mode) {
                let analytic = throughput_analytic(&params, mode).map_err(analytic_failure)?;
                (fmt9(analytic.primary), fmt9(analytic.secondary))
            } else {
                (String::new(), String::new())
            };
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt9(value),
                mode.name(),
                fmt9(estimate.primary),
                fmt9(estimate.primary_ci),
                fmt9(estimate.secondary),
                fmt9(estimate.secondary_ci),
                analytic_primary,
                analytic_secondary,
                sweep.trials,
                sweep.seed
            )
            .expect("writing to a string cannot fail");
        }
    }
    Ok(csv)
}

enum DrawOutcome {
    Feasible {
        iterations: usize,
        converged: bool,
        sum_rate: f64,
        es_rate: Option<f64>,
    },
    Infeasible,
}

pub fn run_sumrate(config: &Config) -> Result<PathBuf, CliError> {
    let csv = build_sumrate_csv(config)?;
    write_report(&config.sweep.output_path, &csv)?;
    Ok(config.sweep.output_path.clone())
}

/// One `draw` row per channel realization (blank metrics mark draws whose
/// rate targets no allocation can meet), then a `summary` row per
/// (grid value, mode) with means over the feasible draws and the
/// infeasible-draw count. `sweep.trials` is the number of channel draws.
pub fn build_sumrate_csv(config: &Config) -> Result<String, CliError> {
    let sweep = &config.sweep;
    let modes: Vec<DuplexMode> = sweep
        .modes
        .iter()
        .copied()
        .filter(|&mode| mode != DuplexMode::OmaTdma)
        .collect();
    if modes.is_empty() {
        return Err(CliError::Config(
            "sumrate optimizes the NOMA power split, which oma-tdma does not use; \
             include fd or hd in the modes"
                .into(),
        ));
    }
    if modes.len() != sweep.modes.len() {
        eprintln!("note: skipping oma-tdma (no NOMA power split to optimize)");
    }
    let settings = &config.optimizer;
    let mut csv = String::from(
        "swept_value,mode,record,draw,iterations,converged,sum_rate,es_sum_rate,\
         infeasible_draws,seed\n",
    );
    for &value in &sweep.grid {
        let params = sweep.swept_parameter.apply(&config.params, value)?;
        for &mode in &modes {
            let outcomes: Vec<Result<DrawOutcome, CliError>> = (0..sweep.trials)
                .into_par_iter()
                .map(|draw| run_one_draw(&params, mode, settings, sweep.seed, draw))
                .collect();

            let mut rates = Vec::new();
            let mut es_rates = Vec::new();
            let mut infeasible = 0u64;
            for (draw, outcome) in outcomes.into_iter().enumerate() {
                match outcome? {
                    DrawOutcome::Feasible {
                        iterations,
                        converged,
                        sum_rate,
                        es_rate,
                    } => {
                        rates.push(sum_rate);
                        if let Some(rate) = es_rate {
                            es_rates.push(rate);
                        }
                        writeln!(
                            csv,
                            "{},{},draw,{},{},{},{},{},,{}",
                            fmt9(value),
                            mode.name(),
                            draw,
                            iterations,
                            converged,
                            fmt9(sum_rate),
                            es_rate.map(fmt9).unwrap_or_default(),
                            sweep.seed
                        )
                        .expect("writing to a string cannot fail");
                    }
                    DrawOutcome::Infeasible => {
                        infeasible += 1;
                        writeln!(
                            csv,
                            "{},{},draw,{},,,,,,{}",
                            fmt9(value),
                            mode.name(),
                            draw,
                            sweep.seed
                        )
                        .expect("writing to a string cannot fail");
                    }
                }
            }
            let mean = |values: &[f64]| -> String {
                if values.is_empty() {
                    String::new()
                } else {
                    fmt9(values.iter().sum::<f64>() / values.len() as f64)
                }
            };
            writeln!(
                csv,
                "{},{},summary,,,,{},{},{},{}",
                fmt9(value),
                mode.name(),
                mean(&rates),
                mean(&es_rates),
                infeasible,
                sweep.seed
            )
            .expect("writing to a string cannot fail");
        }
    }
    Ok(csv)
}

fn run_one_draw(
    params: &SystemParams,
    mode: DuplexMode,
    settings: &crate::config::OptimizerSettings,
    seed: u64,
    draw: u64,
) -> Result<DrawOutcome, CliError> {
    let mut rng = trial_rng(seed, draw);
    let real = sample_realization(params, &mut rng);
    let trace = match sca_optimize(&real, params, mode, settings.eps, settings.max_iter) {
        Ok(trace) => trace,
        Err(OptimError::Infeasible) => return Ok(DrawOutcome::Infeasible),
        Err(error @ OptimError::SolverFailure { .. }) => {
            return Err(CliError::Solver(format!("draw {draw}: {error}")))
        }
        Err(error) => return Err(CliError::Config(error.to_string())),
    };
    let sum_rate = achievable_sum_rate(&trace.final_point().alpha, &real, params, mode)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let es_rate = match settings.es_grid {
        Some(step) => match exhaustive_search(&real, params, mode, step) {
            Ok((_, rate)) => Some(rate),
            // The coarse grid can miss a thin feasible region the
            // continuous solver reaches; leave the oracle cell blank.
            Err(OptimError::NoFeasibleGridPoint) => None,
            Err(OptimError::InvalidGrid { step }) => {
                return Err(CliError::Config(format!(
                    "es_grid step {step} must divide 1 exactly"
                )))
            }
            Err(error) => return Err(CliError::Solver(error.to_string())),
        },
        None => None,
    };
    Ok(DrawOutcome::Feasible {
        iterations: trace.iterations,
        converged: trace.converged,
        sum_rate,
        es_rate,
    })
}

pub fn run_validate(
    config: &Config,
    corrupt_tables: Option<f64>,
) -> Result<(PathBuf, usize), CliError> {
    let (report, exceeded) = build_validate_report(config, corrupt_tables)?;
    write_report(&config.sweep.output_path, &report)?;
    Ok((config.sweep.output_path.clone(), exceeded))
}

/// Monte Carlo vs closed form per (grid value, mode, node) with the gap
/// tolerance max(0.02, 0.10·MC). Modes or gain configurations without a
/// closed form get `unsupported` rows, which never count as exceedances.
/// `corrupt_tables` multiplies the internal coefficient tables as a
/// negative control: the report must then flag exceedances.
pub fn build_validate_report(
    config: &Config,
    corrupt_tables: Option<f64>,
) -> Result<(String, usize), CliError> {
    let sweep = &config.sweep;
    let mut csv = String::from(
        "swept_value,mode,node,mc_probability,analytic_probability,abs_gap,rel_gap,\
         tolerance,status\n",
    );
    let mut exceeded = 0usize;
    for &value in &sweep.grid {
        let params = sweep.swept_parameter.apply(&config.params, value)?;
        for &mode in &sweep.modes {
            let estimate = estimate_outage(&params, mode, sweep.trials, sweep.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if !analytic_supported(&params, mode) {
                for node in 0..=params.n_srs {
                    writeln!(
                        csv,
                        "{},{},{},{},,,,,unsupported",
                        fmt9(value),
                        mode.name(),
                        node_label(node),
                        fmt9(estimate.probability[node])
                    )
                    .expect("writing to a string cannot fail");
                }
                continue;
            }
            let mut model = OutageModel::for_params(&params);
            if let Some(factor) = corrupt_tables {
                model.corrupt_tables(factor);
            }
            let analytic = closed_form_with_model(&model, &params, mode)?;
            for node in 0..=params.n_srs {
                let mc = estimate.probability[node];
                let closed = analytic[node];
                let abs_gap = (closed - mc).abs();
                let tolerance = 0.02f64.max(0.10 * mc);
                let rel_cell = if mc > 0.0 {
                    fmt9(abs_gap / mc)
                } else {
                    String::new()
                };
                let ok = abs_gap <= tolerance;
                if !ok {
                    exceeded += 1;
                }
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    fmt9(value),
                    mode.name(),
                    node_label(node),
                    fmt9(mc),
                    fmt9(closed),
                    fmt9(abs_gap),
                    rel_cell,
                    fmt9(tolerance),
                    if ok { "ok" } else { "exceeded" }
                )
                .expect("writing to a string cannot fail");
            }
        }
    }
    Ok((csv, exceeded))
}

/// Fast numeric health checks: each prints one line; any failure turns the
/// exit status into a validation failure.
pub fn run_selftest() -> Result<(), CliError> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("selftest {name}: {} ({detail})", if ok { "ok" } else { "FAIL" });
        all_ok &= ok;
    };

    // Coefficient tables of the truncated-exponential-series powers against
    // the rational polynomial-expansion oracle, exactly.
    let mut tables_ok = true;
    for power in 0..=3usize {
        for n_antennas in 1..=5usize {
            tables_ok &=
                c_coefficients_exact(power, n_antennas) == series_power_coefficients(power, n_antennas);
        }
    }
    check(
        "coefficient-tables",
        tables_ok,
        "exact rational match for powers ≤ 3, antennas ≤ 5".into(),
    );

    // Integer-parameter upper incomplete gamma against adaptive quadrature.
    let mut gamma_rel: f64 = 0.0;
    for j in 0..=5usize {
        for x in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let closed = upper_incomplete_gamma_int::<f64>(j, x)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            let quadrature = upper_incomplete_gamma_quadrature(j, x);
            gamma_rel = gamma_rel.max((closed - quadrature).abs() / quadrature);
        }
    }
    check(
        "incomplete-gamma",
        gamma_rel <= 1e-12,
        format!("worst relative gap {gamma_rel:.2e} against quadrature"),
    );

    // Order-statistic CDF against sorted empirical draws (deterministic
    // streams, so the statistic is a fixed number).
    let mut worst_ks: f64 = 0.0;
    let lambda = 50.0;
    for rank in 1..=3usize {
        let mut rng = trial_rng(777, rank as u64);
        let mut samples: Vec<f64> = (0..200_000)
            .map(|_| {
                let mut triple = [
                    sample_exponential(lambda, &mut rng),
                    sample_exponential(lambda, &mut rng),
                    sample_exponential(lambda, &mut rng),
                ];
                triple.sort_by(|a, b| a.partial_cmp(b).unwrap());
                triple[rank - 1]
            })
            .collect();
        let ks = ks_statistic_against_cdf(&mut samples, &|x| {
            ordered_gain_cdf(x, rank, 3, lambda).unwrap()
        });
        worst_ks = worst_ks.max(ks);
    }
    check(
        "order-statistics",
        worst_ks < 6e-3,
        format!("worst KS distance {worst_ks:.2e} over ranks 1–3"),
    );

    // Each message's weakest decode SINR must sit at its own receiver.
    let params = SystemParams::default();
    let nodes = params.n_srs + 1;
    let mut violations = 0u32;
    for trial in 0..2_000u64 {
        let mut rng = trial_rng(31, trial);
        let real = sample_realization(&params, &mut rng);
        let mut raw: Vec<f64> = (0..nodes)
            .map(|_| sample_exponential(1.0, &mut rng))
            .collect();
        raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = raw.iter().sum();
        let alpha =
            PowerAllocation::new(raw.iter().map(|v| v / total * (1.0 - 1e-9)).collect())
                .map_err(|e| CliError::Solver(e.to_string()))?;
        let scale = params.effective_rho(DuplexMode::Fd) * params.gamma_bar() * real.best_gain();
        for message in 0..nodes {
            let own = noma_sinr(&alpha, scale * real.gain(message), message);
            for receiver in message..nodes {
                if noma_sinr(&alpha, scale * real.gain(receiver), message) < own {
                    violations += 1;
                }
            }
        }
    }
    check(
        "decode-bottleneck",
        violations == 0,
        format!("{violations} violations over 2000 draws"),
    );

    // Same seed, same counts: the estimator is reproducible.
    let mut snapshot = SystemParams::default();
    snapshot.snr_db = -9.0;
    let first = estimate_outage(&snapshot, DuplexMode::Fd, 20_000, 7)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let second = estimate_outage(&snapshot, DuplexMode::Fd, 20_000, 7)
        .map_err(|e| CliError::Config(e.to_string()))?;
    check(
        "determinism",
        first.failures == second.failures,
        format!("failure counts {:?} reproduced", first.failures),
    );

    // The embedded defaults parse, validate, and survive a round trip.
    let config = Config::load(None)?;
    let round_trip: SystemParams = SystemParams::from_json(&config.params.to_json())
        .map_err(CliError::Config)?;
    check(
        "config-round-trip",
        round_trip == config.params,
        "embedded defaults re-parse to identical parameters".into(),
    );

    if all_ok {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(CliError::Validation("self-test checks failed".into()))
    }
}
