//! Closed-form outage probabilities and throughput.
//!
//! The relay decodes the primary message through a link whose gain is the
//! best of K Gamma(N, λ_ps) candidates; each receiver then needs a
//! composite gain g·g_node above a per-message threshold. Node outage splits
//! into two pieces:
//!
//! * the relay-decode failure, an exact CDF evaluation of the best gain, and
//! * a tail term for "relay decoded but the composite gain fell short",
//!   evaluated through upper incomplete gamma functions after expanding the
//!   receiver-gain order-statistics CDF and linearizing e^(−a/x) ≈ 1 − a/x
//!   for large x.
//!
//! The linearization can push a probability slightly outside [0, 1] at
//! extreme parameters; results are clamped and flagged instead of silently
//! trusted. The expansion is an order-statistics identity over i.i.d.
//! receiver gains, so the closed form only applies when `lambda_sp` equals
//! `lambda_sr`, and only to the FD and HD modes (the OMA benchmark is
//! simulation-only).

use thiserror::Error;

use crate::params::{DuplexMode, ParamsError, SystemParams};
use crate::scalar::Real;
use crate::special::{
    binomial, c_coefficients, compensated_sum, upper_incomplete_gamma_int, CoefficientTable,
    MathDomainError,
};

/// Why a closed-form evaluation is unavailable or failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("closed-form outage supports fd and hd only, not {mode}")]
    UnsupportedMode { mode: DuplexMode },
    #[error(
        "closed-form outage needs identical receiver gain means, got lambda_sp={lambda_sp} lambda_sr={lambda_sr}"
    )]
    MixedGainMeans { lambda_sp: f64, lambda_sr: f64 },
    #[error("secondary receiver index {m} outside 1..={n_srs}")]
    NodeIndex { m: usize, n_srs: usize },
    #[error("cdf argument {value} must be nonnegative")]
    NegativeArgument { value: f64 },
    #[error("order statistic rank {q} outside 1..={big_q}")]
    RankOutOfRange { q: usize, big_q: usize },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Math(#[from] MathDomainError),
}

/// Distribution of the selected relay's uplink gain: the maximum of K
/// independent Gamma(N, λ) variates.
#[derive(Debug, Clone)]
pub struct BestChannelDist<T> {
    n_candidates: usize,
    lambda: T,
    /// Table `l` holds the coefficients of (Σ_{n<N} uⁿ/n!)^l.
    tables: Vec<CoefficientTable<T>>,
}

impl<T: Real> BestChannelDist<T> {
    pub fn new(n_candidates: usize, n_antennas: usize, lambda: T) -> Self {
        assert!(n_candidates >= 1, "need at least one relay candidate");
        assert!(n_antennas >= 1, "need at least one antenna element");
        assert!(lambda > T::zero(), "gain mean must be positive");
        let tables = (0..=n_candidates)
            .map(|l| c_coefficients(l, n_antennas))
            .collect();
        Self {
            n_candidates,
            lambda,
            tables,
        }
    }

    pub fn n_candidates(&self) -> usize {
        self.n_candidates
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// CDF at x: Σ_l (K choose l)(−1)^l e^(−l·u) Σ_j C_j u^j with u = x/λ.
    pub fn cdf(&self, x: T) -> Result<T, AnalyticError> {
        if !(x >= T::zero()) {
            return Err(AnalyticError::NegativeArgument {
                value: x.to_f64_lossy(),
            });
        }
        let u = x / self.lambda;
        let mut terms = Vec::with_capacity(self.n_candidates + 1);
        for (l, table) in self.tables.iter().enumerate() {
            let sign = if l % 2 == 0 { T::one() } else { -T::one() };
            let weight = binomial::<T>(self.n_candidates, l);
            let term = sign * weight * (-u * T::of_usize(l)).exp() * table.polynomial(u);
            terms.push(term);
        }
        Ok(compensated_sum(&mut terms))
    }

    /// Density at x, the derivative of [`BestChannelDist::cdf`].
    pub fn pdf(&self, x: T) -> Result<T, AnalyticError> {
        if !(x >= T::zero()) {
            return Err(AnalyticError::NegativeArgument {
                value: x.to_f64_lossy(),
            });
        }
        let u = x / self.lambda;
        let mut terms = Vec::with_capacity(self.n_candidates);
        for (l, table) in self.tables.iter().enumerate().skip(1) {
            let sign = if l % 2 == 0 { T::one() } else { -T::one() };
            let weight = binomial::<T>(self.n_candidates, l);
            let inner = table.polynomial_derivative_form(u, T::of_usize(l));
            terms.push(sign * weight * (-u * T::of_usize(l)).exp() * inner / self.lambda);
        }
        Ok(compensated_sum(&mut terms))
    }

    #[doc(hidden)]
    pub fn corrupt_tables(&mut self, factor: T) {
        for table in self.tables.iter_mut().skip(1) {
            table.scale_high_degrees(factor);
        }
    }
}

/// CDF of the q-th smallest of `big_q` i.i.d. exponential gains of mean
/// `lambda`, by the double binomial expansion of the order-statistics
/// integral.
pub fn ordered_gain_cdf<T: Real>(
    x: T,
    q: usize,
    big_q: usize,
    lambda: T,
) -> Result<T, AnalyticError> {
    if q == 0 || q > big_q {
        return Err(AnalyticError::RankOutOfRange { q, big_q });
    }
    if !(x >= T::zero()) {
        return Err(AnalyticError::NegativeArgument {
            value: x.to_f64_lossy(),
        });
    }
    let iota = T::of_usize(q) * binomial::<T>(big_q, q);
    let u = x / lambda;
    let mut terms = Vec::new();
    for c in 0..=(big_q - q) {
        let outer_sign = if c % 2 == 0 { T::one() } else { -T::one() };
        let outer = outer_sign * binomial::<T>(big_q - q, c) / T::of_usize(q + c);
        for n in 0..=(q + c) {
            let inner_sign = if n % 2 == 0 { T::one() } else { -T::one() };
            let term =
                iota * outer * inner_sign * binomial::<T>(q + c, n) * (-u * T::of_usize(n)).exp();
            terms.push(term);
        }
    }
    Ok(compensated_sum(&mut terms))
}

/// Mode-resolved scalars feeding the closed-form expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageInputs<T> {
    /// Per-message decode SINR thresholds under the mode's prelog.
    pub gamma_th: Vec<T>,
    /// Relay-decode gain threshold scale: decoding fails iff g < mu/γ̄.
    /// Infinite when the self-interference floor sits below the threshold.
    pub mu: T,
    /// Composite-gain threshold Θ_m per message: receiver decoding of
    /// message m fails iff g·g_node < Θ_m/γ̄. Infinite when the allocation
    /// cannot reach the target at any SNR.
    pub theta: Vec<T>,
    /// Relay transmit-power coefficient for the mode.
    pub rho: T,
}

impl<T: Real> OutageInputs<T> {
    /// Resolves thresholds for FD or HD. HD trades the self-interference
    /// floor and recycling gain for a halved prelog, i.e. squared SINR
    /// thresholds.
    pub fn for_mode(params: &SystemParams<T>, mode: DuplexMode) -> Result<Self, AnalyticError> {
        params.validate()?;
        let inverse_prelog = match mode {
            DuplexMode::Fd => T::one(),
            DuplexMode::Hd => T::of(2.0),
            DuplexMode::OmaTdma => return Err(AnalyticError::UnsupportedMode { mode }),
        };
        let rho = params.effective_rho(mode);
        let gamma_th: Vec<T> = params
            .target_rates
            .iter()
            .map(|&r| T::of(2.0).powf(r * inverse_prelog) - T::one())
            .collect();

        let i_si_seen = match mode {
            DuplexMode::Fd => params.i_si,
            _ => T::zero(),
        };
        let decode_margin = T::one() - gamma_th[0] * rho * i_si_seen;
        let mu = if decode_margin > T::zero() {
            gamma_th[0] / ((T::one() - params.beta) * decode_margin)
        } else {
            T::infinity()
        };

        let theta = (0..=params.n_srs)
            .map(|m| {
                let margin = params.alpha.get(m) - params.alpha.tail_sum(m) * gamma_th[m];
                if margin > T::zero() {
                    gamma_th[m] / (rho * margin)
                } else {
                    T::infinity()
                }
            })
            .collect();

        Ok(Self {
            gamma_th,
            mu,
            theta,
            rho,
        })
    }

    /// Largest composite threshold across the messages receiver `node`
    /// must strip (0 = primary receiver decoding only its own message).
    pub fn theta_through(&self, node: usize) -> T {
        self.theta[..=node]
            .iter()
            .fold(T::zero(), |acc, &t| acc.max(t))
    }
}

/// Closed-form probability with a flag recording that the raw value left
/// [0, 1] and was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageValue<T> {
    pub probability: T,
    pub clamped: bool,
}

impl<T: Real> OutageValue<T> {
    fn certain() -> Self {
        Self {
            probability: T::one(),
            clamped: false,
        }
    }

    fn from_raw(raw: T) -> Self {
        let clamped = raw < T::zero() || raw > T::one();
        Self {
            probability: raw.max(T::zero()).min(T::one()),
            clamped,
        }
    }
}

/// Closed-form throughput; `clamped` is inherited from any clamped outage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticThroughput<T> {
    pub primary: T,
    pub secondary: T,
    pub clamped: bool,
}

/// Closed-form outage evaluator with reusable coefficient tables.
///
/// The tables depend only on (K, N); one model serves a whole sweep over
/// SNR, β, rates, or allocations.
#[derive(Debug, Clone)]
pub struct OutageModel<T> {
    dist: BestChannelDist<T>,
    n_antennas: usize,
}

impl<T: Real> OutageModel<T> {
    pub fn new(n_sts: usize, n_antennas: usize, lambda_ps: T) -> Self {
        Self {
            dist: BestChannelDist::new(n_sts, n_antennas, lambda_ps),
            n_antennas,
        }
    }

    pub fn for_params(params: &SystemParams<T>) -> Self {
        Self::new(params.n_sts, params.n_antennas, params.lambda_ps)
    }

    /// Distribution of the selected relay gain this model evaluates with.
    pub fn best_channel(&self) -> &BestChannelDist<T> {
        &self.dist
    }

    /// Test hook: corrupts the internal coefficient tables so that
    /// validation reports must flag the mismatch against Monte Carlo.
    #[doc(hidden)]
    pub fn corrupt_tables(&mut self, factor: T) {
        self.dist.corrupt_tables(factor);
    }

    fn check_params(&self, params: &SystemParams<T>) -> Result<(), AnalyticError> {
        params.validate()?;
        if params.lambda_sp != params.lambda_sr {
            return Err(AnalyticError::MixedGainMeans {
                lambda_sp: params.lambda_sp.to_f64_lossy(),
                lambda_sr: params.lambda_sr.to_f64_lossy(),
            });
        }
        assert_eq!(
            params.n_sts,
            self.dist.n_candidates(),
            "model built for a different relay count"
        );
        assert_eq!(
            params.n_antennas, self.n_antennas,
            "model built for a different antenna count"
        );
        Ok(())
    }

    /// Outage probability of the primary receiver.
    pub fn primary(
        &self,
        params: &SystemParams<T>,
        mode: DuplexMode,
    ) -> Result<OutageValue<T>, AnalyticError> {
        self.check_params(params)?;
        let inputs = OutageInputs::for_mode(params, mode)?;
        self.node_outage(params, &inputs, 0)
    }

    /// Outage probability of secondary receiver `m` (1-based).
    pub fn secondary(
        &self,
        params: &SystemParams<T>,
        mode: DuplexMode,
        m: usize,
    ) -> Result<OutageValue<T>, AnalyticError> {
        if m == 0 || m > params.n_srs {
            return Err(AnalyticError::NodeIndex {
                m,
                n_srs: params.n_srs,
            });
        }
        self.check_params(params)?;
        let inputs = OutageInputs::for_mode(params, mode)?;
        self.node_outage(params, &inputs, m)
    }

    /// Outage of receiver `node` (0 = primary): relay-decode failure plus
    /// the composite-gain tail term at the node's order-statistic rank.
    fn node_outage(
        &self,
        params: &SystemParams<T>,
        inputs: &OutageInputs<T>,
        node: usize,
    ) -> Result<OutageValue<T>, AnalyticError> {
        let theta = inputs.theta_through(node);
        if !inputs.mu.is_finite() || !theta.is_finite() {
            return Ok(OutageValue::certain());
        }
        let gamma_bar = params.gamma_bar();
        let phi1 = self.dist.cdf(inputs.mu / gamma_bar)?;
        let lambda_node = if node == 0 {
            params.lambda_sp
        } else {
            params.lambda_sr
        };
        let phi2 = self.tail_term(
            node + 1,
            params.n_srs + 1,
            theta,
            inputs.mu,
            gamma_bar,
            lambda_node,
        )?;
        Ok(OutageValue::from_raw(phi1 + phi2))
    }

    /// Tail term: probability that the relay decoded (g ≥ mu/γ̄) yet the
    /// composite gain g·g_node stayed below Θ/γ̄, for the receiver holding
    /// the q-th smallest gain of big_q. Expands the order-statistics CDF,
    /// linearizes e^(−a/x), and integrates against the best-gain density,
    /// which turns every term into upper incomplete gamma values.
    fn tail_term(
        &self,
        q: usize,
        big_q: usize,
        theta: T,
        mu: T,
        gamma_bar: T,
        lambda_node: T,
    ) -> Result<T, AnalyticError> {
        let lambda_ps = self.dist.lambda();
        let iota = T::of_usize(q) * binomial::<T>(big_q, q);
        let a_base = mu / (lambda_ps * gamma_bar);
        let theta_scale = theta / (lambda_node * lambda_ps * gamma_bar);
        let k = self.dist.n_candidates();

        let mut terms = Vec::new();
        for l in 1..=k {
            let table = &self.dist.tables[l];
            let a = a_base * T::of_usize(l);
            let max_degree = table.max_degree();
            // Γ(j, a) for j = 0..=max_degree+1, shared across (c, n).
            let mut gammas = Vec::with_capacity(max_degree + 2);
            for j in 0..=max_degree + 1 {
                gammas.push(upper_incomplete_gamma_int(j, a)?);
            }
            let sign_l = if l % 2 == 0 { T::one() } else { -T::one() };
            let weight_l = sign_l * binomial::<T>(k, l);

            for c in 0..=(big_q - q) {
                let sign_c = if c % 2 == 0 { T::one() } else { -T::one() };
                let weight_c = sign_c * binomial::<T>(big_q - q, c) / T::of_usize(q + c);
                for n in 0..=(q + c) {
                    let sign_n = if n % 2 == 0 { T::one() } else { -T::one() };
                    let weight = iota * weight_l * weight_c * sign_n * binomial::<T>(q + c, n);
                    let shift = theta_scale * T::of_usize(n) * T::of_usize(l);
                    let mut power_l = T::one();
                    for (j, &cj) in table.values().iter().enumerate() {
                        // (j + nΘl/(λλγ̄))Γ(j,a) − Γ(j+1,a) − nΘl j/(λλγ̄)·Γ(j−1,a)
                        let jf = T::of_usize(j);
                        let mut bracket = (jf + shift) * gammas[j] - gammas[j + 1];
                        if j > 0 {
                            bracket -= shift * jf * gammas[j - 1];
                        }
                        terms.push(weight * cj / power_l * bracket);
                        power_l *= T::of_usize(l);
                    }
                }
            }
        }
        Ok(compensated_sum(&mut terms))
    }

    /// Closed-form throughput: each target rate weighted by its success
    /// probability.
    pub fn throughput(
        &self,
        params: &SystemParams<T>,
        mode: DuplexMode,
    ) -> Result<AnalyticThroughput<T>, AnalyticError> {
        let primary_outage = self.primary(params, mode)?;
        let mut clamped = primary_outage.clamped;
        let primary = (T::one() - primary_outage.probability) * params.target_rates[0];
        let mut secondary = T::zero();
        for m in 1..=params.n_srs {
            let outage = self.secondary(params, mode, m)?;
            clamped = clamped || outage.clamped;
            secondary += (T::one() - outage.probability) * params.target_rates[m];
        }
        Ok(AnalyticThroughput {
            primary,
            secondary,
            clamped,
        })
    }
}

/// CDF of the best relay gain; convenience wrapper building the tables.
pub fn best_channel_cdf<T: Real>(
    x: T,
    n_sts: usize,
    n_antennas: usize,
    lambda_ps: T,
) -> Result<T, AnalyticError> {
    BestChannelDist::new(n_sts, n_antennas, lambda_ps).cdf(x)
}

/// Density of the best relay gain; convenience wrapper.
pub fn best_channel_pdf<T: Real>(
    x: T,
    n_sts: usize,
    n_antennas: usize,
    lambda_ps: T,
) -> Result<T, AnalyticError> {
    BestChannelDist::new(n_sts, n_antennas, lambda_ps).pdf(x)
}

/// Primary-receiver outage; convenience wrapper over [`OutageModel`].
pub fn outage_primary_analytic<T: Real>(
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> Result<OutageValue<T>, AnalyticError> {
    OutageModel::for_params(params).primary(params, mode)
}

/// Secondary-receiver outage; convenience wrapper over [`OutageModel`].
pub fn outage_secondary_analytic<T: Real>(
    params: &SystemParams<T>,
    mode: DuplexMode,
    m: usize,
) -> Result<OutageValue<T>, AnalyticError> {
    OutageModel::for_params(params).secondary(params, mode, m)
}

/// Closed-form throughput; convenience wrapper over [`OutageModel`].
pub fn throughput_analytic<T: Real>(
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> Result<AnalyticThroughput<T>, AnalyticError> {
    OutageModel::for_params(params).throughput(params, mode)
}
