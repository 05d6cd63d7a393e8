//! Model parameters, NOMA power allocations, and the duplex-mode taxonomy.
//!
//! A [`SystemParams`] value collects every scalar of the network model: the
//! primary transmitter runs `n_antennas` antennas and picks the best of
//! `n_sts` candidate relays; the relay serves one primary receiver plus
//! `n_srs` secondary receivers with NOMA coefficients [`PowerAllocation`].
//! Channel gain means are `lambda_ps` (per antenna element, PT side),
//! `lambda_sp` (relay to primary receiver), and `lambda_sr` (relay to
//! secondary receivers). `beta`, `eta`, `xi`, `psi` describe the
//! power-splitting harvester; `i_si` is the residual self-interference gain
//! of the full-duplex relay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Relative slack tolerated on the power-allocation simplex sum.
pub const SIMPLEX_SLACK: f64 = 1e-9;

/// Validation failure for parameters or allocations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{name} must be a positive integer")]
    NonPositiveCount { name: &'static str },
    #[error("{name} = {value} outside its valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("harvest loop gain eta*beta*xi*psi*i_si = {value} must stay below 1")]
    HarvestLoopGain { value: f64 },
    #[error("expected {expected} entries ({context}), got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("allocation coefficients must be nonincreasing: alpha[{index}] < alpha[{}]", index + 1)]
    NotOrdered { index: usize },
    #[error("allocation coefficient alpha[{index}] = {value} outside [0, 1]")]
    CoefficientRange { index: usize, value: f64 },
    #[error("allocation coefficients sum to {sum} > 1")]
    SimplexViolated { sum: f64 },
}

/// Duplexing scheme of the relay link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DuplexMode {
    /// Full duplex: relay receives and forwards simultaneously, suffering
    /// residual self-interference but recycling part of its own transmission
    /// into the harvester.
    #[serde(rename = "fd")]
    Fd,
    /// Half duplex: equal-length receive and forward phases, no
    /// self-interference, no self-energy recycling.
    #[serde(rename = "hd")]
    Hd,
    /// Orthogonal benchmark: a `kappa` fraction of the block carries the
    /// uplink, the rest is split evenly into one downlink slot per receiver.
    #[serde(rename = "oma")]
    OmaTdma,
}

impl DuplexMode {
    /// All modes, in the order used by sweeps and reports.
    pub const ALL: [DuplexMode; 3] = [DuplexMode::Fd, DuplexMode::Hd, DuplexMode::OmaTdma];

    /// Stable lowercase name used in CSV output and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            DuplexMode::Fd => "fd",
            DuplexMode::Hd => "hd",
            DuplexMode::OmaTdma => "oma",
        }
    }
}

impl std::fmt::Display for DuplexMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DuplexMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fd" => Ok(DuplexMode::Fd),
            "hd" => Ok(DuplexMode::Hd),
            "oma" | "oma-tdma" | "oma_tdma" => Ok(DuplexMode::OmaTdma),
            other => Err(format!("unknown duplex mode `{other}` (expected fd|hd|oma)")),
        }
    }
}

/// NOMA power-allocation coefficients α₀ ≥ α₁ ≥ … ≥ α_M with Σ αᵢ ≤ 1.
///
/// The first coefficient weights the primary message; construction rejects
/// unordered or over-unit allocations, so a value of this type is always a
/// valid fairness-ordered point of the allocation simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<T>",
    into = "Vec<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct PowerAllocation<T> {
    coefficients: Vec<T>,
}

impl<T: Real> PowerAllocation<T> {
    /// Validates ordering, range, and the simplex constraint.
    pub fn new(coefficients: Vec<T>) -> Result<Self, ParamsError> {
        if coefficients.is_empty() {
            return Err(ParamsError::LengthMismatch {
                context: "allocation needs at least the primary coefficient",
                expected: 1,
                actual: 0,
            });
        }
        let mut sum = T::zero();
        for (i, &a) in coefficients.iter().enumerate() {
            if !(a >= T::zero() && a <= T::one()) {
                return Err(ParamsError::CoefficientRange {
                    index: i,
                    value: a.to_f64_lossy(),
                });
            }
            if i + 1 < coefficients.len() && coefficients[i + 1] > a {
                return Err(ParamsError::NotOrdered { index: i });
            }
            sum += a;
        }
        if sum > T::one() + T::of(SIMPLEX_SLACK) {
            return Err(ParamsError::SimplexViolated {
                sum: sum.to_f64_lossy(),
            });
        }
        Ok(Self { coefficients })
    }

    /// Number of coefficients, M+1.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coefficients
    }

    /// Coefficient for message `i` (0 is the primary message).
    pub fn get(&self, i: usize) -> T {
        self.coefficients[i]
    }

    /// Σ_{i > m} αᵢ, the interference weight seen while decoding message `m`.
    pub fn tail_sum(&self, m: usize) -> T {
        self.coefficients[m + 1..]
            .iter()
            .fold(T::zero(), |acc, &a| acc + a)
    }
}

impl<T: Real> TryFrom<Vec<T>> for PowerAllocation<T> {
    type Error = ParamsError;

    fn try_from(coefficients: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(coefficients)
    }
}

impl<T> From<PowerAllocation<T>> for Vec<T> {
    fn from(alloc: PowerAllocation<T>) -> Self {
        alloc.coefficients
    }
}

/// Every scalar of the model. Field names double as the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct SystemParams<T> {
    /// N, transmit antennas at the primary transmitter.
    pub n_antennas: usize,
    /// K, candidate secondary transmitters for relay selection.
    pub n_sts: usize,
    /// M, secondary receivers.
    pub n_srs: usize,
    /// Per-element mean of each PT→ST channel gain.
    pub lambda_ps: T,
    /// Mean of the relay→primary-receiver channel gain.
    pub lambda_sp: T,
    /// Mean of each relay→secondary-receiver channel gain.
    pub lambda_sr: T,
    /// Power-splitting ratio routed into the harvester.
    pub beta: T,
    /// Energy conversion efficiency.
    pub eta: T,
    /// Amplifier power fraction.
    pub xi: T,
    /// Energy utilization efficiency.
    pub psi: T,
    /// Residual self-interference gain of the full-duplex relay.
    pub i_si: T,
    /// Transmit SNR in dB; linear value via [`SystemParams::gamma_bar`].
    pub snr_db: T,
    /// Rate targets R̄₀…R̄_M in bps/Hz (primary first).
    pub target_rates: Vec<T>,
    /// Fixed NOMA coefficients used by analysis and simulation.
    pub alpha: PowerAllocation<T>,
    /// OMA-TDMA uplink time fraction.
    pub kappa: T,
    /// Sensitivity knob: let the HD/OMA harvester recycle self-interference
    /// power as the FD one does. Off by default because recycling requires
    /// simultaneous transmit and receive.
    #[serde(default)]
    pub hd_self_recycling: bool,
    /// Sensitivity knob: divide the relay transmit power by M+1 in OMA-TDMA
    /// instead of sustaining full harvested power in every slot.
    #[serde(default)]
    pub oma_split_power: bool,
    /// Sensitivity knob: scale the OMA-TDMA relay power by κ/(1−κ), i.e.
    /// conserve the energy harvested over the listening fraction instead of
    /// reusing the FD/HD instantaneous-power coefficient. A no-op at κ=1/2.
    #[serde(default)]
    pub oma_duty_cycle_harvest: bool,
}

impl<T: Real> Default for SystemParams<T> {
    /// Reference configuration: M=2 receivers, K=3 relays with N=5 antennas,
    /// gain means (5, 50, 50), β=0.8, η=ψ=0.75, ξ=1, I_SI=10^(−0.05),
    /// half-bps/Hz targets, α=(0.6, 0.3, 0.1), κ=1/2.
    fn default() -> Self {
        Self {
            n_antennas: 5,
            n_sts: 3,
            n_srs: 2,
            lambda_ps: T::of(5.0),
            lambda_sp: T::of(50.0),
            lambda_sr: T::of(50.0),
            beta: T::of(0.8),
            eta: T::of(0.75),
            xi: T::of(1.0),
            psi: T::of(0.75),
            i_si: T::of(10.0f64.powf(-0.05)),
            snr_db: T::of(0.0),
            target_rates: vec![T::of(0.5); 3],
            alpha: PowerAllocation::new(vec![T::of(0.6), T::of(0.3), T::of(0.1)])
                .expect("reference allocation is valid"),
            kappa: T::of(0.5),
            hd_self_recycling: false,
            oma_split_power: false,
            oma_duty_cycle_harvest: false,
        }
    }
}

impl<T: Real> SystemParams<T> {
    /// Checks every range and cross-field invariant.
    pub fn validate(&self) -> Result<(), ParamsError> {
        fn check<T: Real>(
            name: &'static str,
            value: T,
            range: &'static str,
            ok: bool,
        ) -> Result<(), ParamsError> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::OutOfRange {
                    name,
                    value: value.to_f64_lossy(),
                    range,
                })
            }
        }

        if self.n_antennas == 0 {
            return Err(ParamsError::NonPositiveCount { name: "n_antennas" });
        }
        if self.n_sts == 0 {
            return Err(ParamsError::NonPositiveCount { name: "n_sts" });
        }
        if self.n_srs == 0 {
            return Err(ParamsError::NonPositiveCount { name: "n_srs" });
        }
        check("lambda_ps", self.lambda_ps, "(0, inf)", self.lambda_ps > T::zero())?;
        check("lambda_sp", self.lambda_sp, "(0, inf)", self.lambda_sp > T::zero())?;
        check("lambda_sr", self.lambda_sr, "(0, inf)", self.lambda_sr > T::zero())?;
        check(
            "beta",
            self.beta,
            "(0, 1)",
            self.beta > T::zero() && self.beta < T::one(),
        )?;
        check(
            "eta",
            self.eta,
            "(0, 1]",
            self.eta > T::zero() && self.eta <= T::one(),
        )?;
        check(
            "xi",
            self.xi,
            "[0, 1]",
            self.xi >= T::zero() && self.xi <= T::one(),
        )?;
        check(
            "psi",
            self.psi,
            "(0, 1)",
            self.psi > T::zero() && self.psi < T::one(),
        )?;
        check("i_si", self.i_si, "[0, inf)", self.i_si >= T::zero())?;
        check(
            "kappa",
            self.kappa,
            "(0, 1)",
            self.kappa > T::zero() && self.kappa < T::one(),
        )?;
        check("snr_db", self.snr_db, "finite", true)?;

        let loop_gain = self.harvest_product() * self.i_si;
        if !(loop_gain < T::one()) {
            return Err(ParamsError::HarvestLoopGain {
                value: loop_gain.to_f64_lossy(),
            });
        }

        let expected = self.n_srs + 1;
        if self.target_rates.len() != expected {
            return Err(ParamsError::LengthMismatch {
                context: "target_rates must cover the primary and every secondary receiver",
                expected,
                actual: self.target_rates.len(),
            });
        }
        for &r in &self.target_rates {
            check("target_rates[..]", r, "(0, inf)", r > T::zero())?;
        }
        if self.alpha.len() != expected {
            return Err(ParamsError::LengthMismatch {
                context: "alpha must cover the primary and every secondary message",
                expected,
                actual: self.alpha.len(),
            });
        }
        Ok(())
    }

    /// Linear transmit SNR γ̄ = 10^(snr_db/10).
    pub fn gamma_bar(&self) -> T {
        T::of(10.0).powf(self.snr_db / T::of(10.0))
    }

    /// ηβξψ, the fraction of received power that survives the harvester.
    pub fn harvest_product(&self) -> T {
        self.eta * self.beta * self.xi * self.psi
    }

    /// Relay transmit-power coefficient ρ, so that the relay spends
    /// ρ·γ̄·best_gain. Full duplex closes the self-energy-recycling loop,
    /// which inflates ρ by 1/(1 − ηβξψ·i_si); half duplex and OMA harvest
    /// only while silent, unless [`SystemParams::hd_self_recycling`] is set.
    pub fn effective_rho(&self, mode: DuplexMode) -> T {
        let e = self.harvest_product();
        let recycling = match mode {
            DuplexMode::Fd => true,
            DuplexMode::Hd | DuplexMode::OmaTdma => self.hd_self_recycling,
        };
        if recycling {
            e / (T::one() - e * self.i_si)
        } else {
            e
        }
    }

    /// Serializes into the JSON config schema.
    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("parameters always serialize")
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self, String>
    where
        T: serde::de::DeserializeOwned,
    {
        let params: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configuration_is_valid() {
        let params: SystemParams<f64> = SystemParams::default();
        params.validate().unwrap();
    }

    #[test]
    fn effective_rho_reference_values() {
        let params: SystemParams<f64> = SystemParams::default();
        // 0.45 / (1 - 0.45 * 10^(-0.05)), evaluated independently.
        let e = 0.75 * 0.8 * 1.0 * 0.75;
        let expected_fd = e / (1.0 - e * 10.0f64.powf(-0.05));
        let rho_fd = params.effective_rho(DuplexMode::Fd);
        assert!((rho_fd - expected_fd).abs() < 1e-15);
        assert!((rho_fd - 0.75133).abs() < 1e-5);
        assert!((params.effective_rho(DuplexMode::Hd) - 0.45).abs() < 1e-15);
        assert!((params.effective_rho(DuplexMode::OmaTdma) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn effective_rho_collapses_without_self_interference() {
        let mut params: SystemParams<f64> = SystemParams::default();
        params.i_si = 0.0;
        assert_eq!(
            params.effective_rho(DuplexMode::Fd),
            params.harvest_product()
        );
    }

    #[test]
    fn effective_rho_recycling_override_applies_to_hd() {
        let mut params: SystemParams<f64> = SystemParams::default();
        params.hd_self_recycling = true;
        assert_eq!(
            params.effective_rho(DuplexMode::Hd),
            params.effective_rho(DuplexMode::Fd)
        );
    }

    #[test]
    fn harvest_loop_gain_must_stay_below_one() {
        let mut params: SystemParams<f64> = SystemParams::default();
        params.i_si = 1.0 / params.harvest_product();
        assert!(matches!(
            params.validate(),
            Err(ParamsError::HarvestLoopGain { .. })
        ));
    }

    #[test]
    fn allocation_rejects_unordered_coefficients() {
        assert!(matches!(
            PowerAllocation::new(vec![0.3, 0.6, 0.1]),
            Err(ParamsError::NotOrdered { index: 0 })
        ));
    }

    #[test]
    fn allocation_rejects_over_unit_sum() {
        assert!(matches!(
            PowerAllocation::new(vec![0.7, 0.4]),
            Err(ParamsError::SimplexViolated { .. })
        ));
    }

    #[test]
    fn allocation_accepts_boundary_cases() {
        PowerAllocation::new(vec![1.0, 0.0, 0.0]).unwrap();
        PowerAllocation::new(vec![0.6, 0.3, 0.1]).unwrap();
    }

    #[test]
    fn allocation_tail_sum_matches_manual_sum() {
        let alloc: PowerAllocation<f64> = PowerAllocation::new(vec![0.6, 0.3, 0.1]).unwrap();
        assert!((alloc.tail_sum(0) - 0.4).abs() < 1e-15);
        assert!((alloc.tail_sum(1) - 0.1).abs() < 1e-15);
        assert_eq!(alloc.tail_sum(2), 0.0);
    }

    #[test]
    fn json_round_trip_preserves_parameters() {
        let params: SystemParams<f64> = SystemParams::default();
        let text = params.to_json();
        let back = SystemParams::<f64>::from_json(&text).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn json_rejects_invalid_rates_length() {
        let mut params: SystemParams<f64> = SystemParams::default();
        params.target_rates.pop();
        let text = serde_json::to_string(&params).unwrap();
        assert!(SystemParams::<f64>::from_json(&text).is_err());
    }

    #[test]
    fn target_rate_count_of_one_receiver_network_is_two() {
        let mut params: SystemParams<f64> = SystemParams::default();
        params.n_srs = 1;
        params.target_rates = vec![0.5, 0.5];
        params.alpha = PowerAllocation::new(vec![0.7, 0.2]).unwrap();
        params.validate().unwrap();
    }
}
