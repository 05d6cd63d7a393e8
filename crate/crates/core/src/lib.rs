//! Simulation and optimization toolkit for an overlay spectrum-sharing network
//! in which a multi-antenna primary transmitter relays through the best of K
//! full-duplex secondary transmitters. The selected relay is wirelessly powered
//! (power-splitting SWIPT), forwards the primary message together with its own
//! NOMA-multiplexed messages, and serves one primary receiver plus M secondary
//! receivers whose channel gains are ordered worst-first.
//!
//! The crate is split into five areas:
//!
//! * [`params`]: system parameters, power allocations, duplexing modes.
//! * [`channel`]: deterministic seeded sampling of channel realizations.
//! * [`special`]: incomplete gamma functions and the polynomial-power
//!   coefficient tables used by the closed-form expressions.
//! * [`analytic`]: closed-form outage probabilities and throughput.
//! * [`simulator`]: Monte Carlo outage and throughput estimation.
//! * [`optimizer`]: successive convex approximation of the sum-rate-optimal
//!   power allocation, plus an exhaustive grid-search oracle.
//!
//! All numeric code is generic over the [`scalar::Real`] trait; the type
//! aliases at the crate root fix `f64`, which every shipped entry point uses.

pub mod analytic;
pub mod channel;
pub mod optimizer;
pub mod oracles;
pub mod params;
pub mod scalar;
pub mod simulator;
pub mod special;

/// Default scalar type for the shipped binaries and tests.
pub type Real = f64;

/// System parameters over the default scalar.
pub type SystemParams = params::SystemParams<Real>;
/// Power allocation over the default scalar.
pub type PowerAllocation = params::PowerAllocation<Real>;
/// Channel realization over the default scalar.
pub type ChannelRealization = channel::ChannelRealization<Real>;
/// Per-message instantaneous rates over the default scalar.
pub type RateProfile = simulator::RateProfile<Real>;
/// Monte Carlo outage estimate over the default scalar.
pub type OutageEstimate = simulator::OutageEstimate<Real>;
/// Closed-form outage evaluator over the default scalar.
pub type OutageModel = analytic::OutageModel<Real>;
/// One SCA iterate over the default scalar.
pub type ScaPoint = optimizer::ScaPoint<Real>;
/// Full SCA run record over the default scalar.
pub type ScaTrace = optimizer::ScaTrace<Real>;

pub use params::DuplexMode;
