//! Special functions backing the closed-form outage expressions.
//!
//! Three ingredients are needed: the upper incomplete gamma function at
//! integer order (including order zero, where it degenerates to the
//! exponential integral E₁), compensated summation for the long alternating
//! sums, and the coefficients of (Σ_{n<N} xⁿ/n!)^l, which appear in the CDF
//! of the best selected relay gain. The coefficient recursion is evaluated in
//! exact rational arithmetic and only converted to floating point at the end,
//! so table entries carry no accumulated rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::Real;

/// Euler–Mascheroni constant, used by the E₁ series.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Series/continued-fraction termination threshold.
const CONVERGENCE_EPS: f64 = 1e-17;

const MAX_ITERATIONS: usize = 10_000;

/// Domain violation in a special-function call.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathDomainError {
    #[error("argument must be positive, got {value}")]
    NonPositiveArgument { value: f64 },
    #[error("argument must be nonnegative, got {value}")]
    NegativeArgument { value: f64 },
    #[error("order {order} exceeds the factorial range of the scalar type")]
    OrderTooLarge { order: usize },
    #[error("iteration failed to converge")]
    NoConvergence,
}

/// n! as a scalar. Errors once the factorial overflows `f64` (n > 170).
pub fn factorial<T: Real>(n: usize) -> Result<T, MathDomainError> {
    if n > 170 {
        return Err(MathDomainError::OrderTooLarge { order: n });
    }
    let mut acc = T::one();
    for k in 2..=n {
        acc *= T::of_usize(k);
    }
    Ok(acc)
}

/// Binomial coefficient as a scalar, by the multiplicative formula.
pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::of_usize(n - i) / T::of_usize(i + 1);
    }
    acc
}

/// Exponential integral E₁(x) = ∫_x^∞ e^(−t)/t dt for x > 0.
///
/// Uses the alternating series with the logarithmic term for x ≤ 1 and the
/// modified Lentz continued fraction otherwise; both iterate to relative
/// machine precision.
pub fn exponential_integral_e1<T: Real>(x: T) -> Result<T, MathDomainError> {
    if !(x > T::zero()) {
        return Err(MathDomainError::NonPositiveArgument {
            value: x.to_f64_lossy(),
        });
    }
    let eps = T::of(CONVERGENCE_EPS);
    if x <= T::one() {
        // E₁(x) = −γ − ln x + Σ_{k≥1} (−1)^{k+1} x^k / (k·k!)
        let mut sum = -T::of(EULER_GAMMA) - x.ln();
        let mut term = T::one();
        for k in 1..=MAX_ITERATIONS {
            let kf = T::of_usize(k);
            term *= -x / kf;
            let contribution = -term / kf;
            sum += contribution;
            if contribution.abs() <= sum.abs() * eps {
                return Ok(sum);
            }
        }
        Err(MathDomainError::NoConvergence)
    } else {
        // E₁(x) = e^(−x) · (1/(x+1− 1²/(x+3− 2²/(x+5−…)))), evaluated by the
        // modified Lentz method.
        let tiny = T::of(1e-300);
        let mut b = x + T::one();
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..=MAX_ITERATIONS {
            let a = -T::of_usize(i * i);
            b += T::of(2.0);
            d = T::one() / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - T::one()).abs() <= eps {
                return Ok(h * (-x).exp());
            }
        }
        Err(MathDomainError::NoConvergence)
    }
}

/// Upper incomplete gamma Γ(j, x) at integer order j ≥ 0, x > 0.
///
/// Order zero is E₁(x); positive orders use the closed form
/// Γ(j, x) = (j−1)! e^(−x) Σ_{k<j} x^k/k!, whose terms are all positive.
pub fn upper_incomplete_gamma_int<T: Real>(j: usize, x: T) -> Result<T, MathDomainError> {
    if !(x > T::zero()) {
        return Err(MathDomainError::NonPositiveArgument {
            value: x.to_f64_lossy(),
        });
    }
    if j == 0 {
        return exponential_integral_e1(x);
    }
    // Accumulate e^(−x) Σ x^k/k! first; it is bounded by 1, so the final
    // multiplication by (j−1)! is the only magnitude jump.
    let mut series = T::one();
    let mut term = T::one();
    for k in 1..j {
        term = term * x / T::of_usize(k);
        series += term;
    }
    Ok(factorial::<T>(j - 1)? * ((-x).exp() * series))
}

/// Compensated (Kahan–Neumaier) accumulator.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Default for KahanSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }
}

impl<T: Real> KahanSum<T> {
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum + self.compensation
    }
}

/// Sums a term list after ordering it by descending magnitude, with
/// compensation. The alternating outage sums grow past 20 terms of mixed
/// sign; fixed ordering keeps them reproducible and accurate.
pub fn compensated_sum<T: Real>(terms: &mut [T]) -> T {
    terms.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .expect("terms must be comparable")
    });
    let mut acc = KahanSum::default();
    for &t in terms.iter() {
        acc.add(t);
    }
    acc.total()
}

/// Coefficient table of (Σ_{n=0}^{N−1} xⁿ/n!)^l: entry j is the coefficient
/// of x^j, for j = 0…l(N−1).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable<T> {
    power: usize,
    n_antennas: usize,
    values: Vec<T>,
}

impl<T: Real> CoefficientTable<T> {
    /// l, the power the truncated exponential series is raised to.
    pub fn power(&self) -> usize {
        self.power
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    /// Highest stored degree, l(N−1).
    pub fn max_degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Evaluates Σ_j C_j u^j. All coefficients are nonnegative, so no
    /// cancellation occurs here.
    pub fn polynomial(&self, u: T) -> T {
        let mut acc = T::zero();
        for &c in self.values.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// Evaluates Σ_j C_j (j u^{j−1} − s u^j), the derivative helper of the
    /// CDF term e^(−s·u)·Σ C_j u^j with respect to u.
    pub fn polynomial_derivative_form(&self, u: T, s: T) -> T {
        let mut acc = T::zero();
        for (j, &c) in self.values.iter().enumerate().rev() {
            let monomial = if j == 0 {
                -s * c
            } else {
                c * (T::of_usize(j) * u.powi(j as i32 - 1) - s * u.powi(j as i32))
            };
            acc += monomial;
        }
        acc
    }

    /// Test hook: scales all coefficients of degree ≥ 1, deliberately
    /// corrupting the table so downstream validation must detect it.
    #[doc(hidden)]
    pub fn scale_high_degrees(&mut self, factor: T) {
        for c in self.values.iter_mut().skip(1) {
            *c = *c * factor;
        }
    }
}

/// Exact rational coefficients of (Σ_{n=0}^{N−1} xⁿ/n!)^l via the recursion
/// C₀ = 1, C_j = (1/j) Σ_{p=1}^{min(j, N−1)} ((pl − j + p)/p!) C_{j−p}.
pub fn c_coefficients_exact(power: usize, n_antennas: usize) -> Vec<BigRational> {
    assert!(n_antennas >= 1, "at least one antenna element");
    let degree = power * (n_antennas - 1);
    let mut coeffs = Vec::with_capacity(degree + 1);
    coeffs.push(BigRational::one());
    let mut p_factorials = vec![BigInt::one()];
    for p in 1..n_antennas {
        let last = p_factorials[p - 1].clone();
        p_factorials.push(last * BigInt::from(p));
    }
    for j in 1..=degree {
        let mut sum = BigRational::zero();
        for p in 1..=j.min(n_antennas - 1) {
            let numer = BigInt::from(p as i64 * power as i64 - j as i64 + p as i64);
            let weight = BigRational::new(numer, p_factorials[p].clone());
            sum += weight * &coeffs[j - p];
        }
        coeffs.push(sum / BigRational::from_integer(BigInt::from(j)));
    }
    coeffs
}

/// Floating-point coefficient table for the CDF/PDF of the best relay gain.
pub fn c_coefficients<T: Real>(power: usize, n_antennas: usize) -> CoefficientTable<T> {
    let values = c_coefficients_exact(power, n_antennas)
        .into_iter()
        .map(|c| {
            debug_assert!(!c.is_negative(), "series coefficients are nonnegative");
            T::of(c.to_f64().expect("coefficient fits in f64"))
        })
        .collect();
    CoefficientTable {
        power,
        n_antennas,
        values,
    }
}
