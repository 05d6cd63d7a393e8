//! Independent reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the functions under test: the incomplete
//! gamma oracle integrates the defining integral by adaptive quadrature, the
//! coefficient oracle multiplies polynomials term by term in exact rational
//! arithmetic, and the Kolmogorov–Smirnov helpers compare empirical and
//! analytic distributions. The self-test command runs these at reduced scale.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }

    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Γ(j, x) = ∫_x^∞ t^(j−1) e^(−t) dt by adaptive quadrature of the defining
/// integral, truncated where the tail drops below any representable
/// contribution.
pub fn upper_incomplete_gamma_quadrature(j: usize, x: f64) -> f64 {
    assert!(x > 0.0, "quadrature oracle needs x > 0");
    let integrand = move |t: f64| t.powi(j as i32 - 1) * (-t).exp();
    let upper = x + 60.0 + 12.0 * j as f64;
    // Scale the absolute tolerance to the integrand's peak on the interval.
    let peak_t = if j >= 1 { ((j - 1) as f64).max(x) } else { x };
    let scale = integrand(peak_t).max(f64::MIN_POSITIVE);
    adaptive_simpson(&integrand, x, upper, scale * 1e-16)
}

/// Coefficients of (Σ_{n=0}^{N−1} xⁿ/n!)^power by repeated exact polynomial
/// multiplication.
pub fn series_power_coefficients(power: usize, n_antennas: usize) -> Vec<BigRational> {
    assert!(n_antennas >= 1);
    let mut base = Vec::with_capacity(n_antennas);
    let mut factorial = BigInt::one();
    for n in 0..n_antennas {
        if n > 0 {
            factorial *= BigInt::from(n);
        }
        base.push(BigRational::new(BigInt::one(), factorial.clone()));
    }
    let mut acc = vec![BigRational::one()];
    for _ in 0..power {
        let mut next = vec![BigRational::zero(); acc.len() + base.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (k, b) in base.iter().enumerate() {
                next[i + k] += a * b;
            }
        }
        acc = next;
    }
    acc
}

/// Empirical-vs-analytic Kolmogorov–Smirnov statistic. Samples need not be
/// sorted; the CDF is evaluated at every sample point.
pub fn ks_statistic_against_cdf(samples: &mut [f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
    let n = samples.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let lower = (f - i as f64 / n).abs();
        let upper = ((i + 1) as f64 / n - f).abs();
        sup = sup.max(lower).max(upper);
    }
    sup
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_by(|x, y| x.partial_cmp(y).expect("samples are finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("samples are finite"));
    let (na, nb) = (a.len(), b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d = 0.0f64;
    while ia < na && ib < nb {
        let xa = a[ia];
        let xb = b[ib];
        let x = xa.min(xb);
        while ia < na && a[ia] <= x {
            ia += 1;
        }
        while ib < nb && b[ib] <= x {
            ib += 1;
        }
        d = d.max((ia as f64 / na as f64 - ib as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// Survival function of the Kolmogorov distribution,
/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^(−2k²λ²).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
