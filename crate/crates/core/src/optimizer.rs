//! Sum-rate power allocation: successive convex approximation (SCA) with a
//! monotone trace, plus an exhaustive grid-search oracle.
//!
//! The sum rate Σ log₂(1 + SINR_i) over a fixed realization is maximized in
//! α. Each SINR is evaluated at the message's own receiver: receivers are
//! gain-ordered, so the weakest decoder of message i is receiver i itself
//! and the downstream min drops out. The product form Π t_i (t_i bounding
//! 1 + SINR_i) is maximized as Σ ln t_i. The only non-convexity, the
//! bilinear coupling z_i(t_i − 1) ≤ α_i A_i, is replaced per iteration by
//! the convex cap ¼(z/s + st)² − z ≤ α A, which dominates z t − z for any
//! s > 0 (arithmetic–geometric bound) and touches it where z = s²t; the
//! scale s is refreshed from the previous iterate so the touching point is
//! the iterate itself. Every subproblem is therefore an inner
//! approximation: iterates stay feasible for the original problem and the
//! objective never decreases.

mod barrier;

use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::params::{DuplexMode, ParamsError, PowerAllocation, SystemParams};
use crate::scalar::Real;
use crate::simulator::noma_sinr;
use barrier::{BarrierProblem, Constraint, Objective};

/// Suboptimality bound requested from the interior-point solver.
const SOLVER_GAP: f64 = 1e-10;
/// Minimum max-min margin for a draw to count as feasible.
const FEASIBILITY_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("channel realization cannot satisfy the rate targets")]
    Infeasible,
    #[error("convex solver failed: {reason}")]
    SolverFailure { reason: String },
    #[error("no grid point satisfies ordering, power budget, and rate targets")]
    NoFeasibleGridPoint,
    #[error("grid step must lie in (0, 1] and divide 1, got {step}")]
    InvalidGrid { step: f64 },
    #[error("tolerance must be positive, got {eps}")]
    InvalidTolerance { eps: f64 },
    #[error("power allocation optimization applies to NOMA modes only, not {mode}")]
    UnsupportedMode { mode: DuplexMode },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// One SCA iterate: the allocation plus the slack variables that define the
/// next linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaPoint<T> {
    pub alpha: PowerAllocation<T>,
    /// t_i ≥ 1 bounds 1 + SINR_i from below.
    pub t: Vec<T>,
    /// z_i ≥ 1 bounds interference+1 of messages 0..M−1 from above.
    pub z: Vec<T>,
}

impl<T: Real> ScaPoint<T> {
    /// The surrogate objective Π t_i this point certifies.
    pub fn objective(&self) -> T {
        self.t.iter().fold(T::one(), |p, &t| p * t)
    }
}

/// Record of one SCA run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaTrace<T> {
    pub iterates: Vec<ScaPoint<T>>,
    /// Π t_i per iterate; nondecreasing by construction.
    pub objectives: Vec<T>,
    /// Whether the relative objective increase fell below the tolerance
    /// before the iteration cap.
    pub converged: bool,
    /// Subproblems solved (the initial point is not counted).
    pub iterations: usize,
}

impl<T: Real> ScaTrace<T> {
    pub fn final_point(&self) -> &ScaPoint<T> {
        self.iterates.last().expect("trace holds at least the initial point")
    }
}

/// Rate-target feasibility of an allocation on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct QosReport<T> {
    pub feasible: bool,
    /// Raw linear margins α_i A_i − γ_i(A_i Σ_{j>i}α_j + 1), one per
    /// message; nonnegative means the target is met.
    pub margins: Vec<T>,
}

/// Mode-resolved per-receiver constants: A_i = ργ̄·g·g_i and the SINR
/// thresholds γ_i matching the mode's prelog.
struct RateContext<T> {
    a: Vec<T>,
    gamma: Vec<T>,
    prelog: T,
}

impl<T: Real> RateContext<T> {
    fn new(
        real: &ChannelRealization<T>,
        params: &SystemParams<T>,
        mode: DuplexMode,
    ) -> Result<Self, OptimError> {
        params.validate()?;
        let inverse_prelog = match mode {
            DuplexMode::Fd => T::one(),
            DuplexMode::Hd => T::of(2.0),
            DuplexMode::OmaTdma => return Err(OptimError::UnsupportedMode { mode }),
        };
        assert_eq!(
            real.receivers(),
            params.n_srs + 1,
            "realization size must match receiver count"
        );
        let scale = params.effective_rho(mode) * params.gamma_bar() * real.best_gain();
        let a = (0..=params.n_srs).map(|i| scale * real.gain(i)).collect();
        let gamma = params
            .target_rates
            .iter()
            .map(|&r| T::of(2.0).powf(r * inverse_prelog) - T::one())
            .collect();
        Ok(Self {
            a,
            gamma,
            prelog: T::one() / inverse_prelog,
        })
    }

    fn nodes(&self) -> usize {
        self.a.len()
    }

    fn sinr(&self, alpha: &PowerAllocation<T>, i: usize) -> T {
        noma_sinr(alpha, self.a[i], i)
    }

    fn qos_margins(&self, alpha: &PowerAllocation<T>) -> Vec<T> {
        (0..self.nodes())
            .map(|i| {
                alpha.get(i) * self.a[i]
                    - self.gamma[i] * (self.a[i] * alpha.tail_sum(i) + T::one())
            })
            .collect()
    }
}

/// Downlink sum rate Σ prelog·log₂(1 + SINR_i) of `alpha` on one
/// realization (own-receiver SINRs).
pub fn achievable_sum_rate<T: Real>(
    alpha: &PowerAllocation<T>,
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> Result<T, OptimError> {
    let ctx = RateContext::new(real, params, mode)?;
    assert_eq!(alpha.len(), ctx.nodes(), "allocation size must match receivers");
    Ok((0..ctx.nodes())
        .map(|i| ctx.prelog * (T::one() + ctx.sinr(alpha, i)).log2())
        .fold(T::zero(), |s, r| s + r))
}

/// Checks the per-message rate targets as linear inequalities in `alpha`.
pub fn qos_feasible<T: Real>(
    alpha: &PowerAllocation<T>,
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> Result<QosReport<T>, OptimError> {
    let ctx = RateContext::new(real, params, mode)?;
    assert_eq!(alpha.len(), ctx.nodes(), "allocation size must match receivers");
    let margins = ctx.qos_margins(alpha);
    Ok(QosReport {
        feasible: margins.iter().all(|&m| m >= T::zero()),
        margins,
    })
}

/// Finds a feasible starting allocation by maximizing the minimum
/// normalized margin over all constraints (rate targets, ordering, budget),
/// then fills the slacks tightly: t_i = 1 + SINR_i, z_i = interference+1.
///
/// The returned point satisfies every subproblem constraint at its own
/// linearization (the bilinear caps hold with equality).
pub fn initial_feasible_point<T: Real>(
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
) -> Result<ScaPoint<T>, OptimError> {
    let ctx = RateContext::new(real, params, mode)?;
    let nodes = ctx.nodes();
    // Variables [α_0..α_M, s]; maximize s = the worst normalized margin.
    let s_idx = nodes;
    let mut constraints = Vec::new();
    for i in 0..nodes {
        // s ≤ (α_i A_i − γ_i A_i Σ_{j>i}α_j − γ_i) / (1 + A_i).
        let norm = T::one() / (T::one() + ctx.a[i]);
        let mut linear = vec![(s_idx, T::one()), (i, -ctx.a[i] * norm)];
        for j in i + 1..nodes {
            linear.push((j, ctx.gamma[i] * ctx.a[i] * norm));
        }
        constraints.push(Constraint::linear_from(linear, ctx.gamma[i] * norm));
    }
    for i in 0..nodes - 1 {
        // s ≤ α_i − α_{i+1}.
        constraints.push(Constraint::linear_from(
            vec![(s_idx, T::one()), (i, -T::one()), (i + 1, T::one())],
            T::zero(),
        ));
    }
    // s ≤ α_M, s ≤ 1 − Σα, s ≤ 1.
    constraints.push(Constraint::linear_from(
        vec![(s_idx, T::one()), (nodes - 1, -T::one())],
        T::zero(),
    ));
    let mut budget = vec![(s_idx, T::one())];
    for i in 0..nodes {
        budget.push((i, T::one()));
    }
    constraints.push(Constraint::linear_from(budget, -T::one()));
    constraints.push(Constraint::linear_from(vec![(s_idx, T::one())], -T::one()));

    let mut objective = vec![T::zero(); nodes + 1];
    objective[s_idx] = -T::one();
    let problem = BarrierProblem {
        n: nodes + 1,
        objective: Objective::Linear(objective),
        constraints,
    };

    // Strictly decreasing start summing to 0.9, with s one unit below every
    // margin so the start is strictly feasible by construction.
    let total = T::of_usize(nodes * (nodes + 1) / 2);
    let mut x0: Vec<T> = (0..nodes)
        .map(|i| T::of(0.9) * T::of_usize(nodes - i) / total)
        .collect();
    let worst = problem
        .constraints
        .iter()
        .map(|c| {
            // Constraint is s + lin(α) + b ≤ 0, so s must stay below
            // −lin(α) − b.
            let mut cap = -c.offset;
            for &(idx, coef) in &c.linear {
                if idx != s_idx {
                    cap -= coef * x0[idx];
                }
            }
            cap
        })
        .fold(T::infinity(), |m, cap| m.min(cap));
    x0.push(worst - T::one());

    let solution = problem
        .solve(x0, T::of(SOLVER_GAP))
        .map_err(|reason| OptimError::SolverFailure { reason })?;
    if solution[s_idx] <= T::of(FEASIBILITY_MARGIN) {
        return Err(OptimError::Infeasible);
    }
    let alpha = PowerAllocation::new(solution[..nodes].to_vec())
        .map_err(|e| OptimError::SolverFailure { reason: e.to_string() })?;
    Ok(tight_point(&ctx, alpha))
}

/// Slacks at equality for a given allocation.
fn tight_point<T: Real>(ctx: &RateContext<T>, alpha: PowerAllocation<T>) -> ScaPoint<T> {
    let nodes = ctx.nodes();
    let t = (0..nodes).map(|i| T::one() + ctx.sinr(&alpha, i)).collect();
    let z = (0..nodes - 1)
        .map(|i| ctx.a[i] * alpha.tail_sum(i) + T::one())
        .collect();
    ScaPoint { alpha, t, z }
}

/// Log surrogate Σ ln(1 + SINR_i) at tight slacks.
fn log_objective<T: Real>(ctx: &RateContext<T>, alpha: &PowerAllocation<T>) -> T {
    (0..ctx.nodes())
        .map(|i| (T::one() + ctx.sinr(alpha, i)).ln())
        .fold(T::zero(), |s, v| s + v)
}

/// Extends the step `from → to` along its ray as far as the linear
/// constraints (ordering, budget, rate targets) allow and picks the best
/// point on the segment under the true surrogate. Inner approximations
/// only osculate the bilinear boundary, so raw subproblem steps shrink
/// near low-dimensional faces; the ray search restores full-length steps
/// without ever leaving the feasible set.
fn ray_search<T: Real>(
    ctx: &RateContext<T>,
    from: &PowerAllocation<T>,
    to: &PowerAllocation<T>,
) -> Option<PowerAllocation<T>> {
    let nodes = ctx.nodes();
    let direction: Vec<T> = (0..nodes).map(|i| to.get(i) - from.get(i)).collect();
    if direction.iter().all(|d| d.abs() < T::of(1e-14)) {
        return None;
    }
    // Every remaining constraint is affine in θ along α(θ) = from + θ·d;
    // collect (value at θ=0, value at θ=1) pairs with the convention
    // value ≥ 0 ⇔ feasible, and intersect the rays.
    let mut spans: Vec<(T, T)> = Vec::new();
    for i in 0..nodes - 1 {
        spans.push((from.get(i) - from.get(i + 1), to.get(i) - to.get(i + 1)));
    }
    spans.push((from.get(nodes - 1), to.get(nodes - 1)));
    let total_from = (0..nodes).fold(T::zero(), |s, i| s + from.get(i));
    let total_to = (0..nodes).fold(T::zero(), |s, i| s + to.get(i));
    spans.push((T::one() - total_from, T::one() - total_to));
    let margins_from = ctx.qos_margins(from);
    let margins_to = ctx.qos_margins(to);
    for i in 0..nodes {
        spans.push((margins_from[i], margins_to[i]));
    }
    let mut theta_max = T::of(1e3);
    for (at_zero, at_one) in spans {
        let slope = at_one - at_zero;
        if slope < T::zero() {
            theta_max = theta_max.min(at_zero / -slope);
        }
    }
    if !(theta_max > T::one() + T::of(1e-6)) {
        return None;
    }
    // Stay strictly inside the crossing so the next subproblem keeps a
    // strictly feasible start.
    theta_max = T::one() + T::of(0.9999) * (theta_max - T::one());

    let alpha_at = |theta: T| -> Option<PowerAllocation<T>> {
        let mut coefficients: Vec<T> = (0..nodes)
            .map(|i| from.get(i) + theta * direction[i])
            .collect();
        // Rounding along the ray can land a hair past the power budget;
        // pull such points back inside before validating.
        let total = coefficients.iter().fold(T::zero(), |s, &c| s + c);
        if total >= T::one() {
            let scale = (T::one() - T::of(1e-12)) / total;
            for c in coefficients.iter_mut() {
                *c *= scale;
            }
        }
        // The accepted point seeds the next linearization, which needs a
        // strictly interior start; reject candidates that rounding pushed
        // onto the ordering, positivity, or budget faces.
        for i in 0..nodes - 1 {
            if !(coefficients[i] > coefficients[i + 1]) {
                return None;
            }
        }
        if !(coefficients[nodes - 1] > T::zero()) {
            return None;
        }
        let total = coefficients.iter().fold(T::zero(), |s, &c| s + c);
        if !(total < T::one()) {
            return None;
        }
        PowerAllocation::new(coefficients).ok()
    };
    let value_at = |theta: T| -> T {
        // Rate-target margins scale with the receive powers, so the strict
        // floor does too; it keeps the accepted point clear of the QoS
        // faces by more than evaluation noise.
        match alpha_at(theta) {
            Some(alpha)
                if ctx
                    .qos_margins(&alpha)
                    .iter()
                    .zip(&ctx.a)
                    .all(|(&m, &a)| m > T::of(1e-10) * (T::one() + a)) =>
            {
                log_objective(ctx, &alpha)
            }
            _ => T::neg_infinity(),
        }
    };

    // Golden-section over [1, θ_max], tracking the best evaluated point.
    let inv_phi = T::of(0.618033988749895);
    let mut lo = T::one();
    let mut hi = theta_max;
    let mut best_theta = T::one();
    let mut best_value = value_at(T::one());
    let consider = |theta: T, value: T, best_theta: &mut T, best_value: &mut T| {
        if value > *best_value {
            *best_value = value;
            *best_theta = theta;
        }
    };
    consider(theta_max, value_at(theta_max), &mut best_theta, &mut best_value);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = value_at(a);
    let mut fb = value_at(b);
    for _ in 0..60 {
        consider(a, fa, &mut best_theta, &mut best_value);
        consider(b, fb, &mut best_theta, &mut best_value);
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = value_at(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = value_at(b);
        }
    }
    if best_theta > T::one() && best_value.is_finite() {
        alpha_at(best_theta)
    } else {
        None
    }
}

/// Variable layout of the subproblem: [α(M+1) | t(M+1) | z(M)].
struct Layout {
    nodes: usize,
}

impl Layout {
    fn alpha(&self, i: usize) -> usize {
        i
    }
    fn t(&self, i: usize) -> usize {
        self.nodes + i
    }
    fn z(&self, i: usize) -> usize {
        2 * self.nodes + i
    }
    fn len(&self) -> usize {
        3 * self.nodes - 1
    }
}

fn build_subproblem<T: Real>(ctx: &RateContext<T>, lin: &ScaPoint<T>) -> BarrierProblem<T> {
    let nodes = ctx.nodes();
    let layout = Layout { nodes };
    let mut constraints = Vec::new();

    // Interference caps: Σ_{j>i} α_j A_i + 1 − z_i ≤ 0.
    for i in 0..nodes - 1 {
        let mut linear = vec![(layout.z(i), -T::one())];
        for j in i + 1..nodes {
            linear.push((layout.alpha(j), ctx.a[i]));
        }
        constraints.push(Constraint::linear_from(linear, T::one()));
    }

    // Convexified bilinear caps: ¼(z_i/s_i + s_i t_i)² − z_i − α_i A_i ≤ 0
    // with s_i² = z_i⁽τ⁾/t_i⁽τ⁾, so the cap touches z_i t_i − z_i − α_i A_i
    // exactly at the linearization point and dominates it elsewhere.
    for i in 0..nodes - 1 {
        let s = (lin.z[i] / lin.t[i]).sqrt();
        constraints.push(Constraint {
            quad_weight: T::of(0.25),
            quad_vector: vec![(layout.z(i), T::one() / s), (layout.t(i), s)],
            linear: vec![(layout.z(i), -T::one()), (layout.alpha(i), -ctx.a[i])],
            offset: T::zero(),
        });
    }

    // Last receiver sees no interference: t_M − 1 − α_M A_M ≤ 0.
    constraints.push(Constraint::linear_from(
        vec![
            (layout.t(nodes - 1), T::one()),
            (layout.alpha(nodes - 1), -ctx.a[nodes - 1]),
        ],
        -T::one(),
    ));

    // Rate targets, linear in α: γ_i A_i Σ_{j>i}α_j − α_i A_i + γ_i ≤ 0.
    for i in 0..nodes {
        let mut linear = vec![(layout.alpha(i), -ctx.a[i])];
        for j in i + 1..nodes {
            linear.push((layout.alpha(j), ctx.gamma[i] * ctx.a[i]));
        }
        constraints.push(Constraint::linear_from(linear, ctx.gamma[i]));
    }

    // Ordering, last-coefficient nonnegativity, power budget.
    for i in 0..nodes - 1 {
        constraints.push(Constraint::linear_from(
            vec![(layout.alpha(i + 1), T::one()), (layout.alpha(i), -T::one())],
            T::zero(),
        ));
    }
    constraints.push(Constraint::linear_from(
        vec![(layout.alpha(nodes - 1), -T::one())],
        T::zero(),
    ));
    constraints.push(Constraint::linear_from(
        (0..nodes).map(|i| (layout.alpha(i), T::one())).collect(),
        -T::one(),
    ));

    // Slack domains: t_i ≥ 1, z_i ≥ 1.
    for i in 0..nodes {
        constraints.push(Constraint::linear_from(
            vec![(layout.t(i), -T::one())],
            T::one(),
        ));
    }
    for i in 0..nodes - 1 {
        constraints.push(Constraint::linear_from(
            vec![(layout.z(i), -T::one())],
            T::one(),
        ));
    }

    BarrierProblem {
        n: layout.len(),
        objective: Objective::NegLogSum((0..nodes).map(|i| layout.t(i)).collect()),
        constraints,
    }
}

fn pack<T: Real>(point: &ScaPoint<T>) -> Vec<T> {
    let mut x = point.alpha.as_slice().to_vec();
    x.extend_from_slice(&point.t);
    x.extend_from_slice(&point.z);
    x
}

/// Maximizes Π t_i over the convex inner approximation linearized at
/// `lin`. The result satisfies every constraint within 1e−8 and its
/// objective is never below the linearization point's.
pub fn solve_convex_subproblem<T: Real>(
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
    lin: &ScaPoint<T>,
) -> Result<ScaPoint<T>, OptimError> {
    let ctx = RateContext::new(real, params, mode)?;
    let nodes = ctx.nodes();
    assert_eq!(lin.alpha.len(), nodes, "linearization point size mismatch");
    assert_eq!(lin.t.len(), nodes, "linearization point size mismatch");
    assert_eq!(lin.z.len(), nodes - 1, "linearization point size mismatch");
    let problem = build_subproblem(&ctx, lin);

    // The linearization point itself is feasible but may sit exactly on
    // its bilinear caps (the initial point does). Pull the t slacks
    // slightly inward and push z slightly outward until strict.
    let mut start = None;
    for (t_shrink, z_grow) in [(1.0, 0.0), (0.999, 1e-6), (0.99, 1e-4), (0.9, 1e-2)] {
        let mut candidate = lin.clone();
        for t in candidate.t.iter_mut() {
            *t = T::one() + T::of(t_shrink) * (*t - T::one());
        }
        for z in candidate.z.iter_mut() {
            *z *= T::one() + T::of(z_grow);
        }
        let x = pack(&candidate);
        if problem.strictly_feasible(&x) {
            start = Some(x);
            break;
        }
    }
    let x0 = start.ok_or_else(|| OptimError::SolverFailure {
        reason: "no strictly feasible start near the linearization point".to_string(),
    })?;

    let solution = problem
        .solve(x0, T::of(SOLVER_GAP))
        .map_err(|reason| OptimError::SolverFailure { reason })?;

    let layout = Layout { nodes };
    let alpha = PowerAllocation::new(solution[..nodes].to_vec())
        .map_err(|e| OptimError::SolverFailure { reason: e.to_string() })?;
    let point = ScaPoint {
        alpha,
        t: (0..nodes).map(|i| solution[layout.t(i)]).collect(),
        z: (0..nodes - 1).map(|i| solution[layout.z(i)]).collect(),
    };
    // Monotone by construction; only numerical noise can dip below, in
    // which case the linearization point already is the answer.
    if point.objective() < lin.objective() {
        return Ok(lin.clone());
    }
    Ok(point)
}

/// Runs the SCA loop: repeatedly solve the convexified subproblem and
/// re-linearize at its solution until the relative objective increase
/// falls below `eps` or `max_iter` subproblems have been solved.
pub fn sca_optimize<T: Real>(
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
    eps: T,
    max_iter: usize,
) -> Result<ScaTrace<T>, OptimError> {
    if !(eps > T::zero()) {
        return Err(OptimError::InvalidTolerance {
            eps: eps.to_f64_lossy(),
        });
    }
    let ctx = RateContext::new(real, params, mode)?;
    let start = initial_feasible_point(real, params, mode)?;
    let mut objectives = vec![start.objective()];
    let mut iterates = vec![start];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let current = iterates.last().unwrap().clone();
        let solved = solve_convex_subproblem(real, params, mode, &current)?;
        iterations += 1;
        // Subproblem slacks are conservative (inner approximation), so
        // re-tightening at the solved allocation only raises the
        // objective; extending the α-step along its ray can raise it
        // further while staying exactly feasible.
        let mut next = tight_point(&ctx, solved.alpha);
        if let Some(extended) = ray_search(&ctx, &current.alpha, &next.alpha) {
            let candidate = tight_point(&ctx, extended);
            if candidate.objective() > next.objective() {
                next = candidate;
            }
        }
        let previous = *objectives.last().unwrap();
        let objective = next.objective();
        if objective < previous {
            // Numerical noise at a fixed point; stop without recording a
            // worse iterate.
            converged = true;
            break;
        }
        let gain = (objective - previous) / previous;
        objectives.push(objective);
        iterates.push(next);
        if gain < eps {
            converged = true;
            break;
        }
    }

    Ok(ScaTrace {
        iterates,
        objectives,
        converged,
        iterations,
    })
}

/// Enumerates k-vectors (k_0 ≥ k_1 ≥ … ≥ k_M, Σk ≤ cap) in ascending
/// lexicographic order and hands each to the visitor.
fn for_each_ordered_composition(
    nodes: usize,
    cap: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    fn rec(
        depth: usize,
        nodes: usize,
        prev: usize,
        remaining: usize,
        current: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == nodes {
            visit(current);
            return;
        }
        for k in 0..=prev.min(remaining) {
            current.push(k);
            rec(depth + 1, nodes, k, remaining - k, current, visit);
            current.pop();
        }
    }
    let mut current = Vec::with_capacity(nodes);
    rec(0, nodes, cap, cap, &mut current, visit);
}

/// Brute-force oracle: evaluates every allocation on the step-`grid_step`
/// simplex grid that respects ordering and the power budget, filters by
/// the rate targets, and returns the best sum rate. Ties keep the
/// lexicographically smallest allocation.
pub fn exhaustive_search<T: Real>(
    real: &ChannelRealization<T>,
    params: &SystemParams<T>,
    mode: DuplexMode,
    grid_step: T,
) -> Result<(PowerAllocation<T>, T), OptimError> {
    let ctx = RateContext::new(real, params, mode)?;
    let step = grid_step.to_f64_lossy();
    if !(step > 0.0 && step <= 1.0) {
        return Err(OptimError::InvalidGrid { step });
    }
    let cap = (1.0 / step).round() as usize;
    if cap == 0 || (cap as f64 * step - 1.0).abs() > 1e-9 {
        return Err(OptimError::InvalidGrid { step });
    }

    let nodes = ctx.nodes();
    let mut best: Option<(Vec<T>, T)> = None;
    for_each_ordered_composition(nodes, cap, &mut |ks| {
        let coefficients: Vec<T> = ks.iter().map(|&k| T::of_usize(k) * grid_step).collect();
        let alpha = match PowerAllocation::new(coefficients) {
            Ok(a) => a,
            Err(_) => return,
        };
        if ctx.qos_margins(&alpha).iter().any(|&m| m < T::zero()) {
            return;
        }
        let rate = (0..nodes)
            .map(|i| ctx.prelog * (T::one() + ctx.sinr(&alpha, i)).log2())
            .fold(T::zero(), |s, r| s + r);
        let better = match &best {
            None => true,
            Some((_, incumbent)) => rate > *incumbent,
        };
        if better {
            best = Some((alpha.as_slice().to_vec(), rate));
        }
    });

    match best {
        Some((coefficients, rate)) => Ok((
            PowerAllocation::new(coefficients).expect("grid point was valid when visited"),
            rate,
        )),
        None => Err(OptimError::NoFeasibleGridPoint),
    }
}
