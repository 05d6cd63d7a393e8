//! Logarithmic-barrier interior-point solver for the tiny dense convex
//! programs the power-allocation pipeline produces (at most a few dozen
//! variables). Robustness is preferred over sparsity: dense Cholesky with a
//! ridge fallback, damped Newton steps, and strict feasibility maintained
//! by the line search.

use crate::scalar::Real;

/// One inequality g(x) ≤ 0 of the form q·(p·x)² + a·x + b ≤ 0.
///
/// `q = 0` gives a linear constraint; `q > 0` a convex quadratic whose
/// curvature is rank one, which covers every constraint this crate builds.
#[derive(Debug, Clone)]
pub(crate) struct Constraint<T> {
    pub quad_weight: T,
    /// Sparse p of the squared affine form.
    pub quad_vector: Vec<(usize, T)>,
    /// Sparse linear coefficients a.
    pub linear: Vec<(usize, T)>,
    pub offset: T,
}

impl<T: Real> Constraint<T> {
    pub fn linear_from(linear: Vec<(usize, T)>, offset: T) -> Self {
        Self {
            quad_weight: T::zero(),
            quad_vector: Vec::new(),
            linear,
            offset,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        let mut v = self.offset;
        for &(i, a) in &self.linear {
            v += a * x[i];
        }
        if self.quad_weight != T::zero() {
            let mut dot = T::zero();
            for &(i, p) in &self.quad_vector {
                dot += p * x[i];
            }
            v += self.quad_weight * dot * dot;
        }
        v
    }

    /// grad += scale · ∇g(x).
    fn add_gradient(&self, x: &[T], scale: T, grad: &mut [T]) {
        for &(i, a) in &self.linear {
            grad[i] += scale * a;
        }
        if self.quad_weight != T::zero() {
            let mut dot = T::zero();
            for &(i, p) in &self.quad_vector {
                dot += p * x[i];
            }
            let factor = scale * T::of(2.0) * self.quad_weight * dot;
            for &(i, p) in &self.quad_vector {
                grad[i] += factor * p;
            }
        }
    }

    /// hess += scale · ∇²g(x) (the rank-one 2q·ppᵀ term).
    fn add_hessian(&self, scale: T, hess: &mut [T], n: usize) {
        if self.quad_weight == T::zero() {
            return;
        }
        let factor = scale * T::of(2.0) * self.quad_weight;
        for &(i, pi) in &self.quad_vector {
            for &(j, pj) in &self.quad_vector {
                hess[i * n + j] += factor * pi * pj;
            }
        }
    }

    /// Dense ∇g(x), for the barrier's ∇g∇gᵀ/g² term.
    fn gradient(&self, x: &[T], out: &mut [T]) {
        for o in out.iter_mut() {
            *o = T::zero();
        }
        self.add_gradient(x, T::one(), out);
    }
}

/// Smooth convex objective to minimize.
#[derive(Debug, Clone)]
pub(crate) enum Objective<T> {
    /// c·x.
    Linear(Vec<T>),
    /// −Σ ln x_i over the listed coordinates (maximizing Π x_i).
    NegLogSum(Vec<usize>),
}

impl<T: Real> Objective<T> {
    fn in_domain(&self, x: &[T]) -> bool {
        match self {
            Objective::Linear(_) => true,
            Objective::NegLogSum(idx) => idx.iter().all(|&i| x[i] > T::zero()),
        }
    }

    fn value(&self, x: &[T]) -> T {
        match self {
            Objective::Linear(c) => c.iter().zip(x).fold(T::zero(), |s, (&ci, &xi)| s + ci * xi),
            Objective::NegLogSum(idx) => idx.iter().fold(T::zero(), |s, &i| s - x[i].ln()),
        }
    }

    fn add_grad_hess(&self, x: &[T], scale: T, grad: &mut [T], hess: &mut [T], n: usize) {
        match self {
            Objective::Linear(c) => {
                for (g, &ci) in grad.iter_mut().zip(c) {
                    *g += scale * ci;
                }
            }
            Objective::NegLogSum(idx) => {
                for &i in idx {
                    grad[i] -= scale / x[i];
                    hess[i * n + i] += scale / (x[i] * x[i]);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierProblem<T> {
    pub n: usize,
    pub objective: Objective<T>,
    pub constraints: Vec<Constraint<T>>,
}

const MAX_NEWTON_STEPS: usize = 80;
const MAX_OUTER_STEPS: usize = 64;

impl<T: Real> BarrierProblem<T> {
    pub fn strictly_feasible(&self, x: &[T]) -> bool {
        self.objective.in_domain(x) && self.constraints.iter().all(|c| c.value(x) < T::zero())
    }

    /// Barrier merit t·f(x) + Σ −ln(−g_i(x)); caller guarantees domain.
    fn merit(&self, x: &[T], t_weight: T) -> T {
        let mut m = t_weight * self.objective.value(x);
        for c in &self.constraints {
            m -= (-c.value(x)).ln();
        }
        m
    }

    /// Minimizes the problem from a strictly feasible start. `gap_tol`
    /// bounds the final suboptimality: f(x) − f* ≤ gap_tol.
    pub fn solve(&self, x0: Vec<T>, gap_tol: T) -> Result<Vec<T>, String> {
        if x0.len() != self.n {
            return Err(format!("start has {} coordinates, expected {}", x0.len(), self.n));
        }
        if !self.strictly_feasible(&x0) {
            return Err("start point is not strictly feasible".to_string());
        }
        let m = T::of_usize(self.constraints.len().max(1));
        let mut x = x0;
        let mut t_weight = T::one();
        for _ in 0..MAX_OUTER_STEPS {
            self.center(&mut x, t_weight)?;
            if m / t_weight <= gap_tol {
                return Ok(x);
            }
            t_weight *= T::of(20.0);
        }
        Err("barrier parameter failed to reach the requested gap".to_string())
    }

    /// Damped Newton descent on the barrier merit for fixed `t_weight`.
    fn center(&self, x: &mut [T], t_weight: T) -> Result<(), String> {
        let n = self.n;
        let mut grad = vec![T::zero(); n];
        let mut hess = vec![T::zero(); n * n];
        let mut cgrad = vec![T::zero(); n];

        for _ in 0..MAX_NEWTON_STEPS {
            for g in grad.iter_mut() {
                *g = T::zero();
            }
            for h in hess.iter_mut() {
                *h = T::zero();
            }
            self.objective.add_grad_hess(x, t_weight, &mut grad, &mut hess, n);
            for c in &self.constraints {
                let v = c.value(x);
                // Barrier: −ln(−g) contributes ∇g/(−g) and
                // ∇g∇gᵀ/g² + ∇²g/(−g).
                let inv = -T::one() / v;
                c.add_gradient(x, inv, &mut grad);
                c.add_hessian(inv, &mut hess, n);
                c.gradient(x, &mut cgrad);
                for i in 0..n {
                    if cgrad[i] == T::zero() {
                        continue;
                    }
                    let row = cgrad[i] * inv * inv;
                    for j in 0..n {
                        hess[i * n + j] += row * cgrad[j];
                    }
                }
            }

            let step = solve_spd(&hess, &grad, n)
                .ok_or_else(|| "Newton system is not positive definite".to_string())?;
            let decrement = grad.iter().zip(&step).fold(T::zero(), |s, (&g, &d)| s + g * d);
            if decrement <= T::of(2e-10) {
                return Ok(());
            }

            // Backtrack into strict feasibility, then Armijo on the merit.
            let merit0 = self.merit(x, t_weight);
            let mut scale = T::one();
            let mut accepted = false;
            for _ in 0..70 {
                let trial: Vec<T> = x
                    .iter()
                    .zip(&step)
                    .map(|(&xi, &di)| xi - scale * di)
                    .collect();
                if self.strictly_feasible(&trial)
                    && self.merit(&trial, t_weight)
                        <= merit0 - T::of(0.01) * scale * decrement
                {
                    x.copy_from_slice(&trial);
                    accepted = true;
                    break;
                }
                scale *= T::of(0.5);
            }
            if !accepted {
                // Step shrank to numerical noise: the point is as centered
                // as floating point allows.
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Solves H·y = b for symmetric positive definite H via Cholesky, with an
/// escalating ridge when the factorization meets a nonpositive pivot.
fn solve_spd<T: Real>(hess: &[T], rhs: &[T], n: usize) -> Option<Vec<T>> {
    let mut diag_scale = T::zero();
    for i in 0..n {
        diag_scale = diag_scale.max(hess[i * n + i].abs());
    }
    if diag_scale == T::zero() {
        diag_scale = T::one();
    }
    for ridge_exp in [0i32, -12, -9, -6, -3] {
        let ridge = if ridge_exp == 0 {
            T::zero()
        } else {
            diag_scale * T::of(10.0f64.powi(ridge_exp))
        };
        let mut h = hess.to_vec();
        for i in 0..n {
            h[i * n + i] += ridge;
        }
        if let Some(y) = cholesky_solve(&mut h, rhs, n) {
            return Some(y);
        }
    }
    None
}

/// In-place LLᵀ factorization and solve. Returns None on a nonpositive
/// pivot.
fn cholesky_solve<T: Real>(h: &mut [T], rhs: &[T], n: usize) -> Option<Vec<T>> {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = h[i * n + j];
            for k in 0..j {
                sum -= h[i * n + k] * h[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                h[i * n + i] = sum.sqrt();
            } else {
                h[i * n + j] = sum / h[j * n + j];
            }
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            let yk = y[k];
            y[i] -= h[i * n + k] * yk;
        }
        y[i] /= h[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let yk = y[k];
            y[i] -= h[k * n + i] * yk;
        }
        y[i] /= h[i * n + i];
    }
    Some(y)
}
