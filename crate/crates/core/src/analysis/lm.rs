//! Dense Levenberg–Marquardt for small problems.
//!
//! Minimises `½‖r(p)‖²` with Marquardt's diagonal scaling: each step solves
//! `(JᵀJ + λ·diag(JᵀJ)) δ = −Jᵀr`, shrinking λ after an accepted step and
//! growing it after a rejected one.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquaresProblem {
    fn residuals(&self, params: &[f64]) -> Vec<f64>;
    /// `m × n` matrix of `∂r_i/∂p_j`.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevenbergMarquardt {
    pub max_iterations: usize,
    /// Bound on `‖Jᵀr‖∞` at the solution.
    pub gradient_tolerance: f64,
    /// Relative step size below which iteration stops.
    pub parameter_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            parameter_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    SmallStep,
    /// No damping makes progress.
    Stalled,
    MaxIterations,
    /// Residuals became non-finite at the starting point.
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub termination: Termination,
}

impl Solution {
    pub fn residual_rms(&self) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }

    /// 1σ parameter uncertainties from `s²·(JᵀJ)⁻¹` with
    /// `s² = Σr² / max(m − n, 1)`. Parameters the data cannot identify get
    /// an infinite uncertainty.
    pub fn uncertainties(&self) -> Vec<f64> {
        let n = self.params.len();
        let m = self.residuals.len();
        let dof = m.saturating_sub(n).max(1) as f64;
        let s2 = self.residuals.iter().map(|r| r * r).sum::<f64>() / dof;
        let jtj = self.jacobian.transpose() * &self.jacobian;
        match jtj.clone().try_inverse() {
            Some(cov) => (0..n)
                .map(|j| {
                    let v = cov[(j, j)] * s2;
                    if v.is_finite() && v >= 0.0 {
                        v.sqrt()
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
            None => vec![f64::INFINITY; n],
        }
    }
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn gradient(jac: &DMatrix<f64>, r: &[f64]) -> DVector<f64> {
    jac.transpose() * DVector::from_column_slice(r)
}

impl LevenbergMarquardt {
    pub fn minimize<P: LeastSquaresProblem>(&self, problem: &P, initial: Vec<f64>) -> Solution {
        let n = initial.len();
        let mut params = initial;
        let mut r = problem.residuals(&params);
        let mut jac = problem.jacobian(&params);
        if !r.iter().all(|x| x.is_finite()) {
            let gradient_norm = f64::INFINITY;
            return Solution {
                params,
                residuals: r,
                jacobian: jac,
                iterations: 0,
                gradient_norm,
                converged: false,
                termination: Termination::NonFinite,
            };
        }
        let mut current = cost(&r);
        let mut lambda = self.initial_damping;
        let mut iterations = 0;
        let mut g = gradient(&jac, &r);

        let termination = loop {
            if g.amax() <= self.gradient_tolerance {
                break Termination::Gradient;
            }
            if iterations >= self.max_iterations {
                break Termination::MaxIterations;
            }
            iterations += 1;

            let jtj = jac.transpose() * &jac;
            let diag_max = jtj.diagonal().amax();
            let floor = if diag_max > 0.0 {
                diag_max * 1e-15
            } else {
                1.0
            };
            let scale: Vec<f64> = (0..n).map(|j| jtj[(j, j)].max(floor)).collect();

            let mut accepted = None;
            while lambda <= 1e16 {
                let mut lhs = jtj.clone();
                for (j, s) in scale.iter().enumerate() {
                    lhs[(j, j)] += lambda * s;
                }
                let Some(chol) = lhs.cholesky() else {
                    lambda *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
                let r_trial = problem.residuals(&trial);
                let c_trial = cost(&r_trial);
                if c_trial.is_finite() && c_trial < current {
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = Some((trial, r_trial, c_trial, step));
                    break;
                }
                lambda *= 10.0;
            }

            let Some((trial, r_trial, c_trial, step)) = accepted else {
                break Termination::Stalled;
            };
            let p_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
            params = trial;
            r = r_trial;
            current = c_trial;
            jac = problem.jacobian(&params);
            g = gradient(&jac, &r);
            if step.norm() <= self.parameter_tolerance * (p_norm + self.parameter_tolerance) {
                break Termination::SmallStep;
            }
        };

        let gradient_norm = g.amax();
        Solution {
            params,
            residuals: r,
            jacobian: jac,
            iterations,
            gradient_norm,
            converged: gradient_norm <= self.gradient_tolerance,
            termination,
        }
    }
}

/// Central finite-difference Jacobian with relative step `rel_step`.
pub fn numerical_jacobian<P: LeastSquaresProblem>(
    problem: &P,
    params: &[f64],
    rel_step: f64,
) -> DMatrix<f64> {
    let m = problem.residuals(params).len();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut p = params.to_vec();
    for j in 0..n {
        let h = rel_step * params[j].abs().max(1.0);
        p[j] = params[j] + h;
        let up = problem.residuals(&p);
        p[j] = params[j] - h;
        let down = problem.residuals(&p);
        p[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquaresProblem for Rosenbrock {
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
        }
        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0])
        }
    }

    /// y = a·exp(−b·x) sampled without noise.
    struct Decay {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquaresProblem for Decay {
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.x
                .iter()
                .zip(&self.y)
                .map(|(x, y)| p[0] * (-p[1] * x).exp() - y)
                .collect()
        }
        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            let mut j = DMatrix::zeros(self.x.len(), 2);
            for (i, x) in self.x.iter().enumerate() {
                let e = (-p[1] * x).exp();
                j[(i, 0)] = e;
                j[(i, 1)] = -p[0] * x * e;
            }
            j
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let sol = LevenbergMarquardt::default().minimize(&Rosenbrock, vec![-1.2, 1.0]);
        assert!(sol.converged, "{:?}", sol.termination);
        assert!((sol.params[0] - 1.0).abs() < 1e-9);
        assert!((sol.params[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_exponential() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let problem = Decay { x, y };
        let sol = LevenbergMarquardt::default().minimize(&problem, vec![1.0, 0.5]);
        assert!(sol.converged);
        assert!((sol.params[0] - 2.5).abs() < 1e-9);
        assert!((sol.params[1] - 1.3).abs() < 1e-9);
        assert!(sol.residual_rms() < 1e-10);
    }

    #[test]
    fn analytic_matches_numeric_jacobian() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y = vec![0.0; 10];
        let problem = Decay { x, y };
        let p = [1.7, 0.4];
        let a = problem.jacobian(&p);
        let n = numerical_jacobian(&problem, &p, 1e-6);
        assert!((a - n).amax() < 1e-8);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let lm = LevenbergMarquardt {
            max_iterations: 2,
            ..Default::default()
        };
        let sol = lm.minimize(&Rosenbrock, vec![-1.2, 1.0]);
        assert!(!sol.converged);
        assert_eq!(sol.termination, Termination::MaxIterations);
        assert_eq!(sol.iterations, 2);
    }
}
