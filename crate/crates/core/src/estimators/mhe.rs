//! Moving horizon estimation by projected Gauss–Newton with Levenberg damping.
//!
//! The window holds the scaled augmented states `χ_0 … χ_N` of the last
//! `N + 1` samples. The residual stacks, each whitened by its weight,
//! the arrival-cost term `χ_0 − χ̄_0`, the output errors `y_k − g(χ_k)` and the
//! process errors `χ_{k+1} − f(χ_k, u_k)`. α entries are kept inside 𝒟.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::augmented::AugmentedModel;
use super::{Estimate, Estimator};
use crate::error::{Error, Result};
use crate::pmor::ParamDomain;

#[derive(Debug, Clone, PartialEq)]
pub struct MheSettings {
    pub horizon: usize,
    /// Diagonal of Q (scaled coordinates).
    pub q: Vec<f64>,
    pub r: f64,
    /// Diagonal of the arrival-cost weight P; `None` uses Q.
    pub p: Option<Vec<f64>>,
    pub alpha0: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
}

impl MheSettings {
    pub fn reference(order: usize) -> Self {
        let mut q = vec![1e-3; order];
        q.push(0.15);
        Self {
            horizon: 5,
            q,
            r: 1e2,
            p: None,
            alpha0: 0.0,
            max_iterations: 50,
            step_tolerance: 1e-9,
        }
    }
}

/// The window least-squares problem at one time instant.
#[derive(Debug, Clone)]
pub struct MheProblem<'a> {
    pub model: &'a AugmentedModel,
    pub domain: ParamDomain,
    pub prior: DVector<f64>,
    /// `y_0 … y_N`.
    pub outputs: Vec<f64>,
    /// `u_0 … u_{N−1}`, `u_k` held between `y_k` and `y_{k+1}`.
    pub inputs: Vec<f64>,
    /// `P^{-1/2}`, `Q^{-1/2}` diagonals and `R^{-1/2}`.
    pub prior_weight: DVector<f64>,
    pub process_weight: DVector<f64>,
    pub output_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MheSolution {
    /// Stacked window `χ_0 … χ_N`.
    pub theta: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient: f64,
}

impl MheProblem<'_> {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_vars(&self) -> usize {
        (self.horizon() + 1) * self.model.dim()
    }

    pub fn n_residuals(&self) -> usize {
        let m = self.model.dim();
        m + self.outputs.len() + self.horizon() * m
    }

    fn chi(&self, theta: &DVector<f64>, k: usize) -> DVector<f64> {
        let m = self.model.dim();
        theta.rows(k * m, m).into_owned()
    }

    pub fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        let m = self.model.dim();
        let n_win = self.horizon() + 1;
        let mut r = DVector::zeros(self.n_residuals());
        let c0 = self.chi(theta, 0);
        r.rows_mut(0, m)
            .copy_from(&(c0 - &self.prior).component_mul(&self.prior_weight));
        for k in 0..n_win {
            let ck = self.chi(theta, k);
            r[m + k] = self.output_weight * (self.outputs[k] - self.model.output(&ck));
        }
        let base = m + n_win;
        for k in 0..self.horizon() {
            let pred = self.model.transition(&self.chi(theta, k), self.inputs[k]);
            let e = (self.chi(theta, k + 1) - pred).component_mul(&self.process_weight);
            r.rows_mut(base + k * m, m).copy_from(&e);
        }
        r
    }

    pub fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let m = self.model.dim();
        let n_win = self.horizon() + 1;
        let mut j = DMatrix::zeros(self.n_residuals(), self.n_vars());
        for i in 0..m {
            j[(i, i)] = self.prior_weight[i];
        }
        for k in 0..n_win {
            let h = self.model.output_jacobian(&self.chi(theta, k));
            for i in 0..m {
                j[(m + k, k * m + i)] = -self.output_weight * h[i];
            }
        }
        let base = m + n_win;
        for k in 0..self.horizon() {
            let f = self.model.transition_jacobian(&self.chi(theta, k), self.inputs[k]);
            for i in 0..m {
                let row = base + k * m + i;
                j[(row, (k + 1) * m + i)] = self.process_weight[i];
                for l in 0..m {
                    j[(row, k * m + l)] = -self.process_weight[i] * f[(i, l)];
                }
            }
        }
        j
    }

    pub fn cost(&self, theta: &DVector<f64>) -> f64 {
        self.residual(theta).norm_squared()
    }

    fn is_alpha(&self, idx: usize) -> bool {
        idx % self.model.dim() == self.model.dim() - 1
    }

    pub fn project(&self, theta: &mut DVector<f64>) {
        for i in 0..theta.len() {
            if self.is_alpha(i) {
                theta[i] = self.domain.clamp(theta[i]);
            }
        }
    }

    /// `‖θ − Π(θ − ∇J)‖∞` with `∇J = 2Jᵀr`.
    pub fn projected_gradient(&self, theta: &DVector<f64>) -> f64 {
        let g = self.jacobian(theta).transpose() * self.residual(theta) * 2.0;
        let mut trial = theta - &g;
        self.project(&mut trial);
        (theta - trial).amax()
    }

    pub fn solve(&self, start: &DVector<f64>, max_iterations: usize, step_tol: f64) -> MheSolution {
        let nv = self.n_vars();
        let mut theta = start.clone();
        self.project(&mut theta);
        let mut r = self.residual(&theta);
        let mut cost = r.norm_squared();
        let mut jac = self.jacobian(&theta);
        let mut mu = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iterations {
            iterations += 1;
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &r;
            let free: Vec<usize> = (0..nv)
                .filter(|&i| {
                    if !self.is_alpha(i) {
                        return true;
                    }
                    let at_lo = theta[i] <= self.domain.min() && g[i] > 0.0;
                    let at_hi = theta[i] >= self.domain.max() && g[i] < 0.0;
                    !(at_lo || at_hi)
                })
                .collect();
            let scale = (0..nv).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
            let mut accepted = false;
            loop {
                let k = free.len();
                let mut h = DMatrix::from_fn(k, k, |a, b| jtj[(free[a], free[b])]);
                for a in 0..k {
                    h[(a, a)] += mu;
                }
                let rhs = DVector::from_fn(k, |a, _| -g[free[a]]);
                let step = match h.cholesky() {
                    Some(ch) => ch.solve(&rhs),
                    None => {
                        mu = if mu == 0.0 { 1e-12 * scale } else { mu * 10.0 };
                        continue;
                    }
                };
                let mut trial = theta.clone();
                for (a, &i) in free.iter().enumerate() {
                    trial[i] += step[a];
                }
                self.project(&mut trial);
                let moved = (&trial - &theta).norm();
                let r_trial = self.residual(&trial);
                let c_trial = r_trial.norm_squared();
                if c_trial <= cost {
                    theta = trial;
                    r = r_trial;
                    cost = c_trial;
                    jac = self.jacobian(&theta);
                    mu /= 3.0;
                    accepted = true;
                    if moved < step_tol {
                        converged = true;
                    }
                    break;
                }
                if moved < step_tol {
                    converged = true;
                    break;
                }
                mu = if mu == 0.0 { 1e-12 * scale } else { mu * 4.0 };
                if mu > 1e20 * scale {
                    break;
                }
            }
            if converged || !accepted {
                break;
            }
        }
        MheSolution {
            projected_gradient: self.projected_gradient(&theta),
            theta,
            cost,
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mhe {
    name: String,
    model: AugmentedModel,
    settings: MheSettings,
    domain: ParamDomain,
    prior: DVector<f64>,
    outputs: VecDeque<f64>,
    inputs: VecDeque<f64>,
    window: Vec<DVector<f64>>,
    prior_weight: DVector<f64>,
    process_weight: DVector<f64>,
    last: Option<MheSolution>,
}

fn inv_sqrt(v: &[f64], what: &str) -> Result<DVector<f64>> {
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Estimator(format!("{what} entries must be positive")));
    }
    Ok(DVector::from_iterator(v.len(), v.iter().map(|x| 1.0 / x.sqrt())))
}

impl Mhe {
    pub fn new(name: impl Into<String>, model: AugmentedModel, settings: &MheSettings) -> Result<Self> {
        let m = model.dim();
        let p = settings.p.clone().unwrap_or_else(|| settings.q.clone());
        for (what, len) in [("MHE Q diagonal vs augmented state", settings.q.len()), ("MHE P diagonal vs augmented state", p.len())] {
            if len != m {
                return Err(Error::LengthMismatch { what, left: len, right: m });
            }
        }
        if !(settings.r > 0.0) {
            return Err(Error::Estimator("R must be positive".into()));
        }
        let domain = model.model().domain;
        if !domain.contains(settings.alpha0) {
            return Err(Error::Estimator(format!("initial α {} outside 𝒟", settings.alpha0)));
        }
        let mut prior = DVector::zeros(m);
        prior[m - 1] = settings.alpha0;
        Ok(Self {
            name: name.into(),
            prior_weight: inv_sqrt(&p, "P")?,
            process_weight: inv_sqrt(&settings.q, "Q")?,
            settings: settings.clone(),
            domain,
            prior,
            outputs: VecDeque::new(),
            inputs: VecDeque::new(),
            window: Vec::new(),
            model,
            last: None,
        })
    }

    pub fn last_solution(&self) -> Option<&MheSolution> {
        self.last.as_ref()
    }

    pub fn prior(&self) -> &DVector<f64> {
        &self.prior
    }

    pub fn problem(&self) -> MheProblem<'_> {
        MheProblem {
            model: &self.model,
            domain: self.domain,
            prior: self.prior.clone(),
            outputs: self.outputs.iter().copied().collect(),
            inputs: self.inputs.iter().copied().collect(),
            prior_weight: self.prior_weight.clone(),
            process_weight: self.process_weight.clone(),
            output_weight: 1.0 / self.settings.r.sqrt(),
        }
    }
}

impl Estimator for Mhe {
    fn name(&self) -> &str {
        &self.name
    }

    fn observe(&mut self, input: Option<f64>, y: f64) -> Result<Estimate> {
        match (input, self.window.is_empty()) {
            (None, false) => return Err(Error::Estimator("input missing after the first sample".into())),
            (Some(_), true) => return Err(Error::Estimator("first sample must not carry an input".into())),
            _ => {}
        }
        let m = self.model.dim();
        let mut guess = self.window.clone();
        if let Some(u) = input {
            let next = self.model.transition(guess.last().expect("non-empty"), u);
            guess.push(next);
            self.inputs.push_back(u);
        } else {
            guess.push(self.prior.clone());
        }
        self.outputs.push_back(y);
        if self.outputs.len() > self.settings.horizon + 1 {
            // The window slides: the previous estimate of the new first sample
            // becomes the arrival-cost prior.
            self.outputs.pop_front();
            self.inputs.pop_front();
            guess.remove(0);
            self.prior = guess[0].clone();
        }
        let innovation = y - self.model.output(guess.last().expect("non-empty"));
        let mut start = DVector::zeros(guess.len() * m);
        for (k, g) in guess.iter().enumerate() {
            start.rows_mut(k * m, m).copy_from(g);
        }
        let sol = self
            .problem()
            .solve(&start, self.settings.max_iterations, self.settings.step_tolerance);
        self.window = (0..guess.len()).map(|k| sol.theta.rows(k * m, m).into_owned()).collect();
        let (state, alpha) = self.model.unscale(self.window.last().expect("non-empty"));
        let est = Estimate {
            state,
            alpha,
            innovation,
            cost: Some(sol.cost),
            iterations: Some(sol.iterations),
            converged: sol.converged,
        };
        self.last = Some(sol);
        Ok(est)
    }
}
