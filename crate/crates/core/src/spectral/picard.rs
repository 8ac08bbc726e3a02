//! Fixed-point solver for a reaction coefficient of arbitrary sign.
//!
//! With `M = max|c|` and `σ = M + 1` the shifted operator has reaction `c - σ < 0`,
//! and the solution is the limit of
//!
//! ```text
//! u_0 = 0,   u_{n+1} = L_σ(a, F + σ u_n)
//! ```
//!
//! where `L_σ` is the direct solution operator of the shifted problem. The shifted
//! operator has the same eigenvectors as the original one, so the iteration runs
//! entirely on modal coefficients.
//!
//! The differences `d_n = u_n - u_{n-1}` obey the a-priori bound
//! `||d_n|| ≤ (C Γ(α) T^α)^{n-1} M₀ / Γ((n-1)α + 1)` with `M₀ = max_t ||u_1||`.
//! The constant `C` is not known in closed form; it is estimated from the first
//! two residuals and the bound is reported alongside the observed residuals.

use ndarray::{Array2, Zip};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::{modal_sup_norm, trajectory, FractionalProblem, ModalPropagator, SpaceTimeField};
use crate::elliptic::{decompose, shift_reaction};
use crate::error::{Error, Result};

/// Stopping and shift settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicardOptions {
    /// Stop once `max_k ||u_n(t_k) - u_{n-1}(t_k)||_h` is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Overrides `σ = M + 1`; must be at least `M + 1`.
    pub shift: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-10,
            max_iter: 100,
            shift: None,
        }
    }
}

impl PicardOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        PicardOptions {
            tol,
            max_iter,
            shift: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "Picard tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// `σ` for a reaction bound `M`.
    pub(crate) fn shift_for(&self, bound: f64) -> Result<f64> {
        match self.shift {
            None => Ok(bound + 1.0),
            Some(s) if s >= bound + 1.0 && s.is_finite() => Ok(s),
            Some(s) => Err(Error::Parameter(format!(
                "Picard shift {s} is below max|c| + 1 = {}",
                bound + 1.0
            ))),
        }
    }
}

/// Diagnostics of one fixed-point solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PicardReport {
    /// `σ` used in the shifted problem.
    pub shift: f64,
    /// `M = max|c|`.
    pub reaction_bound: f64,
    pub tol: f64,
    /// `residuals[n-1] = max_k ||u_n(t_k) - u_{n-1}(t_k)||_h`.
    pub residuals: Vec<f64>,
    /// `residuals[n] / residuals[n-1]`.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `M₀ = max_t ||u_1||`.
    pub m0: f64,
    /// Empirical `C` fitted so that the bound is tight at `n = 2`.
    pub c_estimate: Option<f64>,
    /// A-priori bound evaluated with `c_estimate`, aligned with `residuals`.
    pub bound: Vec<f64>,
}

impl PicardReport {
    pub(crate) fn new(
        shift: f64,
        reaction_bound: f64,
        tol: f64,
        alpha: f64,
        horizon: f64,
        residuals: Vec<f64>,
    ) -> Self {
        let converged = residuals.last().is_some_and(|&r| r <= tol);
        let ratios = residuals
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        let m0 = residuals.first().copied().unwrap_or(0.0);
        let t_alpha = horizon.powf(alpha);
        let c_estimate = match residuals.get(1) {
            Some(&r2) if m0 > 0.0 => Some(alpha * r2 / (t_alpha * m0)),
            _ => None,
        };
        let bound = match c_estimate {
            Some(c) => {
                let ln_base = (c * t_alpha).ln() + ln_gamma(alpha);
                (0..residuals.len())
                    .map(|i| {
                        let n1 = i as f64;
                        if i == 0 {
                            m0
                        } else {
                            (n1 * ln_base + m0.ln() - ln_gamma(n1 * alpha + 1.0)).exp()
                        }
                    })
                    .collect()
            }
            None => vec![m0; residuals.len().min(1)],
        };
        PicardReport {
            shift,
            reaction_bound,
            tol,
            iterations: residuals.len(),
            residuals,
            ratios,
            converged,
            m0,
            c_estimate,
            bound,
        }
    }

    /// True when the residuals are strictly decreasing from some iteration on,
    /// ignoring residuals already at or below `floor` (rounding noise).
    pub fn eventually_decreasing(&self, floor: f64) -> bool {
        let r: Vec<f64> = self
            .residuals
            .iter()
            .copied()
            .take_while(|&x| x > floor)
            .collect();
        if r.len() < 2 {
            return true;
        }
        // last index at which the sequence failed to decrease
        let last_rise = r.windows(2).rposition(|w| w[1] >= w[0]);
        match last_rise {
            None => true,
            Some(i) => i + 2 < r.len(),
        }
    }

    /// Largest contraction ratio observed after the first `skip` iterations.
    pub fn max_ratio_after(&self, skip: usize) -> f64 {
        self.ratios.iter().skip(skip).copied().fold(0.0, f64::max)
    }
}

/// Solves the problem for any bounded reaction by the shifted fixed-point iteration.
///
/// On non-convergence the error carries the full report.
pub fn picard_solve(
    problem: &FractionalProblem,
    opts: &PicardOptions,
) -> Result<(SpaceTimeField, PicardReport)> {
    opts.validate()?;
    let bound = problem.elliptic.reaction_bound();
    let sigma = opts.shift_for(bound)?;
    let shifted = shift_reaction(&problem.elliptic, sigma);
    let decomp = decompose(&shifted)?;
    let prop = ModalPropagator::new(&decomp, problem.alpha, &problem.time)?;

    let a_hat = decomp.project(&problem.initial);
    let f_hat = decomp.project_rows(problem.source.values());
    let base = prop.solve(&a_hat, &f_hat);
    let (u, residuals) = iterate(&prop, &base, sigma, opts);

    let report = PicardReport::new(
        sigma,
        bound,
        opts.tol,
        problem.alpha,
        problem.time.horizon(),
        residuals,
    );
    if !report.converged {
        return Err(Error::Convergence(Box::new(report)));
    }
    let field = trajectory(&decomp, &u, &problem.initial)?;
    Ok((field, report))
}

/// Runs `u_{n+1} = base + σ W u_n` from `u_1 = base`, returning the last iterate
/// and the residual history.
fn iterate(
    prop: &ModalPropagator,
    base: &Array2<f64>,
    sigma: f64,
    opts: &PicardOptions,
) -> (Array2<f64>, Vec<f64>) {
    let mut u = base.clone();
    let mut residuals = vec![modal_sup_norm(&u)];
    while residuals.len() < opts.max_iter && *residuals.last().unwrap() > opts.tol {
        let mut next = prop.convolve(&u);
        Zip::from(&mut next)
            .and(base)
            .for_each(|n, &b| *n = b + sigma * *n);
        let r = modal_sup_norm(&(&next - &u));
        u = next;
        residuals.push(r);
        if !r.is_finite() {
            break;
        }
    }
    (u, residuals)
}
