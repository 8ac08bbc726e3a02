//! Implicit L1 time stepping, an independent check on the spectral solver.
//!
//! The Caputo derivative at `t_k` is approximated by
//!
//! ```text
//! r Σ_{j=0}^{k-1} b_j (u^{k-j} - u^{k-j-1}),   r = Δt^{-α} / Γ(2-α),
//! b_j = (j+1)^{1-α} - j^{1-α},
//! ```
//!
//! which gives one tridiagonal solve per step:
//!
//! ```text
//! (r I + A) u^k = r [ Σ_{j=1}^{k-1} (b_{j-1} - b_j) u^{k-j} + b_{k-1} u^0 ] + F(t_k).
//! ```
//!
//! Only the elliptic assembler is shared with the spectral path. No shift is applied
//! for a reaction of either sign; instead `r I + A` must be positive definite.

use ndarray::Array2;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::elliptic::{assemble, OperatorMatrix};
use crate::error::{Error, Result};
use crate::spectral::{FractionalProblem, SpaceTimeField};

/// `b_j = (j+1)^{1-α} - j^{1-α}` for `j = 0..K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L1Weights {
    pub alpha: f64,
    pub b: Vec<f64>,
}

/// The first `k` L1 weights.
pub fn l1_weights(alpha: f64, k: usize) -> Result<L1Weights> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if k == 0 {
        return Err(Error::Parameter("need at least one L1 weight".into()));
    }
    let p = 1.0 - alpha;
    let b = (0..k)
        .map(|j| {
            if j == 0 {
                1.0
            } else {
                // j^p ((1 + 1/j)^p - 1) without cancellation
                let j = j as f64;
                j.powf(p) * (p * (1.0 / j).ln_1p()).exp_m1()
            }
        })
        .collect();
    Ok(L1Weights { alpha, b })
}

/// LDLᵀ factors of a symmetric positive definite tridiagonal matrix.
struct Factored {
    /// Pivots `d_i`.
    pivots: Vec<f64>,
    /// Multipliers `l_i` below the diagonal.
    lower: Vec<f64>,
}

impl Factored {
    fn new(m: &OperatorMatrix, shift: f64) -> Result<Self> {
        let n = m.dim();
        let mut pivots = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        let mut prev = 0.0;
        for i in 0..n {
            let mut d = m.diagonal[i] + shift;
            if i > 0 {
                let l = m.off_diagonal[i - 1] / prev;
                d -= l * m.off_diagonal[i - 1];
                lower.push(l);
            }
            if !(d > 0.0) {
                return Err(Error::Stability { row: i, pivot: d });
            }
            pivots.push(d);
            prev = d;
        }
        Ok(Factored { pivots, lower })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        for (v, d) in x.iter_mut().zip(&self.pivots) {
            *v /= d;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.lower[i] * x[i + 1];
        }
    }
}

/// Full trajectory of the implicit L1 scheme.
pub fn l1_solve(problem: &FractionalProblem) -> Result<SpaceTimeField> {
    let alpha = problem.alpha();
    let time = problem.time();
    let k_steps = time.n_steps();
    let n = problem.grid().n_interior();
    let w = l1_weights(alpha, k_steps)?;
    let r = time.dt().powf(-alpha) / gamma(2.0 - alpha);
    let matrix = assemble(problem.elliptic())?;
    let lu = Factored::new(&matrix, r)?;

    // history coefficients b_{j-1} - b_j, j = 1..K-1
    let diff: Vec<f64> = w.b.windows(2).map(|p| p[0] - p[1]).collect();
    let source = problem.source().values();
    let mut u = Array2::zeros((k_steps + 1, n));
    u.row_mut(0)
        .assign(&ndarray::ArrayView1::from(problem.initial()));
    let mut rhs = vec![0.0; n];
    for k in 1..=k_steps {
        let u0 = u.row(0);
        for (i, v) in rhs.iter_mut().enumerate() {
            *v = w.b[k - 1] * u0[i];
        }
        for j in 1..k {
            let c = diff[j - 1];
            let past = u.row(k - j);
            for (v, p) in rhs.iter_mut().zip(past.iter()) {
                *v += c * p;
            }
        }
        let f = source.row(k);
        for (v, fk) in rhs.iter_mut().zip(f.iter()) {
            *v = r * *v + fk;
        }
        lu.solve_in_place(&mut rhs);
        u.row_mut(k).assign(&ndarray::ArrayView1::from(&rhs[..]));
    }
    SpaceTimeField::new(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_weights() {
        let w = l1_weights(0.5, 3).unwrap();
        assert_eq!(w.b[0], 1.0);
        assert!((w.b[1] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(l1_weights(1.0, 3).is_err());
        assert!(l1_weights(0.5, 0).is_err());
    }

    #[test]
    fn factorization_solves_and_rejects_indefinite() {
        let m = OperatorMatrix {
            diagonal: vec![2.0, 2.0, 2.0],
            off_diagonal: vec![-1.0, -1.0],
        };
        let f = Factored::new(&m, 1.0).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        f.solve_in_place(&mut x);
        let shifted = OperatorMatrix {
            diagonal: vec![3.0; 3],
            off_diagonal: vec![-1.0; 2],
        };
        let back = shifted.apply(&x);
        for (b, want) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - want).abs() < 1e-14);
        }
        assert!(matches!(
            Factored::new(&m, -1.9),
            Err(Error::Stability { .. })
        ));
    }
}
