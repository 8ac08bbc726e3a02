//! Modal solution operators.
//!
//! For a decomposition `(μ_n, φ_n)` with every `μ_n > 0`,
//!
//! ```text
//! S(t) a = Σ_n E_{α,1}(-μ_n t^α) (a, φ_n) φ_n
//! K(t) f = Σ_n t^{α-1} E_{α,α}(-μ_n t^α) (f, φ_n) φ_n
//! u(t)   = S(t) a + ∫_0^t K(t-s) F(s) ds
//! ```
//!
//! The source is held constant on each `[t_j, t_{j+1})` at its left-endpoint value.
//! Because `d/dt E_{α,1}(-μ t^α) = -μ t^{α-1} E_{α,α}(-μ t^α)`, the convolution of
//! each piece is a difference of decay factors divided by `μ_n`, so no quadrature
//! of the singular kernel is needed.

mod coupled;
mod picard;

pub use coupled::{solve_coupled, CoupledSolution, CouplingMatrix};
pub use picard::{picard_solve, PicardOptions, PicardReport};

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{decompose, EllipticProblem, Grid1D, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::mlf::{MittagLeffler, MlfParams};

/// Uniform time grid `t_k = k T / K`, `k = 0..=K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Parameter(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::Parameter("need at least one time step".into()));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

/// Values on the space-time grid, one row per time level: shape `(K+1, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    values: Array2<f64>,
}

impl SpaceTimeField {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(((k, i), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "field value at time index {k}, node {i} is not finite"
            )));
        }
        Ok(SpaceTimeField { values })
    }

    pub fn zeros(grid: &Grid1D, time: &TimeGrid) -> Self {
        SpaceTimeField {
            values: Array2::zeros((time.n_steps + 1, grid.n_interior())),
        }
    }

    /// Samples `f(x_i, t_k)`.
    pub fn from_fn(grid: &Grid1D, time: &TimeGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let x = grid.nodes();
        let values =
            Array2::from_shape_fn((time.n_steps + 1, x.len()), |(k, i)| f(x[i], time.time(k)));
        SpaceTimeField::new(values)
    }

    /// The same spatial profile at every time level.
    pub fn constant_in_time(profile: &[f64], time: &TimeGrid) -> Result<Self> {
        let row = ArrayView1::from(profile);
        let values = row
            .broadcast((time.n_steps + 1, profile.len()))
            .expect("row broadcasts")
            .to_owned();
        SpaceTimeField::new(values)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn n_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.ncols()
    }

    /// Spatial profile at time index `k`.
    pub fn at(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    /// Profile at the final time level.
    pub fn terminal(&self) -> Vec<f64> {
        self.at(self.n_times() - 1).to_vec()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_k ||u(t_k) - v(t_k)||_h`.
    pub fn sup_distance(&self, other: &SpaceTimeField, grid: &Grid1D) -> f64 {
        let d = &self.values - &other.values;
        d.axis_iter(Axis(0))
            .map(|row| grid.norm(row.as_slice().expect("contiguous row")))
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &SpaceTimeField {
    type Output = SpaceTimeField;

    fn add(self, o: &SpaceTimeField) -> SpaceTimeField {
        SpaceTimeField {
            values: &self.values + &o.values,
        }
    }
}

/// The initial-boundary-value problem on `(0, L) × (0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalProblem {
    alpha: f64,
    elliptic: EllipticProblem,
    initial: Vec<f64>,
    source: SpaceTimeField,
    time: TimeGrid,
}

impl FractionalProblem {
    pub fn new(
        alpha: f64,
        elliptic: EllipticProblem,
        initial: Vec<f64>,
        source: SpaceTimeField,
        time: TimeGrid,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let n = elliptic.grid().n_interior();
        if initial.len() != n {
            return Err(Error::Validation(format!(
                "initial data has {} values for {n} interior nodes",
                initial.len()
            )));
        }
        if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "initial data is not finite at node {i}"
            )));
        }
        if source.values.dim() != (time.n_steps + 1, n) {
            return Err(Error::Validation(format!(
                "source has shape {:?}, expected ({}, {n})",
                source.values.dim(),
                time.n_steps + 1
            )));
        }
        Ok(FractionalProblem {
            alpha,
            elliptic,
            initial,
            source,
            time,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn elliptic(&self) -> &EllipticProblem {
        &self.elliptic
    }

    pub fn grid(&self) -> &Grid1D {
        self.elliptic.grid()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn source(&self) -> &SpaceTimeField {
        &self.source
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn with_elliptic(&self, elliptic: EllipticProblem) -> Result<Self> {
        FractionalProblem::new(
            self.alpha,
            elliptic,
            self.initial.clone(),
            self.source.clone(),
            self.time,
        )
    }

    pub fn with_data(&self, initial: Vec<f64>, source: SpaceTimeField) -> Result<Self> {
        FractionalProblem::new(
            self.alpha,
            self.elliptic.clone(),
            initial,
            source,
            self.time,
        )
    }
}

/// Decay factors `e_n[m] = E_{α,1}(-μ_n t_m^α)` and their scaled differences
/// `g_n[m] = (e_n[m-1] - e_n[m]) / μ_n` for one decomposition and time grid.
#[derive(Clone, Debug)]
pub struct ModalPropagator {
    /// Shape `(N, K+1)`.
    decay: Array2<f64>,
    /// Shape `(N, K+1)`; column 0 is unused.
    increment: Array2<f64>,
}

impl ModalPropagator {
    /// Requires every eigenvalue to be positive.
    pub fn new(decomp: &SpectralDecomposition, alpha: f64, time: &TimeGrid) -> Result<Self> {
        if let Some((n, mu)) = decomp
            .eigenvalues()
            .iter()
            .enumerate()
            .find(|(_, &mu)| !(mu > 0.0))
        {
            return Err(Error::Validation(format!(
                "eigenvalue {n} is {mu:e}; the source convolution needs a positive spectrum \
                 (shift the reaction or use the Picard solver)"
            )));
        }
        let e = MittagLeffler::new(MlfParams::new(alpha, 1.0)?);
        let t_alpha: Vec<f64> = time.times().iter().map(|t| t.powf(alpha)).collect();
        let k1 = t_alpha.len();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = decomp
            .eigenvalues()
            .par_iter()
            .map(|&mu| {
                let d = t_alpha
                    .iter()
                    .map(|&ta| e.eval(-mu * ta))
                    .collect::<Result<Vec<f64>>>()?;
                let mut g = vec![0.0; k1];
                for m in 1..k1 {
                    g[m] = (d[m - 1] - d[m]) / mu;
                }
                Ok((d, g))
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        let mut decay = Array2::zeros((n, k1));
        let mut increment = Array2::zeros((n, k1));
        for (i, (d, g)) in rows.into_iter().enumerate() {
            decay.row_mut(i).assign(&Array1::from(d));
            increment.row_mut(i).assign(&Array1::from(g));
        }
        Ok(ModalPropagator { decay, increment })
    }

    pub fn n_modes(&self) -> usize {
        self.decay.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.decay.ncols()
    }

    /// `e_n[k] a_n` for every time level; shape `(K+1, N)`.
    pub fn free(&self, a_hat: &[f64]) -> Array2<f64> {
        let a = ArrayView1::from(a_hat);
        let mut out = self.decay.t().to_owned();
        out *= &a;
        out
    }

    /// `w_n[k] = Σ_{j<k} g_n[k-j] f_n[j]` for modal source samples of shape `(K+1, N)`.
    pub fn convolve(&self, f_hat: &Array2<f64>) -> Array2<f64> {
        let k1 = self.n_times();
        let mut out = Array2::zeros((k1, self.n_modes()));
        let cols: Vec<Vec<f64>> = (0..self.n_modes())
            .into_par_iter()
            .map(|n| {
                let g = self.increment.row(n);
                let g = g.as_slice().expect("contiguous row");
                let f: Vec<f64> = f_hat.column(n).to_vec();
                let mut w = vec![0.0; k1];
                for (k, wk) in w.iter_mut().enumerate().skip(1) {
                    // g[k-j] for j = 0..k pairs with f[j]
                    let mut s = 0.0;
                    for (fj, gk) in f[..k].iter().zip(g[1..=k].iter().rev()) {
                        s += gk * fj;
                    }
                    *wk = s;
                }
                w
            })
            .collect();
        for (n, w) in cols.into_iter().enumerate() {
            out.column_mut(n).assign(&Array1::from(w));
        }
        out
    }

    /// Modal solution `e_n[k] a_n + w_n[k]`.
    pub fn solve(&self, a_hat: &[f64], f_hat: &Array2<f64>) -> Array2<f64> {
        let mut u = self.convolve(f_hat);
        Zip::from(&mut u)
            .and(&self.free(a_hat))
            .for_each(|u, &f| *u += f);
        u
    }
}

/// `S(t) a`.
pub fn apply_s(decomp: &SpectralDecomposition, alpha: f64, t: f64, a: &[f64]) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let e = MittagLeffler::new(MlfParams::new(alpha, 1.0)?);
    let ta = t.powf(alpha);
    let coeffs = decomp
        .project(a)
        .iter()
        .zip(decomp.eigenvalues())
        .map(|(c, &mu)| Ok(c * e.eval(-mu * ta)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(decomp.synthesize(&coeffs))
}

/// `∫_0^{t_k} K(t_k - s) F(s) ds` at every grid time, exact for the
/// piecewise-constant source.
pub fn convolve_k(
    decomp: &SpectralDecomposition,
    alpha: f64,
    time: &TimeGrid,
    source: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    check_shape(decomp, time, source)?;
    let prop = ModalPropagator::new(decomp, alpha, time)?;
    let w = prop.convolve(&decomp.project_rows(source.values()));
    SpaceTimeField::new(decomp.synthesize_rows(&w))
}

fn check_shape(decomp: &SpectralDecomposition, time: &TimeGrid, f: &SpaceTimeField) -> Result<()> {
    if f.values.dim() != (time.n_steps + 1, decomp.len()) {
        return Err(Error::Validation(format!(
            "source has shape {:?}, expected ({}, {})",
            f.values.dim(),
            time.n_steps + 1,
            decomp.len()
        )));
    }
    Ok(())
}

/// `L(a, F)` for a problem whose reaction is negative at every node.
pub fn solve_linear(problem: &FractionalProblem) -> Result<SpaceTimeField> {
    if let Some(i) = problem.elliptic.reaction().iter().position(|&c| !(c < 0.0)) {
        return Err(Error::Validation(format!(
            "direct solve needs a negative reaction, but c = {} at node {i}; use the Picard solver",
            problem.elliptic.reaction()[i]
        )));
    }
    let decomp = decompose(&problem.elliptic)?;
    solve_with(&decomp, problem)
}

/// `L(a, F)` given the decomposition of the problem's operator.
pub(crate) fn solve_with(
    decomp: &SpectralDecomposition,
    problem: &FractionalProblem,
) -> Result<SpaceTimeField> {
    let prop = ModalPropagator::new(decomp, problem.alpha, &problem.time)?;
    let a_hat = decomp.project(&problem.initial);
    let f_hat = decomp.project_rows(problem.source.values());
    trajectory(decomp, &prop.solve(&a_hat, &f_hat), &problem.initial)
}

/// Nodal trajectory of modal coefficients; the `t = 0` row is the initial value
/// itself, since `S(0)` is the identity.
pub(crate) fn trajectory(
    decomp: &SpectralDecomposition,
    modal: &Array2<f64>,
    initial: &[f64],
) -> Result<SpaceTimeField> {
    let mut u = decomp.synthesize_rows(modal);
    u.row_mut(0).assign(&ArrayView1::from(initial));
    SpaceTimeField::new(u)
}

/// `max_k` of the Euclidean norm of each row of a modal array, which equals the
/// h-weighted norm of the nodal field.
pub(crate) fn modal_sup_norm(a: &Array2<f64>) -> f64 {
    a.axis_iter(Axis(0))
        .map(|row| row.dot(&row).sqrt())
        .fold(0.0, f64::max)
}
