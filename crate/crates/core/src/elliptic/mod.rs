//! Conservative finite differences for `A v = -(a v')' - c v` on `(0, L)` with
//! homogeneous Dirichlet conditions, and the full eigendecomposition of the
//! resulting symmetric tridiagonal matrix.

mod tql;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid of `N` interior nodes `x_i = i h`, `h = L / (N + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid1D {
    length: f64,
    n_interior: usize,
    spacing: f64,
}

impl Grid1D {
    pub fn new(length: f64, n_interior: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Parameter(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if n_interior < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 interior nodes, got {n_interior}"
            )));
        }
        Ok(Grid1D {
            length,
            n_interior,
            spacing: length / (n_interior + 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Interior nodes `x_1 .. x_N`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n_interior)
            .map(|i| i as f64 * self.spacing)
            .collect()
    }

    /// Cell midpoints `x_{1/2} .. x_{N+1/2}` where the diffusivity is sampled.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..=self.n_interior)
            .map(|i| (i as f64 + 0.5) * self.spacing)
            .collect()
    }

    /// Discrete inner product `h Σ u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.spacing * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Norm induced by [`Grid1D::inner`].
    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// The operator `A v = -(a v')' - c v` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticProblem {
    grid: Grid1D,
    diffusivity: Vec<f64>,
    reaction: Vec<f64>,
    mu0: f64,
}

impl EllipticProblem {
    /// `diffusivity` holds `N + 1` midpoint samples, `reaction` holds `N` nodal
    /// samples. The reaction may have either sign.
    pub fn new(grid: Grid1D, diffusivity: Vec<f64>, reaction: Vec<f64>, mu0: f64) -> Result<Self> {
        let p = EllipticProblem {
            grid,
            diffusivity,
            reaction,
            mu0,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let n = self.grid.n_interior;
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::Validation(format!(
                "ellipticity floor mu0 must be positive, got {}",
                self.mu0
            )));
        }
        if self.diffusivity.len() != n + 1 {
            return Err(Error::Validation(format!(
                "diffusivity needs {} midpoint samples, got {}",
                n + 1,
                self.diffusivity.len()
            )));
        }
        if self.reaction.len() != n {
            return Err(Error::Validation(format!(
                "reaction needs {n} nodal samples, got {}",
                self.reaction.len()
            )));
        }
        if let Some((i, a)) = self
            .diffusivity
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a >= self.mu0 && a.is_finite()))
        {
            return Err(Error::Validation(format!(
                "diffusivity {a} at midpoint {i} is below the ellipticity floor {}",
                self.mu0
            )));
        }
        if let Some(i) = self.reaction.iter().position(|c| !c.is_finite()) {
            return Err(Error::Validation(format!(
                "reaction is not finite at node {i}"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn diffusivity(&self) -> &[f64] {
        &self.diffusivity
    }

    pub fn reaction(&self) -> &[f64] {
        &self.reaction
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// `max_i |c_i|`.
    pub fn reaction_bound(&self) -> f64 {
        self.reaction.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Same problem with another reaction coefficient.
    pub fn with_reaction(&self, reaction: Vec<f64>) -> Result<Self> {
        EllipticProblem::new(self.grid, self.diffusivity.clone(), reaction, self.mu0)
    }
}

/// Symmetric tridiagonal matrix of the discrete operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * v[i];
                if i > 0 {
                    s += self.off_diagonal[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off_diagonal[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = self.diagonal[i];
            if i + 1 < n {
                m[[i, i + 1]] = self.off_diagonal[i];
                m[[i + 1, i]] = self.off_diagonal[i];
            }
        }
        m
    }
}

/// Assembles the three-point stencil
/// `-(a_{i+1/2}(v_{i+1}-v_i) - a_{i-1/2}(v_i-v_{i-1}))/h² - c_i v_i` with `v_0 = v_{N+1} = 0`.
pub fn assemble(problem: &EllipticProblem) -> Result<OperatorMatrix> {
    problem.validate()?;
    let n = problem.grid.n_interior;
    let h2 = problem.grid.spacing * problem.grid.spacing;
    let a = &problem.diffusivity;
    let diagonal = (0..n)
        .map(|i| (a[i] + a[i + 1]) / h2 - problem.reaction[i])
        .collect();
    let off_diagonal = (1..n).map(|i| -a[i] / h2).collect();
    Ok(OperatorMatrix {
        diagonal,
        off_diagonal,
    })
}

/// Replaces `c` by `c - sigma`.
pub fn shift_reaction(problem: &EllipticProblem, sigma: f64) -> EllipticProblem {
    EllipticProblem {
        reaction: problem.reaction.iter().map(|c| c - sigma).collect(),
        ..problem.clone()
    }
}

/// Eigenpairs `(μ_n, φ_n)` sorted by `μ_n`, with `(φ_n, φ_m) = δ_nm` in the
/// h-weighted inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    grid: Grid1D,
    eigenvalues: Vec<f64>,
    /// Row `n` holds `φ_n` at the interior nodes.
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `φ_n` at the interior nodes.
    pub fn mode(&self, n: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.row(n)
    }

    /// Coefficients `(u, φ_n)` for every mode.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        let u = ArrayView1::from(u);
        (self.eigenvectors.dot(&u) * self.grid.spacing).to_vec()
    }

    /// `Σ_n coeffs[n] φ_n`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let c = ArrayView1::from(coeffs);
        self.eigenvectors.t().dot(&c).to_vec()
    }

    /// Projects every row of `fields` (shape `(rows, N)`) onto the eigenbasis.
    pub fn project_rows(&self, fields: &Array2<f64>) -> Array2<f64> {
        fields.dot(&self.eigenvectors.t()) * self.grid.spacing
    }

    /// Inverse of [`SpectralDecomposition::project_rows`].
    pub fn synthesize_rows(&self, coeffs: &Array2<f64>) -> Array2<f64> {
        coeffs.dot(&self.eigenvectors)
    }
}

/// Full eigendecomposition of an assembled operator.
///
/// Each eigenvector is scaled to unit h-weighted norm and its sign is fixed so that
/// the first component exceeding `1e-8` of the largest magnitude is positive.
pub fn eigendecompose(matrix: &OperatorMatrix, grid: &Grid1D) -> Result<SpectralDecomposition> {
    let n = matrix.dim();
    if n != grid.n_interior || matrix.off_diagonal.len() + 1 != n {
        return Err(Error::Validation(format!(
            "operator of dimension {n} does not match a grid with {} interior nodes",
            grid.n_interior
        )));
    }
    let (values, vectors) = tql::tql2(&matrix.diagonal, &matrix.off_diagonal)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));

    let scale = 1.0 / grid.spacing.sqrt();
    let mut eigenvectors = Array2::zeros((n, n));
    for (row, &j) in eigenvectors.axis_iter_mut(Axis(0)).zip(&order) {
        let mut v = Array1::from(vectors[j].clone());
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = v
            .iter()
            .find(|x| x.abs() > 1e-8 * peak)
            .copied()
            .unwrap_or(1.0);
        let norm = v.dot(&v).sqrt();
        v *= lead.signum() * scale / norm;
        v.assign_to(row);
    }
    Ok(SpectralDecomposition {
        grid: *grid,
        eigenvalues: order.iter().map(|&j| values[j]).collect(),
        eigenvectors,
    })
}

/// Assembles and decomposes in one step.
pub fn decompose(problem: &EllipticProblem) -> Result<SpectralDecomposition> {
    eigendecompose(&assemble(problem)?, &problem.grid)
}
