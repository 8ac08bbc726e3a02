//! Weakly coupled systems
//!
//! ```text
//! ∂_t^α u_i = (a_i u_i')' + c_i u_i + Σ_j p_ij(x) u_j + F_i,   i = 1..S
//! ```
//!
//! with `p_ij ≥ 0` for `i ≠ j`. Species `i` is shifted by
//! `σ_i = 1 + max_x Σ_j |P_ij(x)|`, where `P_ii = c_i + p_ii` and `P_ij = p_ij`
//! otherwise. Its own diagonal stays in the operator, whose reaction becomes
//! `P_ii - σ_i < 0`. The source of each sweep is
//! `F_i + σ_i u_i + Σ_{j≠i} p_ij u_j`, evaluated at the previous iterate of every
//! species. With one species this is exactly [`picard_solve`](super::picard_solve).

use ndarray::Array2;

use super::SpaceTimeField;
use super::{
    modal_sup_norm, trajectory, FractionalProblem, ModalPropagator, PicardOptions, PicardReport,
};
use crate::elliptic::{decompose, SpectralDecomposition};
use crate::error::{Error, Result};

/// Nodal coupling coefficients `p_ij(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    species: usize,
    /// Row-major `S × S` blocks of nodal samples.
    entries: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    /// `entries[i][j]` holds `p_ij` at the interior nodes. Off-diagonal entries
    /// must be nonnegative.
    pub fn new(entries: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let species = entries.len();
        if species == 0 {
            return Err(Error::Validation("coupling matrix is empty".into()));
        }
        let n = entries[0].first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(species * species);
        for (i, row) in entries.into_iter().enumerate() {
            if row.len() != species {
                return Err(Error::Validation(format!(
                    "coupling row {i} has {} entries, expected {species}",
                    row.len()
                )));
            }
            for (j, p) in row.into_iter().enumerate() {
                if p.len() != n {
                    return Err(Error::Validation(format!(
                        "p[{i}][{j}] has {} samples, expected {n}",
                        p.len()
                    )));
                }
                if let Some(k) = p.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "p[{i}][{j}] is not finite at node {k}"
                    )));
                }
                if i != j {
                    if let Some((k, v)) = p.iter().enumerate().find(|(_, &v)| v < 0.0) {
                        return Err(Error::Validation(format!(
                            "off-diagonal coupling p[{i}][{j}] = {v} < 0 at node {k}"
                        )));
                    }
                }
                flat.push(p);
            }
        }
        Ok(CouplingMatrix {
            species,
            entries: flat,
        })
    }

    /// No coupling between `species` components on `n` nodes.
    pub fn zeros(species: usize, n: usize) -> Self {
        CouplingMatrix {
            species,
            entries: vec![vec![0.0; n]; species * species],
        }
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.entries[i * self.species + j]
    }
}

/// Components, per-species shifts and the iteration report.
#[derive(Clone, Debug)]
pub struct CoupledSolution {
    pub components: Vec<SpaceTimeField>,
    pub shifts: Vec<f64>,
    /// Residuals are taken over all species together; `shift` is the largest `σ_i`.
    pub report: PicardReport,
}

struct Species {
    decomp: SpectralDecomposition,
    prop: ModalPropagator,
    base: Array2<f64>,
    sigma: f64,
}

/// Solves a coupled system by simultaneous fixed-point sweeps.
///
/// All components must share `α`, the grid and the time grid.
pub fn solve_coupled(
    components: &[FractionalProblem],
    coupling: &CouplingMatrix,
    opts: &PicardOptions,
) -> Result<CoupledSolution> {
    let first = components
        .first()
        .ok_or_else(|| Error::Validation("coupled system has no components".into()))?;
    if coupling.species != components.len() {
        return Err(Error::Validation(format!(
            "coupling is {0}×{0} for {1} components",
            coupling.species,
            components.len()
        )));
    }
    let n = first.grid().n_interior();
    if coupling.get(0, 0).len() != n {
        return Err(Error::Validation(format!(
            "coupling has {} nodal samples for {n} interior nodes",
            coupling.get(0, 0).len()
        )));
    }
    for (i, c) in components.iter().enumerate() {
        if c.alpha() != first.alpha() || c.grid() != first.grid() || c.time() != first.time() {
            return Err(Error::Validation(format!(
                "component {i} does not share alpha, grid and time grid with component 0"
            )));
        }
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Parameter(
            "invalid Picard tolerance or iteration cap".into(),
        ));
    }

    let s = components.len();
    let mut bound_all: f64 = 0.0;
    let species: Vec<Species> = components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let diag: Vec<f64> = comp
                .elliptic()
                .reaction()
                .iter()
                .zip(coupling.get(i, i))
                .map(|(c, p)| c + p)
                .collect();
            let row_bound = (0..n)
                .map(|k| {
                    diag[k].abs()
                        + (0..s)
                            .filter(|&j| j != i)
                            .map(|j| coupling.get(i, j)[k].abs())
                            .sum::<f64>()
                })
                .fold(0.0, f64::max);
            bound_all = bound_all.max(row_bound);
            let sigma = opts.shift_for(row_bound)?;
            let shifted = comp
                .elliptic()
                .with_reaction(diag.iter().map(|d| d - sigma).collect())?;
            let decomp = decompose(&shifted)?;
            let prop = ModalPropagator::new(&decomp, comp.alpha(), comp.time())?;
            let a_hat = decomp.project(comp.initial());
            let f_hat = decomp.project_rows(comp.source().values());
            let base = prop.solve(&a_hat, &f_hat);
            Ok(Species {
                decomp,
                prop,
                base,
                sigma,
            })
        })
        .collect::<Result<_>>()?;

    let mut u: Vec<Array2<f64>> = species.iter().map(|sp| sp.base.clone()).collect();
    let mut residuals = vec![joint_norm(&u)];
    while residuals.len() < opts.max_iter && *residuals.last().unwrap() > opts.tol {
        let nodal: Vec<Array2<f64>> = species
            .iter()
            .zip(&u)
            .map(|(sp, ui)| sp.decomp.synthesize_rows(ui))
            .collect();
        let next: Vec<Array2<f64>> = species
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                let mut cross = Array2::<f64>::zeros(nodal[i].dim());
                for (j, uj) in nodal.iter().enumerate().filter(|&(j, _)| j != i) {
                    let p = ndarray::ArrayView1::from(coupling.get(i, j));
                    cross = cross + uj * &p;
                }
                // modal source of the sweep: σ_i u_i + P_offdiag u
                let src = sp.decomp.project_rows(&cross) + &u[i] * sp.sigma;
                &sp.base + &sp.prop.convolve(&src)
            })
            .collect();
        let diff: Vec<Array2<f64>> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let r = joint_norm(&diff);
        u = next;
        residuals.push(r);
        if !r.is_finite() {
            break;
        }
    }

    let shifts: Vec<f64> = species.iter().map(|sp| sp.sigma).collect();
    let report = PicardReport::new(
        shifts.iter().copied().fold(0.0, f64::max),
        bound_all,
        opts.tol,
        first.alpha(),
        first.time().horizon(),
        residuals,
    );
    if !report.converged {
        return Err(Error::Convergence(Box::new(report)));
    }
    let components = species
        .iter()
        .zip(&u)
        .zip(components)
        .map(|((sp, ui), comp)| trajectory(&sp.decomp, ui, comp.initial()))
        .collect::<Result<_>>()?;
    Ok(CoupledSolution {
        components,
        shifts,
        report,
    })
}

/// `max_k sqrt(Σ_i ||u_i(t_k)||²)` over modal arrays.
fn joint_norm(parts: &[Array2<f64>]) -> f64 {
    if parts.len() == 1 {
        return modal_sup_norm(&parts[0]);
    }
    let rows = parts[0].nrows();
    (0..rows)
        .map(|k| {
            parts
                .iter()
                .map(|p| {
                    let r = p.row(k);
                    r.dot(&r)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
