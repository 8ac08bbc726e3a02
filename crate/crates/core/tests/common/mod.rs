#![allow(dead_code)]

use fracdiff_core::elliptic::{EllipticProblem, Grid1D};
use fracdiff_core::profile::RandomField;
use fracdiff_core::spectral::{FractionalProblem, SpaceTimeField, TimeGrid};

/// Diffusivity in [1, 2], reaction `c_shift + c_amp·g(x)`, nonnegative squared data.
#[allow(clippy::too_many_arguments)]
pub fn random_problem(
    seed: u64,
    alpha: f64,
    n: usize,
    k: usize,
    horizon: f64,
    c_shift: f64,
    c_amp: f64,
    time_dependent_source: bool,
) -> FractionalProblem {
    let grid = Grid1D::new(1.0, n).unwrap();
    let time = TimeGrid::new(horizon, k).unwrap();
    let field = |s: u64| RandomField::from_seed(seed * 16 + s, 1.0, 4);
    let (fa, fc, f0, f1, f2) = (field(1), field(2), field(3), field(4), field(5));
    let a = grid
        .midpoints()
        .iter()
        .map(|&x| 1.5 + 0.5 * fa.eval(x))
        .collect();
    let c = grid
        .nodes()
        .iter()
        .map(|&x| c_shift + c_amp * fc.eval(x))
        .collect();
    let elliptic = EllipticProblem::new(grid, a, c, 1.0).unwrap();
    let initial = grid.nodes().iter().map(|&x| f0.eval(x).powi(2)).collect();
    let source = SpaceTimeField::from_fn(&grid, &time, |x, t| {
        let base = f1.eval(x);
        if time_dependent_source {
            (base + 0.5 * f2.eval(x) * (3.0 * t).sin()).powi(2)
        } else {
            base * base
        }
    })
    .unwrap();
    FractionalProblem::new(alpha, elliptic, initial, source, time).unwrap()
}

pub fn uniform_problem(alpha: f64, n: usize, k: usize, horizon: f64, c: f64) -> FractionalProblem {
    let grid = Grid1D::new(1.0, n).unwrap();
    let time = TimeGrid::new(horizon, k).unwrap();
    let elliptic = EllipticProblem::new(grid, vec![1.0; n + 1], vec![c; n], 1.0).unwrap();
    FractionalProblem::new(
        alpha,
        elliptic,
        vec![0.0; n],
        SpaceTimeField::zeros(&grid, &time),
        time,
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
