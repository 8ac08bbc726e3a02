//! Randomized checks of the sign properties of the solution operator.
//!
//! Every trial is generated from its own seed `config.seed + trial` with ChaCha8
//! (`rand_chacha`, seeded through `seed_from_u64`), so a violation can be replayed
//! in isolation from the seed printed in its report. Trials run on the rayon pool
//! and are reduced in trial order.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{EllipticProblem, Grid1D};
use crate::error::{Error, Result};
use crate::profile::{Profile, RandomField};
use crate::spectral::{
    picard_solve, solve_coupled, CouplingMatrix, FractionalProblem, PicardOptions, PicardReport,
    SpaceTimeField, TimeGrid,
};

/// Settings shared by all property checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialConfig {
    pub n_trials: usize,
    /// Trial `t` uses `alpha_set[(seed + t) % len]`.
    pub alpha_set: Vec<f64>,
    pub grid_n: usize,
    pub time_steps: usize,
    pub horizon: f64,
    pub length: f64,
    /// Reaction coefficients are drawn in `[-c_max, c_max]`.
    pub c_max: f64,
    pub seed: u64,
    /// Terms in each random trigonometric field.
    pub modes: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub picard: PicardOptions,
    /// Allowed number of sampled times `t_k ≥ Δt` with `u ≤ 0`, per node.
    pub positivity_cap: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            n_trials: 100,
            alpha_set: vec![0.25, 0.5, 0.75],
            grid_n: 100,
            time_steps: 100,
            horizon: 1.0,
            length: 1.0,
            c_max: 10.0,
            seed: 0,
            modes: 4,
            eps_abs: 1e-10,
            eps_rel: 1e-8,
            picard: PicardOptions::default(),
            positivity_cap: 0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n_trials == 0 {
            errs.push("n_trials must be at least 1".to_string());
        }
        if self.alpha_set.is_empty() {
            errs.push("alpha_set is empty".to_string());
        }
        for a in &self.alpha_set {
            if !(*a > 0.0 && *a < 1.0) {
                errs.push(format!("alpha {a} out of (0,1)"));
            }
        }
        if self.grid_n < 2 {
            errs.push("grid_n must be at least 2".to_string());
        }
        if self.time_steps == 0 {
            errs.push("time_steps must be at least 1".to_string());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            errs.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            errs.push(format!("length must be positive, got {}", self.length));
        }
        if !(self.c_max >= 0.0 && self.c_max.is_finite()) {
            errs.push(format!("c_max must be nonnegative, got {}", self.c_max));
        }
        if self.modes == 0 {
            errs.push("modes must be at least 1".to_string());
        }
        if !(self.eps_abs >= 0.0 && self.eps_rel >= 0.0) {
            errs.push("tolerances must be nonnegative".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs.join("; ")))
        }
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn alpha_for(&self, seed: u64) -> f64 {
        self.alpha_set[(seed % self.alpha_set.len() as u64) as usize]
    }

    fn threshold(&self, scale: f64) -> f64 {
        self.eps_abs + self.eps_rel * scale
    }
}

/// One point where a property failed beyond tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    /// Species index for coupled trials.
    pub component: Option<usize>,
    pub node: usize,
    pub time_index: usize,
    pub x: f64,
    pub t: f64,
    /// The checked quantity (a solution value or an ordered difference).
    pub value: f64,
    pub threshold: f64,
    /// How far past the threshold the value lies.
    pub magnitude: f64,
}

/// A trial whose solve failed; not counted as a violation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

/// Fixed-point statistics over every Picard solve of a suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PicardStats {
    pub solves: usize,
    pub max_iterations: usize,
    pub max_final_residual: f64,
    /// Solves whose residual sequence is not eventually decreasing.
    pub not_eventually_decreasing: usize,
}

impl PicardStats {
    fn record(&mut self, r: &PicardReport) {
        self.solves += 1;
        self.max_iterations = self.max_iterations.max(r.iterations);
        self.max_final_residual = self
            .max_final_residual
            .max(r.residuals.last().copied().unwrap_or(0.0));
        let floor = 1e-13 * r.m0;
        if !r.eventually_decreasing(floor) {
            self.not_eventually_decreasing += 1;
        }
    }

    fn merge(&mut self, other: &PicardStats) {
        self.solves += other.solves;
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.max_final_residual = self.max_final_residual.max(other.max_final_residual);
        self.not_eventually_decreasing += other.not_eventually_decreasing;
    }
}

/// Outcome of one property over all trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    pub worst: Option<Violation>,
    pub failures: Vec<TrialFailure>,
    /// `violations == 0`; failed trials are listed separately.
    pub passed: bool,
    /// Wall time in seconds.
    pub runtime: f64,
    pub picard: PicardStats,
}

#[derive(Default)]
struct TrialOutcome {
    violations: usize,
    worst: Option<Violation>,
    failure: Option<String>,
    picard: PicardStats,
}

impl TrialOutcome {
    fn push(&mut self, v: Violation) {
        self.violations += 1;
        if self
            .worst
            .as_ref()
            .is_none_or(|w| v.magnitude > w.magnitude)
        {
            self.worst = Some(v);
        }
    }
}

/// Runs `trial` for every index and reduces the outcomes in index order.
fn run_suite<F>(name: &str, config: &TrialConfig, trial: F) -> Result<PropertyReport>
where
    F: Fn(usize, u64, &mut TrialOutcome) -> Result<()> + Sync,
{
    config.validate()?;
    let start = Instant::now();
    let outcomes: Vec<TrialOutcome> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.trial_seed(t);
            let mut out = TrialOutcome::default();
            if let Err(e) = trial(t, seed, &mut out) {
                out.failure = Some(e.to_string());
            }
            out
        })
        .collect();
    let mut report = PropertyReport {
        name: name.to_string(),
        trials: config.n_trials,
        violations: 0,
        worst: None,
        failures: Vec::new(),
        passed: false,
        runtime: 0.0,
        picard: PicardStats::default(),
    };
    for (t, out) in outcomes.into_iter().enumerate() {
        report.violations += out.violations;
        if let Some(v) = out.worst {
            if report
                .worst
                .as_ref()
                .is_none_or(|w| v.magnitude > w.magnitude)
            {
                report.worst = Some(v);
            }
        }
        if let Some(error) = out.failure {
            report.failures.push(TrialFailure {
                trial: t,
                seed: config.trial_seed(t),
                error,
            });
        }
        report.picard.merge(&out.picard);
    }
    report.passed = report.violations == 0;
    report.runtime = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Flags every entry of `field` below `-threshold`.
fn scan_below(
    field: &SpaceTimeField,
    threshold: f64,
    problem: &FractionalProblem,
    trial: usize,
    seed: u64,
    component: Option<usize>,
    out: &mut TrialOutcome,
) {
    let nodes = problem.grid().nodes();
    for ((k, i), &v) in field.values().indexed_iter() {
        if v < -threshold {
            out.push(Violation {
                trial,
                seed,
                component,
                node: i,
                time_index: k,
                x: nodes[i],
                t: problem.time().time(k),
                value: v,
                threshold,
                magnitude: -v - threshold,
            });
        }
    }
}

fn squared(f: &RandomField, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| f.eval(x).powi(2)).collect()
}

fn draw_problem(
    rng: &mut ChaCha8Rng,
    alpha: f64,
    config: &TrialConfig,
) -> Result<FractionalProblem> {
    let (l, m) = (config.length, config.modes);
    let grid = Grid1D::new(l, config.grid_n)?;
    let time = TimeGrid::new(config.horizon, config.time_steps)?;
    let fa = RandomField::draw(rng, l, m);
    let fc = RandomField::draw(rng, l, m);
    let f0 = RandomField::draw(rng, l, m);
    let f1 = RandomField::draw(rng, l, m);
    let f2 = RandomField::draw(rng, l, m);
    let omega = rng.gen_range(1.0..6.0);

    let diffusivity = grid
        .midpoints()
        .iter()
        .map(|&x| 1.5 + 0.5 * fa.eval(x))
        .collect();
    let reaction = grid
        .nodes()
        .iter()
        .map(|&x| config.c_max * fc.eval(x))
        .collect();
    let elliptic = EllipticProblem::new(grid, diffusivity, reaction, 1.0)?;
    let initial = squared(&f0, &grid.nodes());
    let source = SpaceTimeField::from_fn(&grid, &time, |x, t| {
        (f1.eval(x) + 0.5 * f2.eval(x) * (omega * t).sin()).powi(2)
    })?;
    FractionalProblem::new(alpha, elliptic, initial, source, time)
}

/// The random problem of trial seed `seed`.
///
/// Diffusivity `1.5 + 0.5 g_a` lies in `[1, 2]`, the reaction `c_max g_c` in
/// `[-c_max, c_max]`, the initial value is `g_0²` and the source
/// `(g_1 + g_2 sin(ω t) / 2)²`. Each `g` is a [`RandomField`].
pub fn gen_problem(seed: u64, config: &TrialConfig) -> Result<FractionalProblem> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_problem(&mut rng, config.alpha_for(seed), config)
}

/// Auxiliary draws (bumps, perturbations) use a separate stream of the same seed.
fn aux_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn random_bump(rng: &mut ChaCha8Rng, length: f64, height: f64) -> Profile {
    Profile::bump(
        rng.gen_range(0.2..0.8) * length,
        rng.gen_range(0.1..0.5) * length,
        rng.gen_range(0.1..1.0) * height,
    )
}

/// `u ≥ 0` for nonnegative data and a sign-indefinite reaction.
pub fn check_maximum_principle(config: &TrialConfig) -> Result<PropertyReport> {
    run_suite("maximum principle", config, |trial, seed, out| {
        let p = gen_problem(seed, config)?;
        let (u, report) = picard_solve(&p, &config.picard)?;
        out.picard.record(&report);
        scan_below(
            &u,
            config.threshold(u.max_abs()),
            &p,
            trial,
            seed,
            None,
            out,
        );
        Ok(())
    })
}

/// Ordered data pairs `(a₂ + bump, F₂ + bump) ≥ (a₂, F₂)` give ordered solutions.
///
/// Trials cycle through bumps in both data, in `F` only and in `a` only.
pub fn check_comparison(config: &TrialConfig) -> Result<PropertyReport> {
    run_suite("comparison", config, |trial, seed, out| {
        let lower = gen_problem(seed, config)?;
        let mut rng = aux_rng(seed);
        let nodes = lower.grid().nodes();
        let l = config.length;
        let bump_a = random_bump(&mut rng, l, 1.0).sample(&nodes, l)?;
        let bump_f = random_bump(&mut rng, l, 1.0).sample(&nodes, l)?;
        let (use_a, use_f) = match trial % 3 {
            0 => (true, true),
            1 => (false, true),
            _ => (true, false),
        };
        let initial: Vec<f64> = lower
            .initial()
            .iter()
            .zip(&bump_a)
            .map(|(a, b)| if use_a { a + b } else { *a })
            .collect();
        let mut source = lower.source().values().clone();
        if use_f {
            for mut row in source.rows_mut() {
                row.iter_mut().zip(&bump_f).for_each(|(f, b)| *f += b);
            }
        }
        let upper = lower.with_data(initial, SpaceTimeField::new(source)?)?;
        let (u_lo, r_lo) = picard_solve(&lower, &config.picard)?;
        let (u_hi, r_hi) = picard_solve(&upper, &config.picard)?;
        out.picard.record(&r_lo);
        out.picard.record(&r_hi);
        let thr = config.threshold(u_hi.max_abs().max(u_lo.max_abs()));
        let diff = SpaceTimeField::new(u_hi.values() - u_lo.values())?;
        scan_below(&diff, thr, &lower, trial, seed, None, out);
        Ok(())
    })
}

/// Solves `problem` with reactions `c` and `c + perturbation`, using one shift
/// `σ = 1 + max(max|c|, max|c + perturbation|)` for both.
///
/// Returns `(u_{c+δ}, u_c)`.
pub fn reaction_pair(
    problem: &FractionalProblem,
    perturbation: &[f64],
    opts: &PicardOptions,
) -> Result<(SpaceTimeField, SpaceTimeField, PicardReport, PicardReport)> {
    if let Some(i) = perturbation.iter().position(|&d| !(d >= 0.0)) {
        return Err(Error::Validation(format!(
            "reaction perturbation must be nonnegative, got {} at node {i}",
            perturbation[i]
        )));
    }
    let lower = problem;
    let c_hi: Vec<f64> = lower
        .elliptic()
        .reaction()
        .iter()
        .zip(perturbation)
        .map(|(c, d)| c + d)
        .collect();
    let upper = lower.with_elliptic(lower.elliptic().with_reaction(c_hi)?)?;
    let bound = lower
        .elliptic()
        .reaction_bound()
        .max(upper.elliptic().reaction_bound());
    let opts = PicardOptions {
        shift: Some(opts.shift.unwrap_or(0.0).max(bound + 1.0)),
        ..*opts
    };
    let (u_hi, r_hi) = picard_solve(&upper, &opts)?;
    let (u_lo, r_lo) = picard_solve(lower, &opts)?;
    Ok((u_hi, u_lo, r_hi, r_lo))
}

/// `c₁ ≥ c₂` gives `u_{c₁} ≥ u_{c₂}` for fixed nonnegative data.
pub fn check_c_monotonicity(config: &TrialConfig) -> Result<PropertyReport> {
    run_suite("reaction monotonicity", config, |trial, seed, out| {
        let lower = gen_problem(seed, config)?;
        let mut rng = aux_rng(seed);
        let nodes = lower.grid().nodes();
        let l = config.length;
        let height = config.c_max.max(1.0) / 2.0;
        let delta = random_bump(&mut rng, l, height).sample(&nodes, l)?;
        let (u_hi, u_lo, r_hi, r_lo) = reaction_pair(&lower, &delta, &config.picard)?;
        out.picard.record(&r_hi);
        out.picard.record(&r_lo);
        let thr = config.threshold(u_hi.max_abs().max(u_lo.max_abs()));
        let diff = SpaceTimeField::new(u_hi.values() - u_lo.values())?;
        scan_below(&diff, thr, &lower, trial, seed, None, out);
        Ok(())
    })
}

/// For `F ≡ 0` and nonnegative `a ≢ 0`, counts per node the sampled times
/// `t_k ≥ Δt` with `u ≤ 0`. A node whose count exceeds `positivity_cap` is one
/// violation; its `magnitude` is the count and `time_index` the first such time.
pub fn check_eventual_positivity(config: &TrialConfig) -> Result<PropertyReport> {
    run_suite("eventual positivity", config, |trial, seed, out| {
        let generic = gen_problem(seed, config)?;
        let zero = SpaceTimeField::zeros(generic.grid(), generic.time());
        let p = generic.with_data(generic.initial().to_vec(), zero)?;
        if p.initial().iter().all(|&a| a == 0.0) {
            return Err(Error::Validation(
                "initial value vanishes identically".into(),
            ));
        }
        let (u, report) = picard_solve(&p, &config.picard)?;
        out.picard.record(&report);
        let nodes = p.grid().nodes();
        for (i, col) in u.values().columns().into_iter().enumerate() {
            let bad: Vec<usize> = col
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &v)| v <= 0.0)
                .map(|(k, _)| k)
                .collect();
            if bad.len() > config.positivity_cap {
                let k = bad[0];
                out.push(Violation {
                    trial,
                    seed,
                    component: None,
                    node: i,
                    time_index: k,
                    x: nodes[i],
                    t: p.time().time(k),
                    value: u.values()[[k, i]],
                    threshold: 0.0,
                    magnitude: bad.len() as f64,
                });
            }
        }
        Ok(())
    })
}

/// A random cooperative system for trial seed `seed`: 2 or 3 species sharing
/// `α`, grid and time grid, each drawn like [`gen_problem`], with off-diagonal
/// couplings `p_ij = (c_max / 2) h_ij²` and zero diagonal couplings.
pub fn gen_coupled(
    seed: u64,
    config: &TrialConfig,
) -> Result<(Vec<FractionalProblem>, CouplingMatrix)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = config.alpha_for(seed);
    let species = 2 + (seed % 2) as usize;
    let components = (0..species)
        .map(|_| draw_problem(&mut rng, alpha, config))
        .collect::<Result<Vec<_>>>()?;
    let nodes = components[0].grid().nodes();
    let n = nodes.len();
    let entries = (0..species)
        .map(|i| {
            (0..species)
                .map(|j| {
                    if i == j {
                        vec![0.0; n]
                    } else {
                        let h = RandomField::draw(&mut rng, config.length, config.modes);
                        squared(&h, &nodes)
                            .iter()
                            .map(|v| 0.5 * config.c_max * v)
                            .collect()
                    }
                })
                .collect()
        })
        .collect();
    Ok((components, CouplingMatrix::new(entries)?))
}

/// All components of a cooperative system stay nonnegative.
pub fn check_coupled_nonnegativity(config: &TrialConfig) -> Result<PropertyReport> {
    run_suite("coupled nonnegativity", config, |trial, seed, out| {
        let (components, coupling) = gen_coupled(seed, config)?;
        let sol = solve_coupled(&components, &coupling, &config.picard)?;
        out.picard.record(&sol.report);
        let scale = sol
            .components
            .iter()
            .map(|u| u.max_abs())
            .fold(0.0, f64::max);
        let thr = config.threshold(scale);
        for (i, u) in sol.components.iter().enumerate() {
            scan_below(u, thr, &components[i], trial, seed, Some(i), out);
        }
        Ok(())
    })
}

/// `x ↦ sin(π x / L)`, a positive profile with the shape of the first mode of
/// the constant-coefficient operator.
pub fn sine_profile(grid: &Grid1D) -> Vec<f64> {
    let l = grid.length();
    grid.nodes().iter().map(|&x| (PI * x / l).sin()).collect()
}
