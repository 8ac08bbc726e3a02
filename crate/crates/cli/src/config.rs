//! Run configuration: TOML schema, flag overrides and validation.
//!
//! Precedence is flags > file > defaults. Validation collects every violation
//! before reporting. The schema is documented in `CONFIG.md`.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracdiff_core::elliptic::{EllipticProblem, Grid1D};
use fracdiff_core::profile::Profile;
use fracdiff_core::spectral::{
    CouplingMatrix, FractionalProblem, PicardOptions, SpaceTimeField, TimeGrid,
};
use fracdiff_core::verify::TrialConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Direct modal solve; needs a negative reaction.
    Spectral,
    /// Shifted fixed-point iteration; any bounded reaction.
    Picard,
    /// Implicit L1 time stepping.
    L1,
    /// Weakly coupled system.
    Coupled,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpecies {
    pub diffusivity: Option<Profile>,
    pub reaction: Option<Profile>,
    pub initial: Option<Profile>,
    pub source: Option<Profile>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVerify {
    pub n_trials: Option<usize>,
    pub alpha_set: Option<Vec<f64>>,
    pub c_max: Option<f64>,
    pub modes: Option<usize>,
    pub positivity_cap: Option<usize>,
    pub eps_abs: Option<f64>,
    pub eps_rel: Option<f64>,
}

/// The file contents as written; every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub solver: Option<SolverKind>,
    pub alpha: Option<f64>,
    pub length: Option<f64>,
    pub grid_n: Option<usize>,
    pub time_steps: Option<usize>,
    pub horizon: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub mu0: Option<f64>,
    pub diffusivity: Option<Profile>,
    pub reaction: Option<Profile>,
    pub initial: Option<Profile>,
    pub source: Option<Profile>,
    pub output: Option<RawOutput>,
    pub species: Option<Vec<RawSpecies>>,
    pub coupling: Option<Vec<Vec<Profile>>>,
    pub verify: Option<RawVerify>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub solver: Option<SolverKind>,
    pub alpha: Option<f64>,
    pub grid_n: Option<usize>,
    pub time_steps: Option<usize>,
    pub horizon: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeciesSpec {
    pub diffusivity: Profile,
    pub reaction: Profile,
    pub initial: Profile,
    pub source: Profile,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub alpha: f64,
    pub length: f64,
    pub grid_n: usize,
    pub time_steps: usize,
    pub horizon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Ellipticity bound; the minimum sampled diffusivity when not given.
    pub mu0: Option<f64>,
    pub diffusivity: Profile,
    pub reaction: Profile,
    pub initial: Profile,
    pub source: Profile,
    pub species: Vec<SpeciesSpec>,
    pub coupling: Option<Vec<Vec<Profile>>>,
    pub csv_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

/// Parses a configuration file body without validating it.
pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Reads `path`, or yields an empty configuration when there is none.
pub fn load_raw(path: Option<&Path>) -> Result<RawConfig, CliError> {
    match path {
        None => Ok(RawConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
            parse_raw(&text).map_err(|e| match e {
                CliError::Parse(m) => CliError::Parse(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

/// Parses and validates a configuration with defaults for missing fields.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_raw(text)?.resolve(&Overrides::default())
}

/// Adds the run seed to the seed of a random preset.
fn reseed(p: Profile, seed: u64) -> Profile {
    match p {
        Profile::Random {
            seed: s,
            amplitude,
            modes,
        } => Profile::Random {
            seed: s.wrapping_add(seed),
            amplitude,
            modes,
        },
        other => other,
    }
}

impl RawConfig {
    /// Applies overrides and defaults, then validates.
    pub fn resolve(&self, o: &Overrides) -> Result<RunConfig, CliError> {
        let seed = o.seed.or(self.seed).unwrap_or(0);
        let prof =
            |p: &Option<Profile>, default: Profile| reseed(p.clone().unwrap_or(default), seed);
        let diffusivity = prof(&self.diffusivity, Profile::constant(1.0));
        let reaction = prof(&self.reaction, Profile::constant(0.0));
        let initial = prof(&self.initial, Profile::bump(0.5, 0.5, 1.0));
        let source = prof(&self.source, Profile::constant(0.0));
        let species = self
            .species
            .iter()
            .flatten()
            .map(|s| SpeciesSpec {
                diffusivity: s
                    .diffusivity
                    .clone()
                    .map_or(diffusivity.clone(), |p| reseed(p, seed)),
                reaction: s
                    .reaction
                    .clone()
                    .map_or(reaction.clone(), |p| reseed(p, seed)),
                initial: s
                    .initial
                    .clone()
                    .map_or(initial.clone(), |p| reseed(p, seed)),
                source: s.source.clone().map_or(source.clone(), |p| reseed(p, seed)),
            })
            .collect();
        let output = self.output.clone().unwrap_or_default();
        let cfg = RunConfig {
            solver: o.solver.or(self.solver).unwrap_or(SolverKind::Picard),
            alpha: o.alpha.or(self.alpha).unwrap_or(0.5),
            length: self.length.unwrap_or(1.0),
            grid_n: o.grid_n.or(self.grid_n).unwrap_or(100),
            time_steps: o.time_steps.or(self.time_steps).unwrap_or(256),
            horizon: o.horizon.or(self.horizon).unwrap_or(1.0),
            tol: o.tol.or(self.tol).unwrap_or(1e-10),
            max_iter: o.max_iter.or(self.max_iter).unwrap_or(100),
            seed,
            mu0: self.mu0,
            diffusivity,
            reaction,
            initial,
            source,
            species,
            coupling: self.coupling.as_ref().map(|rows| {
                rows.iter()
                    .map(|r| r.iter().map(|p| reseed(p.clone(), seed)).collect())
                    .collect()
            }),
            csv_path: output.csv,
            report_path: output.report,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Trial settings for `verify`: flags, then the `[verify]` table and the
    /// top-level fields, then the harness defaults.
    pub fn trial_config(
        &self,
        o: &Overrides,
        n_trials: Option<usize>,
        c_max: Option<f64>,
    ) -> Result<TrialConfig, CliError> {
        let d = TrialConfig::default();
        let v = self.verify.clone().unwrap_or_default();
        let alpha_set = match o.alpha {
            Some(a) => vec![a],
            None => v
                .alpha_set
                .or(self.alpha.map(|a| vec![a]))
                .unwrap_or(d.alpha_set),
        };
        let cfg = TrialConfig {
            n_trials: n_trials.or(v.n_trials).unwrap_or(d.n_trials),
            alpha_set,
            grid_n: o.grid_n.or(self.grid_n).unwrap_or(d.grid_n),
            time_steps: o.time_steps.or(self.time_steps).unwrap_or(d.time_steps),
            horizon: o.horizon.or(self.horizon).unwrap_or(d.horizon),
            length: self.length.unwrap_or(d.length),
            c_max: c_max.or(v.c_max).unwrap_or(d.c_max),
            seed: o.seed.or(self.seed).unwrap_or(d.seed),
            modes: v.modes.unwrap_or(d.modes),
            eps_abs: v.eps_abs.unwrap_or(d.eps_abs),
            eps_rel: v.eps_rel.unwrap_or(d.eps_rel),
            picard: PicardOptions::new(
                o.tol.or(self.tol).unwrap_or(d.picard.tol),
                o.max_iter.or(self.max_iter).unwrap_or(d.picard.max_iter),
            ),
            positivity_cap: v.positivity_cap.unwrap_or(d.positivity_cap),
        };
        cfg.validate()
            .map_err(|e| CliError::Config(vec![e.to_string()]))?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// Every schema violation at once.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errs.push(format!("alpha out of (0,1): {}", self.alpha));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            errs.push(format!("length must be positive: {}", self.length));
        }
        if self.grid_n < 2 {
            errs.push(format!("grid_n must be at least 2: {}", self.grid_n));
        }
        if self.time_steps == 0 {
            errs.push("time_steps must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            errs.push(format!("horizon must be positive: {}", self.horizon));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            errs.push(format!("tol must be positive: {}", self.tol));
        }
        if self.max_iter == 0 {
            errs.push("max_iter must be at least 1".into());
        }
        if let Some(m) = self.mu0 {
            if !(m > 0.0) {
                errs.push(format!("mu0 must be positive: {m}"));
            }
        }
        if self.length > 0.0 && self.length.is_finite() && self.grid_n >= 2 {
            let grid = Grid1D::new(self.length, self.grid_n).expect("checked above");
            self.check_coefficients(
                "",
                &self.diffusivity,
                &self.reaction,
                &self.initial,
                &self.source,
                &grid,
                &mut errs,
            );
            for (i, s) in self.species.iter().enumerate() {
                let tag = format!("species[{i}].");
                self.check_coefficients(
                    &tag,
                    &s.diffusivity,
                    &s.reaction,
                    &s.initial,
                    &s.source,
                    &grid,
                    &mut errs,
                );
            }
            if self.solver == SolverKind::Coupled {
                self.check_coupling(&grid, &mut errs);
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn check_coefficients(
        &self,
        tag: &str,
        diffusivity: &Profile,
        reaction: &Profile,
        initial: &Profile,
        source: &Profile,
        grid: &Grid1D,
        errs: &mut Vec<String>,
    ) {
        let l = self.length;
        match diffusivity.sample(&grid.midpoints(), l) {
            Ok(a) => {
                let min = a.iter().copied().fold(f64::INFINITY, f64::min);
                let mu0 = self.mu0.unwrap_or(min);
                if !(min > 0.0) || min < mu0 {
                    errs.push(format!(
                        "{tag}diffusivity violates ellipticity: minimum {min} must be at least mu0 > 0"
                    ));
                }
            }
            Err(e) => errs.push(format!("{tag}diffusivity: {e}")),
        }
        for (name, p) in [
            ("reaction", reaction),
            ("initial", initial),
            ("source", source),
        ] {
            if let Err(e) = p.sample(&grid.nodes(), l) {
                errs.push(format!("{tag}{name}: {e}"));
            }
        }
    }

    fn check_coupling(&self, grid: &Grid1D, errs: &mut Vec<String>) {
        let s = self.species.len();
        if s == 0 {
            errs.push("coupled solver needs at least one [[species]] table".into());
            return;
        }
        let Some(rows) = &self.coupling else {
            return;
        };
        if rows.len() != s || rows.iter().any(|r| r.len() != s) {
            errs.push(format!("coupling must be a {s}×{s} array of profiles"));
            return;
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                match p.sample(&grid.nodes(), self.length) {
                    Ok(v) if i != j && v.iter().any(|&x| x < 0.0) => errs.push(format!(
                        "coupling[{i}][{j}] must be nonnegative off the diagonal"
                    )),
                    Ok(_) => {}
                    Err(e) => errs.push(format!("coupling[{i}][{j}]: {e}")),
                }
            }
        }
    }

    pub fn grid(&self) -> Result<Grid1D, CliError> {
        Ok(Grid1D::new(self.length, self.grid_n)?)
    }

    pub fn time(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.horizon, self.time_steps)?)
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions::new(self.tol, self.max_iter)
    }

    fn build(
        &self,
        diffusivity: &Profile,
        reaction: &Profile,
        initial: &Profile,
        source: &Profile,
        time_steps: usize,
    ) -> Result<FractionalProblem, CliError> {
        let grid = self.grid()?;
        let time = TimeGrid::new(self.horizon, time_steps)?;
        let l = self.length;
        let a = diffusivity.sample(&grid.midpoints(), l)?;
        let mu0 = self
            .mu0
            .unwrap_or_else(|| a.iter().copied().fold(f64::INFINITY, f64::min));
        let c = reaction.sample(&grid.nodes(), l)?;
        let elliptic = EllipticProblem::new(grid, a, c, mu0)?;
        let u0 = initial.sample(&grid.nodes(), l)?;
        let f = SpaceTimeField::constant_in_time(&source.sample(&grid.nodes(), l)?, &time)?;
        Ok(FractionalProblem::new(self.alpha, elliptic, u0, f, time)?)
    }

    /// The scalar problem on `time_steps` steps.
    pub fn problem_with_steps(&self, time_steps: usize) -> Result<FractionalProblem, CliError> {
        self.build(
            &self.diffusivity,
            &self.reaction,
            &self.initial,
            &self.source,
            time_steps,
        )
    }

    pub fn problem(&self) -> Result<FractionalProblem, CliError> {
        self.problem_with_steps(self.time_steps)
    }

    /// Components and coupling; a missing `coupling` array means no coupling.
    pub fn coupled_system(&self) -> Result<(Vec<FractionalProblem>, CouplingMatrix), CliError> {
        if self.species.is_empty() {
            return Err(CliError::Config(vec![
                "coupled solver needs at least one [[species]] table".into(),
            ]));
        }
        let components = self
            .species
            .iter()
            .map(|s| {
                self.build(
                    &s.diffusivity,
                    &s.reaction,
                    &s.initial,
                    &s.source,
                    self.time_steps,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let nodes = self.grid()?.nodes();
        let coupling = match &self.coupling {
            None => CouplingMatrix::zeros(components.len(), nodes.len()),
            Some(rows) => CouplingMatrix::new(
                rows.iter()
                    .map(|r| r.iter().map(|p| p.sample(&nodes, self.length)).collect())
                    .collect::<Result<_, _>>()?,
            )?,
        };
        Ok((components, coupling))
    }
}
