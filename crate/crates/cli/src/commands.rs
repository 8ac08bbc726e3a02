//! Subcommands and their dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracdiff_core::l1::l1_solve;
use fracdiff_core::mlf::{MittagLeffler, MlfParams};
use fracdiff_core::spectral::{
    picard_solve, solve_coupled, solve_linear, FractionalProblem, SpaceTimeField,
};
use fracdiff_core::verify::{
    check_c_monotonicity, check_comparison, check_coupled_nonnegativity, check_eventual_positivity,
    check_maximum_principle, PropertyReport,
};
use serde::Serialize;

use crate::config::{load_raw, Overrides, RunConfig, SolverKind};
use crate::error::CliError;
use crate::output::{csv_string, to_json, GridSummary, RunReport};

#[derive(Debug, Parser)]
#[command(
    name = "fracdiff",
    version,
    about = "Time-fractional diffusion solver and property checker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Report,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Interior grid nodes.
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub time_steps: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Picard residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Destination of the artifact selected by `--format`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl CommonArgs {
    fn overrides(&self, solver: Option<SolverKind>) -> Overrides {
        Overrides {
            solver,
            alpha: self.alpha,
            grid_n: self.grid_n,
            time_steps: self.time_steps,
            horizon: self.horizon,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    fn load(&self, solver: Option<SolverKind>) -> Result<RunConfig, CliError> {
        load_raw(self.config.as_deref())?.resolve(&self.overrides(solver))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PropertyKind {
    Maximum,
    Comparison,
    Monotonicity,
    Positivity,
    Coupled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write its trajectory and report.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        solver: Option<SolverKind>,
    },
    /// Run the L1 scheme; with --compare, measure it against the modal solution.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        compare: bool,
        /// Number of time-step doublings in the convergence table.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Randomized checks of the sign properties.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        c_max: Option<f64>,
        /// Properties to check; all when absent.
        #[arg(long, value_enum)]
        property: Vec<PropertyKind>,
    },
    /// Solve the weakly coupled system described by [[species]] and coupling.
    Coupled {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate E_{α,β}(z).
    MlfEval {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        z: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Runs a parsed command. `Ok(false)` means the command ran but a checked
/// property failed.
pub fn execute(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool, CliError> {
    match cli.command {
        Command::Solve { common, solver } => {
            let cfg = common.load(solver)?;
            if cfg.solver == SolverKind::Coupled {
                run_coupled(&cfg, &common, out, log)
            } else {
                run_scalar(&cfg, &common, out, log)
            }
        }
        Command::Oracle {
            common,
            compare,
            levels,
        } => {
            let cfg = common.load(Some(SolverKind::L1))?;
            if compare {
                oracle_compare(&cfg, &common, levels, out)
            } else {
                run_scalar(&cfg, &common, out, log)
            }
        }
        Command::Verify {
            common,
            trials,
            c_max,
            property,
        } => run_verify(&common, trials, c_max, &property, out),
        Command::Coupled { common } => {
            let cfg = common.load(Some(SolverKind::Coupled))?;
            run_coupled(&cfg, &common, out, log)
        }
        Command::MlfEval {
            alpha,
            beta,
            z,
            format,
        } => mlf_eval(alpha, beta, &z, format, out),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

/// The artifact picked by `--format` goes to `--out`, else its configured path,
/// else stdout; the other one is written only when configured.
fn emit(
    cfg: &RunConfig,
    common: &CommonArgs,
    csv: &str,
    report: &RunReport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let json = to_json(report);
    let (primary, primary_path, secondary, secondary_path) = match common.format {
        Format::Csv => (csv, &cfg.csv_path, json.as_str(), &cfg.report_path),
        Format::Report => (json.as_str(), &cfg.report_path, csv, &cfg.csv_path),
    };
    match common.out.as_ref().or(primary_path.as_ref()) {
        Some(p) => write_file(p, primary)?,
        None => write_out(out, primary)?,
    }
    if let Some(p) = secondary_path {
        write_file(p, secondary)?;
    }
    Ok(())
}

fn base_report(cfg: &RunConfig, problem: &FractionalProblem, solver: &str) -> RunReport {
    RunReport {
        solver: solver.to_string(),
        alpha: cfg.alpha,
        grid: GridSummary::new(problem.grid(), problem.time()),
        seed: cfg.seed,
        iterations: None,
        residuals: None,
        picard: None,
        shifts: None,
        min_u: 0.0,
        max_u: 0.0,
        wall_time: 0.0,
    }
}

fn solver_name(s: SolverKind) -> &'static str {
    match s {
        SolverKind::Spectral => "spectral",
        SolverKind::Picard => "picard",
        SolverKind::L1 => "l1",
        SolverKind::Coupled => "coupled",
    }
}

fn run_scalar(
    cfg: &RunConfig,
    common: &CommonArgs,
    out: &mut dyn Write,
    log: &mut dyn Write,
) -> Result<bool, CliError> {
    let start = Instant::now();
    let problem = cfg.problem()?;
    let mut report = base_report(cfg, &problem, solver_name(cfg.solver));
    let u = match cfg.solver {
        SolverKind::Spectral => solve_linear(&problem)?,
        SolverKind::L1 => l1_solve(&problem)?,
        _ => {
            let (u, r) = picard_solve(&problem, &cfg.picard_options())?;
            report.attach_picard(&r);
            u
        }
    };
    report.min_u = u.min();
    report.max_u = u.max();
    report.wall_time = start.elapsed().as_secs_f64();
    let csv = csv_string(problem.grid(), problem.time(), &[&u]);
    emit(cfg, common, &csv, &report, out)?;
    let _ = writeln!(
        log,
        "{}: min u {:.6e}, max u {:.6e}, {:.3}s",
        report.solver, report.min_u, report.max_u, report.wall_time
    );
    Ok(true)
}

fn run_coupled(
    cfg: &RunConfig,
    common: &CommonArgs,
    out: &mut dyn Write,
    log: &mut dyn Write,
) -> Result<bool, CliError> {
    let start = Instant::now();
    let (components, coupling) = cfg.coupled_system()?;
    let sol = solve_coupled(&components, &coupling, &cfg.picard_options())?;
    let mut report = base_report(cfg, &components[0], "coupled");
    report.attach_picard(&sol.report);
    report.shifts = Some(sol.shifts.clone());
    report.min_u = sol
        .components
        .iter()
        .map(SpaceTimeField::min)
        .fold(f64::INFINITY, f64::min);
    report.max_u = sol
        .components
        .iter()
        .map(SpaceTimeField::max)
        .fold(f64::NEG_INFINITY, f64::max);
    report.wall_time = start.elapsed().as_secs_f64();
    let fields: Vec<&SpaceTimeField> = sol.components.iter().collect();
    let csv = csv_string(components[0].grid(), components[0].time(), &fields);
    emit(cfg, common, &csv, &report, out)?;
    let _ = writeln!(
        log,
        "coupled ({} species): {} iterations, min u {:.6e}, {:.3}s",
        components.len(),
        sol.report.iterations,
        report.min_u,
        report.wall_time
    );
    Ok(true)
}

#[derive(Debug, Serialize)]
struct OrderRow {
    time_steps: usize,
    dt: f64,
    error: f64,
    order: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Comparison {
    reference: &'static str,
    alpha: f64,
    time_steps: usize,
    /// Relative h-weighted L² distance at t = T.
    terminal_distance: f64,
    /// Largest relative distance over the time levels t_k > 0.
    max_distance: f64,
    /// Errors at t = T against the reference on the finest grid.
    table: Vec<OrderRow>,
}

fn relative_l2(problem: &FractionalProblem, a: &[f64], b: &[f64]) -> f64 {
    let g = problem.grid();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = g.norm(b);
    if scale > 0.0 {
        g.norm(&d) / scale
    } else {
        g.norm(&d)
    }
}

fn reference(
    cfg: &RunConfig,
    p: &FractionalProblem,
) -> Result<(SpaceTimeField, &'static str), CliError> {
    if p.elliptic().reaction().iter().all(|&c| c < 0.0) {
        Ok((solve_linear(p)?, "spectral"))
    } else {
        Ok((picard_solve(p, &cfg.picard_options())?.0, "picard"))
    }
}

fn oracle_compare(
    cfg: &RunConfig,
    common: &CommonArgs,
    levels: usize,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let levels = levels.max(1);
    let problem = cfg.problem()?;
    let (exact, name) = reference(cfg, &problem)?;
    let approx = l1_solve(&problem)?;
    let max_distance = (1..exact.n_times())
        .map(|k| relative_l2(&problem, &approx.at(k).to_vec(), &exact.at(k).to_vec()))
        .fold(0.0, f64::max);
    let terminal_distance = relative_l2(&problem, &approx.terminal(), &exact.terminal());

    let steps: Vec<usize> = (0..levels).map(|j| cfg.time_steps << j).collect();
    let finest = cfg.problem_with_steps(*steps.last().expect("at least one level"))?;
    let target = reference(cfg, &finest)?.0.terminal();
    let mut table: Vec<OrderRow> = Vec::new();
    for &k in &steps {
        let p = cfg.problem_with_steps(k)?;
        let error = relative_l2(&p, &l1_solve(&p)?.terminal(), &target);
        let order = table.last().map(|prev| (prev.error / error).log2());
        table.push(OrderRow {
            time_steps: k,
            dt: p.time().dt(),
            error,
            order,
        });
    }
    let cmp = Comparison {
        reference: name,
        alpha: cfg.alpha,
        time_steps: cfg.time_steps,
        terminal_distance,
        max_distance,
        table,
    };
    let text = match common.format {
        Format::Report => to_json(&cmp),
        Format::Csv => {
            let mut s = format!(
                "reference: {name}\nrelative L2 distance at T: {:.6e}\nmax relative L2 distance over t_k: {:.6e}\n\nK,dt,error,order\n",
                cmp.terminal_distance, cmp.max_distance
            );
            for r in &cmp.table {
                let order = r.order.map_or(String::new(), |o| format!("{o:.4}"));
                s += &format!("{},{:.6e},{:.6e},{order}\n", r.time_steps, r.dt, r.error);
            }
            s
        }
    };
    match &common.out {
        Some(p) => write_file(p, &text)?,
        None => write_out(out, &text)?,
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    passed: bool,
    reports: &'a [PropertyReport],
}

fn run_verify(
    common: &CommonArgs,
    trials: Option<usize>,
    c_max: Option<f64>,
    properties: &[PropertyKind],
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let raw = load_raw(common.config.as_deref())?;
    let cfg = raw.trial_config(&common.overrides(None), trials, c_max)?;
    let all = [
        PropertyKind::Maximum,
        PropertyKind::Comparison,
        PropertyKind::Monotonicity,
        PropertyKind::Positivity,
        PropertyKind::Coupled,
    ];
    let selected = if properties.is_empty() {
        &all[..]
    } else {
        properties
    };
    let reports = selected
        .iter()
        .map(|p| match p {
            PropertyKind::Maximum => check_maximum_principle(&cfg),
            PropertyKind::Comparison => check_comparison(&cfg),
            PropertyKind::Monotonicity => check_c_monotonicity(&cfg),
            PropertyKind::Positivity => check_eventual_positivity(&cfg),
            PropertyKind::Coupled => check_coupled_nonnegativity(&cfg),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed && r.failures.is_empty());
    let text = match common.format {
        Format::Report => to_json(&VerifySummary {
            passed,
            reports: &reports,
        }),
        Format::Csv => {
            let mut s = String::new();
            for r in &reports {
                let ok = r.passed && r.failures.is_empty();
                s += &format!(
                    "{} {}: {} trials, {} violations, {} failed solves, max Picard iterations {}, {:.2}s\n",
                    if ok { "PASS" } else { "FAIL" },
                    r.name,
                    r.trials,
                    r.violations,
                    r.failures.len(),
                    r.picard.max_iterations,
                    r.runtime
                );
                if let Some(v) = &r.worst {
                    s += &format!(
                        "  worst: seed {} trial {} node {} (x = {:.4}) time index {} (t = {:.4}), value {:.3e}, threshold {:.3e}\n",
                        v.seed, v.trial, v.node, v.x, v.time_index, v.t, v.value, v.threshold
                    );
                }
                for f in &r.failures {
                    s += &format!("  failed: seed {} trial {}: {}\n", f.seed, f.trial, f.error);
                }
            }
            s += &format!("overall: {}\n", if passed { "PASS" } else { "FAIL" });
            s
        }
    };
    match &common.out {
        Some(p) => write_file(p, &text)?,
        None => write_out(out, &text)?,
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct MlfRow {
    z: f64,
    value: f64,
    error_estimate: f64,
    branch: String,
}

fn mlf_eval(
    alpha: f64,
    beta: f64,
    zs: &[f64],
    format: Format,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let m = MittagLeffler::new(MlfParams::new(alpha, beta)?);
    let rows = zs
        .iter()
        .map(|&z| {
            let e = m.evaluate(z)?;
            Ok(MlfRow {
                z,
                value: e.value,
                error_estimate: e.error_estimate,
                branch: format!("{:?}", e.branch).to_lowercase(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let text = match format {
        Format::Report => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("z,value,error_estimate,branch\n");
            for r in &rows {
                s += &format!(
                    "{:.16e},{:.16e},{:.3e},{}\n",
                    r.z, r.value, r.error_estimate, r.branch
                );
            }
            s
        }
    };
    write_out(out, &text)?;
    Ok(true)
}
