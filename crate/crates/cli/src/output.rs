//! CSV trajectories and JSON run reports.

use std::io::{self, Write};

use fracdiff_core::elliptic::Grid1D;
use fracdiff_core::spectral::{PicardReport, SpaceTimeField, TimeGrid};
use serde::Serialize;

/// `x,t,u` (one field) or `x,t,u1,..,uS`, one row per interior node and time level,
/// every number with 17 significant digits.
pub fn write_csv(
    w: &mut impl Write,
    grid: &Grid1D,
    time: &TimeGrid,
    fields: &[&SpaceTimeField],
) -> io::Result<()> {
    let mut header = String::from("x,t");
    if fields.len() == 1 {
        header.push_str(",u");
    } else {
        for i in 1..=fields.len() {
            header.push_str(&format!(",u{i}"));
        }
    }
    writeln!(w, "{header}")?;
    let nodes = grid.nodes();
    for k in 0..=time.n_steps() {
        let t = time.time(k);
        for (i, x) in nodes.iter().enumerate() {
            write!(w, "{x:.16e},{t:.16e}")?;
            for f in fields {
                write!(w, ",{:.16e}", f.values()[[k, i]])?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn csv_string(grid: &Grid1D, time: &TimeGrid, fields: &[&SpaceTimeField]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, grid, time, fields).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSummary {
    pub length: f64,
    pub n_interior: usize,
    pub spacing: f64,
    pub horizon: f64,
    pub time_steps: usize,
}

impl GridSummary {
    pub fn new(grid: &Grid1D, time: &TimeGrid) -> Self {
        GridSummary {
            length: grid.length(),
            n_interior: grid.n_interior(),
            spacing: grid.spacing(),
            horizon: time.horizon(),
            time_steps: time.n_steps(),
        }
    }
}

/// Summary of one solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub solver: String,
    pub alpha: f64,
    pub grid: GridSummary,
    pub seed: u64,
    /// Fixed-point iterations, when the solver iterates.
    pub iterations: Option<usize>,
    pub residuals: Option<Vec<f64>>,
    pub picard: Option<PicardReport>,
    /// Per-species shifts of a coupled solve.
    pub shifts: Option<Vec<f64>>,
    pub min_u: f64,
    pub max_u: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl RunReport {
    pub fn attach_picard(&mut self, report: &PicardReport) {
        self.iterations = Some(report.iterations);
        self.residuals = Some(report.residuals.clone());
        self.picard = Some(report.clone());
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}
