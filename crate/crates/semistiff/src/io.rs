//! CSV readers and writers.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! every value reads back bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use semistiff_core::energy::EnergyReport;
use semistiff_core::flow::FlowTrace;
use semistiff_core::grid::{AnnulusSpec, ComplexField, PolarGrid, Spacing};
use semistiff_core::radial::RadialProfile;
use semistiff_core::spectral::LedgerReport;
use semistiff_core::thresholds::ThresholdReport;
use semistiff_core::Complex64;

use crate::config::Config;
use crate::CliError;

/// Relative tolerance when matching stored radii against a rebuilt grid.
const NODE_MATCH_TOL: f64 = 1e-13;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// A CSV file with a fixed header.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
        writer.write_record(header).map_err(|e| io_error(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| io_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| io_error(&self.path, e))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| io_error(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}

pub fn write_profile(path: &Path, profile: &RadialProfile) -> Result<(), CliError> {
    let mut t = Table::create(path, &["r", "rho"])?;
    for (r, rho) in profile.nodes().iter().zip(profile.values()) {
        t.row([num(*r), num(*rho)])?;
    }
    t.finish()
}

/// Grid sidecar stored next to a field file: `field.csv` → `field.grid`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("grid")
}

pub fn grid_config(grid: &PolarGrid) -> Config {
    let mut c = Config::default();
    let a = grid.annulus();
    // Values are plain numbers and known spacing names; `set` cannot fail.
    c.set("R", a.inner_radius()).unwrap();
    c.set("n_radial", grid.n_radial()).unwrap();
    c.set("n_angular", grid.n_angular()).unwrap();
    c.set("spacing", grid.spacing()).unwrap();
    c
}

/// Writes `r,theta,re,im` row-major and the grid sidecar.
pub fn write_field(path: &Path, field: &ComplexField) -> Result<(), CliError> {
    let g = field.grid();
    let mut t = Table::create(path, &["r", "theta", "re", "im"])?;
    for i in 0..g.n_radial() {
        let r = num(g.radius(i));
        for j in 0..g.n_angular() {
            let z = field.value(i, j);
            t.row([r.as_str(), &num(g.theta(j)), &num(z.re), &num(z.im)])?;
        }
    }
    t.finish()?;
    write_text(&sidecar_path(path), &grid_config(g).to_string())
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| io_error(path, format!("line {line}: not a number: {s:?}")))
}

/// Reads a field written by [`write_field`]. Without a sidecar the grid is
/// inferred from the stored radii, which must be uniform or cosine spaced.
pub fn read_field(path: &Path) -> Result<ComplexField, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let header = reader.headers().map_err(|e| io_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["r", "theta", "re", "im"] {
        return Err(io_error(path, "expected header r,theta,re,im"));
    }
    let mut radii: Vec<f64> = Vec::new();
    let mut thetas: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let line = n + 2;
        if rec.len() != 4 {
            return Err(io_error(path, format!("line {line}: expected 4 fields")));
        }
        let r = parse_f64(path, line, &rec[0])?;
        let theta = parse_f64(path, line, &rec[1])?;
        if radii.last() != Some(&r) {
            radii.push(r);
        }
        if radii.len() == 1 {
            thetas.push(theta);
        }
        values.push(Complex64::new(
            parse_f64(path, line, &rec[2])?,
            parse_f64(path, line, &rec[3])?,
        ));
    }
    if radii.is_empty() {
        return Err(io_error(path, "no data rows"));
    }
    let sidecar = sidecar_path(path);
    let grid = if sidecar.exists() {
        let c = Config::load(&sidecar)?;
        let get = |key: &str| -> Result<String, CliError> {
            c.raw(key)
                .map(str::to_string)
                .ok_or_else(|| io_error(&sidecar, format!("missing key {key}")))
        };
        let bad = |key: &str| io_error(&sidecar, format!("bad value for {key}"));
        let r: f64 = get("R")?.parse().map_err(|_| bad("R"))?;
        let n_radial: usize = get("n_radial")?.parse().map_err(|_| bad("n_radial"))?;
        let n_angular: usize = get("n_angular")?.parse().map_err(|_| bad("n_angular"))?;
        let spacing: Spacing = get("spacing")?.parse().map_err(|_| bad("spacing"))?;
        PolarGrid::new(AnnulusSpec::new(r)?, n_radial, n_angular, spacing)?
    } else {
        let annulus = AnnulusSpec::new(radii[0])?;
        [Spacing::Uniform, Spacing::CosineClustered]
            .into_iter()
            .filter_map(|s| PolarGrid::new(annulus, radii.len(), thetas.len(), s).ok())
            .find(|g| {
                g.radial_nodes()
                    .iter()
                    .zip(&radii)
                    .all(|(a, b)| (a - b).abs() <= NODE_MATCH_TOL)
            })
            .ok_or_else(|| io_error(path, "radii are neither uniform nor cosine spaced"))?
    };
    let nodes_match = grid.n_radial() == radii.len()
        && grid
            .radial_nodes()
            .iter()
            .zip(&radii)
            .all(|(a, b)| (a - b).abs() <= NODE_MATCH_TOL)
        && grid.n_angular() == thetas.len()
        && thetas
            .iter()
            .enumerate()
            .all(|(j, t)| (t - grid.theta(j)).abs() <= NODE_MATCH_TOL * 8.0);
    if !nodes_match {
        return Err(io_error(path, "stored nodes do not match the grid"));
    }
    Ok(ComplexField::from_values(grid, values)?)
}

pub fn write_energy(path: &Path, report: &EnergyReport) -> Result<(), CliError> {
    let mut t = Table::create(path, &["epsilon", "dirichlet", "potential", "total"])?;
    t.row([
        num(report.coupling.value()),
        num(report.dirichlet),
        num(report.potential),
        num(report.total),
    ])?;
    t.finish()
}

pub fn write_trace(path: &Path, trace: &FlowTrace) -> Result<(), CliError> {
    let mut t = Table::create(
        path,
        &[
            "iter",
            "dirichlet",
            "potential",
            "total",
            "deg_out",
            "deg_in",
            "res_out",
            "res_in",
            "min_mod",
            "min_r",
            "min_theta",
        ],
    )?;
    for rec in &trace.records {
        t.row([
            rec.iteration.to_string(),
            num(rec.energy.dirichlet),
            num(rec.energy.potential),
            num(rec.energy.total),
            rec.degrees.outer.to_string(),
            rec.degrees.inner.to_string(),
            num(rec.degrees.outer_residual),
            num(rec.degrees.inner_residual),
            num(rec.min_modulus),
            num(rec.min_r),
            num(rec.min_theta),
        ])?;
    }
    t.finish()
}

pub fn write_thresholds(path: &Path, reports: &[ThresholdReport]) -> Result<(), CliError> {
    let mut t = Table::create(path, &["p", "q_root", "beta_p", "capacity_at_q_root"])?;
    for r in reports {
        t.row([
            r.p.to_string(),
            r.q_root.map(num).unwrap_or_default(),
            num(r.beta_p),
            r.capacity_at_root.map(num).unwrap_or_default(),
        ])?;
    }
    t.finish()
}

/// Mode rows, plus a one-row summary file `summary`.
pub fn write_ledger(path: &Path, summary: &Path, report: &LedgerReport) -> Result<(), CliError> {
    let mut t = Table::create(
        path,
        &["k", "branch", "a_k_abs", "m_tilde", "k_contribution"],
    )?;
    for row in &report.rows {
        t.row([
            row.k.to_string(),
            row.branch.to_string(),
            num(row.a_k_abs),
            num(row.m_tilde),
            num(row.k_contribution),
        ])?;
    }
    t.finish()?;
    let mut s = Table::create(
        summary,
        &["s_low", "s_mid", "s_high", "total", "d_pi", "margin", "k_r"],
    )?;
    s.row([
        num(report.s_low),
        num(report.s_mid),
        num(report.s_high),
        num(report.total),
        num(report.d_pi),
        num(report.margin),
        report.k_r.to_string(),
    ])?;
    s.finish()
}
