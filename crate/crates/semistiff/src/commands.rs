//! The subcommands. Each writes its tables into the output directory, echoes
//! the resolved parameters as `<command>.cfg` and prints a short report.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use semistiff_core::energy::{degree_reading, evaluate_energy, jacobian_degree_defect, Degrees};
use semistiff_core::flow::{
    assemble_test_field, grid_radial_solution, run_flow, with_bubbles, FlowEvent, FlowStatus,
};
use semistiff_core::grid::{AnnulusSpec, Boundary, ComplexField};
use semistiff_core::radial::{
    harmonic_profile, profile_min, solve_gl_profile, uniform_nodes, Coupling,
};
use semistiff_core::spectral::{
    fourier_trace, k_r, mode_bound, mode_bound_reference, nonexistence_ledger, Branch,
    ModeCoefficients,
};
use semistiff_core::thresholds::{
    q_polynomial, radial_energy, radial_energy_gap, threshold_report,
};
use semistiff_core::Complex64;

use crate::cli::{
    Cli, Command, EnergyRun, EnergySource, FieldRun, FlowRun, Init, LedgerRun, RadialRun,
    SpectralRun, ThresholdRun,
};
use crate::config::{resolve, Config};
use crate::io::{self, num, Table};
use crate::svg::{self, Panel, Series};
use crate::CliError;

/// Bisection tolerance for the `Q_p` roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Bisection tolerance for `β_p`.
pub const BETA_TOL: f64 = 1e-6;
/// Sample count per curve in the threshold plot.
const PLOT_SAMPLES: usize = 201;

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::Io(format!("stdout: {e}")))?
    };
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed: u64 = resolve(cli.seed, &config, "seed", 0)?;
    let threads: usize = resolve(cli.threads, &config, "threads", 1)?;
    if threads == 0 {
        return Err(CliError::Usage("threads must be >= 1".into()));
    }
    let dir = cli.out.as_path();
    let prepare = |name: &str, resolved: &Config| -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        io::write_text(&dir.join(format!("{name}.cfg")), &resolved.to_string())
    };
    match &cli.command {
        Command::Radial(a) => {
            let run = RadialRun::resolve(a, &config)?;
            prepare("radial", &run.to_config())?;
            cmd_radial(&run, dir, out)
        }
        Command::Flow(a) => {
            let run = FlowRun::resolve(a, &config, seed)?;
            prepare("flow", &run.to_config())?;
            cmd_flow(&run, dir, out)
        }
        Command::Thresholds(a) => {
            let run = ThresholdRun::resolve(a, &config)?;
            prepare("thresholds", &run.to_config())?;
            cmd_thresholds(&run, dir, out)
        }
        Command::Spectral(a) => {
            let run = SpectralRun::resolve(a, &config)?;
            prepare("spectral", &run.to_config())?;
            cmd_spectral(&run, dir, out)
        }
        Command::Energy(a) => {
            let run = EnergyRun::resolve(a, &config)?;
            prepare("energy", &run.to_config())?;
            cmd_energy(&run, dir, out)
        }
        Command::Ledger(a) => {
            let run = LedgerRun::resolve(a, &config)?;
            prepare("ledger", &run.to_config())?;
            cmd_ledger(&run, dir, out)
        }
    }
}

pub fn cmd_radial(run: &RadialRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let annulus = AnnulusSpec::new(run.r)?;
    let profile = if run.eps.is_infinite() {
        harmonic_profile(&annulus, run.p, &uniform_nodes(&annulus, run.nodes))?
    } else {
        solve_gl_profile(&annulus, run.p, run.eps, run.nodes, run.tol)
            .map_err(|e| CliError::Numerical(e.to_string()))?
    };
    io::write_profile(&dir.join("profile.csv"), &profile)?;
    let kind = if run.eps.is_infinite() {
        "closed form"
    } else {
        "boundary value solve"
    };
    say!(
        out,
        "radial profile R={} p={} eps={} ({kind}), {} nodes",
        run.r,
        run.p,
        run.eps,
        run.nodes
    );
    say!(out, "min rho = {}", num(profile_min(&profile)));
    say!(out, "boundary residual = {:e}", profile.boundary_residual());
    Ok(())
}

/// Initial field of degrees `(p, q)` as described by `run.init`, with the
/// recipe actually used.
pub fn build_field(run: &FieldRun, coupling: Coupling) -> Result<(ComplexField, Init), CliError> {
    let grid = run.grid()?;
    let init = match run.init {
        Init::Auto if run.p == run.q => Init::Radial,
        Init::Auto => Init::Blend,
        other => other,
    };
    let field = match init {
        Init::Auto => unreachable!("resolved above"),
        Init::Blend => {
            let r0 = grid.annulus().inner_radius();
            let (q, d) = (run.q as f64, (run.p - run.q) as f64);
            ComplexField::from_fn(grid, |r, t| {
                let s = (r - r0) / (1.0 - r0);
                let phi = s * s * (3.0 - 2.0 * s);
                Complex64::from_polar(1.0, q * t)
                    * (Complex64::from_polar(phi, d * t) + (1.0 - phi))
            })
        }
        Init::Bubbles => assemble_test_field(
            &grid,
            Degrees {
                outer: run.p,
                inner: run.q,
            },
        )?,
        Init::Radial => {
            let base = if run.q == 0 {
                ComplexField::constant(grid, Complex64::new(1.0, 0.0))
            } else {
                let w = i32::try_from(run.q.unsigned_abs())
                    .map_err(|_| CliError::Usage(format!("q = {} out of range", run.q)))?;
                let s = grid_radial_solution(&grid, w, coupling)?;
                if run.q > 0 {
                    s
                } else {
                    let values = s.values().iter().map(|z| z.conj()).collect();
                    ComplexField::from_values(s.grid().clone(), values)?
                }
            };
            with_bubbles(
                &base,
                Degrees {
                    outer: run.p - run.q,
                    inner: 0,
                },
            )?
        }
    };
    Ok((field, init))
}

fn pair(d: Degrees) -> String {
    format!("({}, {})", d.outer, d.inner)
}

pub fn cmd_flow(run: &FlowRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let coupling = Coupling::new(run.eps)?;
    let (initial, init) = build_field(&run.field, coupling)?;
    let start = degree_reading(&initial)?;
    say!(
        out,
        "initial ({init}): degrees {}, energy {}",
        pair(start.degrees()),
        num(evaluate_energy(&initial, coupling).total)
    );
    let outcome = run_flow(&initial, coupling, &run.flow)?;
    io::write_trace(&dir.join("trace.csv"), &outcome.trace)?;
    io::write_field(&dir.join("field.csv"), &outcome.field)?;
    for event in &outcome.trace.events {
        match event {
            FlowEvent::DegreeJump {
                iteration,
                before,
                after,
                energy_before,
                energy_after,
            } => say!(
                out,
                "ESCAPE at iteration {iteration}: degrees {} -> {}, energy {} -> {}",
                pair(*before),
                pair(*after),
                num(*energy_before),
                num(*energy_after)
            ),
            FlowEvent::BoundaryDegeneracy {
                iteration,
                boundary,
                node,
                modulus,
            } => say!(
                out,
                "degenerate {boundary} trace at iteration {iteration}, node {node}, modulus {modulus:.3e}"
            ),
        }
    }
    let status = match outcome.status {
        FlowStatus::Converged => "converged",
        FlowStatus::MaxIterations => "iteration limit reached",
        FlowStatus::Escaped => "stopped at degree escape",
    };
    say!(
        out,
        "{status} after {} iterations, residual {:e}",
        outcome.iterations,
        outcome.residual.max()
    );
    say!(
        out,
        "final: degrees {}, energy {} (dirichlet {}, potential {})",
        pair(outcome.degrees.degrees()),
        num(outcome.energy.total),
        num(outcome.energy.dirichlet),
        num(outcome.energy.potential)
    );
    Ok(())
}

pub fn cmd_thresholds(run: &ThresholdRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = (1..=run.p_max)
        .map(|p| threshold_report(p, run.gamma, ROOT_TOL, BETA_TOL, &[]))
        .collect::<Result<Vec<_>, _>>()?;
    io::write_thresholds(&dir.join("thresholds.csv"), &reports)?;
    say!(out, "p  q_root             beta_p     capacity_at_q_root");
    for r in &reports {
        match (r.q_root, r.capacity_at_root) {
            (Some(q), Some(c)) => say!(out, "{}  {q:.15}  {:.8}  {c:.15}", r.p, r.beta_p),
            _ => say!(out, "{}  unconditional      {:.8}", r.p, r.beta_p),
        }
    }
    let radii: Vec<f64> = (0..PLOT_SAMPLES)
        .map(|i| i as f64 / (PLOT_SAMPLES - 1) as f64)
        .collect();
    let mut q_series: Vec<Series> = (1..=run.p_max)
        .map(|p| Series {
            label: format!("Q_{p}"),
            points: radii.iter().map(|&r| (r, q_polynomial(p, r))).collect(),
            dashed: false,
        })
        .collect();
    q_series.push(Series {
        label: "0".into(),
        points: vec![(0.0, 0.0), (1.0, 0.0)],
        dashed: true,
    });
    let open: Vec<f64> = radii[1..radii.len() - 1].to_vec();
    let mut gap_series = Vec::new();
    for p in 1..=run.p_max {
        let points = open
            .iter()
            .map(|&r| {
                let g = if p == 1 {
                    radial_energy(1, r)
                } else {
                    radial_energy_gap(p, r)?
                };
                Ok((r, g))
            })
            .collect::<Result<Vec<_>, semistiff_core::Error>>()?;
        gap_series.push(Series {
            label: format!("E_{p} - E_{}", p - 1),
            points,
            dashed: false,
        });
    }
    gap_series.push(Series {
        label: "2 pi".into(),
        points: vec![(0.0, 2.0 * PI), (1.0, 2.0 * PI)],
        dashed: true,
    });
    let plot = svg::render(&[
        Panel {
            title: "Q_p(R) = p - 1 - pR - R^p".into(),
            x_label: "R".into(),
            y_label: "Q_p".into(),
            series: q_series,
        },
        Panel {
            title: "radial energy gap vs 2 pi (p = 1 needs no condition)".into(),
            x_label: "R".into(),
            y_label: "gap".into(),
            series: gap_series,
        },
    ]);
    io::write_text(&dir.join("thresholds.svg"), &plot)
}

pub fn cmd_spectral(run: &SpectralRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let mut table = Table::create(
        &dir.join("spectral.csv"),
        &["k", "branch", "m_tilde", "oracle", "delta"],
    )?;
    let mut worst = 0.0f64;
    for k in run.k_min..=run.k_max {
        let bound = mode_bound(k, run.q, run.r)?;
        // Branch I is itself a discrete minimum; check it against a finer one.
        let nodes = if bound.branch == Branch::I {
            2 * run.oracle_nodes
        } else {
            run.oracle_nodes
        };
        let oracle = mode_bound_reference(k, run.q, run.r, nodes)?;
        let delta = (bound.value - oracle).abs() / bound.value.abs().max(1.0);
        worst = worst.max(delta);
        table.row([
            k.to_string(),
            bound.branch.to_string(),
            num(bound.value),
            num(oracle),
            num(delta),
        ])?;
    }
    table.finish()?;
    let kr = k_r(run.q, run.r).map_err(|e| CliError::Numerical(e.to_string()))?;
    say!(
        out,
        "spectral bounds R={} q={} k={}..{}: K_R = {kr}, max oracle delta {worst:.3e}",
        run.r,
        run.q,
        run.k_min,
        run.k_max
    );
    Ok(())
}

pub fn cmd_energy(run: &EnergyRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let coupling = Coupling::new(run.eps)?;
    let field = match &run.source {
        EnergySource::File(path) => io::read_field(path)?,
        EnergySource::Built(f) => build_field(f, coupling)?.0,
    };
    let report = evaluate_energy(&field, coupling);
    io::write_energy(&dir.join("energy.csv"), &report)?;
    let d = degree_reading(&field)?;
    say!(
        out,
        "energy {} (dirichlet {}, potential {})",
        num(report.total),
        num(report.dirichlet),
        num(report.potential)
    );
    say!(
        out,
        "degrees {}, residuals {:.2e} / {:.2e}, jacobian defect {:.3e}",
        pair(d.degrees()),
        d.outer_residual,
        d.inner_residual,
        jacobian_degree_defect(&field)?
    );
    Ok(())
}

pub fn cmd_ledger(run: &LedgerRun, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let kr = k_r(run.q, run.r)?;
    let coeffs = match &run.input {
        Some(path) => {
            let field = io::read_field(path)?;
            let stored = field.grid().annulus().inner_radius();
            if stored != run.r {
                return Err(CliError::Usage(format!(
                    "{} lives on R = {stored}, ledger asked for R = {}",
                    path.display(),
                    run.r
                )));
            }
            let c = fourier_trace(&field, Boundary::Outer, i64::from(run.q))?;
            if c.max_mode() < kr {
                c.zero_padded(kr)?
            } else {
                c
            }
        }
        None => ModeCoefficients::pure_mode(i64::from(run.p - run.q), kr)?,
    };
    let report = nonexistence_ledger(&coeffs, run.p, run.q, run.r)?;
    io::write_ledger(
        &dir.join("ledger.csv"),
        &dir.join("ledger_summary.csv"),
        &report,
    )?;
    say!(
        out,
        "ledger ({}, {}) on R = {}, K_R = {}, source: {}",
        run.p,
        run.q,
        run.r,
        kr,
        coeffs.source()
    );
    say!(
        out,
        "S_low {} S_mid {} S_high {}",
        num(report.s_low),
        num(report.s_mid),
        num(report.s_high)
    );
    say!(
        out,
        "total {}, d pi {}, margin {} ({})",
        num(report.total),
        num(report.d_pi),
        num(report.margin),
        if report.exceeds_d_pi() {
            "bound exceeds d pi"
        } else {
            "bound does not exceed d pi"
        }
    );
    Ok(())
}
