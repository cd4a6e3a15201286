//! Preconditioned projected descent of the discrete `E_ε`.
//!
//! One step: nodal gradient `g`, tangential projection on the rings, then
//! the direction `d` minimising `½ dᵀ(M + τA)d − gᵀd` among fields whose
//! ring components are tangent to `u`. `M` is the lumped mass and `A` the
//! Dirichlet form (FFT in `θ`, tridiagonal in `r` per mode); the ring
//! constraint is eliminated by a preconditioned CG on the rings. Then
//! `u ← u − τ d` and the rings are renormalised to `|u| = 1`. The step is
//! accepted only if the energy does not increase; otherwise `τ` is halved.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rustfft::{Fft, FftPlanner};

use super::{FlowConfig, MIN_BOUNDARY_MODULUS};
use crate::energy::{
    angular_symbol, degree_reading, residual_from_gradient, DegreeReading, Degrees, ElResidual,
    EnergyReport, EnergyStencil,
};
use crate::error::{Error, Result};
use crate::grid::{Boundary, ComplexField, PolarGrid};
use crate::linalg::Tridiagonal;
use crate::radial::Coupling;
use crate::Complex64;

/// Relative slack on energy increase per step (roundoff).
pub const ENERGY_SLACK: f64 = 1e-12;

/// Largest number of step halvings before giving up.
const MAX_HALVINGS: usize = 40;

/// One trace line.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub iteration: usize,
    pub energy: EnergyReport,
    pub degrees: DegreeReading,
    /// Sup-norm of the projected gradient (interior and rings).
    pub residual: ElResidual,
    pub min_modulus: f64,
    pub min_r: f64,
    pub min_theta: f64,
    /// Smallest modulus of the piecewise linear ring traces.
    pub min_boundary_modulus: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowEvent {
    /// The piecewise linear trace of a ring dropped below modulus `0.5`
    /// between nodes `node` and `node + 1`.
    BoundaryDegeneracy {
        iteration: usize,
        boundary: Boundary,
        node: usize,
        modulus: f64,
    },
    /// The degree reading changed between two checks, both readings being
    /// within `0.25` of an integer.
    DegreeJump {
        iteration: usize,
        before: Degrees,
        after: Degrees,
        energy_before: f64,
        energy_after: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub events: Vec<FlowEvent>,
}

impl FlowTrace {
    pub fn degree_jumps(&self) -> impl Iterator<Item = &FlowEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, FlowEvent::DegreeJump { .. }))
    }

    pub fn degeneracies(&self) -> impl Iterator<Item = &FlowEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, FlowEvent::BoundaryDegeneracy { .. }))
    }

    /// Whether any recorded total energy exceeds its predecessor by more
    /// than the roundoff slack.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| {
            let (a, b) = (w[0].energy.total, w[1].energy.total);
            b <= a + ENERGY_SLACK * a.abs().max(1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    MaxIterations,
    /// Stopped at a degree jump because `halt_on_escape` was set.
    Escaped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub field: ComplexField,
    pub trace: FlowTrace,
    pub status: FlowStatus,
    pub iterations: usize,
    pub energy: EnergyReport,
    pub residual: ElResidual,
    pub degrees: DegreeReading,
}

/// `M + τA` diagonalised in `θ`.
struct Preconditioner {
    n_radial: usize,
    n_angular: usize,
    tau: f64,
    factors: Vec<Tridiagonal>,
    /// Per mode, the inverse of the 2×2 block of `(M + τA)⁻¹` on the first
    /// and last rows: the Schur complement onto the rings.
    ring_schur: Vec<[f64; 4]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    column: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Preconditioner {
    fn new(grid: &PolarGrid, stencil: &EnergyStencil, tau: f64) -> Self {
        let n = grid.n_angular();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let mut p = Self {
            n_radial: grid.n_radial(),
            n_angular: n,
            tau,
            factors: Vec::new(),
            ring_schur: Vec::new(),
            forward,
            inverse,
            column: vec![Complex64::new(0.0, 0.0); grid.n_radial()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        };
        p.refactor(stencil, tau);
        p
    }

    fn refactor(&mut self, stencil: &EnergyStencil, tau: f64) {
        let nr = self.n_radial;
        let a = stencil.radial_weights();
        let w = stencil.angular_weights();
        let m = stencil.masses();
        let dt = stencil.angular_step();
        self.tau = tau;
        self.factors = (0..=self.n_angular / 2)
            .map(|k| {
                let sigma = angular_symbol(k as f64, dt) * dt * dt;
                let mut lower = vec![0.0; nr];
                let mut diag = vec![0.0; nr];
                let mut upper = vec![0.0; nr];
                for i in 0..nr {
                    let mut d = m[i] + tau * w[i] * sigma;
                    if i > 0 {
                        d += tau * a[i - 1];
                        lower[i] = -tau * a[i - 1];
                    }
                    if i + 1 < nr {
                        d += tau * a[i];
                        upper[i] = -tau * a[i];
                    }
                    diag[i] = d;
                }
                Tridiagonal::factor(&lower, &diag, &upper)
                    .expect("mass plus Dirichlet form is positive definite")
            })
            .collect();
        self.ring_schur = self
            .factors
            .iter()
            .map(|f| {
                let mut first = vec![0.0; nr];
                first[0] = 1.0;
                f.solve_in_place(&mut first);
                let mut last = vec![0.0; nr];
                last[nr - 1] = 1.0;
                f.solve_in_place(&mut last);
                let (a, b, c, d) = (first[0], last[0], first[nr - 1], last[nr - 1]);
                let det = a * d - b * c;
                [d / det, -b / det, -c / det, a / det]
            })
            .collect();
    }

    /// Applies the ring Schur complement to the first and last rows.
    fn apply_ring_schur(&mut self, first: &mut [Complex64], last: &mut [Complex64]) {
        let n = self.n_angular;
        self.forward.process_with_scratch(first, &mut self.scratch);
        self.forward.process_with_scratch(last, &mut self.scratch);
        for k in 0..n {
            let [a, b, c, d] = self.ring_schur[k.min(n - k)];
            let (x, y) = (first[k], last[k]);
            first[k] = x * a + y * b;
            last[k] = x * c + y * d;
        }
        let scale = 1.0 / n as f64;
        for row in [first, last] {
            self.inverse.process_with_scratch(row, &mut self.scratch);
            row.iter_mut().for_each(|z| *z *= scale);
        }
    }

    fn apply(&mut self, rhs: &[Complex64], out: &mut [Complex64]) {
        let n = self.n_angular;
        out.copy_from_slice(rhs);
        for row in out.chunks_exact_mut(n) {
            self.forward.process_with_scratch(row, &mut self.scratch);
        }
        for k in 0..n {
            for i in 0..self.n_radial {
                self.column[i] = out[i * n + k];
            }
            self.factors[k.min(n - k)].solve_in_place(&mut self.column);
            for i in 0..self.n_radial {
                out[i * n + k] = self.column[i];
            }
        }
        let scale = 1.0 / n as f64;
        for row in out.chunks_exact_mut(n) {
            self.inverse.process_with_scratch(row, &mut self.scratch);
            for z in row.iter_mut() {
                *z *= scale;
            }
        }
    }
}

/// Largest number of conjugate-gradient iterations for the ring constraint.
const MAX_CONSTRAINT_ITERATIONS: usize = 400;

/// Relative residual at which the ring constraint solve stops.
const CONSTRAINT_TOL: f64 = 1e-10;

/// Minimiser of `½ dᵀPd − gᵀd` over directions whose ring components are
/// tangent to `u`, `P = M + τA`. The normal ring components are eliminated
/// through the capacitance system `BᵀP⁻¹B λ = BᵀP⁻¹g`, solved by CG.
struct ConstrainedSolve {
    rows: [usize; 2],
    normals: Vec<Complex64>,
    lambda: Vec<f64>,
    residual: Vec<f64>,
    search: Vec<f64>,
    image: Vec<f64>,
    preconditioned: Vec<f64>,
    ring_first: Vec<Complex64>,
    ring_last: Vec<Complex64>,
    lifted: Vec<Complex64>,
    solved: Vec<Complex64>,
    correction: Vec<Complex64>,
}

impl ConstrainedSolve {
    fn new(grid: &PolarGrid) -> Self {
        let n = grid.n_angular();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            rows: [
                grid.ring_row(Boundary::Outer),
                grid.ring_row(Boundary::Inner),
            ],
            normals: vec![zero; 2 * n],
            lambda: vec![0.0; 2 * n],
            residual: vec![0.0; 2 * n],
            search: vec![0.0; 2 * n],
            image: vec![0.0; 2 * n],
            preconditioned: vec![0.0; 2 * n],
            ring_first: vec![zero; n],
            ring_last: vec![zero; n],
            lifted: vec![zero; grid.len()],
            solved: vec![zero; grid.len()],
            correction: vec![zero; grid.len()],
        }
    }

    fn lift(&mut self, n: usize, coefficients: &[f64]) {
        self.lifted
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (ring, &row) in self.rows.iter().enumerate() {
            for j in 0..n {
                let k = ring * n + j;
                self.lifted[row * n + j] = self.normals[k] * coefficients[k];
            }
        }
    }

    fn restrict(&self, n: usize, field: &[Complex64], out: &mut [f64]) {
        for (ring, &row) in self.rows.iter().enumerate() {
            for j in 0..n {
                let k = ring * n + j;
                let (a, b) = (self.normals[k], field[row * n + j]);
                out[k] = a.re * b.re + a.im * b.im;
            }
        }
    }

    /// `Nᵀ S N` applied to the residual, `S` the ring Schur complement.
    fn precondition(&mut self, pre: &mut Preconditioner) {
        let n = pre.n_angular;
        let inner = usize::from(self.rows[0] == 0);
        let outer = 1 - inner;
        for j in 0..n {
            self.ring_first[j] = self.normals[inner * n + j] * self.residual[inner * n + j];
            self.ring_last[j] = self.normals[outer * n + j] * self.residual[outer * n + j];
        }
        pre.apply_ring_schur(&mut self.ring_first, &mut self.ring_last);
        for j in 0..n {
            let (a, b) = (self.normals[inner * n + j], self.ring_first[j]);
            self.preconditioned[inner * n + j] = a.re * b.re + a.im * b.im;
            let (a, b) = (self.normals[outer * n + j], self.ring_last[j]);
            self.preconditioned[outer * n + j] = a.re * b.re + a.im * b.im;
        }
    }

    fn solve(
        &mut self,
        pre: &mut Preconditioner,
        u: &[Complex64],
        g: &[Complex64],
        out: &mut [Complex64],
    ) {
        let n = pre.n_angular;
        for (ring, &row) in self.rows.iter().enumerate() {
            for j in 0..n {
                let z = u[row * n + j];
                self.normals[ring * n + j] = z / z.norm();
            }
        }
        pre.apply(g, out);
        let mut rhs = core::mem::take(&mut self.residual);
        self.restrict(n, out, &mut rhs);
        self.residual = rhs;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let target = CONSTRAINT_TOL * dot(&self.residual, &self.residual).sqrt();
        self.lambda.iter_mut().for_each(|x| *x = 0.0);
        self.correction
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        self.precondition(pre);
        self.search.copy_from_slice(&self.preconditioned);
        let mut rz = dot(&self.residual, &self.preconditioned);
        for _ in 0..MAX_CONSTRAINT_ITERATIONS {
            if dot(&self.residual, &self.residual).sqrt() <= target {
                break;
            }
            let search = core::mem::take(&mut self.search);
            self.lift(n, &search);
            self.search = search;
            let lifted = core::mem::take(&mut self.lifted);
            pre.apply(&lifted, &mut self.solved);
            self.lifted = lifted;
            let mut image = core::mem::take(&mut self.image);
            self.restrict(n, &self.solved, &mut image);
            self.image = image;
            let curvature = dot(&self.search, &self.image);
            if !(curvature > 0.0) {
                break;
            }
            let alpha = rz / curvature;
            for k in 0..self.lambda.len() {
                self.lambda[k] += alpha * self.search[k];
                self.residual[k] -= alpha * self.image[k];
            }
            for (c, s) in self.correction.iter_mut().zip(&self.solved) {
                *c += s * alpha;
            }
            self.precondition(pre);
            let next = dot(&self.residual, &self.preconditioned);
            let beta = next / rz;
            rz = next;
            for k in 0..self.search.len() {
                self.search[k] = self.preconditioned[k] + beta * self.search[k];
            }
        }
        for (d, c) in out.iter_mut().zip(&self.correction) {
            *d -= c;
        }
        for (ring, &row) in self.rows.iter().enumerate() {
            for j in 0..n {
                let k = ring * n + j;
                let (t, d) = (self.normals[k] * Complex64::new(0.0, 1.0), out[row * n + j]);
                out[row * n + j] = t * (t.re * d.re + t.im * d.im);
            }
        }
    }
}

/// Adds a seeded uniform perturbation of amplitude `amplitude` to every
/// interior node (ChaCha8, one draw per real component, row-major order).
pub fn perturb(field: &ComplexField, amplitude: f64, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let grid = field.grid();
    let n = grid.n_angular();
    let mut values = field.values().to_vec();
    for i in 1..grid.n_radial() - 1 {
        for z in &mut values[i * n..(i + 1) * n] {
            let re = unit();
            let im = unit();
            *z += Complex64::new(re, im) * amplitude;
        }
    }
    ComplexField::from_values(grid.clone(), values).expect("same grid")
}

fn project_rings(grid: &PolarGrid, u: &[Complex64], g: &mut [Complex64]) {
    let n = grid.n_angular();
    for b in [Boundary::Inner, Boundary::Outer] {
        let i = grid.ring_row(b);
        for j in 0..n {
            let z = u[i * n + j];
            let t = z * Complex64::new(0.0, 1.0) / z.norm();
            let gj = g[i * n + j];
            g[i * n + j] = t * (gj.re * t.re + gj.im * t.im);
        }
    }
}

fn normalize_rings(grid: &PolarGrid, u: &mut [Complex64]) {
    let n = grid.n_angular();
    for b in [Boundary::Outer, Boundary::Inner] {
        let i = grid.ring_row(b);
        for z in &mut u[i * n..(i + 1) * n] {
            let m = z.norm();
            *z = if m > 0.0 {
                *z / m
            } else {
                Complex64::new(1.0, 0.0)
            };
        }
    }
}

/// Smallest modulus of the piecewise linear ring trace, `|u_j + u_{j+1}|/2`,
/// with its ring and the index `j`. It vanishes exactly when the phase
/// difference across an edge reaches `π`.
fn ring_trace_min(grid: &PolarGrid, u: &[Complex64]) -> (f64, Boundary, usize) {
    let n = grid.n_angular();
    let mut worst = (f64::INFINITY, Boundary::Outer, 0);
    for b in [Boundary::Outer, Boundary::Inner] {
        let row = &u[grid.ring_row(b) * n..(grid.ring_row(b) + 1) * n];
        for j in 0..n {
            let m = 0.5 * (row[j] + row[(j + 1) % n]).norm();
            if m < worst.0 {
                worst = (m, b, j);
            }
        }
    }
    worst
}

fn min_modulus(grid: &PolarGrid, u: &[Complex64]) -> (f64, f64, f64) {
    let n = grid.n_angular();
    let mut best = (f64::INFINITY, grid.radius(0), 0.0);
    for i in 1..grid.n_radial() - 1 {
        for j in 0..n {
            let m = u[i * n + j].norm();
            if m < best.0 {
                best = (m, grid.radius(i), grid.theta(j));
            }
        }
    }
    best
}

/// Runs the projected descent from `initial` (after the optional seeded
/// perturbation). Rings are renormalised before the first step.
pub fn run_flow(
    initial: &ComplexField,
    coupling: Coupling,
    config: &FlowConfig,
) -> Result<FlowOutcome> {
    config.validate(coupling)?;
    let grid = initial.grid().clone();
    for b in [Boundary::Outer, Boundary::Inner] {
        if let Some((node, z)) = initial
            .ring(b)
            .iter()
            .enumerate()
            .find(|(_, z)| !(z.norm() >= MIN_BOUNDARY_MODULUS))
        {
            return Err(Error::DegenerateBoundary {
                boundary: b,
                node,
                modulus: z.norm(),
            });
        }
    }
    let start = if config.perturbation > 0.0 {
        perturb(initial, config.perturbation, config.seed)
    } else {
        initial.clone()
    };
    let mut u = start.into_values();
    normalize_rings(&grid, &mut u);

    let stencil = EnergyStencil::new(&grid);
    let mut pre = Preconditioner::new(&grid, &stencil, config.step_size);
    let mut constraint = ConstrainedSolve::new(&grid);
    let mut grad = vec![Complex64::new(0.0, 0.0); u.len()];
    let mut dir = vec![Complex64::new(0.0, 0.0); u.len()];
    let mut trial = vec![Complex64::new(0.0, 0.0); u.len()];

    let field_of = |values: &[Complex64]| {
        ComplexField::from_values(grid.clone(), values.to_vec()).expect("same grid")
    };
    let mut energy = stencil.energy(&u, coupling);
    let mut degrees = degree_reading(&field_of(&u))?;
    let mut trace = FlowTrace::default();
    let mut tau = config.step_size;
    let mut last_boundary_min = ring_trace_min(&grid, &u).0;
    let mut status = FlowStatus::MaxIterations;
    let mut iteration = 0;
    let mut residual;

    loop {
        stencil.gradient(&u, coupling, &mut grad);
        project_rings(&grid, &u, &mut grad);
        residual = residual_from_gradient(&grid, &u, &grad, &stencil);
        let converged = residual.max() < config.grad_tol;
        let at_check = iteration % config.degree_check_interval == 0;
        if at_check || converged || iteration == config.max_iterations {
            let (m, r, t) = min_modulus(&grid, &u);
            trace.records.push(FlowRecord {
                iteration,
                energy,
                degrees,
                residual,
                min_modulus: m,
                min_r: r,
                min_theta: t,
                min_boundary_modulus: last_boundary_min,
                step: tau,
            });
        }
        if converged {
            status = FlowStatus::Converged;
            break;
        }
        if iteration == config.max_iterations {
            break;
        }

        let previous_energy = energy.total;
        let mut accepted = false;
        let mut increase = 0.0;
        for _ in 0..MAX_HALVINGS {
            if (pre.tau - tau).abs() > 0.0 {
                pre.refactor(&stencil, tau);
            }
            constraint.solve(&mut pre, &u, &grad, &mut dir);
            for ((t, &z), &d) in trial.iter_mut().zip(&u).zip(&dir) {
                *t = z - d * tau;
            }
            normalize_rings(&grid, &mut trial);
            let e = stencil.energy(&trial, coupling);
            increase = e.total - energy.total;
            if increase <= ENERGY_SLACK * energy.total.abs().max(1.0) {
                std::mem::swap(&mut u, &mut trial);
                energy = e;
                let (bmin, bring, bnode) = ring_trace_min(&grid, &u);
                if bmin < MIN_BOUNDARY_MODULUS && last_boundary_min >= MIN_BOUNDARY_MODULUS {
                    trace.events.push(FlowEvent::BoundaryDegeneracy {
                        iteration: iteration + 1,
                        boundary: bring,
                        node: bnode,
                        modulus: bmin,
                    });
                }
                last_boundary_min = bmin;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            return Err(Error::StepSize {
                iteration: iteration + 1,
                increase,
            });
        }
        iteration += 1;
        tau = (tau * 2.0).min(config.step_size);

        if iteration % config.degree_check_interval == 0 {
            let reading = degree_reading(&field_of(&u))?;
            let clean = degrees.outer_residual < 0.25
                && degrees.inner_residual < 0.25
                && reading.outer_residual < 0.25
                && reading.inner_residual < 0.25;
            if clean && reading.degrees() != degrees.degrees() {
                trace.events.push(FlowEvent::DegreeJump {
                    iteration,
                    before: degrees.degrees(),
                    after: reading.degrees(),
                    energy_before: previous_energy,
                    energy_after: energy.total,
                });
                degrees = reading;
                if config.halt_on_escape {
                    stencil.gradient(&u, coupling, &mut grad);
                    project_rings(&grid, &u, &mut grad);
                    residual = residual_from_gradient(&grid, &u, &grad, &stencil);
                    let (m, r, t) = min_modulus(&grid, &u);
                    trace.records.push(FlowRecord {
                        iteration,
                        energy,
                        degrees,
                        residual,
                        min_modulus: m,
                        min_r: r,
                        min_theta: t,
                        min_boundary_modulus: last_boundary_min,
                        step: tau,
                    });
                    status = FlowStatus::Escaped;
                    break;
                }
            } else {
                degrees = reading;
            }
        }
    }
    Ok(FlowOutcome {
        field: field_of(&u),
        trace,
        status,
        iterations: iteration,
        energy,
        residual,
        degrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, AnnulusSpec, Spacing};

    #[test]
    fn preconditioned_step_descends_on_the_quadratic() {
        let g = make_grid(AnnulusSpec::new(0.99).unwrap(), 64, 128, Spacing::Uniform).unwrap();
        let u = perturb(
            &ComplexField::constant(g.clone(), Complex64::new(1.0, 0.0)),
            0.5,
            3,
        );
        let u = u.values().to_vec();
        let stencil = EnergyStencil::new(&g);
        let mut grad = vec![Complex64::new(0.0, 0.0); u.len()];
        stencil.gradient(&u, Coupling::Infinite, &mut grad);
        let e0 = stencil.energy(&u, Coupling::Infinite).total;
        for tau in [1e-8, 1e-4, 1.0, 1e4] {
            let mut pre = Preconditioner::new(&g, &stencil, tau);
            let mut d = vec![Complex64::new(0.0, 0.0); u.len()];
            pre.apply(&grad, &mut d);
            let trial: Vec<Complex64> = u.iter().zip(&d).map(|(z, d)| z - d * tau).collect();
            let e1 = stencil.energy(&trial, Coupling::Infinite).total;
            assert!(e1 < e0);
        }
    }
}
