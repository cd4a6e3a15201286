//! Discrete Ginzburg–Landau energy, boundary degrees and the Jacobian
//! identity `∫ Jac u = π (deg_outer − deg_inner)`.
//!
//! The Dirichlet term is an edge sum: radial edges carry the weight
//! `r_{i+½}Δθ / h_i`; angular differences use the fourth-order
//! combination `(4/3)|u_{j+1} − u_j|² − (1/12)|u_{j+2} − u_j|²` with weight
//! `c_i / (r_i Δθ)`, `c_i` the trapezoid dual length. The potential uses the
//! trapezoid mass `c_i r_i Δθ`. The same quadratic form drives the descent
//! flow, so discrete energies and discrete gradients are consistent exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{Boundary, ComplexField, PolarGrid};
use crate::linalg::pairwise_sum;
use crate::radial::Coupling;
use crate::Complex64;

/// Boundary modulus below which the degree is undefined.
pub const DEGENERATE_MODULUS: f64 = 1e-8;

/// The two terms of `E_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
    pub coupling: Coupling,
}

/// Boundary degrees with their distance from integrality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Degrees {
    pub outer: i64,
    pub inner: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeReading {
    pub outer: i64,
    pub inner: i64,
    pub outer_residual: f64,
    pub inner_residual: f64,
}

impl DegreeReading {
    pub fn degrees(&self) -> Degrees {
        Degrees {
            outer: self.outer,
            inner: self.inner,
        }
    }

    /// Both raw readings lie within `0.5` of their integers.
    pub fn is_valid(&self) -> bool {
        self.outer_residual < 0.5 && self.inner_residual < 0.5
    }
}

/// Fourier symbol of the angular difference operator:
/// `(cos x − 1)(cos x − 7) / (3Δθ²)` with `x = kΔθ`; it approximates `k²`
/// to fourth order and is nonnegative for every `k`.
pub fn angular_symbol(k: f64, angular_step: f64) -> f64 {
    let c = (k * angular_step).cos();
    (c - 1.0) * (c - 7.0) / (3.0 * angular_step * angular_step)
}

/// Precomputed weights of the discrete energy on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyStencil {
    n_radial: usize,
    n_angular: usize,
    /// `r_{i+½} Δθ / h_i`, one per radial edge.
    radial: Vec<f64>,
    /// `c_i / (r_i Δθ)`, one per row.
    angular: Vec<f64>,
    /// `c_i r_i Δθ`, one per row.
    mass: Vec<f64>,
    angular_step: f64,
}

impl EnergyStencil {
    pub fn new(grid: &PolarGrid) -> Self {
        let r = grid.radial_nodes();
        let dt = grid.angular_step();
        let c = grid.radial_weights();
        let radial = r
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * dt / (w[1] - w[0]))
            .collect();
        let angular = r.iter().zip(&c).map(|(&ri, &ci)| ci / (ri * dt)).collect();
        let mass = r.iter().zip(&c).map(|(&ri, &ci)| ci * ri * dt).collect();
        Self {
            n_radial: grid.n_radial(),
            n_angular: grid.n_angular(),
            radial,
            angular,
            mass,
            angular_step: dt,
        }
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.angular
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn angular_step(&self) -> f64 {
        self.angular_step
    }

    /// Discrete `E_ε` of the node values `u` (row-major, as in
    /// [`ComplexField`]). Pairwise summation over rows and edges.
    pub fn energy(&self, u: &[Complex64], coupling: Coupling) -> EnergyReport {
        let n = self.n_angular;
        let mut terms = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(2 * self.n_radial);
        for i in 0..self.n_radial - 1 {
            let lo = &u[i * n..(i + 1) * n];
            let hi = &u[(i + 1) * n..(i + 2) * n];
            terms.clear();
            terms.extend(lo.iter().zip(hi).map(|(a, b)| (b - a).norm_sqr()));
            rows.push(0.5 * self.radial[i] * pairwise_sum(&terms));
        }
        for i in 0..self.n_radial {
            let row = &u[i * n..(i + 1) * n];
            terms.clear();
            terms.extend((0..n).map(|j| {
                let near = (row[(j + 1) % n] - row[j]).norm_sqr();
                let far = (row[(j + 2) % n] - row[j]).norm_sqr();
                near * (4.0 / 3.0) - far / 12.0
            }));
            rows.push(0.5 * self.angular[i] * pairwise_sum(&terms));
        }
        let dirichlet = pairwise_sum(&rows);
        let potential = match coupling {
            Coupling::Infinite => 0.0,
            Coupling::Finite(_) => {
                let kappa = coupling.inverse_square();
                rows.clear();
                for i in 0..self.n_radial {
                    terms.clear();
                    terms.extend(u[i * n..(i + 1) * n].iter().map(|z| {
                        let d = 1.0 - z.norm_sqr();
                        d * d
                    }));
                    rows.push(self.mass[i] * pairwise_sum(&terms));
                }
                0.25 * kappa * pairwise_sum(&rows)
            }
        };
        EnergyReport {
            dirichlet,
            potential,
            total: dirichlet + potential,
            coupling,
        }
    }

    /// Gradient of [`EnergyStencil::energy`] with respect to the real and
    /// imaginary parts of every node value, packed as a complex number.
    pub fn gradient(&self, u: &[Complex64], coupling: Coupling, out: &mut [Complex64]) {
        let n = self.n_angular;
        let kappa = coupling.inverse_square();
        for i in 0..self.n_radial {
            let row = &u[i * n..(i + 1) * n];
            let w = self.angular[i];
            for j in 0..n {
                let z = row[j];
                let near = z * 2.0 - row[(j + 1) % n] - row[(j + n - 1) % n];
                let far = z * 2.0 - row[(j + 2) % n] - row[(j + n - 2) % n];
                let mut g = (near * (4.0 / 3.0) - far / 12.0) * w;
                if i > 0 {
                    g += (z - u[(i - 1) * n + j]) * self.radial[i - 1];
                }
                if i + 1 < self.n_radial {
                    g += (z - u[(i + 1) * n + j]) * self.radial[i];
                }
                if kappa > 0.0 {
                    g -= z * (self.mass[i] * kappa * (1.0 - z.norm_sqr()));
                }
                out[i * n + j] = g;
            }
        }
    }
}

/// Discrete `E_ε(u)`.
pub fn evaluate_energy(field: &ComplexField, coupling: Coupling) -> EnergyReport {
    EnergyStencil::new(field.grid()).energy(field.values(), coupling)
}

/// Sup-norms of the discrete Euler–Lagrange residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    /// `max |∇E|/m_i` over interior nodes, i.e. `−Δu − u(1−|u|²)/ε²`.
    pub interior: f64,
    /// `max |u ∧ ∇E| / (r Δθ)` on the outer ring: discrete `u ∧ ∂_ν u`.
    pub outer: f64,
    pub inner: f64,
}

impl ElResidual {
    pub fn max(&self) -> f64 {
        self.interior.max(self.outer).max(self.inner)
    }
}

pub(crate) fn residual_from_gradient(
    grid: &PolarGrid,
    u: &[Complex64],
    grad: &[Complex64],
    stencil: &EnergyStencil,
) -> ElResidual {
    let n = grid.n_angular();
    let last = grid.n_radial() - 1;
    let mut interior: f64 = 0.0;
    for i in 1..last {
        let m = stencil.mass[i];
        for j in 0..n {
            interior = interior.max(grad[i * n + j].norm() / m);
        }
    }
    let ring = |i: usize| {
        let arc = grid.radius(i) * grid.angular_step();
        (0..n)
            .map(|j| {
                let z = u[i * n + j];
                let g = grad[i * n + j];
                (z.conj() * g).im.abs() / (z.norm().max(DEGENERATE_MODULUS) * arc)
            })
            .fold(0.0, f64::max)
    };
    ElResidual {
        interior,
        outer: ring(last),
        inner: ring(0),
    }
}

/// Discrete Euler–Lagrange residual of `field` for `E_ε`.
pub fn el_residual(field: &ComplexField, coupling: Coupling) -> ElResidual {
    let stencil = EnergyStencil::new(field.grid());
    let mut grad = vec![Complex64::new(0.0, 0.0); field.values().len()];
    stencil.gradient(field.values(), coupling, &mut grad);
    residual_from_gradient(field.grid(), field.values(), &grad, &stencil)
}

/// Winding number of a closed discrete curve by summing principal phase
/// increments `arg(u_{j+1}/u_j)`; returns the nearest integer and the
/// distance of the raw sum `/2π` from it.
pub fn ring_degree(ring: &[Complex64], boundary: Boundary) -> Result<(i64, f64)> {
    if let Some((node, z)) = ring
        .iter()
        .enumerate()
        .find(|(_, z)| !(z.norm() >= DEGENERATE_MODULUS))
    {
        return Err(Error::DegenerateBoundary {
            boundary,
            node,
            modulus: z.norm(),
        });
    }
    let n = ring.len();
    let increments: Vec<f64> = (0..n)
        .map(|j| (ring[(j + 1) % n] * ring[j].conj()).arg())
        .collect();
    let raw = pairwise_sum(&increments) / (2.0 * PI);
    let nearest = raw.round();
    Ok((nearest as i64, (raw - nearest).abs()))
}

/// Degree of `field` on one boundary ring.
pub fn boundary_degree(field: &ComplexField, boundary: Boundary) -> Result<(i64, f64)> {
    ring_degree(field.ring(boundary), boundary)
}

/// Degrees on both rings.
pub fn degree_reading(field: &ComplexField) -> Result<DegreeReading> {
    let (outer, outer_residual) = boundary_degree(field, Boundary::Outer)?;
    let (inner, inner_residual) = boundary_degree(field, Boundary::Inner)?;
    Ok(DegreeReading {
        outer,
        inner,
        outer_residual,
        inner_residual,
    })
}

/// Second-order `∂_r` and `∂_θ` at every node: three-point Lagrange
/// differences in `r` (one-sided at the rings), centred periodic in `θ`.
fn polar_derivatives(field: &ComplexField) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = field.grid();
    let r = grid.radial_nodes();
    let nr = grid.n_radial();
    let n = grid.n_angular();
    let u = field.values();
    let dt = grid.angular_step();
    let mut ur = vec![Complex64::new(0.0, 0.0); u.len()];
    let mut ut = vec![Complex64::new(0.0, 0.0); u.len()];
    for i in 0..nr {
        // Lagrange weights at r[i] for the three nodes (k0, k0+1, k0+2).
        let k0 = i.saturating_sub(1).min(nr - 3);
        let (x0, x1, x2) = (r[k0], r[k0 + 1], r[k0 + 2]);
        let x = r[i];
        let w0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let w1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let w2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        for j in 0..n {
            ur[i * n + j] =
                u[k0 * n + j] * w0 + u[(k0 + 1) * n + j] * w1 + u[(k0 + 2) * n + j] * w2;
            ut[i * n + j] = (u[i * n + (j + 1) % n] - u[i * n + (j + n - 1) % n]) / (2.0 * dt);
        }
    }
    (ur, ut)
}

fn wedge(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// `∫_A Jac u dx = ∫∫ ∂_r u ∧ ∂_θ u dr dθ` by trapezoid quadrature.
pub fn jacobian_integral(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let (ur, ut) = polar_derivatives(field);
    let n = grid.n_angular();
    let c = grid.radial_weights();
    let mut rows = Vec::with_capacity(grid.n_radial());
    let mut terms = Vec::with_capacity(n);
    for (i, ci) in c.iter().enumerate() {
        terms.clear();
        terms.extend((0..n).map(|j| wedge(ur[i * n + j], ut[i * n + j])));
        rows.push(ci * grid.angular_step() * pairwise_sum(&terms));
    }
    pairwise_sum(&rows)
}

/// `|∫ Jac u| − π |deg_outer − deg_inner|`.
pub fn jacobian_degree_defect(field: &ComplexField) -> Result<f64> {
    let reading = degree_reading(field)?;
    let expected = PI * (reading.outer - reading.inner).abs() as f64;
    Ok(jacobian_integral(field).abs() - expected)
}

/// `min (|∇u|² − 2|Jac u|)` over interior nodes.
pub fn pointwise_lower_bound_check(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let (ur, ut) = polar_derivatives(field);
    let n = grid.n_angular();
    let mut best = f64::INFINITY;
    for i in 1..grid.n_radial() - 1 {
        let r = grid.radius(i);
        for j in 0..n {
            let a = ur[i * n + j];
            let b = ut[i * n + j] / r;
            best = best.min(a.norm_sqr() + b.norm_sqr() - 2.0 * wedge(a, b).abs());
        }
    }
    best
}
