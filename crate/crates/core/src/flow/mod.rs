//! Boundary bubbles, degree-prescribed test fields and (with `std`) the
//! projected descent flow of `E_ε`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::energy::{angular_symbol, Degrees};
use crate::error::{parameter, Error, Result};
use crate::grid::{radial_ansatz, Boundary, ComplexField, PolarGrid};
use crate::radial::{solve_profile_on_nodes, Coupling, NewtonOptions, RadialProfile};
use crate::Complex64;

#[cfg(feature = "std")]
mod descent;

#[cfg(feature = "std")]
pub use descent::{perturb, run_flow, FlowEvent, FlowOutcome, FlowRecord, FlowStatus, FlowTrace};

/// Ratio between the cutoff radius `c` of a bubble and the depth of its
/// zero below the boundary.
pub const BUBBLE_DEPTH_RATIO: f64 = 12.0;

/// Grid cells per zero depth required by [`assemble_test_field`].
pub const BUBBLE_RESOLUTION_CELLS: f64 = 4.0;

/// Largest cutoff radius of a planned bubble relative to its ring radius.
pub const BUBBLE_RING_FRACTION: f64 = 0.25;

/// Minimum boundary modulus accepted before inserting a bubble or starting a
/// flow.
pub const MIN_BOUNDARY_MODULUS: f64 = 0.5;

/// Settings of the projected descent.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Largest pseudo-time step `τ`; halved on energy increase.
    pub step_size: f64,
    pub max_iterations: usize,
    /// Sup-norm of the projected gradient that counts as converged.
    pub grad_tol: f64,
    /// Trace records and degree checks every this many iterations.
    pub degree_check_interval: usize,
    pub seed: u64,
    /// Amplitude of the seeded interior perturbation (0 disables it).
    pub perturbation: f64,
    /// Stop at the first recorded degree jump.
    pub halt_on_escape: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_iterations: 2000,
            grad_tol: 1e-8,
            degree_check_interval: 1,
            seed: 0,
            perturbation: 0.0,
            halt_on_escape: false,
        }
    }
}

impl FlowConfig {
    /// Rejects nonsensical settings and enforces `τ · 3/ε² < 1`: the
    /// potential term is treated explicitly.
    pub fn validate(&self, coupling: Coupling) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(parameter("step_size must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(parameter("grad_tol must be positive"));
        }
        if self.degree_check_interval == 0 {
            return Err(parameter("degree_check_interval must be at least 1"));
        }
        if !(self.perturbation >= 0.0) {
            return Err(parameter("perturbation must be nonnegative"));
        }
        let bound = 3.0 * coupling.inverse_square();
        if self.step_size * bound >= 1.0 {
            return Err(parameter(alloc::format!(
                "step_size {} violates the stability bound step_size * 3/eps^2 < 1",
                self.step_size
            )));
        }
        Ok(())
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Unimodular-on-the-ring bubble factor centred at `r_b e^{iθ_0}`.
struct Bubble {
    centre: Complex64,
    zero: Complex64,
    pole: Complex64,
    scale: f64,
    cutoff: f64,
    conjugate: bool,
}

impl Bubble {
    fn new(ring_radius: f64, boundary: Boundary, sign: i32, cutoff: f64, theta0: f64) -> Self {
        let depth = cutoff / BUBBLE_DEPTH_RATIO;
        let dir = Complex64::from_polar(1.0, theta0);
        let zero_radius = match boundary {
            Boundary::Outer => ring_radius - depth,
            Boundary::Inner => ring_radius + depth,
        };
        let zero = dir * zero_radius;
        let pole = dir * (ring_radius * ring_radius / zero_radius);
        let holomorphic = matches!(
            (boundary, sign > 0),
            (Boundary::Outer, true) | (Boundary::Inner, false)
        );
        Self {
            centre: dir * ring_radius,
            zero,
            pole,
            scale: ring_radius / zero_radius,
            cutoff,
            conjugate: !holomorphic,
        }
    }

    fn factor(&self, z: Complex64) -> Complex64 {
        let d = (z - self.centre).norm();
        if d >= 2.0 * self.cutoff {
            return Complex64::new(1.0, 0.0);
        }
        let b = (z - self.zero) / (z - self.pole) * self.scale;
        let v = if d <= self.cutoff {
            b
        } else {
            // Re b > 0 here, so the principal logarithm is continuous.
            let chi = smoothstep((2.0 * self.cutoff - d) / self.cutoff);
            (b.ln() * chi).exp()
        };
        if self.conjugate {
            v.conj()
        } else {
            v
        }
    }
}

fn check_ring(field: &ComplexField, boundary: Boundary) -> Result<()> {
    if let Some((node, z)) = field
        .ring(boundary)
        .iter()
        .enumerate()
        .find(|(_, z)| !(z.norm() >= MIN_BOUNDARY_MODULUS))
    {
        return Err(Error::DegenerateBoundary {
            boundary,
            node,
            modulus: z.norm(),
        });
    }
    Ok(())
}

/// Multiplies `field` by a Möbius bubble at angle `theta0` of the chosen
/// ring. The bubble is `b(z) = (r_b/|a|)(z − a)/(z − a*)` with `a` at depth
/// `concentration / BUBBLE_DEPTH_RATIO` inside the annulus and `a*` its
/// reflection, kept exactly within distance `c = concentration` of the
/// boundary point and blended to `1` through `exp(χ log b)` on `c < |z − P| < 2c`.
/// It changes the degree of that ring by `sign` and leaves the other ring
/// untouched.
pub fn insert_boundary_bubble_at(
    field: &ComplexField,
    boundary: Boundary,
    sign: i32,
    concentration: f64,
    theta0: f64,
) -> Result<ComplexField> {
    if sign != 1 && sign != -1 {
        return Err(parameter(alloc::format!(
            "bubble sign must be +1 or -1, got {sign}"
        )));
    }
    if !(concentration > 0.0 && concentration < 1.0) {
        return Err(parameter(alloc::format!(
            "concentration must lie in (0,1), got {concentration}"
        )));
    }
    let grid = field.grid();
    let annulus = grid.annulus();
    if 2.0 * concentration >= annulus.width() {
        return Err(parameter(alloc::format!(
            "bubble cutoff 2*{concentration} does not fit in the annulus width {}",
            annulus.width()
        )));
    }
    check_ring(field, boundary)?;
    let ring_radius = match boundary {
        Boundary::Outer => 1.0,
        Boundary::Inner => annulus.inner_radius(),
    };
    let bubble = Bubble::new(ring_radius, boundary, sign, concentration, theta0);
    let n = grid.n_angular();
    let mut values = field.values().to_vec();
    for i in 0..grid.n_radial() {
        let r = grid.radius(i);
        for j in 0..n {
            let z = Complex64::from_polar(r, grid.theta(j));
            values[i * n + j] *= bubble.factor(z);
        }
    }
    ComplexField::from_values(grid.clone(), values)
}

/// [`insert_boundary_bubble_at`] at `θ = 0`.
pub fn insert_boundary_bubble(
    field: &ComplexField,
    boundary: Boundary,
    sign: i32,
    concentration: f64,
) -> Result<ComplexField> {
    insert_boundary_bubble_at(field, boundary, sign, concentration, 0.0)
}

/// Node spacing seen by a bubble on `boundary`: the larger of the arc step
/// and the first radial step.
pub fn ring_resolution(grid: &PolarGrid, boundary: Boundary) -> f64 {
    let r = grid.radial_nodes();
    let n = r.len();
    match boundary {
        Boundary::Outer => (r[n - 1] - r[n - 2]).max(grid.angular_step()),
        Boundary::Inner => (r[1] - r[0]).max(r[0] * grid.angular_step()),
    }
}

/// Bubble sizes chosen by [`assemble_test_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubblePlan {
    pub outer_concentration: Option<f64>,
    pub inner_concentration: Option<f64>,
}

/// Picks the cutoff radii: every zero depth must span
/// [`BUBBLE_RESOLUTION_CELLS`] grid cells, bubbles on one ring must not
/// overlap, and the outer and inner cutoffs together must fit in the width.
/// Within those limits the bubbles are made as large as possible.
pub fn plan_bubbles(grid: &PolarGrid, target: Degrees) -> Result<BubblePlan> {
    let width = grid.annulus().width();
    let budget = 0.45 * width;
    let need = |boundary: Boundary, count: i64| {
        if count == 0 {
            0.0
        } else {
            BUBBLE_DEPTH_RATIO * BUBBLE_RESOLUTION_CELLS * ring_resolution(grid, boundary)
        }
    };
    let limit = |ring_radius: f64, count: i64| {
        let n = count.unsigned_abs().max(2);
        let separated = 0.95 * 2.0 * ring_radius * (PI / n as f64).sin() / 4.0;
        separated.min(BUBBLE_RING_FRACTION * ring_radius)
    };
    let r_in = grid.annulus().inner_radius();
    let need_out = need(Boundary::Outer, target.outer);
    let need_in = need(Boundary::Inner, target.inner);
    let limit_out = limit(1.0, target.outer);
    let limit_in = limit(r_in, target.inner);
    if need_out + need_in > budget || need_out > limit_out || need_in > limit_in {
        return Err(parameter(alloc::format!(
            "grid too coarse for degrees ({}, {}): bubbles need cutoffs {need_out:.3e} (outer) and {need_in:.3e} (inner)",
            target.outer, target.inner
        )));
    }
    if need_out + need_in == 0.0 {
        return Ok(BubblePlan {
            outer_concentration: None,
            inner_concentration: None,
        });
    }
    let stretch = budget / (need_out + need_in);
    let pick = |need: f64, limit: f64| {
        if need == 0.0 {
            None
        } else {
            Some((need * stretch).min(limit).min(0.99))
        }
    };
    Ok(BubblePlan {
        outer_concentration: pick(need_out, limit_out),
        inner_concentration: pick(need_in, limit_in),
    })
}

/// A field of degrees `target` built from the constant `1` by `|p|` outer
/// and `|q|` inner bubbles at equally spaced angles starting from `θ = 0`.
pub fn assemble_test_field(grid: &PolarGrid, target: Degrees) -> Result<ComplexField> {
    let one = ComplexField::constant(grid.clone(), Complex64::new(1.0, 0.0));
    with_bubbles(&one, target)
}

/// Radial modulus that is an exact critical point of the discrete energy on
/// `grid`: the radial stencil on the grid's nodes with the grid's angular
/// symbol for `e^{ipθ}`.
pub fn grid_radial_profile(grid: &PolarGrid, p: i32, coupling: Coupling) -> Result<RadialProfile> {
    let symbol = angular_symbol(f64::from(p), grid.angular_step());
    solve_profile_on_nodes(
        grid.annulus(),
        p,
        coupling,
        grid.radial_nodes(),
        symbol,
        NewtonOptions {
            tol: 1e-13,
            max_iterations: 100,
        },
    )
}

/// `ρ(r) e^{ipθ}` with [`grid_radial_profile`].
pub fn grid_radial_solution(grid: &PolarGrid, p: i32, coupling: Coupling) -> Result<ComplexField> {
    let profile = grid_radial_profile(grid, p, coupling)?;
    radial_ansatz(grid, &profile, p)
}

/// `base` times `|extra.outer|` outer and `|extra.inner|` inner bubbles,
/// sized by [`plan_bubbles`] and placed at equally spaced angles from `θ = 0`.
pub fn with_bubbles(base: &ComplexField, extra: Degrees) -> Result<ComplexField> {
    let plan = plan_bubbles(base.grid(), extra)?;
    let mut field = base.clone();
    let placements: Vec<(Boundary, i64, Option<f64>)> = alloc::vec![
        (Boundary::Outer, extra.outer, plan.outer_concentration),
        (Boundary::Inner, extra.inner, plan.inner_concentration),
    ];
    for (boundary, count, c) in placements {
        let Some(c) = c else { continue };
        let n = count.unsigned_abs();
        let sign = if count > 0 { 1 } else { -1 };
        for m in 0..n {
            let theta = 2.0 * PI * m as f64 / n as f64;
            field = insert_boundary_bubble_at(&field, boundary, sign, c, theta)?;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{degree_reading, evaluate_energy};
    use crate::grid::{make_grid, AnnulusSpec, Spacing};

    fn grid(r: f64, nr: usize, na: usize) -> PolarGrid {
        make_grid(
            AnnulusSpec::new(r).unwrap(),
            nr,
            na,
            Spacing::CosineClustered,
        )
        .unwrap()
    }

    #[test]
    fn bubble_changes_only_its_ring() {
        let g = grid(0.2, 129, 256);
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        for (b, s) in [
            (Boundary::Outer, 1),
            (Boundary::Outer, -1),
            (Boundary::Inner, 1),
            (Boundary::Inner, -1),
        ] {
            let u = insert_boundary_bubble(&one, b, s, 0.3).unwrap();
            let d = degree_reading(&u).unwrap();
            let expected = match b {
                Boundary::Outer => (i64::from(s), 0),
                Boundary::Inner => (0, i64::from(s)),
            };
            assert_eq!((d.outer, d.inner), expected, "{b} {s}");
            for z in u
                .ring(Boundary::Outer)
                .iter()
                .chain(u.ring(Boundary::Inner))
            {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oversized_bubble_is_rejected() {
        let g = grid(0.5, 17, 32);
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(
            insert_boundary_bubble(&one, Boundary::Outer, 1, 0.3),
            Err(Error::Parameter(_))
        ));
        assert!(insert_boundary_bubble(&one, Boundary::Outer, 2, 0.1).is_err());
    }

    #[test]
    fn zero_target_is_the_constant() {
        let g = grid(0.5, 17, 32);
        let u = assemble_test_field(&g, Degrees { outer: 0, inner: 0 }).unwrap();
        assert_eq!(evaluate_energy(&u, Coupling::Infinite).total, 0.0);
    }

    #[test]
    fn coarse_grid_cannot_host_bubbles() {
        let g = grid(0.9, 9, 16);
        assert!(matches!(
            assemble_test_field(&g, Degrees { outer: 2, inner: 1 }),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn config_guard() {
        let c = FlowConfig {
            step_size: 1.0,
            ..FlowConfig::default()
        };
        assert!(c.validate(Coupling::Finite(100.0)).is_ok());
        assert!(c.validate(Coupling::Finite(1.0)).is_err());
        assert!(c.validate(Coupling::Infinite).is_ok());
    }
}
