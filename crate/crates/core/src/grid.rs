//! Polar discretisation of the circular annulus and complex fields on it.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{parameter, Error, Result};
use crate::radial::{harmonic_value, Coupling, RadialProfile};
use crate::Complex64;

/// `H¹`-capacity of `B(0,1) \ B(0,R)`, i.e. `-2π / ln R`.
pub fn capacity(inner_radius: f64) -> f64 {
    -2.0 * PI / inner_radius.ln()
}

/// Inner radius whose annulus has the given capacity (inverse of [`capacity`]).
pub fn radius_for_capacity(capacity: f64) -> f64 {
    (-2.0 * PI / capacity).exp()
}

/// The circular annulus `{R < |x| < 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    inner_radius: f64,
    capacity: f64,
}

impl AnnulusSpec {
    pub fn new(inner_radius: f64) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(parameter(alloc::format!(
                "R must lie in (0,1), got {inner_radius}"
            )));
        }
        Ok(Self {
            inner_radius,
            capacity: capacity(inner_radius),
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn width(&self) -> f64 {
        1.0 - self.inner_radius
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        r >= self.inner_radius && r <= 1.0
    }
}

/// Radial node distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Uniform,
    /// Chebyshev–Lobatto nodes: dense near both rings.
    CosineClustered,
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Uniform => "uniform",
            Spacing::CosineClustered => "cosine",
        })
    }
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Spacing::Uniform),
            "cosine" | "cosine-clustered" => Ok(Spacing::CosineClustered),
            other => Err(parameter(alloc::format!("unknown spacing {other:?}"))),
        }
    }
}

/// One of the two boundary circles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `|x| = 1`.
    Outer,
    /// `|x| = R`.
    Inner,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Outer => "outer",
            Boundary::Inner => "inner",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outer" => Ok(Boundary::Outer),
            "inner" => Ok(Boundary::Inner),
            other => Err(parameter(alloc::format!("unknown boundary {other:?}"))),
        }
    }
}

/// Tensor grid `r_0 = R < … < r_{n-1} = 1` times `θ_j = 2πj/n_angular`.
///
/// The angular direction is periodic; the seam column `θ = 2π` is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    annulus: AnnulusSpec,
    radial_nodes: Vec<f64>,
    n_angular: usize,
    spacing: Spacing,
}

/// Builds a [`PolarGrid`]; see [`PolarGrid::new`].
pub fn make_grid(
    annulus: AnnulusSpec,
    n_radial: usize,
    n_angular: usize,
    spacing: Spacing,
) -> Result<PolarGrid> {
    PolarGrid::new(annulus, n_radial, n_angular, spacing)
}

impl PolarGrid {
    pub fn new(
        annulus: AnnulusSpec,
        n_radial: usize,
        n_angular: usize,
        spacing: Spacing,
    ) -> Result<Self> {
        if n_radial < 3 {
            return Err(parameter(alloc::format!(
                "n_radial must be at least 3, got {n_radial}"
            )));
        }
        if n_angular < 8 {
            return Err(parameter(alloc::format!(
                "n_angular must be at least 8, got {n_angular}"
            )));
        }
        let r0 = annulus.inner_radius();
        let width = annulus.width();
        let last = (n_radial - 1) as f64;
        let mut radial_nodes: Vec<f64> = (0..n_radial)
            .map(|i| {
                let t = i as f64 / last;
                match spacing {
                    Spacing::Uniform => r0 + width * t,
                    Spacing::CosineClustered => r0 + width * 0.5 * (1.0 - (PI * t).cos()),
                }
            })
            .collect();
        radial_nodes[0] = r0;
        radial_nodes[n_radial - 1] = 1.0;
        Ok(Self {
            annulus,
            radial_nodes,
            n_angular,
            spacing,
        })
    }

    pub fn annulus(&self) -> &AnnulusSpec {
        &self.annulus
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn len(&self) -> usize {
        self.n_radial() * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radial_nodes[i]
    }

    pub fn angular_step(&self) -> f64 {
        2.0 * PI / self.n_angular as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.angular_step() * j as f64
    }

    /// Flat index of node `(i, j)`; rows are radial, columns angular.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_angular + j
    }

    /// Radial row holding the given boundary ring.
    pub fn ring_row(&self, boundary: Boundary) -> usize {
        match boundary {
            Boundary::Inner => 0,
            Boundary::Outer => self.n_radial() - 1,
        }
    }

    /// Trapezoid weights in `r`: half-cell lengths at the two rings.
    pub fn radial_weights(&self) -> Vec<f64> {
        let r = &self.radial_nodes;
        let n = r.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { r[i] - r[i - 1] } else { 0.0 };
                let right = if i + 1 < n { r[i + 1] - r[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// Complex order parameter sampled on a [`PolarGrid`], row-major
/// (radial index outer, angular index inner).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: PolarGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_values(grid: PolarGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(parameter(alloc::format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(r, θ)` at every node.
    pub fn from_fn(grid: PolarGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_radial() {
            let r = grid.radius(i);
            for j in 0..grid.n_angular() {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self { grid, values }
    }

    pub fn constant(grid: PolarGrid, value: Complex64) -> Self {
        let values = alloc::vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.grid.n_angular();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn ring(&self, boundary: Boundary) -> &[Complex64] {
        self.row(self.grid.ring_row(boundary))
    }

    /// Pointwise product with another field on the same grid.
    pub fn multiply(&self, other: &ComplexField) -> Result<ComplexField> {
        if self.grid != other.grid {
            return Err(parameter("fields live on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Minimum of `|u|` over interior rows with its `(r, θ)` location.
    pub fn interior_min_modulus(&self) -> (f64, f64, f64) {
        let n_ang = self.grid.n_angular();
        let mut best = (f64::INFINITY, self.grid.radius(0), 0.0);
        for i in 1..self.grid.n_radial() - 1 {
            for j in 0..n_ang {
                let m = self.values[i * n_ang + j].norm();
                if m < best.0 {
                    best = (m, self.grid.radius(i), self.grid.theta(j));
                }
            }
        }
        best
    }
}

/// `ρ(r_i) e^{i·winding·θ_j}` on `grid`.
///
/// Harmonic profiles (`ε = ∞`) are evaluated in closed form at the grid radii;
/// sampled profiles must either share the grid's radial nodes or are linearly
/// interpolated onto them.
pub fn radial_ansatz(
    grid: &PolarGrid,
    profile: &RadialProfile,
    winding: i32,
) -> Result<ComplexField> {
    let r_in = grid.annulus().inner_radius();
    if (profile.annulus().inner_radius() - r_in).abs() > 1e-14 {
        return Err(parameter(alloc::format!(
            "profile lives on R = {}, grid on R = {}",
            profile.annulus().inner_radius(),
            r_in
        )));
    }
    let same_nodes = profile.nodes().len() == grid.n_radial()
        && profile
            .nodes()
            .iter()
            .zip(grid.radial_nodes())
            .all(|(a, b)| (a - b).abs() <= 1e-14);
    let rho: Vec<f64> = if same_nodes {
        profile.values().to_vec()
    } else if profile.coupling() == Coupling::Infinite && profile.winding() >= 1 {
        grid.radial_nodes()
            .iter()
            .map(|&r| harmonic_value(r_in, profile.winding() as u32, r))
            .collect()
    } else {
        grid.radial_nodes()
            .iter()
            .map(|&r| profile.evaluate(r))
            .collect::<Result<_>>()?
    };
    let k = f64::from(winding);
    let phases: Vec<Complex64> = (0..grid.n_angular())
        .map(|j| Complex64::from_polar(1.0, k * grid.theta(j)))
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &modulus in &rho {
        values.extend(phases.iter().map(|e| e * modulus));
    }
    ComplexField::from_values(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::boundary_degree;
    use crate::radial::harmonic_profile;

    #[test]
    fn uniform_three_node_grid() {
        let a = AnnulusSpec::new(0.5).unwrap();
        let g = make_grid(a, 3, 8, Spacing::Uniform).unwrap();
        assert_eq!(g.radial_nodes(), &[0.5, 0.75, 1.0]);
        assert!((g.angular_step() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_dimensions() {
        let a = AnnulusSpec::new(0.5).unwrap();
        assert!(matches!(
            make_grid(a, 2, 8, Spacing::Uniform),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            make_grid(a, 3, 7, Spacing::Uniform),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn capacity_at_inverse_e() {
        let a = AnnulusSpec::new((-1.0f64).exp()).unwrap();
        assert!((a.capacity() - 2.0 * PI).abs() < 1e-12);
        assert!((radius_for_capacity(a.capacity()) - a.inner_radius()).abs() < 1e-15);
    }

    #[test]
    fn rejects_radius_outside_unit_interval() {
        for r in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            assert!(AnnulusSpec::new(r).is_err());
        }
    }

    #[test]
    fn capacity_increases_with_radius() {
        let mut prev = 0.0;
        for k in 1..200 {
            let c = capacity(k as f64 / 200.0);
            assert!(c > 0.0 && c > prev);
            prev = c;
        }
        assert!(capacity(1.0 - 1e-9) > 1e9);
    }

    #[test]
    fn cosine_nodes_cluster_at_both_rings() {
        let a = AnnulusSpec::new(0.2).unwrap();
        let g = make_grid(a, 33, 8, Spacing::CosineClustered).unwrap();
        let r = g.radial_nodes();
        assert_eq!(r[0], 0.2);
        assert_eq!(r[32], 1.0);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        let first = r[1] - r[0];
        let mid = r[17] - r[16];
        let last = r[32] - r[31];
        assert!(first < mid / 5.0 && last < mid / 5.0);
    }

    #[test]
    fn radial_weights_integrate_length() {
        let a = AnnulusSpec::new(0.3).unwrap();
        let g = make_grid(a, 17, 8, Spacing::CosineClustered).unwrap();
        let total: f64 = g.radial_weights().iter().sum();
        assert!((total - 0.7).abs() < 1e-14);
    }

    #[test]
    fn constant_unit_profile_gives_constant_field() {
        let a = AnnulusSpec::new(0.4).unwrap();
        let g = make_grid(a, 9, 16, Spacing::Uniform).unwrap();
        let p = RadialProfile::constant_unit(a, g.radial_nodes().to_vec());
        let u = radial_ansatz(&g, &p, 0).unwrap();
        assert!(u
            .values()
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn unimodular_winding_map() {
        let a = AnnulusSpec::new(0.4).unwrap();
        let g = make_grid(a, 9, 64, Spacing::Uniform).unwrap();
        let p = RadialProfile::constant_unit(a, g.radial_nodes().to_vec());
        for winding in [-3, 1, 4] {
            let u = radial_ansatz(&g, &p, winding).unwrap();
            assert!(u.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
            for b in [Boundary::Outer, Boundary::Inner] {
                assert_eq!(boundary_degree(&u, b).unwrap().0, i64::from(winding));
            }
        }
    }

    #[test]
    fn harmonic_ansatz_is_the_radial_harmonic_map() {
        let a = AnnulusSpec::new(0.5).unwrap();
        let g = make_grid(a, 17, 32, Spacing::Uniform).unwrap();
        let p = harmonic_profile(&a, 2, g.radial_nodes()).unwrap();
        let u = radial_ansatz(&g, &p, 2).unwrap();
        for i in 0..g.n_radial() {
            for j in 0..g.n_angular() {
                let r = g.radius(i);
                let t = g.theta(j);
                let expected = Complex64::from_polar((r * r + 0.25 / (r * r)) / 1.25, 2.0 * t);
                assert!((u.value(i, j) - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn profile_on_other_annulus_is_rejected() {
        let a = AnnulusSpec::new(0.5).unwrap();
        let b = AnnulusSpec::new(0.6).unwrap();
        let g = make_grid(a, 5, 8, Spacing::Uniform).unwrap();
        let p = harmonic_profile(&b, 1, &[0.6, 0.8, 1.0]).unwrap();
        assert!(matches!(radial_ansatz(&g, &p, 1), Err(Error::Parameter(_))));
    }
}
