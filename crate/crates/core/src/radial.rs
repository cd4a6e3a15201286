//! Radial moduli of the degree-`p` symmetric solutions `ρ(|x|)(x/|x|)^p`.
//!
//! For `ε = ∞` the modulus is the closed form
//! `ρ_{∞,p}(r) = (r^p + R^p r^{-p}) / (1 + R^p)`. For finite `ε` it solves
//!
//! ```text
//! -ρ'' - ρ'/r + p²ρ/r² = ρ(1 - ρ²)/ε²,   ρ(R) = ρ(1) = 1,
//! ```
//!
//! discretised in conservative form on arbitrary radial nodes:
//! `-(r_{i+½}(ρ_{i+1}-ρ_i)/h_i - r_{i-½}(ρ_i-ρ_{i-1})/h_{i-1}) / (c_i r_i)`,
//! `c_i` the dual cell length. The same stencil is the radial part of the
//! two-dimensional discrete energy in [`crate::energy`], so a profile solved
//! with the grid's angular symbol is an exact discrete critical point there.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{parameter, Error, Result};
use crate::grid::AnnulusSpec;
use crate::linalg::solve_tridiagonal;
use crate::quadrature::integrate;

/// Ginzburg–Landau parameter `ε ∈ (0, ∞]`.
///
/// `Infinite` drops the potential term exactly (pure Dirichlet energy `E_∞`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon == f64::INFINITY {
            Ok(Coupling::Infinite)
        } else if epsilon > 0.0 && epsilon.is_finite() {
            Ok(Coupling::Finite(epsilon))
        } else {
            Err(parameter(alloc::format!(
                "epsilon must be positive, got {epsilon}"
            )))
        }
    }

    /// `1/ε²`, zero for `ε = ∞`.
    pub fn inverse_square(self) -> f64 {
        match self {
            Coupling::Finite(eps) => 1.0 / (eps * eps),
            Coupling::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Coupling::Infinite)
    }

    /// `ε` as a float (`f64::INFINITY` for the harmonic limit).
    pub fn value(self) -> f64 {
        match self {
            Coupling::Finite(eps) => eps,
            Coupling::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Finite(eps) => write!(f, "{eps}"),
            Coupling::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Coupling::Infinite),
            other => {
                let eps: f64 = other
                    .parse()
                    .map_err(|_| parameter(alloc::format!("cannot parse epsilon {other:?}")))?;
                Coupling::new(eps)
            }
        }
    }
}

/// A modulus `ρ` sampled on ordered nodes of `[R, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    annulus: AnnulusSpec,
    winding: i32,
    coupling: Coupling,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(
        annulus: AnnulusSpec,
        winding: i32,
        coupling: Coupling,
        nodes: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(parameter(
                "profile needs matching nodes and values (at least two)",
            ));
        }
        if !nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(parameter("profile nodes must be strictly increasing"));
        }
        if nodes[0] < annulus.inner_radius() - 1e-14 || nodes[nodes.len() - 1] > 1.0 + 1e-14 {
            return Err(parameter("profile nodes must lie in [R, 1]"));
        }
        Ok(Self {
            annulus,
            winding,
            coupling,
            nodes,
            values,
        })
    }

    /// `ρ ≡ 1` (winding 0, `ε = ∞`).
    pub fn constant_unit(annulus: AnnulusSpec, nodes: Vec<f64>) -> Self {
        let values = alloc::vec![1.0; nodes.len()];
        Self {
            annulus,
            winding: 0,
            coupling: Coupling::Infinite,
            nodes,
            values,
        }
    }

    pub fn annulus(&self) -> &AnnulusSpec {
        &self.annulus
    }

    pub fn winding(&self) -> i32 {
        self.winding
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear interpolation; errors outside the sampled range.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        let n = self.nodes.len();
        if r < self.nodes[0] - 1e-14 || r > self.nodes[n - 1] + 1e-14 {
            return Err(parameter(alloc::format!(
                "r = {r} outside the profile range [{}, {}]",
                self.nodes[0],
                self.nodes[n - 1]
            )));
        }
        let k = self.nodes.partition_point(|&x| x <= r).clamp(1, n - 1);
        let (r0, r1) = (self.nodes[k - 1], self.nodes[k]);
        let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
        Ok(self.values[k - 1] + t * (self.values[k] - self.values[k - 1]))
    }

    /// Largest deviation of the two boundary values from 1.
    pub fn boundary_residual(&self) -> f64 {
        let n = self.values.len();
        (self.values[0] - 1.0)
            .abs()
            .max((self.values[n - 1] - 1.0).abs())
    }
}

/// `ρ_{∞,p}(r) = (r^p + R^p/r^p) / (1 + R^p)`.
pub fn harmonic_value(inner_radius: f64, p: u32, r: f64) -> f64 {
    let rp = inner_radius.powi(p as i32);
    let x = r.powi(p as i32);
    (x + rp / x) / (1.0 + rp)
}

/// `n` equally spaced nodes from `R` to `1` inclusive.
pub fn uniform_nodes(annulus: &AnnulusSpec, n: usize) -> Vec<f64> {
    let r0 = annulus.inner_radius();
    let h = annulus.width() / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| r0 + h * i as f64).collect();
    nodes[n - 1] = 1.0;
    nodes
}

/// The radial harmonic modulus `ρ_{∞,p}` sampled at `nodes`.
pub fn harmonic_profile(annulus: &AnnulusSpec, p: i32, nodes: &[f64]) -> Result<RadialProfile> {
    if p <= 0 {
        return Err(parameter(alloc::format!("winding p must be >= 1, got {p}")));
    }
    let r0 = annulus.inner_radius();
    let values = nodes
        .iter()
        .map(|&r| harmonic_value(r0, p as u32, r))
        .collect();
    RadialProfile::new(*annulus, p, Coupling::Infinite, nodes.to_vec(), values)
}

/// Minimum of the sampled modulus.
pub fn profile_min(profile: &RadialProfile) -> f64 {
    profile.values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Stencil coefficients of the conservative radial operator on `nodes`.
struct RadialStencil {
    /// `r_{i+½} / h_i` for each edge.
    flux: Vec<f64>,
    /// `c_i r_i` for each node.
    mass: Vec<f64>,
    radii: Vec<f64>,
}

impl RadialStencil {
    fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let flux = nodes
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) / (w[1] - w[0]))
            .collect();
        let mass = (0..n)
            .map(|i| {
                let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
                let right = if i + 1 < n {
                    nodes[i + 1] - nodes[i]
                } else {
                    0.0
                };
                0.5 * (left + right) * nodes[i]
            })
            .collect();
        Self {
            flux,
            mass,
            radii: nodes.to_vec(),
        }
    }

    /// Residual of the modulus equation at interior node `i`.
    fn residual(&self, rho: &[f64], i: usize, symbol: f64, kappa: f64) -> f64 {
        let r = self.radii[i];
        let diffusion = -(self.flux[i] * (rho[i + 1] - rho[i])
            - self.flux[i - 1] * (rho[i] - rho[i - 1]))
            / self.mass[i];
        diffusion + symbol * rho[i] / (r * r) - kappa * rho[i] * (1.0 - rho[i] * rho[i])
    }
}

/// Interior residuals of the discrete modulus equation with angular symbol
/// `symbol` (`p²` for the continuous operator) for an arbitrary profile.
pub fn discrete_residual(profile: &RadialProfile, symbol: f64) -> Vec<f64> {
    let stencil = RadialStencil::new(&profile.nodes);
    let kappa = profile.coupling.inverse_square();
    (1..profile.nodes.len() - 1)
        .map(|i| stencil.residual(&profile.values, i, symbol, kappa))
        .collect()
}

/// Options of the damped Newton solve. `tol` is raised to the roundoff floor
/// of the stencil, `64 ε_mach` times its largest diagonal weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 100,
        }
    }
}

fn newton(
    stencil: &RadialStencil,
    rho: &mut [f64],
    symbol: f64,
    kappa: f64,
    opts: NewtonOptions,
) -> Result<f64> {
    let n = rho.len();
    let m = n - 2;
    let sup = |rho: &[f64]| {
        (1..n - 1)
            .map(|i| stencil.residual(rho, i, symbol, kappa).abs())
            .fold(0.0, f64::max)
    };
    // Residuals carry weights of order 1/h²; below this floor they are roundoff.
    let floor = 64.0
        * f64::EPSILON
        * (1..n - 1)
            .map(|i| (stencil.flux[i] + stencil.flux[i - 1]) / stencil.mass[i])
            .fold(0.0, f64::max);
    let tol = opts.tol.max(floor);
    let mut norm = sup(rho);
    let mut lower = alloc::vec![0.0; m];
    let mut diag = alloc::vec![0.0; m];
    let mut upper = alloc::vec![0.0; m];
    let mut step = alloc::vec![0.0; m];
    let mut trial = rho.to_vec();
    for _ in 0..opts.max_iterations {
        if norm < tol {
            return Ok(norm);
        }
        for k in 0..m {
            let i = k + 1;
            let r = stencil.radii[i];
            let w = stencil.mass[i];
            lower[k] = -stencil.flux[i - 1] / w;
            upper[k] = -stencil.flux[i] / w;
            diag[k] = (stencil.flux[i] + stencil.flux[i - 1]) / w + symbol / (r * r)
                - kappa * (1.0 - 3.0 * rho[i] * rho[i]);
            step[k] = -stencil.residual(rho, i, symbol, kappa);
        }
        if solve_tridiagonal(&lower, &diag, &upper, &mut step).is_none() {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for k in 0..m {
                trial[k + 1] = rho[k + 1] + alpha * step[k];
            }
            let trial_norm = sup(&trial);
            if trial_norm < norm {
                rho.copy_from_slice(&trial);
                norm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm < tol {
        Ok(norm)
    } else {
        Err(Error::Convergence {
            iterations: opts.max_iterations,
            residual: norm,
        })
    }
}

/// Solves the modulus equation on `nodes` with angular symbol `symbol`
/// (use `p²` for the ODE itself, or the grid's discrete symbol to obtain the
/// exact radial critical point of the two-dimensional discrete energy).
///
/// Newton starts from the harmonic profile; for `ε < 0.2` it is continued in
/// `ε` from `0.2` downwards.
pub fn solve_profile_on_nodes(
    annulus: &AnnulusSpec,
    p: i32,
    coupling: Coupling,
    nodes: &[f64],
    symbol: f64,
    opts: NewtonOptions,
) -> Result<RadialProfile> {
    if p <= 0 {
        return Err(parameter(alloc::format!("winding p must be >= 1, got {p}")));
    }
    if nodes.len() < 3 {
        return Err(parameter("need at least three radial nodes"));
    }
    let stencil = RadialStencil::new(nodes);
    let r0 = annulus.inner_radius();
    let mut rho: Vec<f64> = nodes
        .iter()
        .map(|&r| harmonic_value(r0, p as u32, r))
        .collect();
    let n = rho.len();
    rho[0] = 1.0;
    rho[n - 1] = 1.0;
    const CONTINUATION_START: f64 = 0.2;
    match coupling {
        Coupling::Finite(eps) if eps < CONTINUATION_START => {
            let mut e = CONTINUATION_START;
            while e > eps {
                newton(&stencil, &mut rho, symbol, 1.0 / (e * e), opts)?;
                e = (e * 0.8).max(eps);
                if e == eps {
                    break;
                }
            }
            newton(&stencil, &mut rho, symbol, 1.0 / (eps * eps), opts)?;
        }
        _ => {
            newton(&stencil, &mut rho, symbol, coupling.inverse_square(), opts)?;
        }
    }
    RadialProfile::new(*annulus, p, coupling, nodes.to_vec(), rho)
}

/// Finite-difference solution of the radial Ginzburg–Landau modulus equation
/// on `n_nodes` uniform nodes, to Newton residual `tol` (sup-norm).
pub fn solve_gl_profile(
    annulus: &AnnulusSpec,
    p: i32,
    epsilon: f64,
    n_nodes: usize,
    tol: f64,
) -> Result<RadialProfile> {
    if n_nodes < 32 {
        return Err(parameter(alloc::format!(
            "need n_nodes >= 32, got {n_nodes}"
        )));
    }
    let coupling = Coupling::new(epsilon)?;
    let nodes = uniform_nodes(annulus, n_nodes);
    let symbol = f64::from(p) * f64::from(p);
    solve_profile_on_nodes(
        annulus,
        p,
        coupling,
        &nodes,
        symbol,
        NewtonOptions {
            tol,
            ..NewtonOptions::default()
        },
    )
}

/// Relative accuracy requested from the quadrature in
/// [`gb_integral_criterion`].
pub const GB_QUADRATURE_TOL: f64 = 1e-11;

/// `1 / [(1/R - 1) ∫_R^1 t ρ_{∞,p}(t)^{-2} dt]`; the capacity criterion
/// holds with constant `γ` when this value is at least `γ`.
pub fn gb_integral_criterion(annulus: &AnnulusSpec, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(parameter("winding p must be >= 1"));
    }
    let r0 = annulus.inner_radius();
    let integrand = |t: f64| {
        let rho = harmonic_value(r0, p, t);
        t / (rho * rho)
    };
    let q = integrate(integrand, r0, 1.0, GB_QUADRATURE_TOL)?;
    Ok(1.0 / ((1.0 / r0 - 1.0) * q.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus(r: f64) -> AnnulusSpec {
        AnnulusSpec::new(r).unwrap()
    }

    #[test]
    fn harmonic_closed_form_values() {
        let a = annulus(0.25);
        let p = harmonic_profile(&a, 1, &[0.25, 0.5, 1.0]).unwrap();
        assert!((p.values()[1] - 0.8).abs() < 1e-15);
        assert!((p.values()[0] - 1.0).abs() < 1e-15);
        assert!((p.values()[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_minimum_sits_at_sqrt_r() {
        for &r0 in &[0.1, 0.36, 0.81] {
            for p in 1..5 {
                let rmin = harmonic_value(r0, p, r0.sqrt());
                let expected = 2.0 * r0.powf(f64::from(p) / 2.0) / (1.0 + r0.powi(p as i32));
                assert!((rmin - expected).abs() < 1e-14);
                for k in 0..=200 {
                    let r = r0 + (1.0 - r0) * f64::from(k) / 200.0;
                    assert!(harmonic_value(r0, p, r) >= rmin - 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_winding() {
        let a = annulus(0.5);
        assert!(matches!(
            harmonic_profile(&a, 0, &[0.5, 1.0]),
            Err(Error::Parameter(_))
        ));
        assert!(solve_gl_profile(&a, -1, 1.0, 64, 1e-9).is_err());
    }

    #[test]
    fn profile_min_examples() {
        let a = annulus(0.25);
        let nodes: Vec<f64> = uniform_nodes(&a, 301);
        let p = harmonic_profile(&a, 1, &nodes).unwrap();
        assert!((profile_min(&p) - 0.8).abs() < 1e-12);
        let c = RadialProfile::constant_unit(a, nodes);
        assert_eq!(profile_min(&c), 1.0);
    }

    #[test]
    fn gl_profile_satisfies_boundary_and_max_principle() {
        let a = annulus(0.3);
        for eps in [0.05, 0.5, 5.0] {
            let p = solve_gl_profile(&a, 2, eps, 256, 1e-8).unwrap();
            assert_eq!(p.values()[0], 1.0);
            assert_eq!(*p.values().last().unwrap(), 1.0);
            let interior = &p.values()[1..p.values().len() - 1];
            assert!(interior.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn small_epsilon_continuation_pushes_modulus_to_one() {
        let a = annulus(0.3);
        let p = solve_gl_profile(&a, 1, 0.02, 512, 1e-8).unwrap();
        let mid = p.evaluate(0.65).unwrap();
        assert!(mid > 0.99, "{mid}");
    }

    #[test]
    fn coupling_parsing() {
        assert_eq!("inf".parse::<Coupling>().unwrap(), Coupling::Infinite);
        assert_eq!("10".parse::<Coupling>().unwrap(), Coupling::Finite(10.0));
        assert!("0".parse::<Coupling>().is_err());
        assert!("-1".parse::<Coupling>().is_err());
        assert_eq!(Coupling::Infinite.inverse_square(), 0.0);
    }

    #[test]
    fn evaluate_interpolates_and_guards_range() {
        let a = annulus(0.5);
        let p = RadialProfile::new(
            a,
            1,
            Coupling::Infinite,
            alloc::vec![0.5, 1.0],
            alloc::vec![1.0, 0.5],
        )
        .unwrap();
        assert!((p.evaluate(0.75).unwrap() - 0.75).abs() < 1e-15);
        assert!(p.evaluate(0.4).is_err());
    }

    #[test]
    fn gb_criterion_blows_up_near_unit_radius() {
        let v = gb_integral_criterion(&annulus(0.999), 1).unwrap();
        assert!(v > 1e3);
        assert!(gb_integral_criterion(&annulus(0.5), 0).is_err());
    }
}
