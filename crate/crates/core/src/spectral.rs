//! Fourier-mode lower bounds for the non-existence argument.
//!
//! With `w = v e^{iqθ}` and `tr v = Σ a_k e^{ikθ}`, each mode contributes
//! `|a_k|² F_k`, `F_k(f) = ∫ ρ²[r|f'|² + (k² + 2qk)/r |f|²]`, `f(1) = 1`,
//! free at `r = R`. The lower bounds `m̃_k` come in three branches:
//!
//! * I (`k < −2q`): constant weight `ρ_min`, evaluated by the 1D oracle;
//! * II (`−2q ≤ k ≤ 0`): `ρ_min √(−α) tan(√(−α) ln R / ρ_min)`, `α = k² + 2qk`;
//! * III (`k > 0`): `(m̃⁽¹⁾ + 2R^q m̃⁽²⁾ + R^{2q} m̃⁽³⁾) / (1 + R^q)²`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::energy::DEGENERATE_MODULUS;
use crate::error::{parameter, Error, Result};
use crate::grid::{AnnulusSpec, Boundary, ComplexField};
use crate::linalg::{pairwise_sum, Tridiagonal};
use crate::radial::RadialProfile;
use crate::Complex64;

/// Nodes used when branch I is evaluated through the oracle.
pub const ORACLE_NODES: usize = 4096;

/// Distance from an odd multiple of `π/2` that counts as singular.
pub const SINGULARITY_GAP: f64 = 1e-6;

/// The slack constant of the small-mode estimates.
pub const SLACK: f64 = 1e-6;

/// Largest mode scanned when looking for `K_R`.
pub const K_R_CAP: usize = 1_000_000;

/// `|Σ k|a_k|² − d|` above which coefficients are rejected by the ledger.
pub const FEASIBILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `k < −2q`.
    I,
    /// `−2q ≤ k ≤ 0`.
    II,
    /// `k > 0`.
    III,
}

impl Branch {
    pub fn of(k: i64, q: u32) -> Self {
        let two_q = 2 * i64::from(q);
        if k < -two_q {
            Branch::I
        } else if k <= 0 {
            Branch::II
        } else {
            Branch::III
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::I => "I",
            Branch::II => "II",
            Branch::III => "III",
        })
    }
}

/// `m̃_k` with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBound {
    pub k: i64,
    pub q: u32,
    pub inner_radius: f64,
    pub branch: Branch,
    pub value: f64,
}

/// `α = k² + 2qk`.
pub fn alpha(k: i64, q: u32) -> f64 {
    let k = k as f64;
    k * k + 2.0 * f64::from(q) * k
}

/// `ρ_min = min ρ_{∞,q} = 2R^{q/2} / (1 + R^q)`.
pub fn rho_min(q: u32, inner_radius: f64) -> f64 {
    let rq = inner_radius.powi(q as i32);
    2.0 * rq.sqrt() / (1.0 + rq)
}

/// `m̃⁽¹⁾_k`, weight `r^{2q}`.
pub fn case_three_first(k: i64, q: u32, r: f64) -> f64 {
    let a = alpha(k, q);
    let k_f = k as f64;
    let two_q = 2.0 * f64::from(q);
    let x = r.powf(two_q + 2.0 * k_f);
    a * (1.0 - x) / (k_f * x + two_q + k_f)
}

/// `m̃⁽²⁾_k`, weight `1`.
pub fn case_three_second(k: i64, q: u32, r: f64) -> f64 {
    let s = alpha(k, q).sqrt();
    let x = r.powf(2.0 * s);
    s * (1.0 - x) / (1.0 + x)
}

/// `m̃⁽³⁾_k`, weight `r^{−2q}`.
pub fn case_three_third(k: i64, q: u32, r: f64) -> f64 {
    let a = alpha(k, q);
    let k_f = k as f64;
    let two_q = 2.0 * f64::from(q);
    let x = r.powf(two_q + 2.0 * k_f);
    a * (1.0 - x) / (k_f + (two_q + k_f) * x)
}

fn check_mode_args(q: u32, r: f64) -> Result<()> {
    if q == 0 {
        return Err(parameter("q must be >= 1"));
    }
    AnnulusSpec::new(r).map(|_| ())
}

fn case_two(k: i64, q: u32, r: f64) -> Result<f64> {
    let a = alpha(k, q);
    if a == 0.0 {
        return Ok(0.0);
    }
    let s = (-a).sqrt();
    let rm = rho_min(q, r);
    let arg = s * r.ln() / rm;
    // Past the first pole the tangent no longer bounds the functional.
    let x = arg.abs();
    let nearest_pole = FRAC_PI_2 + PI * ((x - FRAC_PI_2) / PI).round().max(0.0);
    if (x - nearest_pole).abs() < SINGULARITY_GAP || x > FRAC_PI_2 {
        return Err(Error::Singularity {
            k,
            q,
            inner_radius: r,
        });
    }
    Ok(rm * s * arg.tan())
}

/// Closed-form (branches II, III) or oracle-based (branch I) `m̃_k`.
pub fn mode_bound(k: i64, q: u32, inner_radius: f64) -> Result<SpectralBound> {
    check_mode_args(q, inner_radius)?;
    let branch = Branch::of(k, q);
    let value = match branch {
        Branch::II => case_two(k, q, inner_radius)?,
        Branch::III => {
            let rq = inner_radius.powi(q as i32);
            (case_three_first(k, q, inner_radius)
                + 2.0 * rq * case_three_second(k, q, inner_radius)
                + rq * rq * case_three_third(k, q, inner_radius))
                / ((1.0 + rq) * (1.0 + rq))
        }
        Branch::I => {
            let rm = rho_min(q, inner_radius);
            let a = alpha(k, q);
            minimize_mode(
                |r| rm * rm * r,
                |r| rm * rm * a / r,
                inner_radius,
                ORACLE_NODES,
            )
            .map_err(|_| Error::UnboundedBelow { k, q })?
        }
    };
    Ok(SpectralBound {
        k,
        q,
        inner_radius,
        branch,
        value,
    })
}

/// Minimises `∫_R^1 P f'² + Q f²` over `f(1) = 1` with a free end at `R`, on
/// `n` uniform nodes (midpoint rule for the flux term, trapezoid for the
/// mass term). `Err(())` when the discrete form is not positive definite.
fn minimize_mode(
    p_coef: impl Fn(f64) -> f64,
    q_coef: impl Fn(f64) -> f64,
    inner_radius: f64,
    n: usize,
) -> core::result::Result<f64, ()> {
    let h = (1.0 - inner_radius) / (n - 1) as f64;
    let node = |i: usize| {
        if i + 1 == n {
            1.0
        } else {
            inner_radius + h * i as f64
        }
    };
    let flux: Vec<f64> = (0..n - 1)
        .map(|i| p_coef(0.5 * (node(i) + node(i + 1))) / h)
        .collect();
    let mass: Vec<f64> = (0..n)
        .map(|i| {
            let c = if i == 0 || i + 1 == n { 0.5 * h } else { h };
            c * q_coef(node(i))
        })
        .collect();
    let m = n - 1;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let left = if i > 0 { flux[i - 1] } else { 0.0 };
        diag[i] = left + flux[i] + mass[i];
        if i > 0 {
            lower[i] = -flux[i - 1];
        }
        if i + 1 < m {
            upper[i] = -flux[i];
        }
    }
    let factor = Tridiagonal::factor(&lower, &diag, &upper).ok_or(())?;
    let mut f = vec![0.0; m];
    f[m - 1] = flux[m - 1];
    factor.solve_in_place(&mut f);
    f.push(1.0);
    let mut terms: Vec<f64> = (0..n - 1)
        .map(|i| flux[i] * (f[i + 1] - f[i]) * (f[i + 1] - f[i]))
        .collect();
    terms.extend((0..n).map(|i| mass[i] * f[i] * f[i]));
    Ok(pairwise_sum(&terms))
}

/// Weight value at `r`, by linear interpolation of the profile.
fn weight_at(weight: &RadialProfile, r: f64) -> f64 {
    weight.evaluate(r).unwrap_or_else(|_| {
        let v = weight.values();
        if r < weight.nodes()[0] {
            v[0]
        } else {
            v[v.len() - 1]
        }
    })
}

/// Brute-force minimum of `F_k` with the given weight `w`:
/// `∫ w²[r f'² + α/r f²]` for `α > 0` and `∫ w² r f'² + α/r f²` for
/// `α ≤ 0` (the weight bounded by one on the negative term).
pub fn mode_bound_oracle(
    k: i64,
    q: u32,
    inner_radius: f64,
    weight: &RadialProfile,
    n_nodes: usize,
) -> Result<f64> {
    check_mode_args(q, inner_radius)?;
    if n_nodes < 3 {
        return Err(parameter("oracle needs at least three nodes"));
    }
    if weight.values().iter().any(|&v| !(v > 0.0)) {
        return Err(parameter("oracle weight must be strictly positive"));
    }
    let a = alpha(k, q);
    if a == 0.0 {
        return Ok(0.0);
    }
    let w2 = |r: f64| {
        let w = weight_at(weight, r);
        w * w
    };
    let result = if a > 0.0 {
        minimize_mode(|r| w2(r) * r, |r| w2(r) * a / r, inner_radius, n_nodes)
    } else {
        minimize_mode(|r| w2(r) * r, |r| a / r, inner_radius, n_nodes)
    };
    result.map_err(|_| Error::UnboundedBelow { k, q })
}

/// The constant profile `ρ_min` on `[R, 1]`.
pub fn constant_weight(q: u32, inner_radius: f64) -> Result<RadialProfile> {
    let annulus = AnnulusSpec::new(inner_radius)?;
    let rm = rho_min(q, inner_radius);
    RadialProfile::new(
        annulus,
        q as i32,
        crate::radial::Coupling::Infinite,
        vec![inner_radius, 1.0],
        vec![rm, rm],
    )
}

/// Branchwise oracle for `m̃_k`: constant weight `ρ_min` for branches I and
/// II; for branch III the three component problems with weights `r^{2q}`,
/// `1`, `r^{−2q}` combined as in the closed form.
pub fn mode_bound_reference(k: i64, q: u32, inner_radius: f64, n_nodes: usize) -> Result<f64> {
    check_mode_args(q, inner_radius)?;
    if n_nodes < 3 {
        return Err(parameter("oracle needs at least three nodes"));
    }
    let a = alpha(k, q);
    if a == 0.0 {
        return Ok(0.0);
    }
    let unbounded = |_| Error::UnboundedBelow { k, q };
    match Branch::of(k, q) {
        Branch::I | Branch::II => {
            let w = constant_weight(q, inner_radius)?;
            mode_bound_oracle(k, q, inner_radius, &w, n_nodes)
        }
        Branch::III => {
            let component = |beta: f64| {
                minimize_mode(
                    |r| r.powf(beta + 1.0),
                    |r| a * r.powf(beta - 1.0),
                    inner_radius,
                    n_nodes,
                )
                .map_err(unbounded)
            };
            let two_q = 2.0 * f64::from(q);
            let rq = inner_radius.powi(q as i32);
            let m1 = component(two_q)?;
            let m2 = component(0.0)?;
            let m3 = component(-two_q)?;
            Ok((m1 + 2.0 * rq * m2 + rq * rq * m3) / ((1.0 + rq) * (1.0 + rq)))
        }
    }
}

/// Smallest `k ≥ 2q + 2` from which `m̃_k ≥ k + 1/4`, confirmed on the
/// following `k + 64` modes.
///
/// The combination is used rather than each component separately: the
/// first component satisfies `m̃⁽¹⁾_k < k` for every `k`, while
/// `m̃_k − k → 2qR^q / (1 + R^q)`.
pub fn k_r(q: u32, inner_radius: f64) -> Result<usize> {
    check_mode_args(q, inner_radius)?;
    let rq = inner_radius.powi(q as i32);
    let holds = |k: usize| {
        let kk = k as i64;
        let m = (case_three_first(kk, q, inner_radius)
            + 2.0 * rq * case_three_second(kk, q, inner_radius)
            + rq * rq * case_three_third(kk, q, inner_radius))
            / ((1.0 + rq) * (1.0 + rq));
        m >= k as f64 + 0.25
    };
    let mut k = 2 * q as usize + 2;
    'scan: while k <= K_R_CAP {
        if !holds(k) {
            k += 1;
            continue;
        }
        let end = (2 * k + 64).min(K_R_CAP);
        for later in k + 1..=end {
            if !holds(later) {
                k = later + 1;
                continue 'scan;
            }
        }
        return Ok(k);
    }
    Err(parameter(alloc::format!(
        "no K_R below {K_R_CAP} for q = {q}, R = {inner_radius}"
    )))
}

/// Fourier coefficients `a_k`, `|k| ≤ K`, of an unwound boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    max_mode: usize,
    /// `coefficients[k + K] = a_k`.
    coefficients: Vec<Complex64>,
    source: String,
}

impl ModeCoefficients {
    /// From `a_{−K}, …, a_K` (length `2K + 1`).
    pub fn new(coefficients: Vec<Complex64>, source: impl Into<String>) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) {
            return Err(parameter("coefficient vector must have odd length 2K+1"));
        }
        Ok(Self {
            max_mode: coefficients.len() / 2,
            coefficients,
            source: source.into(),
        })
    }

    /// `a_d = 1`, all other coefficients zero, `|k| ≤ K`.
    pub fn pure_mode(d: i64, max_mode: usize) -> Result<Self> {
        if d.unsigned_abs() as usize > max_mode {
            return Err(parameter("mode outside the coefficient range"));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1];
        c[(d + max_mode as i64) as usize] = Complex64::new(1.0, 0.0);
        Self::new(c, alloc::format!("pure mode {d}"))
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `a_k`, zero outside the stored range.
    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.max_mode {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[(k + self.max_mode as i64) as usize]
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `Σ |a_k|²`.
    pub fn parseval_mass(&self) -> f64 {
        let terms: Vec<f64> = self.coefficients.iter().map(|a| a.norm_sqr()).collect();
        pairwise_sum(&terms)
    }

    /// `Σ k |a_k|²`.
    pub fn degree_sum(&self) -> f64 {
        let k0 = self.max_mode as i64;
        let terms: Vec<f64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| (i as i64 - k0) as f64 * a.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }

    /// The same coefficients on `|k| ≤ max_mode`, padded with zeros: a grid
    /// trace carries no information beyond its Nyquist mode.
    pub fn zero_padded(&self, max_mode: usize) -> Result<Self> {
        if max_mode < self.max_mode {
            return Err(parameter("zero padding cannot shrink the range"));
        }
        let c = (-(max_mode as i64)..=max_mode as i64)
            .map(|k| self.get(k))
            .collect();
        Self::new(
            c,
            alloc::format!("{} (zero-padded to K = {max_mode})", self.source),
        )
    }
}

/// Discrete Fourier coefficients of `u e^{−iqθ}` on one ring,
/// `a_k = (1/N) Σ_j u_j e^{−i(q+k)θ_j}`, `|k| ≤ N/2 − 1`.
pub fn fourier_trace(field: &ComplexField, boundary: Boundary, q: i64) -> Result<ModeCoefficients> {
    let ring = field.ring(boundary);
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
    let max_mode = n / 2 - 1;
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    let n_i = n as i64;
    let coefficients = (-(max_mode as i64)..=max_mode as i64)
        .map(|k| {
            let shift = (k + q).rem_euclid(n_i) as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, z) in ring.iter().enumerate() {
                acc += z * twiddle[(shift * j) % n];
            }
            acc / n as f64
        })
        .collect();
    ModeCoefficients::new(
        coefficients,
        alloc::format!("{boundary} ring, unwound by e^(-i{q}theta)"),
    )
}

/// One mode of the ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub k: i64,
    pub branch: Branch,
    pub a_k_abs: f64,
    pub m_tilde: f64,
    /// `|a_k|² (m̃_k − k)`.
    pub k_contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    pub p: u32,
    pub q: u32,
    pub inner_radius: f64,
    pub k_r: usize,
    pub rows: Vec<LedgerRow>,
    /// `Σ_{k=1}^{2q}` with the slack constants in place of `m̃_{±k}`.
    pub s_low: f64,
    /// `Σ_{k=2q+1}^{K_R−1} k(|a_{−k}|² − |a_k|²) + |a_k|² m̃_k + |a_{−k}|² m̃_{−k}`.
    pub s_mid: f64,
    /// `Σ_{k≥K_R} |a_k|²/4 + |a_{−k}|²(m̃_{−k} + k)`.
    pub s_high: f64,
    /// `Σ |a_k|² m̃_k`; `π` times this bounds `L̃_ε` from below.
    pub total: f64,
    /// `d π`, `d = p − q`.
    pub d_pi: f64,
    /// `π · total − dπ`.
    pub margin: f64,
    /// `min(m̃_{±k} for 2q < k < K_R, (1 − 10⁻⁶)(1 − R), 1/4)`.
    pub eta: f64,
    pub degree_sum: f64,
    pub parseval_mass: f64,
    /// `(k, |a_k| − |a_{−k}|)` for `k = 1, …, K_R`.
    pub asymmetry: Vec<(i64, f64)>,
}

impl LedgerReport {
    /// `S_{1,2q} + S_{2q+1,K_R−1} + S_{K_R,∞}`.
    pub fn partial_sum_total(&self) -> f64 {
        self.s_low + self.s_mid + self.s_high
    }

    /// Whether the lower bound exceeds `dπ`.
    pub fn exceeds_d_pi(&self) -> bool {
        self.margin > 0.0
    }
}

/// Lower-bound ledger of `L̃_ε(w)` for an outer-trace expansion `coeffs`.
pub fn nonexistence_ledger(
    coeffs: &ModeCoefficients,
    p: u32,
    q: u32,
    inner_radius: f64,
) -> Result<LedgerReport> {
    if !(p > q && q >= 1) {
        return Err(parameter(alloc::format!(
            "ledger needs p > q >= 1, got ({p}, {q})"
        )));
    }
    AnnulusSpec::new(inner_radius)?;
    let d = i64::from(p - q);
    let degree_sum = coeffs.degree_sum();
    if (degree_sum - d as f64).abs() > FEASIBILITY_TOL {
        return Err(Error::InfeasibleCoefficients {
            found: degree_sum,
            expected: d,
        });
    }
    let k_r = k_r(q, inner_radius)?;
    if coeffs.max_mode() < k_r {
        return Err(Error::InsufficientResolution {
            available: coeffs.max_mode(),
            required: k_r,
        });
    }
    let kmax = coeffs.max_mode() as i64;
    let mut rows = Vec::with_capacity(2 * kmax as usize + 1);
    for k in -kmax..=kmax {
        let bound = mode_bound(k, q, inner_radius)?;
        let a = coeffs.get(k).norm();
        rows.push(LedgerRow {
            k,
            branch: bound.branch,
            a_k_abs: a,
            m_tilde: bound.value,
            k_contribution: a * a * (bound.value - k as f64),
        });
    }
    let row = |k: i64| &rows[(k + kmax) as usize];
    let a2 = |k: i64| row(k).a_k_abs * row(k).a_k_abs;
    let one_minus_r = 1.0 - inner_radius;
    let two_q = 2 * i64::from(q);
    let q_f = f64::from(q);

    let low: Vec<f64> = (1..=two_q)
        .map(|k| {
            let kf = k as f64;
            a2(k) * ((kf * kf + 2.0 * q_f * kf - SLACK) * one_minus_r - kf)
                + a2(-k) * ((kf * kf - 2.0 * q_f * kf - SLACK) * one_minus_r + kf)
        })
        .collect();
    let kr = k_r as i64;
    let mid: Vec<f64> = (two_q + 1..kr)
        .map(|k| k as f64 * (a2(-k) - a2(k)) + a2(k) * row(k).m_tilde + a2(-k) * row(-k).m_tilde)
        .collect();
    let high: Vec<f64> = (kr..=kmax)
        .map(|k| a2(k) / 4.0 + a2(-k) * (row(-k).m_tilde + k as f64))
        .collect();
    let weighted: Vec<f64> = rows
        .iter()
        .map(|r| r.a_k_abs * r.a_k_abs * r.m_tilde)
        .collect();
    let total = pairwise_sum(&weighted);
    let d_pi = d as f64 * PI;

    let mut eta = ((1.0 - SLACK) * one_minus_r).min(0.25);
    for k in two_q + 1..kr {
        eta = eta.min(row(k).m_tilde).min(row(-k).m_tilde);
    }
    let asymmetry = (1..=kr)
        .map(|k| (k, row(k).a_k_abs - row(-k).a_k_abs))
        .collect();
    Ok(LedgerReport {
        p,
        q,
        inner_radius,
        k_r,
        s_low: pairwise_sum(&low),
        s_mid: pairwise_sum(&mid),
        s_high: pairwise_sum(&high),
        total,
        d_pi,
        margin: PI * total - d_pi,
        eta,
        degree_sum,
        parseval_mass: coeffs.parseval_mass(),
        asymmetry,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mode_and_double_root_vanish() {
        for q in 1..4 {
            assert_eq!(mode_bound(0, q, 0.9).unwrap().value, 0.0);
            assert_eq!(mode_bound(-2 * i64::from(q), q, 0.9).unwrap().value, 0.0);
        }
    }

    #[test]
    fn branches_follow_k() {
        assert_eq!(Branch::of(-5, 2), Branch::I);
        assert_eq!(Branch::of(-4, 2), Branch::II);
        assert_eq!(Branch::of(0, 2), Branch::II);
        assert_eq!(Branch::of(1, 2), Branch::III);
    }

    #[test]
    fn case_three_small_mode_expansion() {
        let m = mode_bound(1, 2, 0.999).unwrap().value / 0.001;
        assert!((4.9..=5.1).contains(&m), "{m}");
    }

    #[test]
    fn branch_one_matches_hyperbolic_closed_form() {
        // constant weight ρ_min: ρ_min² √α tanh(√α |ln R|)
        for (k, q, r) in [(-5, 2, 0.99), (-9, 3, 0.95), (-30, 1, 0.9)] {
            let rm = rho_min(q, r);
            let s = alpha(k, q).sqrt();
            let exact = rm * rm * s * (s * -f64::ln(r)).tanh();
            let v = mode_bound(k, q, r).unwrap().value;
            assert!((v - exact).abs() / exact < 1e-6, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn singular_tangent_is_refused() {
        // |arg| = 3 |ln R| / ρ_min exceeds π/2 for R = 0.5.
        assert!(matches!(
            mode_bound(-3, 3, 0.5),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn oracle_is_unbounded_below_past_the_pole() {
        let w = constant_weight(3, 0.5).unwrap();
        assert!(matches!(
            mode_bound_oracle(-3, 3, 0.5, &w, 512),
            Err(Error::UnboundedBelow { k: -3, q: 3 })
        ));
    }

    #[test]
    fn k_r_is_where_the_combination_clears_k_plus_quarter() {
        let kr = k_r(2, 0.99).unwrap();
        assert_eq!(kr, 288);
        assert!(mode_bound(kr as i64 - 1, 2, 0.99).unwrap().value < kr as f64 - 0.75);
        for k in kr..kr + 500 {
            assert!(mode_bound(k as i64, 2, 0.99).unwrap().value >= k as f64 + 0.25);
        }
    }

    #[test]
    fn first_component_never_reaches_k() {
        for k in [1, 10, 100, 1000] {
            assert!(case_three_first(k, 2, 0.99) < k as f64);
        }
    }

    #[test]
    fn ledger_rejects_pure_zero_mode() {
        let c = ModeCoefficients::pure_mode(0, 400).unwrap();
        assert!(matches!(
            nonexistence_ledger(&c, 3, 2, 0.99),
            Err(Error::InfeasibleCoefficients { expected: 1, .. })
        ));
    }

    #[test]
    fn ledger_needs_k_r_modes() {
        let c = ModeCoefficients::pure_mode(1, 10).unwrap();
        assert!(matches!(
            nonexistence_ledger(&c, 3, 2, 0.99),
            Err(Error::InsufficientResolution { available: 10, .. })
        ));
    }
}
