//! Radius thresholds for the degree-`p` radial harmonic maps.
//!
//! `E_∞(u_{∞,p}) = 2πp(1 − R^p)/(1 + R^p)`, and the gap
//! `E_∞(u_{∞,p}) − E_∞(u_{∞,p−1}) < 2π` holds exactly when
//! `Q_p(R) = p − 1 − pR − R^p < 0`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{parameter, Error, Result};
use crate::grid::{capacity, AnnulusSpec};
use crate::radial::gb_integral_criterion;

/// Default `γ` of the integral capacity criterion.
pub const DEFAULT_GAMMA: f64 = 4.0;

/// `Q_p(R) = p − 1 − pR − R^p`.
pub fn q_polynomial(p: u32, r: f64) -> f64 {
    let p_f = f64::from(p);
    p_f - 1.0 - p_f * r - r.powi(p as i32)
}

/// The unique zero of `Q_p` in `(0, 1)` by bisection, to `|Q_p| < tol` or
/// machine resolution of the bracket.
pub fn q_root(p: u32, tol: f64) -> Result<f64> {
    if p == 0 {
        return Err(parameter("p must be >= 1"));
    }
    if p == 1 {
        return Err(Error::NoRoot { p });
    }
    if !(tol > 0.0) {
        return Err(parameter("tolerance must be positive"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        let value = q_polynomial(p, mid);
        if value.abs() < tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `E_∞` of the degree-`p` radial harmonic map.
pub fn radial_energy(p: u32, r: f64) -> f64 {
    let rp = r.powi(p as i32);
    2.0 * PI * f64::from(p) * (1.0 - rp) / (1.0 + rp)
}

/// `E_∞(u_{∞,p}) − E_∞(u_{∞,p−1})`.
pub fn radial_energy_gap(p: u32, r: f64) -> Result<f64> {
    if p < 2 {
        return Err(parameter(alloc::format!(
            "energy gap needs p >= 2, got {p}"
        )));
    }
    Ok(radial_energy(p, r) - radial_energy(p - 1, r))
}

/// What a hypothesis check rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisBasis {
    /// `p = 1`: `m_∞(1,1) < 2π` always.
    Unconditional,
    /// Closed-form radial energies; sufficient only, valid where radial maps
    /// minimise.
    ClosedFormSufficient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisCheck {
    pub p: u32,
    pub inner_radius: f64,
    /// Result of the closed-form test (`Q_p(R) < 0` for `p ≥ 2`).
    pub closed_form_holds: bool,
    /// `2π` minus the radial energy gap (`2π − E_∞(u_{∞,1})` for `p = 1`).
    pub margin: f64,
    pub basis: HypothesisBasis,
}

impl HypothesisCheck {
    /// `Some(true)` when the hypothesis is established, `None` when the
    /// closed form fails and the hypothesis itself is left undetermined.
    pub fn verdict(&self) -> Option<bool> {
        if self.closed_form_holds {
            Some(true)
        } else {
            None
        }
    }
}

/// Closed-form check of `m_∞(p,p) < m_∞(p−1,p−1) + 2π`.
pub fn hypothesis_h_check(p: u32, r: f64) -> Result<HypothesisCheck> {
    if p == 0 {
        return Err(parameter("p must be >= 1"));
    }
    AnnulusSpec::new(r)?;
    Ok(if p == 1 {
        HypothesisCheck {
            p,
            inner_radius: r,
            closed_form_holds: true,
            margin: 2.0 * PI - radial_energy(1, r),
            basis: HypothesisBasis::Unconditional,
        }
    } else {
        HypothesisCheck {
            p,
            inner_radius: r,
            closed_form_holds: q_polynomial(p, r) < 0.0,
            margin: 2.0 * PI - radial_energy_gap(p, r)?,
            basis: HypothesisBasis::ClosedFormSufficient,
        }
    })
}

/// Number of sample radii used to certify monotonicity in [`beta_threshold`].
pub const BETA_SAMPLES: usize = 199;

fn criterion(p: u32, r: f64) -> Result<f64> {
    gb_integral_criterion(&AnnulusSpec::new(r)?, p)
}

/// Smallest `R*` with `gb_integral_criterion(R, p) ≥ γ` on all of `(R*, 1)`.
///
/// The criterion is sampled at `R = k/200`, `k = 1, …, 199`; it must be
/// increasing there, otherwise [`Error::NonMonotone`] names the offending
/// pair. The crossing is then bisected to `tol`.
pub fn beta_threshold(p: u32, gamma: f64, tol: f64) -> Result<f64> {
    if p == 0 {
        return Err(parameter("p must be >= 1"));
    }
    if !(gamma > 0.0) || !(tol > 0.0) {
        return Err(parameter("gamma and tol must be positive"));
    }
    let step = 1.0 / (BETA_SAMPLES + 1) as f64;
    let radii: Vec<f64> = (1..=BETA_SAMPLES).map(|k| k as f64 * step).collect();
    let values = radii
        .iter()
        .map(|&r| criterion(p, r))
        .collect::<Result<Vec<_>>>()?;
    for k in 1..values.len() {
        if values[k] <= values[k - 1] {
            return Err(Error::NonMonotone {
                lower: radii[k - 1],
                upper: radii[k],
            });
        }
    }
    if values[values.len() - 1] < gamma {
        // Crossing above the last sample; the criterion diverges at R = 1.
        return bisect(p, gamma, radii[radii.len() - 1], 1.0 - f64::EPSILON, tol);
    }
    let first_above = values.iter().position(|&v| v >= gamma).unwrap_or(0);
    let lo = if first_above == 0 {
        0.0
    } else {
        radii[first_above - 1]
    };
    bisect(p, gamma, lo, radii[first_above], tol)
}

fn bisect(p: u32, gamma: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if criterion(p, mid)? >= gamma {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Per-`p` summary: `Q_p` root, `β_p` and the capacity at the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub p: u32,
    /// `None` for `p = 1`, where the hypothesis is unconditional.
    pub q_root: Option<f64>,
    pub beta_p: f64,
    pub capacity_at_root: Option<f64>,
    /// Closed-form hypothesis checks at the requested radii.
    pub hypothesis: Vec<HypothesisCheck>,
}

/// Assembles a [`ThresholdReport`]; `sample_radii` feed the hypothesis checks.
pub fn threshold_report(
    p: u32,
    gamma: f64,
    root_tol: f64,
    beta_tol: f64,
    sample_radii: &[f64],
) -> Result<ThresholdReport> {
    let q_root = match q_root(p, root_tol) {
        Ok(r) => Some(r),
        Err(Error::NoRoot { .. }) => None,
        Err(e) => return Err(e),
    };
    let beta_p = beta_threshold(p, gamma, beta_tol)?;
    let hypothesis = sample_radii
        .iter()
        .map(|&r| hypothesis_h_check(p, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdReport {
        p,
        q_root,
        beta_p,
        capacity_at_root: q_root.map(capacity),
        hypothesis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_polynomial_endpoints() {
        for p in 1..8 {
            assert_eq!(q_polynomial(p, 1.0), -2.0);
            assert_eq!(q_polynomial(p, 0.0), f64::from(p) - 1.0);
        }
        assert!(q_polynomial(2, 2f64.sqrt() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn root_of_q2_is_sqrt2_minus_1() {
        let r = q_root(2, 1e-13).unwrap();
        assert!((r - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert_eq!(q_root(1, 1e-12), Err(Error::NoRoot { p: 1 }));
    }

    #[test]
    fn roots_increase_with_p() {
        let roots: Vec<f64> = (2..=7).map(|p| q_root(p, 1e-13).unwrap()).collect();
        assert!(roots.windows(2).all(|w| w[1] > w[0]));
        let r3 = roots[1];
        assert!((2.0 - 3.0 * r3 - r3 * r3 * r3).abs() < 1e-12);
    }

    #[test]
    fn gap_is_two_pi_at_the_root() {
        for p in 2..=6 {
            let r = q_root(p, 1e-14).unwrap();
            assert!((radial_energy_gap(p, r).unwrap() - 2.0 * PI).abs() < 1e-10);
        }
        assert!(radial_energy_gap(3, 1.0 - 1e-12).unwrap().abs() < 1e-9);
    }

    #[test]
    fn hypothesis_examples() {
        assert!(hypothesis_h_check(2, 0.5).unwrap().closed_form_holds);
        let c = hypothesis_h_check(2, 0.3).unwrap();
        assert!(!c.closed_form_holds);
        assert_eq!(c.verdict(), None);
        let one = hypothesis_h_check(1, 0.01).unwrap();
        assert_eq!(one.basis, HypothesisBasis::Unconditional);
        assert_eq!(one.verdict(), Some(true));
        assert!(one.margin > 0.0);
    }

    #[test]
    fn beta_vanishes_for_tiny_gamma() {
        let b = beta_threshold(1, 1e-3, 1e-6).unwrap();
        assert!(b < 0.01, "{b}");
    }
}
