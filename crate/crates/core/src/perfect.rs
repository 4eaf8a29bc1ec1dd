//! Perfect-reflector reduction and the rugged-corrugation regime.
//!
//! For perfect mirrors the kernel no longer depends on the azimuth about
//! the corrugation axis and `ρ` reduces to a two-dimensional integral over
//! the lengths `γ, γ'` of the two coupled wavevectors.

use std::f64::consts::PI;

use crate::optics::{perfect_h, MirrorModel};
use crate::plane_plane::rho_pp;
use crate::quadrature::{integrate_nested, Axis, QuadResult, QuadSpec};
use crate::search::log_log_slope;
use crate::{Error, Result};

/// `ρ(k_C L)` for perfect mirrors from the reduced two-dimensional integral.
pub fn rho_perfect(kc_l: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if !(kc_l > 0.0 && kc_l.is_finite()) {
        return Err(Error::InvalidInput(format!("kC L must be positive, got {kc_l}")));
    }
    spec.validate()?;
    let k = kc_l;
    let f = |c: &[f64]| {
        let (g, gp) = (c[0], c[1]);
        let s = 0.5 * (g * g + gp * gp - k * k);
        perfect_h(g) * perfect_h(gp) * (s * s + (g * gp) * (g * gp))
    };
    let axes = [
        Axis::semi_infinite().with_breaks(&[k]),
        Axis::dependent(move |c: &[f64]| ((c[0] - k).abs(), c[0] + k)),
    ];
    let r = integrate_nested(&f, &axes, spec)?;
    Ok(r.scaled(30.0 / (PI.powi(4) * k)))
}

/// Large-`k_C L` asymptote `(30/π⁴)(k⁴/15 + k² + 3k + 3) e^{-k}`.
pub fn rho_perfect_asymptote(kc_l: f64) -> f64 {
    let k = kc_l;
    30.0 / PI.powi(4) * (k.powi(4) / 15.0 + k * k + 3.0 * k + 3.0) * (-k).exp()
}

/// `ρ` for either mirror model, using the reduced integral for perfect
/// mirrors.
pub fn rho_any(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    match mirror {
        MirrorModel::Perfect if kc_l > 0.0 => rho_perfect(kc_l, spec),
        _ => rho_pp(kc_l, mirror, spec),
    }
}

/// `α = ρ e^{k_C L}`.
pub fn alpha(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    let r = rho_any(kc_l, mirror, spec)?;
    Ok(r.scaled(kc_l.exp()))
}

/// Leading large-`k_C L` behaviour of `α` for perfect mirrors, `(2/π⁴) k⁴`.
pub fn alpha_perfect_quartic(kc_l: f64) -> f64 {
    2.0 / PI.powi(4) * kc_l.powi(4)
}

/// Prefactor of `ρ ≃ β (k_C L)^n e^{-k_C L}` estimated over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub beta_coeff: f64,
    pub exponent: f64,
    pub fit_range: (f64, f64),
    /// Largest relative deviation of the compensated samples from
    /// `beta_coeff`.
    pub residual: f64,
    /// `(k_C L, ρ)` at each sample.
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Evenly spaced samples on `[lo, hi]`.
pub fn window(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Median of `ρ e^{k} k^{-n}` over `points` samples in `fit_range`.
///
/// For plasma mirrors the window must lie in the rugged regime,
/// `k_C L ≥ max(8, 2 κ_P L)`.
pub fn fit_beta(
    mirror: MirrorModel,
    fit_range: (f64, f64),
    exponent: f64,
    points: usize,
    spec: &QuadSpec,
) -> Result<AsymptoticFit> {
    let (lo, hi) = fit_range;
    if !(lo < hi && lo > 0.0) || points < 3 {
        return Err(Error::InvalidInput(format!(
            "need a non-empty window and at least three points, got [{lo}, {hi}] with {points}"
        )));
    }
    if let Some(kp) = mirror.kp_l() {
        let floor = 8f64.max(2.0 * kp);
        if lo < floor {
            return Err(Error::InvalidInput(format!(
                "fit window starts at {lo}, below the rugged-regime floor {floor}"
            )));
        }
    }
    let ks = window(lo, hi, points);
    let mut samples = Vec::with_capacity(points);
    let mut converged = true;
    for &k in &ks {
        let r = rho_any(k, mirror, spec)?;
        if !r.converged {
            return Err(Error::NotConverged(format!("rho at kC L = {k}: {r:?}")));
        }
        converged &= r.converged;
        samples.push((k, r.value));
    }
    let mut comp: Vec<f64> = samples
        .iter()
        .map(|&(k, rho)| rho * k.exp() * k.powf(-exponent))
        .collect();
    let raw = comp.clone();
    comp.sort_by(f64::total_cmp);
    let mid = comp.len() / 2;
    let beta = if comp.len() % 2 == 1 {
        comp[mid]
    } else {
        0.5 * (comp[mid - 1] + comp[mid])
    };
    let residual = raw.iter().map(|c| (c / beta - 1.0).abs()).fold(0.0, f64::max);
    Ok(AsymptoticFit {
        beta_coeff: beta,
        exponent,
        fit_range,
        residual,
        samples,
        converged,
    })
}

/// Log-log slope of `ρ_plasma / ρ_perfect` against `k_C L` over the samples
/// of a plasma fit.
pub fn ratio_slope(plasma: &AsymptoticFit, spec: &QuadSpec) -> Result<f64> {
    let mut ks = Vec::with_capacity(plasma.samples.len());
    let mut ratios = Vec::with_capacity(plasma.samples.len());
    for &(k, rho) in &plasma.samples {
        let perfect = rho_perfect(k, spec)?;
        ks.push(k);
        ratios.push(rho / perfect.value);
    }
    Ok(log_log_slope(&ks, &ratios)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptote_closed_form_values() {
        assert!((rho_perfect_asymptote(0.0) - 90.0 / PI.powi(4)).abs() < 1e-15);
        // (30/π⁴)(10⁴/15 + 133) e⁻¹⁰
        assert!((rho_perfect_asymptote(10.0) - 0.011_181_136_21).abs() < 1e-12);
        assert!((rho_perfect_asymptote(20.0) / 7.065e-6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rho_perfect_small_wavevector_is_one() {
        let r = rho_perfect(1e-3, &QuadSpec::with_rel_tol(1e-8)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn rho_perfect_rejects_non_positive() {
        assert!(rho_perfect(0.0, &QuadSpec::default()).is_err());
        assert!(rho_perfect(-2.0, &QuadSpec::default()).is_err());
    }

    #[test]
    fn window_endpoints() {
        let w = window(10.0, 18.0, 5);
        assert_eq!(w, vec![10.0, 12.0, 14.0, 16.0, 18.0]);
        assert_eq!(window(3.0, 4.0, 1), vec![3.0]);
    }

    #[test]
    fn fit_rejects_window_outside_rugged_regime() {
        let m = MirrorModel::Plasma { kp_l: 5.0 };
        assert!(fit_beta(m, (8.0, 12.0), 3.5, 5, &QuadSpec::default()).is_err());
        assert!(fit_beta(MirrorModel::Perfect, (12.0, 8.0), 4.0, 5, &QuadSpec::default()).is_err());
    }
}
