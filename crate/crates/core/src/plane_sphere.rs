//! Sphere-plane lateral force, with the sphere curvature treated by the
//! proximity approximation and the corrugation by the full response.
//!
//! The sphere sees a continuum of local separations `L' ≥ L`. Substituting
//! `t = L/L'` maps the outer integral onto `(0, 1]`:
//!
//! `Γ_PS = π k_C R ħc / L⁴ · ∫_0^1 ĝ(k_C L/t, κ_P L/t) t³ dt`
//!
//! and the lower end is cut where `k_C L/t` exceeds `k_C L` by
//! [`TAIL_DECADES`] e-folds, beyond which `ĝ` is exponentially negligible.

use std::f64::consts::PI;

use crate::optics::{MirrorKind, MirrorModel};
use crate::plane_plane::{curvature_hat, force_hat, LengthScales, Material};
pub use crate::plane_plane::ResponseCache;
use crate::quadrature::{integrate_composite, QuadResult, QuadSpec};
use crate::search::{golden_section_max, log_log_slope, Extremum};
use crate::units::{HBAR_C, NM, UM};
use crate::{Error, Result};

/// e-folds of `e^{-k_C L'}` kept beyond the closest approach.
pub const TAIL_DECADES: f64 = 60.0;

/// Sphere of radius `R` above a plate, closest approach `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSetup {
    pub radius_um: f64,
    pub scales: LengthScales,
}

/// Which applicability conditions of the sphere treatment hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    /// `R/L ≥ 100`.
    pub radius_much_larger_than_gap: bool,
    /// `R L / λ_C² ≥ 10`.
    pub many_periods_in_interaction_zone: bool,
}

impl SphereSetup {
    pub fn new(radius_um: f64, scales: LengthScales) -> Result<Self> {
        if !(radius_um > 0.0 && radius_um.is_finite()) {
            return Err(Error::InvalidInput(format!("R must be positive, got {radius_um}")));
        }
        Ok(Self { radius_um, scales })
    }

    pub fn validity(&self) -> Validity {
        let r_nm = self.radius_um * 1e3;
        let l = self.scales.l_nm;
        let lc = self.scales.lambda_c_nm;
        Validity {
            radius_much_larger_than_gap: r_nm / l >= 100.0,
            many_periods_in_interaction_zone: r_nm * l / (lc * lc) >= 10.0,
        }
    }

    pub fn with_scales(&self, scales: LengthScales) -> Self {
        Self { scales, ..*self }
    }

    /// `π k_C R` (dimensionless).
    fn prefactor(&self) -> f64 {
        PI * (2.0 * PI / (self.scales.lambda_c_nm * NM)) * self.radius_um * UM
    }
}

/// Plane-sphere lateral coefficients; forces per `a₁a₂` in pN/μm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsResult {
    pub gamma_ps: f64,
    pub gamma_ps_pfa: f64,
    pub rho_ps: f64,
    pub err_est: f64,
    pub converged: bool,
    pub validity: Validity,
}

fn lower_limit(kc_l: f64) -> f64 {
    kc_l / (kc_l + TAIL_DECADES)
}

/// `∫ ĝ(k_C L/t, κ_P L/t) t³ dt` over the sphere.
fn sphere_response_integral(
    kc_l: f64,
    mirror: MirrorModel,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Result<QuadResult> {
    if !(kc_l >= 0.0 && kc_l.is_finite()) {
        return Err(Error::InvalidInput(format!("kC L must be non-negative, got {kc_l}")));
    }
    let inner = spec.scaled(0.5);
    let f = |t: f64| -> Result<QuadResult> {
        let g = cache.response_g(kc_l / t, mirror.rescaled(1.0 / t), &inner)?;
        let w = t * t * t;
        Ok(QuadResult {
            value: g.g_hat * w,
            err_est: g.err_est * w,
            evals: g.evals,
            converged: g.converged,
        })
    };
    integrate_composite(&f, lower_limit(kc_l), 1.0, spec)
}

/// Same weighted average written as `∫ ê₂ ρ t³ dt`, with `ρ` and the
/// flat-plate curvature evaluated separately at every `L'`.
fn sphere_rho_integral(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec, cache: &ResponseCache) -> Result<QuadResult> {
    let inner = spec.scaled(0.5);
    let f = |t: f64| -> Result<QuadResult> {
        let m = mirror.rescaled(1.0 / t);
        let g = cache.response_g(kc_l / t, m, &inner)?;
        let g0 = cache.response_g(0.0, m, &inner)?;
        let e2 = curvature_hat(m, &inner)?;
        let w = t * t * t;
        let rho = g.g_hat / g0.g_hat;
        let rel = g.relative_error().hypot(g0.relative_error()).hypot(e2.relative_error());
        let value = e2.value * rho * w;
        Ok(QuadResult {
            value,
            err_est: value.abs() * rel,
            evals: g.evals + g0.evals + e2.evals,
            converged: g.converged && g0.converged && e2.converged,
        })
    };
    integrate_composite(&f, lower_limit(kc_l), 1.0, spec)
}

/// `Γ_PS` and its PFA counterpart `π k_C R F_PP/A`.
pub fn gamma_ps(setup: &SphereSetup, kind: MirrorKind, spec: &QuadSpec, cache: &ResponseCache) -> Result<PsResult> {
    let scales = setup.scales;
    let mirror = scales.mirror(kind)?;
    let kc_l = scales.kc_l();
    let l = scales.l_nm * NM;
    let unit = setup.prefactor() * HBAR_C / l.powi(4);
    let integral = sphere_response_integral(kc_l, mirror, spec, cache)?;
    let f = force_hat(mirror, spec)?;
    let gamma_ps = integral.value * unit;
    let gamma_ps_pfa = f.value * unit;
    let rho_ps = integral.value / f.value;
    Ok(PsResult {
        gamma_ps,
        gamma_ps_pfa,
        rho_ps,
        err_est: gamma_ps * integral.relative_error().hypot(f.relative_error()),
        converged: integral.converged && f.converged,
        validity: setup.validity(),
    })
}

/// `ρ_PS` from the force-weighted average of the flat-plate `ρ`; the
/// radius cancels.
pub fn rho_ps(scales: &LengthScales, kind: MirrorKind, spec: &QuadSpec, cache: &ResponseCache) -> Result<QuadResult> {
    let mirror = scales.mirror(kind)?;
    let num = sphere_rho_integral(scales.kc_l(), mirror, spec, cache)?;
    let den = force_hat(mirror, spec)?;
    let value = num.value / den.value;
    Ok(QuadResult {
        value,
        err_est: value * num.relative_error().hypot(den.relative_error()),
        evals: num.evals + den.evals,
        converged: num.converged && den.converged,
    })
}

/// Radius (μm) for which `Γ_PS^PFA` takes the given value in pN/μm².
pub fn radius_for_pfa_target(scales: &LengthScales, kind: MirrorKind, target: f64, spec: &QuadSpec) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidInput(format!("target must be positive, got {target}")));
    }
    if scales.kc_l() == 0.0 {
        return Err(Error::InvalidInput("flat surfaces have no lateral force".into()));
    }
    let f = force_hat(scales.mirror(kind)?, spec)?;
    let l = scales.l_nm * NM;
    let force_per_area = f.value * HBAR_C / l.powi(4);
    let kc = 2.0 * PI / (scales.lambda_c_nm * NM);
    Ok(target / (PI * kc * force_per_area) / UM)
}

/// `k_C L` maximising `Γ_PS` at fixed `L`, `λ_P` and `R`.
pub fn find_ps_peak(
    l_nm: f64,
    material: Material,
    bracket: (f64, f64),
    tol: f64,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Result<Extremum> {
    let mirror = material.at(l_nm)?;
    // Γ_PS ∝ k_C ∫ĝ t³ dt at fixed L and R.
    let objective = |k: f64| -> Result<f64> { Ok(k * sphere_response_integral(k, mirror, spec, cache)?.value) };
    golden_section_max(objective, bracket.0, bracket.1, tol)
}

/// `n` points evenly spaced on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::perfect::window(lo, hi, n)
}

/// Power-law exponents of `Γ_PS` and `Γ_PS^PFA` against `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub pfa_exponent: f64,
    /// `(L, Γ_PS, Γ_PS^PFA)` at each sample.
    pub samples: Vec<(f64, f64, f64)>,
    pub converged: bool,
}

/// Least-squares slopes of `ln Γ_PS` and `ln Γ_PS^PFA` against `ln L` over
/// `points ≥ 8` samples; `base` fixes `R`, `λ_C` and `λ_P`.
pub fn powerlaw_fit_ps(
    l_range: (f64, f64),
    points: usize,
    base: &SphereSetup,
    kind: MirrorKind,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Result<PowerLaw> {
    if points < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 points, got {points}")));
    }
    let mut samples = Vec::with_capacity(points);
    let mut converged = true;
    for l in grid(l_range.0, l_range.1, points) {
        let setup = base.with_scales(base.scales.with_l(l)?);
        let r = gamma_ps(&setup, kind, spec, cache)?;
        converged &= r.converged;
        samples.push((l, r.gamma_ps, r.gamma_ps_pfa));
    }
    let ls: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let gs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ps: Vec<f64> = samples.iter().map(|s| s.2).collect();
    Ok(PowerLaw {
        exponent: log_log_slope(&ls, &gs)?.slope,
        pfa_exponent: log_log_slope(&ls, &ps)?.slope,
        samples,
        converged,
    })
}

/// Three `Γ_PS` curves on a shared grid of closest-approach distances.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetAnalysis {
    pub offset_nm: f64,
    pub l_nm: Vec<f64>,
    pub scattering: Vec<f64>,
    pub pfa: Vec<f64>,
    /// Scattering result evaluated at `L - offset`.
    pub scattering_offset: Vec<f64>,
    /// Largest `|offset − PFA| / PFA` over the grid.
    pub max_gap_offset: f64,
    /// Largest `|scattering − PFA| / PFA` over the grid.
    pub max_gap_plain: f64,
    pub converged: bool,
}

pub fn offset_analysis(
    l_range: (f64, f64),
    points: usize,
    offset_nm: f64,
    base: &SphereSetup,
    kind: MirrorKind,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Result<OffsetAnalysis> {
    if !(offset_nm >= 0.0 && offset_nm < l_range.0) {
        return Err(Error::InvalidInput(format!(
            "offset must lie in [0, {}), got {offset_nm}",
            l_range.0
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {points}")));
    }
    let ls = grid(l_range.0, l_range.1, points);
    let mut out = OffsetAnalysis {
        offset_nm,
        l_nm: ls.clone(),
        scattering: Vec::with_capacity(points),
        pfa: Vec::with_capacity(points),
        scattering_offset: Vec::with_capacity(points),
        max_gap_offset: 0.0,
        max_gap_plain: 0.0,
        converged: true,
    };
    for &l in &ls {
        let here = gamma_ps(&base.with_scales(base.scales.with_l(l)?), kind, spec, cache)?;
        let shifted = if offset_nm == 0.0 {
            here
        } else {
            gamma_ps(&base.with_scales(base.scales.with_l(l - offset_nm)?), kind, spec, cache)?
        };
        out.converged &= here.converged && shifted.converged;
        out.max_gap_plain = out.max_gap_plain.max((here.gamma_ps / here.gamma_ps_pfa - 1.0).abs());
        out.max_gap_offset = out.max_gap_offset.max((shifted.gamma_ps / here.gamma_ps_pfa - 1.0).abs());
        out.scattering.push(here.gamma_ps);
        out.pfa.push(here.gamma_ps_pfa);
        out.scattering_offset.push(shifted.gamma_ps);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scales() -> LengthScales {
        LengthScales::new(220.0, 1200.0, 137.0).unwrap()
    }

    #[test]
    fn validity_flags() {
        let s = SphereSetup::new(100.0, scales()).unwrap();
        let v = s.validity();
        assert!(v.radius_much_larger_than_gap);
        assert!(v.many_periods_in_interaction_zone);
        let small = SphereSetup::new(5.0, scales()).unwrap().validity();
        assert!(!small.radius_much_larger_than_gap);
        assert!(!small.many_periods_in_interaction_zone);
        assert!(SphereSetup::new(0.0, scales()).is_err());
    }

    #[test]
    fn cache_returns_identical_values() {
        use crate::plane_plane::response_g;
        let cache = ResponseCache::new();
        let spec = QuadSpec::kernel_default();
        let m = MirrorModel::Perfect;
        let a = cache.response_g(1.5, m, &spec).unwrap();
        let b = cache.response_g(1.5, m, &spec).unwrap();
        let c = response_g(1.5, m, &spec).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(a, b);
        assert_eq!(a, c);
        let _ = cache.response_g(1.5, m, &QuadSpec::with_rel_tol(1e-4)).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn lower_limit_leaves_negligible_tail() {
        let k = 1.15;
        assert!((k / lower_limit(k) - k - TAIL_DECADES).abs() < 1e-9);
    }

    #[test]
    fn offset_must_be_smaller_than_range_start() {
        let s = SphereSetup::new(100.0, scales()).unwrap();
        let cache = ResponseCache::new();
        let spec = QuadSpec::kernel_default();
        assert!(offset_analysis((220.0, 260.0), 5, 230.0, &s, MirrorKind::Plasma, &spec, &cache).is_err());
        assert!(offset_analysis((220.0, 260.0), 5, -1.0, &s, MirrorKind::Plasma, &spec, &cache).is_err());
    }
}
