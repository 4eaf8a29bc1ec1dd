//! Flat-plate observables and the lateral response function.
//!
//! All integrals run over the propagating-mode variables `(γ, u)` with
//! `∫du ∫d²τ → 2π ∫γ dγ ∫_0^γ du`. Hatted quantities are dimensionless:
//!
//! * `ê  = -E L³ / ħc` (energy per area)
//! * `f̂  = |F| L⁴ / ħc` (normal force per area)
//! * `ê₂ = -E'' L⁵ / ħc` (curvature of the energy per area)
//! * `ĝ  = -G L⁵ / ħc` (lateral response at `k_C L`)

use std::collections::HashMap;
use std::f64::consts::PI;

use parking_lot::RwLock;

use crate::optics::{kernel_from_geometry, reflection, round_trip_denominator, MirrorKind, MirrorModel, Polarization};
use crate::quadrature::{integrate_nested, Axis, QuadResult, QuadSpec};
use crate::units::{HBAR_C, NM};
use crate::{Error, Result};

/// The three lengths of the problem, in nanometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthScales {
    pub l_nm: f64,
    pub lambda_c_nm: f64,
    pub lambda_p_nm: f64,
}

impl LengthScales {
    pub fn new(l_nm: f64, lambda_c_nm: f64, lambda_p_nm: f64) -> Result<Self> {
        for (name, v) in [("L", l_nm), ("lambda_P", lambda_p_nm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        // An infinite corrugation wavelength describes flat plates.
        if !(lambda_c_nm > 0.0) || lambda_c_nm.is_nan() {
            return Err(Error::InvalidInput(format!("lambda_C must be positive, got {lambda_c_nm}")));
        }
        Ok(Self {
            l_nm,
            lambda_c_nm,
            lambda_p_nm,
        })
    }

    pub fn kc_l(&self) -> f64 {
        2.0 * PI * self.l_nm / self.lambda_c_nm
    }

    pub fn kp_l(&self) -> f64 {
        2.0 * PI * self.l_nm / self.lambda_p_nm
    }

    pub fn with_l(&self, l_nm: f64) -> Result<Self> {
        Self::new(l_nm, self.lambda_c_nm, self.lambda_p_nm)
    }

    /// Corrugation wavelength giving the requested `k_C L` at this `L`;
    /// `k_C L = 0` gives flat plates.
    pub fn with_kc_l(&self, kc_l: f64) -> Result<Self> {
        if !(kc_l >= 0.0 && kc_l.is_finite()) {
            return Err(Error::InvalidInput(format!("kC L must be non-negative, got {kc_l}")));
        }
        let lambda_c = if kc_l == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI * self.l_nm / kc_l
        };
        Self::new(self.l_nm, lambda_c, self.lambda_p_nm)
    }

    pub fn material(&self, kind: MirrorKind) -> Material {
        match kind {
            MirrorKind::Perfect => Material::Perfect,
            MirrorKind::Plasma => Material::Plasma {
                lambda_p_nm: self.lambda_p_nm,
            },
        }
    }

    pub fn mirror(&self, kind: MirrorKind) -> Result<MirrorModel> {
        self.material(kind).at(self.l_nm)
    }
}

/// Mirror material in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Perfect,
    Plasma { lambda_p_nm: f64 },
}

impl Material {
    /// Dimensionless mirror model seen from a cavity of length `l_nm`.
    pub fn at(&self, l_nm: f64) -> Result<MirrorModel> {
        if !(l_nm > 0.0 && l_nm.is_finite()) {
            return Err(Error::InvalidInput(format!("L must be positive, got {l_nm}")));
        }
        match *self {
            Material::Perfect => Ok(MirrorModel::Perfect),
            Material::Plasma { lambda_p_nm } => Ok(MirrorModel::plasma(2.0 * PI * l_nm / lambda_p_nm)?),
        }
    }
}

/// Sinusoidal corrugation amplitudes and lateral mismatch, in nanometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrugation {
    pub a1_nm: f64,
    pub a2_nm: f64,
    pub b_nm: f64,
}

impl Corrugation {
    pub fn new(a1_nm: f64, a2_nm: f64, b_nm: f64) -> Result<Self> {
        if !(a1_nm >= 0.0 && a2_nm >= 0.0 && a1_nm.is_finite() && a2_nm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "amplitudes must be non-negative, got {a1_nm}, {a2_nm}"
            )));
        }
        if !b_nm.is_finite() {
            return Err(Error::InvalidInput(format!("mismatch must be finite, got {b_nm}")));
        }
        Ok(Self { a1_nm, a2_nm, b_nm })
    }

    /// True when the amplitudes are too large for a second-order expansion
    /// to be trusted.
    pub fn outside_perturbative_regime(&self, scales: &LengthScales) -> bool {
        let smallest = scales.l_nm.min(scales.lambda_c_nm).min(scales.lambda_p_nm);
        self.a1_nm.max(self.a2_nm) > 0.2 * smallest
    }
}

/// Dimensionless lateral response `ĝ = -G L⁵ / ħc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseValue {
    pub g_hat: f64,
    pub err_est: f64,
    pub evals: u64,
    pub converged: bool,
}

impl From<QuadResult> for ResponseValue {
    fn from(r: QuadResult) -> Self {
        Self {
            g_hat: r.value,
            err_est: r.err_est,
            evals: r.evals,
            converged: r.converged,
        }
    }
}

impl ResponseValue {
    pub fn relative_error(&self) -> f64 {
        self.err_est / self.g_hat.abs()
    }
}

/// A flat-plate quantity in SI units together with its dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateValue {
    pub si: f64,
    pub hat: f64,
    pub err_est: f64,
    pub evals: u64,
    pub converged: bool,
}

fn check_spec(spec: &QuadSpec) -> Result<()> {
    spec.validate()?;
    Ok(())
}

/// `(γ, u)` domain with the kink of the plasma response at `γ ≈ κ_P L` marked.
fn mode_axes(mirror: MirrorModel) -> [Axis<'static>; 2] {
    let outer = match mirror.kp_l() {
        Some(kp) if kp < 50.0 => Axis::semi_infinite().with_breaks(&[kp]),
        _ => Axis::semi_infinite(),
    };
    [outer, Axis::dependent(|c: &[f64]| (0.0, c[0]))]
}

/// `∫γ dγ ∫_0^γ du Σ_p w(γ, x_p, d_p) / 4π²` where `x_p = r_p² e^{-2γ}`.
fn mode_integral<W>(mirror: MirrorModel, spec: &QuadSpec, weight: W) -> Result<QuadResult>
where
    W: Fn(f64, f64, f64) -> f64 + Sync,
{
    check_spec(spec)?;
    let f = |c: &[f64]| {
        let (g, u) = (c[0], c[1]);
        let tau = ((g - u) * (g + u)).max(0.0).sqrt();
        let e2 = (-2.0 * g).exp();
        let mut s = 0.0;
        for p in Polarization::BOTH {
            let refl = reflection(p, tau, u, mirror);
            let x = refl.r * refl.r * e2;
            let d = round_trip_denominator(refl, g);
            s += weight(g, x, d);
        }
        g * s
    };
    let r = integrate_nested(&f, &mode_axes(mirror), spec)?;
    Ok(r.scaled(1.0 / (4.0 * PI * PI)))
}

/// `ê = -E L³ / ħc`; `π²/720` for perfect mirrors.
pub fn energy_hat(mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    mode_integral(mirror, spec, |_g, x, d| if x < 0.5 { -(-x).ln_1p() } else { -d.ln() })
}

/// `f̂ = |F| L⁴ / ħc`; `π²/240` for perfect mirrors.
pub fn force_hat(mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    mode_integral(mirror, spec, |g, x, d| 2.0 * g * x / d)
}

/// `ê₂ = -E'' L⁵ / ħc`; `π²/60` for perfect mirrors.
pub fn curvature_hat(mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    mode_integral(mirror, spec, |g, x, d| 4.0 * g * g * x / (d * d))
}

fn plate_value(r: QuadResult, factor: f64) -> PlateValue {
    PlateValue {
        si: r.value * factor,
        hat: r.value,
        err_est: r.err_est * factor.abs(),
        evals: r.evals,
        converged: r.converged,
    }
}

/// Casimir energy per area (J/m²); negative.
pub fn energy_pp_per_area(l_nm: f64, material: Material, spec: &QuadSpec) -> Result<PlateValue> {
    let r = energy_hat(material.at(l_nm)?, spec)?;
    let l = l_nm * NM;
    Ok(plate_value(r, -HBAR_C / l.powi(3)))
}

/// Magnitude of the attractive normal force per area (N/m²).
pub fn force_pp_per_area(l_nm: f64, material: Material, spec: &QuadSpec) -> Result<PlateValue> {
    let r = force_hat(material.at(l_nm)?, spec)?;
    let l = l_nm * NM;
    Ok(plate_value(r, HBAR_C / l.powi(4)))
}

/// `∂²E_PP/∂L²` per area (J/m⁴); negative.
pub fn d2e_pp_dl2(l_nm: f64, material: Material, spec: &QuadSpec) -> Result<PlateValue> {
    let r = curvature_hat(material.at(l_nm)?, spec)?;
    let l = l_nm * NM;
    Ok(plate_value(r, -HBAR_C / l.powi(5)))
}

fn ratio(num: QuadResult, den: QuadResult) -> QuadResult {
    let value = num.value / den.value;
    QuadResult {
        value,
        err_est: value.abs() * num.relative_error().hypot(den.relative_error()),
        evals: num.evals + den.evals,
        converged: num.converged && den.converged,
    }
}

/// Local exponent `d ln|F| / d ln L` of the normal force, `-ê₂/f̂`.
pub fn force_log_slope(l_nm: f64, material: Material, spec: &QuadSpec) -> Result<QuadResult> {
    let mirror = material.at(l_nm)?;
    let f = force_hat(mirror, spec)?;
    let e2 = curvature_hat(mirror, spec)?;
    let mut r = ratio(e2, f);
    r.value = -r.value;
    Ok(r)
}

/// `κ_P L` at which [`plasmon_force_coefficient`] samples `f̂/κ_P L`.
pub const PLASMON_PROBE_KP_L: f64 = 1e-4;

/// Coefficient `c` of the short-distance law `|F|/A ≈ c ħc κ_P / L³`,
/// estimated as `f̂/κ_P L` deep in the plasmon regime.
pub fn plasmon_force_coefficient(spec: &QuadSpec) -> Result<QuadResult> {
    let kp = PLASMON_PROBE_KP_L;
    Ok(force_hat(MirrorModel::plasma(kp)?, spec)?.scaled(1.0 / kp))
}

/// `ĝ` at `k_C L = 0` from the coincident-mode kernel.
pub fn response_g_specular(mirror: MirrorModel, spec: &QuadSpec) -> Result<ResponseValue> {
    check_spec(spec)?;
    let f = |c: &[f64]| {
        let (g, u) = (c[0], c[1]);
        let tau = ((g - u) * (g + u)).max(0.0).sqrt();
        g * kernel_from_geometry(tau, tau, 1.0, u, mirror)
    };
    let r = integrate_nested(&f, &mode_axes(mirror), spec)?;
    Ok(r.scaled(1.0 / (4.0 * PI * PI)).into())
}

/// Point of the `(γ₁, γ₂, ψ)` domain mapped to the kernel arguments.
///
/// The two wavevectors `K₁ = (x, y, u)` and `K₂ = K₁ - (k_C, 0, 0)` have
/// lengths `γ₁`, `γ₂`; `ψ` is the azimuth of `(y, u)` about the `k_C` axis.
fn kernel_at(g1: f64, g2: f64, psi: f64, kc: f64, mirror: MirrorModel) -> f64 {
    let x = (g1 - g2) * (g1 + g2) / (2.0 * kc) + 0.5 * kc;
    let rho = ((g1 - x) * (g1 + x)).max(0.0).sqrt();
    let (s, c) = psi.sin_cos();
    let u = rho * s;
    let y = rho * c;
    let tau1 = x.hypot(y);
    let tau2 = (x - kc).hypot(y);
    let cos = if tau1 == 0.0 || tau2 == 0.0 {
        1.0
    } else {
        (x * (x - kc) + y * y) / (tau1 * tau2)
    };
    kernel_from_geometry(tau1, tau2, cos, u, mirror)
}

/// `ĝ(k_C L)`; at `k_C L = 0` the specular route is used.
///
/// For `k_C L > 0` the integral is carried out over
/// `ĝ = (4π³ k_C L)⁻¹ ∫dγ₁ ∫_{|γ₁-k_C L|}^{γ₁+k_C L} dγ₂ ∫_0^{π/2} dψ γ₁γ₂ b`.
pub fn response_g(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> Result<ResponseValue> {
    if !(kc_l >= 0.0 && kc_l.is_finite()) {
        return Err(Error::InvalidInput(format!("kC L must be non-negative, got {kc_l}")));
    }
    if kc_l == 0.0 {
        return response_g_specular(mirror, spec);
    }
    check_spec(spec)?;
    let f = |c: &[f64]| c[0] * c[1] * kernel_at(c[0], c[1], c[2], kc_l, mirror);
    let mut outer_breaks = vec![kc_l];
    if let Some(kp) = mirror.kp_l() {
        if kp < 50.0 {
            outer_breaks.push(kp);
        }
    }
    let axes = [
        Axis::semi_infinite().with_breaks(&outer_breaks),
        Axis::dependent(move |c: &[f64]| ((c[0] - kc_l).abs(), c[0] + kc_l)),
        Axis::finite(0.0, 0.5 * PI),
    ];
    let r = integrate_nested(&f, &axes, spec)?;
    Ok(r.scaled(1.0 / (4.0 * PI.powi(3) * kc_l)).into())
}

type CacheKey = (u64, u64, [u64; 4]);

/// Memo of `ĝ` values keyed by the exact bit patterns of `(k_C L, κ_P L)`
/// and the quadrature spec, so a hit returns exactly what a recomputation
/// would.
#[derive(Debug, Default)]
pub struct ResponseCache {
    map: RwLock<HashMap<CacheKey, ResponseValue>>,
}

impl ResponseCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> CacheKey {
        let kp = match mirror {
            MirrorModel::Perfect => u64::MAX,
            MirrorModel::Plasma { kp_l } => kp_l.to_bits(),
        };
        (
            kc_l.to_bits(),
            kp,
            [
                spec.rel_tol.to_bits(),
                spec.abs_floor.to_bits(),
                spec.max_evals,
                spec.decay_cutoff.to_bits(),
            ],
        )
    }

    /// Cached [`response_g`].
    pub fn response_g(&self, kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> Result<ResponseValue> {
        let key = Self::key(kc_l, mirror, spec);
        if let Some(v) = self.map.read().get(&key) {
            return Ok(*v);
        }
        let v = response_g(kc_l, mirror, spec)?;
        self.map.write().insert(key, v);
        Ok(v)
    }
}

/// PFA accuracy ratio `ρ = G(k_C)/G(0)`.
pub fn rho_pp(kc_l: f64, mirror: MirrorModel, spec: &QuadSpec) -> Result<QuadResult> {
    let g0 = response_g_specular(mirror, spec)?;
    if kc_l == 0.0 {
        return Ok(QuadResult {
            value: 1.0,
            err_est: 0.0,
            evals: g0.evals,
            converged: g0.converged,
        });
    }
    let g = response_g(kc_l, mirror, spec)?;
    Ok(rho_from(g, g0))
}

pub(crate) fn as_quad(g: ResponseValue) -> QuadResult {
    QuadResult {
        value: g.g_hat,
        err_est: g.err_est,
        evals: g.evals,
        converged: g.converged,
    }
}

pub(crate) fn rho_from(g: ResponseValue, g0: ResponseValue) -> QuadResult {
    ratio(as_quad(g), as_quad(g0))
}

/// Lateral force coefficient per area and its PFA counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralCoefficient {
    pub kc_l: f64,
    pub g_hat: f64,
    pub g0_hat: f64,
    pub rho: f64,
    pub rho_err: f64,
    /// `Γ_PP/A` in N/m⁴ (per m² of `a₁a₂`); negative, i.e. restoring.
    pub n_per_m4: f64,
    pub pfa_n_per_m4: f64,
    pub err_est: f64,
    pub converged: bool,
}

impl LateralCoefficient {
    /// `|Γ_PP/A|` in pN/μm² per nm² of `a₁a₂`.
    pub fn pn_um2_per_nm2(&self) -> f64 {
        self.n_per_m4.abs() * crate::units::N_PER_M4_TO_PN_UM2_PER_NM2
    }

    pub fn pfa_pn_um2_per_nm2(&self) -> f64 {
        self.pfa_n_per_m4.abs() * crate::units::N_PER_M4_TO_PN_UM2_PER_NM2
    }
}

/// `Γ_PP/A` in N/m⁴ for a given `ĝ`: `-ĝ ħc k_C L / (2 L⁶)`.
pub fn coefficient_from_g_hat(g_hat: f64, kc_l: f64, l_nm: f64) -> f64 {
    let l = l_nm * NM;
    -g_hat * HBAR_C * kc_l / (2.0 * l.powi(6))
}

/// Coefficient of the lateral force per area and per `a₁a₂`.
pub fn gamma_pp_per_area(scales: &LengthScales, kind: MirrorKind, spec: &QuadSpec) -> Result<LateralCoefficient> {
    gamma_pp_cached(scales, kind, spec, &ResponseCache::new())
}

/// [`gamma_pp_per_area`] drawing `ĝ` values from a shared cache.
pub fn gamma_pp_cached(
    scales: &LengthScales,
    kind: MirrorKind,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Result<LateralCoefficient> {
    let mirror = scales.mirror(kind)?;
    let kc_l = scales.kc_l();
    let g0 = cache.response_g(0.0, mirror, spec)?;
    let g = cache.response_g(kc_l, mirror, spec)?;
    Ok(lateral_coefficient(kc_l, scales.l_nm, g, g0))
}

fn lateral_coefficient(kc_l: f64, l_nm: f64, g: ResponseValue, g0: ResponseValue) -> LateralCoefficient {
    let rho = rho_from(g, g0);
    let n_per_m4 = coefficient_from_g_hat(g.g_hat, kc_l, l_nm);
    LateralCoefficient {
        kc_l,
        g_hat: g.g_hat,
        g0_hat: g0.g_hat,
        rho: rho.value,
        rho_err: rho.err_est,
        n_per_m4,
        pfa_n_per_m4: coefficient_from_g_hat(g0.g_hat, kc_l, l_nm),
        err_est: n_per_m4.abs() * g.relative_error(),
        converged: rho.converged,
    }
}

/// Lateral force per area for a given corrugation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralForce {
    /// N/m²; negative values push the mismatch `b` back towards zero.
    pub scattering: f64,
    pub pfa: f64,
    pub rho: f64,
    pub outside_perturbative_regime: bool,
    pub converged: bool,
}

pub fn lateral_force_pp(
    scales: &LengthScales,
    corr: &Corrugation,
    kind: MirrorKind,
    spec: &QuadSpec,
) -> Result<LateralForce> {
    let coef = gamma_pp_per_area(scales, kind, spec)?;
    Ok(lateral_force_from(&coef, scales, corr))
}

pub fn lateral_force_from(coef: &LateralCoefficient, scales: &LengthScales, corr: &Corrugation) -> LateralForce {
    let amp = corr.a1_nm * NM * corr.a2_nm * NM;
    let phase = if corr.b_nm == 0.0 {
        0.0
    } else {
        (2.0 * PI * corr.b_nm / scales.lambda_c_nm).sin()
    };
    LateralForce {
        scattering: coef.n_per_m4 * amp * phase,
        pfa: coef.pfa_n_per_m4 * amp * phase,
        rho: coef.rho,
        outside_perturbative_regime: corr.outside_perturbative_regime(scales),
        converged: coef.converged,
    }
}

/// `k_C L` maximising `|Γ_PP|` at fixed `L` and `λ_P`, searched on `[lo, hi]`.
pub fn find_pp_peak(
    l_nm: f64,
    material: Material,
    bracket: (f64, f64),
    tol: f64,
    spec: &QuadSpec,
) -> Result<crate::search::Extremum> {
    let mirror = material.at(l_nm)?;
    let objective = |k: f64| -> Result<f64> { Ok(k * response_g(k, mirror, spec)?.g_hat) };
    crate::search::golden_section_max(objective, bracket.0, bracket.1, tol)
}
