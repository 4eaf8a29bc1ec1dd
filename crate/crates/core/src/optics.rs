//! Optical response of the mirrors on the imaginary frequency axis.
//!
//! Everything here is dimensionless: frequencies and wavevectors are
//! measured in units of `1/L`, so a mode is `(u, τ) = (ξL/c, kL)` and its
//! round-trip decay is `e^{-γ}` with `γ = √(τ² + u²)`. The plasma medium
//! enters only through `κ_P L`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("zero frequency: use the analytic u -> 0 limit")]
    UseLimit,
    #[error("degenerate mode with tau = {tau}, u = {u}")]
    DegenerateMode { tau: f64, u: f64 },
    #[error("modes at different frequencies ({0} vs {1})")]
    FrequencyMismatch(f64, f64),
    #[error("invalid mirror parameter: {0}")]
    InvalidMirror(String),
}

/// Which mirror material a physical computation uses. The plasma
/// wavelength itself lives with the other lengths of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MirrorKind {
    Perfect,
    Plasma,
}

/// Mirror response in units of the cavity length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MirrorModel {
    Perfect,
    Plasma { kp_l: f64 },
}

impl MirrorModel {
    pub fn plasma(kp_l: f64) -> Result<Self, OpticsError> {
        if !(kp_l > 0.0 && kp_l.is_finite()) {
            return Err(OpticsError::InvalidMirror(format!(
                "kP L must be positive, got {kp_l}"
            )));
        }
        Ok(MirrorModel::Plasma { kp_l })
    }

    /// The same mirror seen from a cavity `factor` times longer.
    pub fn rescaled(self, factor: f64) -> Self {
        match self {
            MirrorModel::Perfect => MirrorModel::Perfect,
            MirrorModel::Plasma { kp_l } => MirrorModel::Plasma { kp_l: kp_l * factor },
        }
    }

    pub fn kp_l(&self) -> Option<f64> {
        match *self {
            MirrorModel::Perfect => None,
            MirrorModel::Plasma { kp_l } => Some(kp_l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];
}

/// A field mode: imaginary frequency, transverse wavevector magnitude and
/// its direction in the plane of the plates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    pub u: f64,
    pub tau: f64,
    pub phi: f64,
}

impl ModePoint {
    pub fn new(u: f64, tau: f64, phi: f64) -> Self {
        Self { u, tau, phi }
    }

    pub fn gamma(&self) -> f64 {
        self.tau.hypot(self.u)
    }
}

/// Permittivity `1 + (κ_P L / u)²` on the imaginary axis.
pub fn epsilon_imag(u: f64, kp_l: f64) -> Result<f64, OpticsError> {
    if u == 0.0 {
        return Err(OpticsError::UseLimit);
    }
    let ratio = kp_l / u;
    Ok(1.0 + ratio * ratio)
}

/// Reflection amplitude together with `1 - |r|`, which is what the
/// round-trip denominators need without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Reflection {
    pub r: f64,
    pub one_minus_abs: f64,
}

pub(crate) fn reflection(p: Polarization, tau: f64, u: f64, mirror: MirrorModel) -> Reflection {
    match mirror {
        MirrorModel::Perfect => match p {
            Polarization::TE => Reflection { r: -1.0, one_minus_abs: 0.0 },
            Polarization::TM => Reflection { r: 1.0, one_minus_abs: 0.0 },
        },
        MirrorModel::Plasma { kp_l } => {
            let g = tau.hypot(u);
            let gt = (g * g + kp_l * kp_l).sqrt();
            let kp2 = kp_l * kp_l;
            match p {
                Polarization::TE => {
                    // (γ - γt)/(γ + γt) with γ - γt = -κP²/(γ + γt)
                    let s = g + gt;
                    Reflection {
                        r: -kp2 / (s * s),
                        one_minus_abs: 2.0 * g / s,
                    }
                }
                Polarization::TM => {
                    // (εγ - γt)/(εγ + γt) multiplied through by u²
                    let u2 = u * u;
                    let den = g * (u2 + kp2) + gt * u2;
                    Reflection {
                        r: kp2 * (g - u2 / (g + gt)) / den,
                        one_minus_abs: 2.0 * gt * u2 / den,
                    }
                }
            }
        }
    }
}

/// Specular Fresnel amplitude `r_p` at `(τ, u)`.
///
/// At `u = 0` the plasma amplitudes take their analytic limits
/// `r_TE = (τ - γt)/(τ + γt)`, `r_TM = 1`.
pub fn fresnel(p: Polarization, tau: f64, u: f64, mirror: MirrorModel) -> Result<f64, OpticsError> {
    if tau == 0.0 && u == 0.0 {
        return Err(OpticsError::DegenerateMode { tau, u });
    }
    Ok(reflection(p, tau, u, mirror).r)
}

/// `1 - r² e^{-2γ}` computed without cancellation near `r² → 1, γ → 0`.
pub(crate) fn round_trip_denominator(refl: Reflection, gamma: f64) -> f64 {
    let e2 = (-2.0 * gamma).exp();
    let one_minus_r2 = refl.one_minus_abs * (2.0 - refl.one_minus_abs);
    -(-2.0 * gamma).exp_m1() + one_minus_r2 * e2
}

/// Round-trip factor `h_p = r_p e^{-γ} / (1 - r_p² e^{-2γ})`.
pub fn roundtrip_h(p: Polarization, tau: f64, u: f64, mirror: MirrorModel) -> Result<f64, OpticsError> {
    let g = tau.hypot(u);
    if g == 0.0 {
        return Err(OpticsError::DegenerateMode { tau, u });
    }
    let refl = reflection(p, tau, u, mirror);
    Ok(refl.r * (-g).exp() / round_trip_denominator(refl, g))
}

/// Shorthand factors of one mode entering the nonspecular kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInputs {
    pub kappa: f64,
    pub kappa_t: f64,
    pub beta: f64,
    pub beta_t: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub h_te: f64,
    pub h_tm: f64,
}

impl KernelInputs {
    /// Plasma shorthand at `(τ, u)`; `κ_t = √(γ² + κ_P²)`.
    pub fn plasma(tau: f64, u: f64, kp_l: f64) -> Result<Self, OpticsError> {
        let kappa = tau.hypot(u);
        if kappa == 0.0 {
            return Err(OpticsError::DegenerateMode { tau, u });
        }
        let kappa_t = (kappa * kappa + kp_l * kp_l).sqrt();
        let beta = tau / kappa;
        let beta_t = tau / kappa_t;
        let bb = beta * beta_t;
        let mirror = MirrorModel::Plasma { kp_l };
        Ok(Self {
            kappa,
            kappa_t,
            beta,
            beta_t,
            mu_plus: (kappa + kappa_t) / (1.0 + bb),
            mu_minus: (kappa - kappa_t) / (1.0 - bb),
            h_te: roundtrip_h(Polarization::TE, tau, u, mirror)?,
            h_tm: roundtrip_h(Polarization::TM, tau, u, mirror)?,
        })
    }
}

/// Per-mode factors after carrying out the sums over the `±` branches of
/// `μ_±` in closed form:
///
/// * `Σ μ_ε (1 + ε β β_t) = 2γ`
/// * `Σ μ_ε = 2 (u²/γ) / (1 - β² β_t²)`
/// * `μ_+ - μ_- = 2 (γ_t - τ²/γ_t) / (1 - β² β_t²)`
#[derive(Debug, Clone, Copy)]
struct ModeFactors {
    beta: f64,
    beta_t: f64,
    h_te: f64,
    h_tm: f64,
    sum_weighted: f64,
    sum_mu: f64,
    diff_mu: f64,
}

impl ModeFactors {
    fn plasma(tau: f64, u: f64, kp_l: f64) -> Self {
        let g = tau.hypot(u);
        let gt = (g * g + kp_l * kp_l).sqrt();
        let beta = tau / g;
        let beta_t = tau / gt;
        let bb = beta * beta_t;
        let denom = 1.0 - bb * bb;
        let mirror = MirrorModel::Plasma { kp_l };
        let eg = (-g).exp();
        let te = reflection(Polarization::TE, tau, u, mirror);
        let tm = reflection(Polarization::TM, tau, u, mirror);
        Self {
            beta,
            beta_t,
            h_te: te.r * eg / round_trip_denominator(te, g),
            h_tm: tm.r * eg / round_trip_denominator(tm, g),
            sum_weighted: 2.0 * g,
            sum_mu: 2.0 * (u * u / g) / denom,
            diff_mu: 2.0 * (gt - tau * tau / gt) / denom,
        }
    }
}

/// `e^{-γ} / (1 - e^{-2γ})`, the perfect-mirror round-trip factor.
pub(crate) fn perfect_h(gamma: f64) -> f64 {
    (-gamma).exp() / -(-2.0 * gamma).exp_m1()
}

/// Nonspecular cross kernel for two modes at the same frequency `u` whose
/// transverse wavevectors have magnitudes `tau1`, `tau2` and relative angle
/// cosine `cos`. This is the routine the integrators call.
pub(crate) fn kernel_from_geometry(tau1: f64, tau2: f64, cos: f64, u: f64, mirror: MirrorModel) -> f64 {
    let c = cos.clamp(-1.0, 1.0);
    let c2 = c * c;
    let s2 = (1.0 - c2).max(0.0);
    match mirror {
        MirrorModel::Perfect => {
            let g1 = tau1.hypot(u);
            let g2 = tau2.hypot(u);
            let u2 = u * u;
            let t = c * u2 + tau1 * tau2;
            let bracket = (g1 * g1) * (g2 * g2) * c2 + s2 * u2 * (g1 * g1 + g2 * g2) + t * t;
            4.0 * (perfect_h(g1) * perfect_h(g2)) * bracket / (g1 * g2)
        }
        MirrorModel::Plasma { kp_l } => {
            let m1 = ModeFactors::plasma(tau1, u, kp_l);
            let m2 = ModeFactors::plasma(tau2, u, kp_l);
            symmetric_sum(&m1, &m2, c, c2, s2)
        }
    }
}

/// Products are grouped so that swapping the two modes reproduces the same
/// floating-point operations.
fn symmetric_sum(m1: &ModeFactors, m2: &ModeFactors, c: f64, c2: f64, s2: f64) -> f64 {
    let te_te = (m1.h_te * m2.h_te) * (m1.sum_weighted * m2.sum_weighted) * c2;
    let mixed = (m1.h_te * m1.sum_weighted) * (m2.h_tm * m2.sum_mu)
        + (m2.h_te * m2.sum_weighted) * (m1.h_tm * m1.sum_mu);
    let d1 = c * m1.sum_mu + (m1.beta * m2.beta_t) * m1.diff_mu;
    let d2 = c * m2.sum_mu + (m2.beta * m1.beta_t) * m2.diff_mu;
    let tm_tm = (m1.h_tm * m2.h_tm) * (d1 * d2);
    (te_te - s2 * mixed) + tm_tm
}

/// Second-order cross kernel `b` coupling two modes through one
/// nonspecular reflection on each mirror.
///
/// The normalisation is such that at coincident modes
/// `b = 4γ² (h_TE² + h_TM²)`. When either wavevector vanishes its direction
/// is undefined; the radial limit `C = 1` is used.
pub fn cross_kernel_b(m1: &ModePoint, m2: &ModePoint, mirror: MirrorModel) -> Result<f64, OpticsError> {
    if m1.u != m2.u {
        return Err(OpticsError::FrequencyMismatch(m1.u, m2.u));
    }
    for m in [m1, m2] {
        if m.gamma() == 0.0 {
            return Err(OpticsError::DegenerateMode { tau: m.tau, u: m.u });
        }
    }
    let cos = if m1.tau == 0.0 || m2.tau == 0.0 {
        1.0
    } else {
        (m1.phi - m2.phi).cos()
    };
    Ok(kernel_from_geometry(m1.tau, m2.tau, cos, m1.u, mirror))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TE: Polarization = Polarization::TE;
    const TM: Polarization = Polarization::TM;

    #[test]
    fn permittivity_examples() {
        assert_eq!(epsilon_imag(3.0, 3.0).unwrap(), 2.0);
        assert_eq!(epsilon_imag(1.5, 3.0).unwrap(), 5.0);
        assert!((epsilon_imag(1e12, 3.0).unwrap() - 1.0).abs() < 1e-20);
        assert_eq!(epsilon_imag(0.0, 3.0), Err(OpticsError::UseLimit));
    }

    #[test]
    fn perfect_amplitudes() {
        for (t, u) in [(0.3, 2.0), (5.0, 0.0), (0.0, 1.0)] {
            assert_eq!(fresnel(TE, t, u, MirrorModel::Perfect).unwrap(), -1.0);
            assert_eq!(fresnel(TM, t, u, MirrorModel::Perfect).unwrap(), 1.0);
        }
    }

    #[test]
    fn plasma_amplitudes_closed_form() {
        let kp = 2.7;
        let m = MirrorModel::Plasma { kp_l: kp };
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        let te = fresnel(TE, kp, kp, m).unwrap();
        let tm = fresnel(TM, kp, kp, m).unwrap();
        assert!((te - (s2 - s3) / (s2 + s3)).abs() < 1e-14);
        assert!((tm - (2.0 * s2 - s3) / (2.0 * s2 + s3)).abs() < 1e-14);
        assert!((te + 0.10102).abs() < 1e-5);
        assert!((tm - 0.240408).abs() < 1e-6);
    }

    #[test]
    fn plasma_amplitudes_match_textbook_form() {
        let kp = 1.3;
        let m = MirrorModel::Plasma { kp_l: kp };
        for (t, u) in [(0.2, 0.7), (3.0, 0.1), (0.01, 4.0)] {
            let g: f64 = f64::hypot(t, u);
            let gt = (g * g + kp * kp).sqrt();
            let eps = epsilon_imag(u, kp).unwrap();
            let te = (g - gt) / (g + gt);
            let tm = (eps * g - gt) / (eps * g + gt);
            assert!((fresnel(TE, t, u, m).unwrap() - te).abs() < 1e-14);
            assert!((fresnel(TM, t, u, m).unwrap() - tm).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_frequency_limits() {
        let kp = 2.0;
        let m = MirrorModel::Plasma { kp_l: kp };
        let t = 0.8;
        let gt = (t * t + kp * kp).sqrt();
        assert!((fresnel(TE, t, 0.0, m).unwrap() - (t - gt) / (t + gt)).abs() < 1e-15);
        assert_eq!(fresnel(TM, t, 0.0, m).unwrap(), 1.0);
        assert!(fresnel(TE, 0.0, 0.0, m).is_err());
    }

    #[test]
    fn large_plasma_frequency_is_perfect() {
        let m = MirrorModel::Plasma { kp_l: 1e9 };
        assert!((fresnel(TE, 0.4, 0.9, m).unwrap() + 1.0).abs() < 1e-8);
        assert!((fresnel(TM, 0.4, 0.9, m).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn roundtrip_examples() {
        let expect = (-1f64).exp() / (1.0 - (-2f64).exp());
        assert!((expect - 0.425459).abs() < 1e-6);
        let tm = roundtrip_h(TM, 0.6, 0.8, MirrorModel::Perfect).unwrap();
        let te = roundtrip_h(TE, 0.6, 0.8, MirrorModel::Perfect).unwrap();
        assert!((tm - expect).abs() < 1e-15);
        assert!((te + expect).abs() < 1e-15);
        let pl = roundtrip_h(TM, 0.6, 0.8, MirrorModel::Plasma { kp_l: 1e8 }).unwrap();
        assert!((pl - expect).abs() < 1e-6 * expect);
        assert!(roundtrip_h(TM, 0.0, 0.0, MirrorModel::Perfect).is_err());
    }

    /// Literal four-term sum over (ε, ε') with the shorthand factors; the
    /// production kernel sums the branches in closed form.
    fn literal_kernel(k1: &KernelInputs, k2: &KernelInputs, c: f64) -> f64 {
        let s2 = 1.0 - c * c;
        let mut total = 0.0;
        for e1 in [1.0, -1.0] {
            for e2 in [1.0, -1.0] {
                let mu1 = if e1 > 0.0 { k1.mu_plus } else { k1.mu_minus };
                let mu2 = if e2 > 0.0 { k2.mu_plus } else { k2.mu_minus };
                let w1 = 1.0 + e1 * k1.beta * k1.beta_t;
                let w2 = 1.0 + e2 * k2.beta * k2.beta_t;
                let term = k1.h_te * k2.h_te * c * c * w1 * w2
                    - k1.h_te * k2.h_tm * s2 * w1
                    - k1.h_tm * k2.h_te * s2 * w2
                    + k1.h_tm * k2.h_tm * (c + e1 * k1.beta * k2.beta_t) * (c + e2 * k2.beta * k1.beta_t);
                total += mu1 * mu2 * term;
            }
        }
        total
    }

    #[test]
    fn closed_branch_sums_match_literal_sum() {
        let kp = 3.1;
        let cases = [(0.4, 1.7, 0.3, 0.2), (2.0, 0.1, 0.9, -0.7), (0.05, 0.5, 2.5, 0.99), (1.0, 1.0, 0.0, 0.0)];
        for (t1, t2, u, c) in cases {
            let k1 = KernelInputs::plasma(t1, u, kp).unwrap();
            let k2 = KernelInputs::plasma(t2, u, kp).unwrap();
            let lit = literal_kernel(&k1, &k2, c);
            let fast = kernel_from_geometry(t1, t2, c, u, MirrorModel::Plasma { kp_l: kp });
            assert!((lit - fast).abs() < 1e-12 * lit.abs().max(1e-3), "{lit} vs {fast}");
        }
    }

    #[test]
    fn coincident_modes_collapse_to_specular_form() {
        for mirror in [MirrorModel::Perfect, MirrorModel::Plasma { kp_l: 0.7 }, MirrorModel::Plasma { kp_l: 40.0 }] {
            let m = ModePoint::new(0.9, 1.3, 0.4);
            let b = cross_kernel_b(&m, &m, mirror).unwrap();
            let g = m.gamma();
            let hte = roundtrip_h(TE, m.tau, m.u, mirror).unwrap();
            let htm = roundtrip_h(TM, m.tau, m.u, mirror).unwrap();
            let expect = 4.0 * g * g * (hte * hte + htm * htm);
            assert!((b - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn perfect_kernel_equals_three_vector_form() {
        // 4 h h' [(K·K')² + γ²γ'²] / (γγ') with K·K' = C ττ' + u².
        let (t1, t2, u, c) = (0.7, 1.9, 0.45, -0.35);
        let g1: f64 = f64::hypot(t1, u);
        let g2: f64 = f64::hypot(t2, u);
        let dot = c * t1 * t2 + u * u;
        let expect = 4.0 * perfect_h(g1) * perfect_h(g2) * (dot * dot + g1 * g1 * g2 * g2) / (g1 * g2);
        let b = kernel_from_geometry(t1, t2, c, u, MirrorModel::Perfect);
        assert!((b - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn kernel_errors() {
        let a = ModePoint::new(0.5, 1.0, 0.0);
        let b = ModePoint::new(0.6, 1.0, 0.0);
        assert!(matches!(cross_kernel_b(&a, &b, MirrorModel::Perfect), Err(OpticsError::FrequencyMismatch(..))));
        let z = ModePoint::new(0.0, 0.0, 0.0);
        assert!(cross_kernel_b(&z, &z, MirrorModel::Perfect).is_err());
    }

    #[test]
    fn shorthand_invariants() {
        let k = KernelInputs::plasma(1.2, 0.3, 2.0).unwrap();
        assert!(k.beta <= 1.0 && k.beta_t < k.beta && k.beta_t >= 0.0);
        assert!(k.kappa_t > k.kappa);
        assert!(k.h_te < 0.0 && k.h_tm > 0.0);
    }

    proptest! {
        #[test]
        fn plasma_amplitudes_bounded(t in 0.0f64..50.0, u in 1e-6f64..50.0, kp in 1e-3f64..1e3) {
            let m = MirrorModel::Plasma { kp_l: kp };
            let te = fresnel(TE, t, u, m).unwrap();
            let tm = fresnel(TM, t, u, m).unwrap();
            prop_assert!(te <= 0.0 && te > -1.0);
            prop_assert!((0.0..1.0).contains(&tm));
        }

        #[test]
        fn roundtrip_bounded(t in 1e-3f64..30.0, u in 0.0f64..30.0, kp in 1e-2f64..1e3) {
            let g = t.hypot(u);
            let bound = perfect_h(g);
            for p in Polarization::BOTH {
                let h = roundtrip_h(p, t, u, MirrorModel::Plasma { kp_l: kp }).unwrap();
                prop_assert!(h.is_finite());
                prop_assert!(h.abs() < bound);
                let r = fresnel(p, t, u, MirrorModel::Plasma { kp_l: kp }).unwrap();
                prop_assert!(h == 0.0 || h.signum() == r.signum());
            }
        }

        #[test]
        fn kernel_swap_symmetry_is_exact(
            t1 in 0.0f64..10.0, t2 in 0.0f64..10.0, u in 1e-3f64..10.0,
            p1 in -3.2f64..3.2, p2 in -3.2f64..3.2, kp in 0.1f64..100.0,
        ) {
            let a = ModePoint::new(u, t1, p1);
            let b = ModePoint::new(u, t2, p2);
            for mirror in [MirrorModel::Perfect, MirrorModel::Plasma { kp_l: kp }] {
                let ab = cross_kernel_b(&a, &b, mirror).unwrap();
                let ba = cross_kernel_b(&b, &a, mirror).unwrap();
                prop_assert_eq!(ab.to_bits(), ba.to_bits());
            }
        }

        #[test]
        fn kernel_even_in_angle(t1 in 0.01f64..10.0, t2 in 0.01f64..10.0, u in 0.0f64..10.0, phi in 0.0f64..3.1) {
            let a = ModePoint::new(u, t1, 0.0);
            let b = ModePoint::new(u, t2, phi);
            let c = ModePoint::new(u, t2, -phi);
            let m = MirrorModel::Plasma { kp_l: 2.0 };
            prop_assert_eq!(cross_kernel_b(&a, &b, m).unwrap(), cross_kernel_b(&a, &c, m).unwrap());
        }

        #[test]
        fn large_plasma_frequency_kernel_is_perfect(
            t1 in 0.05f64..8.0, t2 in 0.05f64..8.0, u in 0.05f64..8.0, c in -1.0f64..1.0,
        ) {
            let pl = kernel_from_geometry(t1, t2, c, u, MirrorModel::Plasma { kp_l: 1e8 });
            let pf = kernel_from_geometry(t1, t2, c, u, MirrorModel::Perfect);
            prop_assert!((pl - pf).abs() <= 1e-5 * pf.abs());
        }
    }
}
