//! Unit conversions. Only the presentation layer touches these.

/// ħc in N·m².
pub const HBAR_C: f64 = 3.16153e-26;

pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;

/// One N/m⁴ of lateral pressure per squared amplitude, expressed in
/// pN/μm² per nm².
pub const N_PER_M4_TO_PN_UM2_PER_NM2: f64 = 1e-18;

/// N/m² and pN/μm² coincide.
pub const N_PER_M2_TO_PN_PER_UM2: f64 = 1.0;
