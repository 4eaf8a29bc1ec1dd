//! Run configuration: config file merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lateral_casimir::plane_plane::{Corrugation, LengthScales};
use lateral_casimir::{MirrorKind, QuadSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Format, RunArgs};

pub const DEFAULT_L_NM: f64 = 220.0;
pub const DEFAULT_LAMBDA_C_NM: f64 = 1200.0;
pub const DEFAULT_LAMBDA_P_NM: f64 = 137.0;

/// Bad input from the user: reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Keys accepted in a config file; every one is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub lambda_c: Option<f64>,
    pub lambda_p: Option<f64>,
    pub perfect: Option<bool>,
    pub radius: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub b: Option<f64>,
    pub sweep: Option<String>,
    pub offset: Option<f64>,
    pub rel_tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Pp,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// `k_C L` at fixed `L`.
    #[serde(rename = "kc")]
    KcL,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "lambda_c")]
    LambdaC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(usage(format!("sweep must be axis:min:max:points, got {s:?}")));
        }
        let axis = match parts[0] {
            "kc" => SweepAxis::KcL,
            "L" => SweepAxis::L,
            "lambda_c" => SweepAxis::LambdaC,
            other => return Err(usage(format!("unknown sweep axis {other:?}; use kc, L or lambda_c"))),
        };
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad number {t:?} in sweep {s:?}")))
        };
        let min = num(parts[1])?;
        let max = num(parts[2])?;
        let points: usize = parts[3]
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad point count {:?} in sweep {s:?}", parts[3])))?;
        if points == 0 {
            return Err(usage("sweep needs at least one point"));
        }
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(usage(format!("sweep range must satisfy min <= max, got {min}..{max}")));
        }
        let floor_ok = match axis {
            SweepAxis::KcL => min >= 0.0,
            SweepAxis::L | SweepAxis::LambdaC => min > 0.0,
        };
        if !floor_ok {
            return Err(usage(format!("sweep minimum {min} is out of range for this axis")));
        }
        if points == 1 && min != max {
            return Err(usage("a one-point sweep needs min == max"));
        }
        Ok(Self { axis, min, max, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / n)
            .collect()
    }

    pub fn apply(&self, base: &LengthScales, v: f64) -> Result<LengthScales> {
        let s = match self.axis {
            SweepAxis::KcL => base.with_kc_l(v),
            SweepAxis::L => base.with_l(v),
            SweepAxis::LambdaC => LengthScales::new(base.l_nm, v, base.lambda_p_nm),
        };
        s.map_err(|e| usage(e.to_string()))
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub scales: LengthScales,
    pub kind: MirrorKind,
    pub radius_um: Option<f64>,
    pub corrugation: Corrugation,
    pub sweep: Option<Sweep>,
    pub offset_nm: f64,
    pub quad: QuadSpec,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// The physics-affecting part of a run, in a fixed field order.
#[derive(Debug, Serialize)]
pub struct PhysicsEcho {
    pub geometry: Geometry,
    pub l_nm: f64,
    pub lambda_c_nm: f64,
    pub lambda_p_nm: f64,
    pub mirror: &'static str,
    pub radius_um: Option<f64>,
    pub a1_nm: f64,
    pub a2_nm: f64,
    pub b_nm: f64,
    pub sweep: Option<Sweep>,
    pub offset_nm: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_evals: u64,
    pub decay_cutoff: f64,
}

pub fn mirror_name(kind: MirrorKind) -> &'static str {
    match kind {
        MirrorKind::Perfect => "perfect",
        MirrorKind::Plasma => "plasma",
    }
}

pub fn quad_spec(rel_tol: Option<f64>) -> Result<QuadSpec> {
    let spec = match rel_tol {
        Some(t) => QuadSpec::with_rel_tol(t),
        None => QuadSpec::kernel_default(),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

impl RunConfig {
    pub fn resolve(geometry: Geometry, flags: &RunArgs) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let l = flags.l.or(file.l).unwrap_or(DEFAULT_L_NM);
        let lc = flags.lambda_c.or(file.lambda_c).unwrap_or(DEFAULT_LAMBDA_C_NM);
        let lp = flags.lambda_p.or(file.lambda_p).unwrap_or(DEFAULT_LAMBDA_P_NM);
        let scales = LengthScales::new(l, lc, lp).map_err(|e| usage(e.to_string()))?;
        let perfect = flags.perfect || file.perfect.unwrap_or(false);
        let kind = if perfect { MirrorKind::Perfect } else { MirrorKind::Plasma };
        let radius_um = flags.radius.or(file.radius);
        if let Some(r) = radius_um {
            if !(r > 0.0 && r.is_finite()) {
                return Err(usage(format!("radius must be positive, got {r}")));
            }
        }
        if geometry == Geometry::Ps && radius_um.is_none() {
            return Err(usage("plane-sphere runs need --radius"));
        }
        let corrugation = Corrugation::new(
            flags.a1.or(file.a1).unwrap_or(0.0),
            flags.a2.or(file.a2).unwrap_or(0.0),
            flags.b.or(file.b).unwrap_or(0.0),
        )
        .map_err(|e| usage(e.to_string()))?;
        let sweep = match flags.sweep.as_deref().or(file.sweep.as_deref()) {
            Some(s) => Some(Sweep::parse(s)?),
            None => None,
        };
        let offset_nm = flags.offset.or(file.offset).unwrap_or(0.0);
        if !(offset_nm >= 0.0 && offset_nm.is_finite()) {
            return Err(usage(format!("offset must be non-negative, got {offset_nm}")));
        }
        let quad = quad_spec(flags.rel_tol.or(file.rel_tol))?;
        let jobs = flags.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(usage("--jobs must be at least 1"));
        }
        Ok(Self {
            geometry,
            scales,
            kind,
            radius_um,
            corrugation,
            sweep,
            offset_nm,
            quad,
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            out: flags.out.clone().or(file.out),
            jobs,
        })
    }

    pub fn echo(&self) -> PhysicsEcho {
        PhysicsEcho {
            geometry: self.geometry,
            l_nm: self.scales.l_nm,
            lambda_c_nm: self.scales.lambda_c_nm,
            lambda_p_nm: self.scales.lambda_p_nm,
            mirror: mirror_name(self.kind),
            radius_um: self.radius_um,
            a1_nm: self.corrugation.a1_nm,
            a2_nm: self.corrugation.a2_nm,
            b_nm: self.corrugation.b_nm,
            sweep: self.sweep,
            offset_nm: self.offset_nm,
            rel_tol: self.quad.rel_tol,
            abs_floor: self.quad.abs_floor,
            max_evals: self.quad.max_evals,
            decay_cutoff: self.quad.decay_cutoff,
        }
    }

    /// Points of the sweep, or the single configured point.
    pub fn points(&self) -> Result<Vec<LengthScales>> {
        match &self.sweep {
            None => Ok(vec![self.scales]),
            Some(s) => s.values().into_iter().map(|v| s.apply(&self.scales, v)).collect(),
        }
    }
}

/// Short SHA-256 digest of a serialisable value.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let text = serde_json::to_string(value).expect("config serialises");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("kc:0.1:10:5").unwrap();
        assert_eq!(s.axis, SweepAxis::KcL);
        assert_eq!(s.values(), vec![0.1, 2.575, 5.05, 7.525, 10.0]);
        assert_eq!(Sweep::parse("L:220:220:1").unwrap().values(), vec![220.0]);
        for bad in ["kc:1:2", "q:1:2:3", "kc:2:1:3", "kc:1:2:0", "L:0:3:2", "kc:x:2:2", "kc:1:2:1", "kc:-1:2:3"] {
            assert!(Sweep::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "L = 300.0\nlambda_c = 900.0\nperfect = true\nsweep = \"kc:1:2:2\"\n").unwrap();
        let flags = RunArgs {
            config: Some(path),
            l: Some(250.0),
            ..RunArgs::default()
        };
        let c = RunConfig::resolve(Geometry::Pp, &flags).unwrap();
        assert_eq!(c.scales.l_nm, 250.0);
        assert_eq!(c.scales.lambda_c_nm, 900.0);
        assert_eq!(c.kind, MirrorKind::Perfect);
        assert_eq!(c.sweep.unwrap().points, 2);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "lenght = 3\n").unwrap();
        let flags = RunArgs {
            config: Some(path),
            ..RunArgs::default()
        };
        let err = RunConfig::resolve(Geometry::Pp, &flags).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn sphere_needs_radius() {
        assert!(RunConfig::resolve(Geometry::Ps, &RunArgs::default()).is_err());
        let flags = RunArgs {
            radius: Some(100.0),
            ..RunArgs::default()
        };
        assert!(RunConfig::resolve(Geometry::Ps, &flags).is_ok());
    }

    #[test]
    fn hash_tracks_physics_only() {
        let base = RunConfig::resolve(Geometry::Pp, &RunArgs::default()).unwrap();
        let h0 = config_hash(&base.echo());
        let mut other = base.clone();
        other.out = Some("x.csv".into());
        other.jobs = Some(3);
        other.format = Format::Json;
        assert_eq!(config_hash(&other.echo()), h0);
        other.quad.rel_tol *= 0.5;
        assert_ne!(config_hash(&other.echo()), h0);
        let mut moved = base.clone();
        moved.scales.l_nm = 221.0;
        assert_ne!(config_hash(&moved.echo()), h0);
        assert_eq!(h0.len(), 16);
    }
}
