//! Subcommand bodies. Each returns a [`Table`] plus how the run ended.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{Context, Result};
use lateral_casimir::perfect::{alpha, alpha_perfect_quartic, rho_any, rho_perfect, rho_perfect_asymptote};
use lateral_casimir::plane_plane::{
    gamma_pp_cached, lateral_force_from, plasmon_force_coefficient, Corrugation, LengthScales, ResponseCache,
};
use lateral_casimir::plane_sphere::{gamma_ps, radius_for_pfa_target, PsResult, SphereSetup};
use lateral_casimir::units::{HBAR_C, NM, UM};
use lateral_casimir::validation::{criterion_name, run_criterion, ValidationOptions, CRITERIA};
use lateral_casimir::{MirrorKind, MirrorModel, QuadSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{FigureArgs, FigureName, Format, ValidateArgs};
use crate::config::{config_hash, quad_spec, usage, Geometry, RunConfig};
use crate::output::{Cell, Table};

/// How a run finished, mapped onto the exit code by `main`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some rows did not converge or failed outright.
    Partial,
    Interrupted,
}

impl Status {
    fn from_rows(rows: &[Option<Vec<Cell>>], interrupted: bool) -> Self {
        if interrupted {
            return Status::Interrupted;
        }
        let all_ok = rows.iter().flatten().all(|r| matches!(r.last(), Some(Cell::Flag(true))));
        if all_ok {
            Status::Complete
        } else {
            Status::Partial
        }
    }
}

pub struct Report {
    pub table: Table,
    pub status: Status,
    pub hash: String,
    pub config: Value,
    pub format: Format,
}

pub fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    b.build().context("starting worker pool")
}

/// Evaluates `f` at every point on the pool, keeping input order. Points
/// not started before `stop` is raised come back as `None`.
fn evaluate<T, F>(pool: &rayon::ThreadPool, points: &[T], stop: &AtomicBool, f: F) -> (Vec<Option<Vec<Cell>>>, bool)
where
    T: Sync,
    F: Fn(&T) -> Vec<Cell> + Sync,
{
    let rows: Vec<Option<Vec<Cell>>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| if stop.load(Ordering::SeqCst) { None } else { Some(f(p)) })
            .collect()
    });
    let interrupted = rows.iter().any(Option::is_none);
    (rows, interrupted)
}

fn finish(mut table: Table, rows: Vec<Option<Vec<Cell>>>, interrupted: bool) -> (Table, Status) {
    let status = Status::from_rows(&rows, interrupted);
    for r in rows.into_iter().flatten() {
        table.push(r);
    }
    (table, status)
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn flag(b: bool) -> Cell {
    Cell::Flag(b)
}

/// Row of `width` cells with only the leading abscissae filled, used when a
/// point fails outright.
fn failed_row(lead: &[f64], width: usize) -> Vec<Cell> {
    let mut row: Vec<Cell> = lead.iter().map(|&v| num(v)).collect();
    row.resize(width - 1, Cell::Num(f64::NAN));
    row.push(flag(false));
    row
}

fn warn_failure(what: &str, e: &anyhow::Error) {
    eprintln!("warning: {what}: {e:#}");
}

pub const PP_COLUMNS: [&str; 16] = [
    "kc_l",
    "l_nm",
    "lambda_c_nm",
    "kp_l",
    "rho",
    "rho_err",
    "alpha",
    "g_hat",
    "g0_hat",
    "gamma_pp",
    "gamma_pp_pfa",
    "gamma_pp_err",
    "f_lat",
    "f_lat_pfa",
    "outside_perturbative",
    "converged",
];

const PP_UNITS: &str = "l_nm,lambda_c_nm:nm;gamma_pp,gamma_pp_pfa,gamma_pp_err:pN/um^2/nm^2;f_lat,f_lat_pfa:pN/um^2;other:1";

/// `κ_P L`, reported as infinite for perfect mirrors.
fn kp_column(s: &LengthScales, kind: MirrorKind) -> f64 {
    match kind {
        MirrorKind::Perfect => f64::INFINITY,
        MirrorKind::Plasma => s.kp_l(),
    }
}

fn pp_row(s: &LengthScales, corr: &Corrugation, kind: MirrorKind, spec: &QuadSpec, cache: &ResponseCache) -> Vec<Cell> {
    let lead = [s.kc_l(), s.l_nm, s.lambda_c_nm, kp_column(s, kind)];
    match gamma_pp_cached(s, kind, spec, cache) {
        Ok(c) => {
            let force = lateral_force_from(&c, s, corr);
            let unit = lateral_casimir::units::N_PER_M2_TO_PN_PER_UM2;
            vec![
                num(lead[0]),
                num(lead[1]),
                num(lead[2]),
                num(lead[3]),
                num(c.rho),
                num(c.rho_err),
                num(c.rho * c.kc_l.exp()),
                num(c.g_hat),
                num(c.g0_hat),
                num(c.pn_um2_per_nm2()),
                num(c.pfa_pn_um2_per_nm2()),
                num(c.err_est * lateral_casimir::units::N_PER_M4_TO_PN_UM2_PER_NM2),
                num(force.scattering * unit),
                num(force.pfa * unit),
                flag(force.outside_perturbative_regime),
                flag(c.converged),
            ]
        }
        Err(e) => {
            warn_failure(&format!("pp point kc_l={}", lead[0]), &e.into());
            failed_row(&lead, PP_COLUMNS.len())
        }
    }
}

pub const PS_COLUMNS: [&str; 13] = [
    "l_nm",
    "kc_l",
    "lambda_c_nm",
    "kp_l",
    "radius_um",
    "gamma_ps",
    "gamma_ps_pfa",
    "rho_ps",
    "gamma_ps_err",
    "gamma_ps_offset",
    "radius_much_larger_than_gap",
    "many_periods_in_interaction_zone",
    "converged",
];

const PS_UNITS: &str = "l_nm,lambda_c_nm:nm;radius_um:um;gamma_ps,gamma_ps_pfa,gamma_ps_err,gamma_ps_offset:pN/um^2;other:1";

fn ps_point(radius_um: f64, s: LengthScales, kind: MirrorKind, spec: &QuadSpec, cache: &ResponseCache) -> Result<PsResult> {
    Ok(gamma_ps(&SphereSetup::new(radius_um, s)?, kind, spec, cache)?)
}

fn ps_row(
    radius_um: f64,
    s: &LengthScales,
    offset_nm: f64,
    kind: MirrorKind,
    spec: &QuadSpec,
    cache: &ResponseCache,
) -> Vec<Cell> {
    let lead = [s.l_nm, s.kc_l(), s.lambda_c_nm, kp_column(s, kind), radius_um];
    let computed = (|| -> Result<(PsResult, PsResult)> {
        let here = ps_point(radius_um, *s, kind, spec, cache)?;
        let shifted = if offset_nm == 0.0 {
            here
        } else {
            ps_point(radius_um, s.with_l(s.l_nm - offset_nm)?, kind, spec, cache)?
        };
        Ok((here, shifted))
    })();
    match computed {
        Ok((r, o)) => vec![
            num(lead[0]),
            num(lead[1]),
            num(lead[2]),
            num(lead[3]),
            num(lead[4]),
            num(r.gamma_ps),
            num(r.gamma_ps_pfa),
            num(r.rho_ps),
            num(r.err_est),
            num(o.gamma_ps),
            flag(r.validity.radius_much_larger_than_gap),
            flag(r.validity.many_periods_in_interaction_zone),
            flag(r.converged && o.converged),
        ],
        Err(e) => {
            warn_failure(&format!("ps point L={}", lead[0]), &e);
            failed_row(&lead, PS_COLUMNS.len())
        }
    }
}

pub fn run(cfg: &RunConfig, stop: &AtomicBool) -> Result<Report> {
    let points = cfg.points()?;
    if cfg.geometry == Geometry::Ps {
        if let Some(bad) = points.iter().find(|s| s.l_nm <= cfg.offset_nm) {
            return Err(usage(format!(
                "offset {} nm must be smaller than every L, got L = {} nm",
                cfg.offset_nm, bad.l_nm
            )));
        }
    }
    let pool = build_pool(cfg.jobs)?;
    let cache = ResponseCache::new();
    let (table, status) = match cfg.geometry {
        Geometry::Pp => {
            let (rows, intr) = evaluate(&pool, &points, stop, |s| {
                pp_row(s, &cfg.corrugation, cfg.kind, &cfg.quad, &cache)
            });
            finish(Table::new(PP_COLUMNS.to_vec(), PP_UNITS), rows, intr)
        }
        Geometry::Ps => {
            let radius = cfg.radius_um.expect("resolve enforces a radius for ps");
            let (rows, intr) = evaluate(&pool, &points, stop, |s| {
                ps_row(radius, s, cfg.offset_nm, cfg.kind, &cfg.quad, &cache)
            });
            finish(Table::new(PS_COLUMNS.to_vec(), PS_UNITS), rows, intr)
        }
    };
    let echo = cfg.echo();
    Ok(Report {
        table,
        status,
        hash: config_hash(&echo),
        config: serde_json::to_value(&echo)?,
        format: cfg.format,
    })
}

/// Parameters shared by the figures: the experimental setup.
pub const FIG_L_NM: f64 = 220.0;
pub const FIG_LAMBDA_C_NM: f64 = 1200.0;
pub const FIG_LAMBDA_P_NM: f64 = 137.0;
/// `Γ_PS^PFA` (pN/μm²) that fixes the sphere radius.
pub const FIG_PFA_TARGET: f64 = 585.0;

fn experimental() -> Result<LengthScales> {
    Ok(LengthScales::new(FIG_L_NM, FIG_LAMBDA_C_NM, FIG_LAMBDA_P_NM)?)
}

fn figure_radius(spec: &QuadSpec) -> Result<f64> {
    Ok(radius_for_pfa_target(&experimental()?, MirrorKind::Plasma, FIG_PFA_TARGET, spec)?)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn figure(args: &FigureArgs, stop: &AtomicBool) -> Result<Report> {
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let spec = quad_spec(args.rel_tol)?;
    let pool = build_pool(args.jobs)?;
    let cache = ResponseCache::new();
    let n = args.points;
    let name = match args.name {
        FigureName::Fig2 => "fig2",
        FigureName::Fig3 => "fig3",
        FigureName::Fig4 => "fig4",
        FigureName::Fig5 => "fig5",
        FigureName::Fig6 => "fig6",
        FigureName::Fig7 => "fig7",
    };
    let mut echo = json!({
        "figure": name,
        "points": n,
        "rel_tol": spec.rel_tol,
        "abs_floor": spec.abs_floor,
        "max_evals": spec.max_evals,
        "decay_cutoff": spec.decay_cutoff,
    });
    let (table, status) = match args.name {
        FigureName::Fig2 => {
            let ks = log_grid(0.01, 15.0, n);
            let (rows, intr) = evaluate(&pool, &ks, stop, |&k| match rho_perfect(k, &spec) {
                Ok(r) => vec![num(k), num(r.value), num(r.err_est), num(rho_perfect_asymptote(k)), flag(r.converged)],
                Err(e) => {
                    warn_failure(&format!("fig2 kc_l={k}"), &e.into());
                    failed_row(&[k], 5)
                }
            });
            let t = Table::new(vec!["kc_l", "rho", "rho_err", "rho_asymptote", "converged"], "all:1");
            finish(t, rows, intr)
        }
        FigureName::Fig3 => {
            // Perfect mirrors are tagged with kp_l = inf.
            let kps = [1.0, 2.5, 5.0, 10.0, f64::INFINITY];
            let ks = log_grid(0.05, 10.0, n);
            let pts: Vec<(f64, f64)> = kps.iter().flat_map(|&p| ks.iter().map(move |&k| (p, k))).collect();
            let (rows, intr) = evaluate(&pool, &pts, stop, |&(p, k)| {
                let r = if p.is_finite() {
                    MirrorModel::plasma(p)
                        .map_err(lateral_casimir::Error::from)
                        .and_then(|m| rho_any(k, m, &spec))
                } else {
                    rho_perfect(k, &spec)
                };
                match r {
                    Ok(r) => vec![num(p), num(k), num(r.value), num(r.err_est), flag(r.converged)],
                    Err(e) => {
                        warn_failure(&format!("fig3 kp_l={p} kc_l={k}"), &e.into());
                        failed_row(&[p, k], 5)
                    }
                }
            });
            let t = Table::new(vec!["kp_l", "kc_l", "rho", "rho_err", "converged"], "all:1");
            finish(t, rows, intr)
        }
        FigureName::Fig4 => {
            let l_nm = 1000.0;
            let kp = 2.0 * PI * l_nm / FIG_LAMBDA_P_NM;
            echo["l_nm"] = json!(l_nm);
            echo["lambda_p_nm"] = json!(FIG_LAMBDA_P_NM);
            let mirror = MirrorModel::plasma(kp)?;
            let ks = lin_grid(0.5, 50.0, n);
            let (rows, intr) = evaluate(&pool, &ks, stop, |&k| match alpha(k, mirror, &spec) {
                Ok(a) => vec![
                    num(k),
                    num(kp),
                    num(a.value),
                    num(a.err_est),
                    num(alpha_perfect_quartic(k)),
                    flag(a.converged),
                ],
                Err(e) => {
                    warn_failure(&format!("fig4 kc_l={k}"), &e.into());
                    failed_row(&[k, kp], 6)
                }
            });
            let t = Table::new(
                vec!["kc_l", "kp_l", "alpha", "alpha_err", "alpha_perfect_quartic", "converged"],
                "all:1",
            );
            finish(t, rows, intr)
        }
        FigureName::Fig5 => {
            let radius = figure_radius(&spec)?;
            echo["radius_um"] = json!(radius);
            echo["lambda_c_nm"] = json!(FIG_LAMBDA_C_NM);
            echo["lambda_p_nm"] = json!(FIG_LAMBDA_P_NM);
            let base = experimental()?;
            let c = plasmon_force_coefficient(&spec)?.value;
            let kc = 2.0 * PI / (FIG_LAMBDA_C_NM * NM);
            let kp = 2.0 * PI / (FIG_LAMBDA_P_NM * NM);
            let sphere = PI * kc * radius * UM;
            let ls = lin_grid(150.0, 1000.0, n);
            let (rows, intr) = evaluate(&pool, &ls, stop, |&l| {
                let r = (|| -> Result<(PsResult, PsResult)> {
                    let s = base.with_l(l)?;
                    Ok((
                        ps_point(radius, s, MirrorKind::Plasma, &spec, &cache)?,
                        ps_point(radius, s, MirrorKind::Perfect, &spec, &cache)?,
                    ))
                })();
                match r {
                    Ok((p, q)) => {
                        let plasmon = sphere * c * HBAR_C * kp / (l * NM).powi(3);
                        vec![
                            num(l),
                            num(p.gamma_ps),
                            num(p.gamma_ps_pfa),
                            num(q.gamma_ps_pfa),
                            num(plasmon),
                            flag(p.converged && q.converged),
                        ]
                    }
                    Err(e) => {
                        warn_failure(&format!("fig5 L={l}"), &e);
                        failed_row(&[l], 6)
                    }
                }
            });
            let t = Table::new(
                vec![
                    "l_nm",
                    "gamma_ps",
                    "gamma_ps_pfa",
                    "gamma_ps_pfa_perfect",
                    "gamma_ps_pfa_plasmon",
                    "converged",
                ],
                "l_nm:nm;others:pN/um^2",
            );
            finish(t, rows, intr)
        }
        FigureName::Fig6 => {
            let radius = figure_radius(&spec)?;
            echo["radius_um"] = json!(radius);
            echo["l_nm"] = json!(FIG_L_NM);
            echo["lambda_p_nm"] = json!(FIG_LAMBDA_P_NM);
            let base = experimental()?;
            let marker = base.kc_l();
            let mut ks = lin_grid(0.1, 6.0, n);
            ks.push(marker);
            ks.sort_by(f64::total_cmp);
            ks.dedup();
            let (rows, intr) = evaluate(&pool, &ks, stop, |&k| {
                let r = base
                    .with_kc_l(k)
                    .map_err(anyhow::Error::from)
                    .and_then(|s| ps_point(radius, s, MirrorKind::Plasma, &spec, &cache));
                match r {
                    Ok(p) => vec![
                        num(k),
                        num(p.gamma_ps),
                        num(p.gamma_ps_pfa),
                        num(p.rho_ps),
                        flag(k == marker),
                        flag(p.converged),
                    ],
                    Err(e) => {
                        warn_failure(&format!("fig6 kc_l={k}"), &e);
                        let mut row = failed_row(&[k], 6);
                        row[4] = flag(k == marker);
                        row
                    }
                }
            });
            let t = Table::new(
                vec!["kc_l", "gamma_ps", "gamma_ps_pfa", "rho_ps", "experimental", "converged"],
                "gamma_ps,gamma_ps_pfa:pN/um^2;others:1",
            );
            finish(t, rows, intr)
        }
        FigureName::Fig7 => {
            let radius = figure_radius(&spec)?;
            let offset = 20.0;
            echo["radius_um"] = json!(radius);
            echo["offset_nm"] = json!(offset);
            let base = experimental()?;
            let ls = lin_grid(220.0, 260.0, n);
            let (rows, intr) = evaluate(&pool, &ls, stop, |&l| match base.with_l(l) {
                Ok(s) => {
                    let row = ps_row(radius, &s, offset, MirrorKind::Plasma, &spec, &cache);
                    // l_nm, gamma_ps, gamma_ps_pfa, gamma_ps_offset, converged
                    vec![row[0], row[5], row[6], row[9], row[12]]
                }
                Err(e) => {
                    warn_failure(&format!("fig7 L={l}"), &e.into());
                    failed_row(&[l], 5)
                }
            });
            let t = Table::new(
                vec!["l_nm", "gamma_ps", "gamma_ps_pfa", "gamma_ps_offset", "converged"],
                "l_nm:nm;others:pN/um^2",
            );
            finish(t, rows, intr)
        }
    };
    Ok(Report {
        hash: config_hash(&echo),
        config: echo,
        table,
        status,
        format: args.format.unwrap_or(Format::Csv),
    })
}

/// Runs the requested criteria, printing one line each. Returns whether all
/// passed, or `None` when interrupted.
pub fn validate(args: &ValidateArgs, stop: &AtomicBool) -> Result<Option<bool>> {
    let ids: Vec<u8> = if args.criteria.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        args.criteria.clone()
    };
    for &id in ids.iter().chain(args.corrupt.as_ref()) {
        if !(1..=CRITERIA).contains(&id) {
            return Err(usage(format!("criteria are numbered 1 to {CRITERIA}, got {id}")));
        }
    }
    let opts = ValidationOptions {
        spec: quad_spec(args.rel_tol)?,
        corrupt: args.corrupt,
    };
    let pool = build_pool(args.jobs)?;
    let mut all = true;
    for id in ids {
        if stop.load(Ordering::SeqCst) {
            return Ok(None);
        }
        match pool.install(|| run_criterion(id, &opts)) {
            Ok(r) => {
                all &= r.pass;
                println!("{r}");
            }
            Err(e) => {
                all = false;
                println!("[FAIL] {id:02} {}: error: {e}", criterion_name(id));
            }
        }
    }
    Ok(Some(all))
}
