//! Adaptive Gauss–Kronrod quadrature on finite, semi-infinite and nested
//! product domains.
//!
//! Every integral is driven by the same global-error bisection loop (in the
//! spirit of QUADPACK's `qag`): the panel with the largest error estimate is
//! split until the summed estimate meets `max(rel_tol·|I|, abs_floor)` or the
//! evaluation budget runs out. Semi-infinite axes are truncated at the point
//! where the integrand has decayed below `decay_cutoff` times its running
//! peak; all integrands in this crate carry an `e^{-γ}` factor, so the
//! truncation error is of the order of the cutoff itself.
//!
//! Nested integrals split the error target between levels: a level with
//! target `t` hands `t/2` to the level below it and keeps the rest for its
//! own discretisation error. The error estimates of inner integrals are
//! propagated into the outer estimate with the Kronrod weights.
//!
//! Results are bit-for-bit reproducible. The nodes of the outermost level of
//! a nested integral are evaluated on the rayon pool, but they are collected
//! in node order and summed sequentially.

use rayon::prelude::*;
use thiserror::Error;

/// Deepest nesting supported by [`integrate_nested`].
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integrand returned non-finite value {value} at {at:?}")]
    NonFinite { at: Vec<f64>, value: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

/// Accuracy and budget controls shared by all integration routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_floor: f64,
    /// Cap on integrand evaluations per one-dimensional integral.
    pub max_evals: u64,
    /// Relative level below which a decaying tail is dropped.
    pub decay_cutoff: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_floor: 0.0,
            max_evals: 200_000,
            decay_cutoff: 1e-12,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Default accuracy for the three-dimensional plasma kernel integrals.
    pub fn kernel_default() -> Self {
        Self::with_rel_tol(1e-5)
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(QuadError::InvalidSpec(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_floor >= 0.0 && self.abs_floor.is_finite()) {
            return Err(QuadError::InvalidSpec(format!(
                "abs_floor must be non-negative, got {}",
                self.abs_floor
            )));
        }
        if self.max_evals < 100 {
            return Err(QuadError::InvalidSpec(format!(
                "max_evals must be at least 100, got {}",
                self.max_evals
            )));
        }
        if !(self.decay_cutoff > 0.0 && self.decay_cutoff < 1.0) {
            return Err(QuadError::InvalidSpec(format!(
                "decay_cutoff must lie in (0, 1), got {}",
                self.decay_cutoff
            )));
        }
        Ok(())
    }

    /// Spec with the relative target scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_floor: self.abs_floor * factor,
            ..*self
        }
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub evals: u64,
    pub converged: bool,
}

impl QuadResult {
    /// Scale value and error by a constant prefactor.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            err_est: self.err_est * factor.abs(),
            ..self
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.err_est
        } else {
            self.err_est / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Tolerance {
    rel: f64,
    abs: f64,
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        (self.rel * value.abs()).max(self.abs)
    }

    fn halved(&self) -> Self {
        Self {
            rel: 0.5 * self.rel,
            abs: 0.5 * self.abs,
        }
    }
}

/// A point value of an integrand that may itself be an integral.
#[derive(Debug, Clone, Copy)]
struct Sample {
    value: f64,
    err: f64,
    evals: u64,
    converged: bool,
}

impl From<QuadResult> for Sample {
    fn from(r: QuadResult) -> Self {
        Self {
            value: r.value,
            err: r.err_est,
            evals: r.evals,
            converged: r.converged,
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule. Nodes on [0, 1];
// the Gauss nodes are the odd entries.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_289_212_830,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const NODES: usize = 21;

/// Abscissae of the 21-point rule on `[a, b]` in a fixed order:
/// centre first, then the symmetric pairs from the outside in.
fn panel_abscissae(a: f64, b: f64) -> [f64; NODES] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut xs = [c; NODES];
    for j in 0..10 {
        xs[1 + 2 * j] = c - h * XGK[j];
        xs[2 + 2 * j] = c + h * XGK[j];
    }
    xs
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

struct PanelEval {
    panel: Panel,
    evals: u64,
    converged: bool,
}

fn combine_panel(a: f64, b: f64, s: &[Sample; NODES]) -> PanelEval {
    let h = 0.5 * (b - a);
    let fc = s[0].value;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = WGK[10] * fc.abs();
    let mut inner_err = WGK[10] * s[0].err;
    for j in 0..10 {
        let f1 = s[1 + 2 * j].value;
        let f2 = s[2 + 2 * j].value;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        inner_err += WGK[j] * (s[1 + 2 * j].err + s[2 + 2 * j].err);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((s[1 + 2 * j].value - mean).abs() + (s[2 + 2 * j].value - mean).abs());
    }
    let value = res_k * h;
    res_abs *= h.abs();
    res_asc *= h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err += inner_err * h.abs();
    let evals = s.iter().map(|x| x.evals).sum();
    let converged = s.iter().all(|x| x.converged);
    PanelEval {
        panel: Panel { a, b, value, err },
        evals,
        converged,
    }
}

/// Evaluate the rule on each interval. Nodes are computed in parallel when
/// `parallel` is set; assembly order is fixed either way.
fn eval_panels<S, E>(sample: &S, intervals: &[(f64, f64)], parallel: bool) -> Result<Vec<PanelEval>, E>
where
    S: Fn(f64) -> Result<Sample, E> + Sync,
    E: Send,
{
    let xs: Vec<f64> = intervals
        .iter()
        .flat_map(|&(a, b)| panel_abscissae(a, b))
        .collect();
    let samples: Vec<Sample> = if parallel {
        xs.par_iter().map(|&x| sample(x)).collect::<Result<_, _>>()?
    } else {
        xs.iter().map(|&x| sample(x)).collect::<Result<_, _>>()?
    };
    Ok(intervals
        .iter()
        .zip(samples.chunks_exact(NODES))
        .map(|(&(a, b), chunk)| {
            let arr: &[Sample; NODES] = chunk.try_into().expect("chunk of NODES samples");
            combine_panel(a, b, arr)
        })
        .collect())
}

fn split_points(lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi && x.is_finite())
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breaks"));
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut left = lo;
    for p in pts {
        out.push((left, p));
        left = p;
    }
    out.push((left, hi));
    out
}

fn adaptive<S, E>(
    sample: &S,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: Tolerance,
    max_evals: u64,
    parallel: bool,
) -> Result<QuadResult, E>
where
    S: Fn(f64) -> Result<Sample, E> + Sync,
    E: From<QuadError> + Send,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(QuadError::InvalidInterval { lo, hi }.into());
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
            converged: true,
        });
    }
    let initial = split_points(lo, hi, breaks);
    let mut panels = Vec::with_capacity(64);
    let mut evals = 0u64;
    let mut leaves_converged = true;
    let mut rule_evals = 0u64;
    for pe in eval_panels(sample, &initial, parallel)? {
        evals += pe.evals;
        leaves_converged &= pe.converged;
        panels.push(pe.panel);
    }
    rule_evals += (NODES * initial.len()) as u64;

    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= tol.target(value) {
            return Ok(QuadResult {
                value,
                err_est: err,
                evals,
                converged: leaves_converged,
            });
        }
        if rule_evals + 2 * NODES as u64 > max_evals {
            return Ok(QuadResult {
                value,
                err_est: err,
                evals,
                converged: false,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, be), (i, p)| {
                if p.err > be {
                    (i, p.err)
                } else {
                    (bi, be)
                }
            });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval exhausted at machine resolution.
            return Ok(QuadResult {
                value,
                err_est: err,
                evals,
                converged: false,
            });
        }
        let halves = eval_panels(sample, &[(p.a, mid), (mid, p.b)], parallel)?;
        rule_evals += 2 * NODES as u64;
        let mut it = halves.into_iter();
        let left = it.next().expect("left half");
        let right = it.next().expect("right half");
        evals += left.evals + right.evals;
        leaves_converged &= left.converged && right.converged;
        panels[worst] = left.panel;
        panels.push(right.panel);
    }
}

fn plain<F>(f: &F) -> impl Fn(f64) -> Result<Sample, QuadError> + Sync + '_
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    move |x| {
        let value = f(x);
        if !value.is_finite() {
            return Err(QuadError::NonFinite { at: vec![x], value });
        }
        Ok(Sample {
            value,
            err: 0.0,
            evals: 1,
            converged: true,
        })
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate_finite<F>(f: &F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    spec.validate()?;
    adaptive(&plain(f), a, b, &[], spec.tolerance(), spec.max_evals, false)
}

/// Integrate an exponentially decaying `f` over `[0, ∞)`.
///
/// The upper limit is found by probing outward from the origin with a step
/// that grows by a quarter of the current abscissa; the domain ends once two
/// consecutive probes fall below `decay_cutoff` times the largest magnitude
/// seen so far.
pub fn integrate_semi_infinite<F>(f: &F, spec: &QuadSpec) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    spec.validate()?;
    let sample = plain(f);
    semi_infinite(&sample, &[], spec.tolerance(), spec, false)
}

const PROBE_BATCH: usize = 8;
const PROBE_LIMIT: usize = 4096;

fn probe_positions(start: f64, count: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(count);
    let mut x = start;
    for _ in 0..count {
        x += (0.25 * x).max(0.5);
        xs.push(x);
    }
    xs
}

fn truncation_point<S, E>(sample: &S, cutoff: f64, parallel: bool) -> Result<(f64, u64, bool), E>
where
    S: Fn(f64) -> Result<Sample, E> + Sync,
    E: Send,
{
    let mut peak = 0.0f64;
    let mut below = 0usize;
    let mut x_last = 0.0;
    let mut evals = 0u64;
    let mut probed = 0usize;
    while probed < PROBE_LIMIT {
        let xs = probe_positions(x_last, PROBE_BATCH);
        let vals: Vec<Sample> = if parallel {
            xs.par_iter().map(|&x| sample(x)).collect::<Result<_, _>>()?
        } else {
            xs.iter().map(|&x| sample(x)).collect::<Result<_, _>>()?
        };
        for (&x, s) in xs.iter().zip(&vals) {
            evals += s.evals;
            probed += 1;
            let m = s.value.abs();
            peak = peak.max(m);
            if m <= cutoff * peak {
                below += 1;
                if below >= 2 && peak > 0.0 {
                    return Ok((x, evals, true));
                }
            } else {
                below = 0;
            }
            x_last = x;
        }
        if peak == 0.0 && x_last > 1e3 {
            // Identically zero as far as we can tell.
            return Ok((x_last, evals, true));
        }
    }
    Ok((x_last, evals, false))
}

fn semi_infinite<S, E>(
    sample: &S,
    breaks: &[f64],
    tol: Tolerance,
    spec: &QuadSpec,
    parallel: bool,
) -> Result<QuadResult, E>
where
    S: Fn(f64) -> Result<Sample, E> + Sync,
    E: From<QuadError> + Send,
{
    let (upper, probe_evals, found) = truncation_point(sample, spec.decay_cutoff, parallel)?;
    let mut r = adaptive(sample, 0.0, upper, breaks, tol, spec.max_evals, parallel)?;
    r.evals += probe_evals;
    r.converged &= found;
    Ok(r)
}

/// Integrate over `[a, b]` an integrand whose point values are themselves
/// quadrature results (or anything else carrying an error estimate).
///
/// Inner error estimates are folded into the outer one; the caller is
/// responsible for computing the inner values to a tighter tolerance.
/// Nodes are evaluated in parallel and assembled in a fixed order.
pub fn integrate_composite<F, E>(f: &F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, E>
where
    F: Fn(f64) -> Result<QuadResult, E> + Sync,
    E: From<QuadError> + Send,
{
    spec.validate()?;
    let sample = |x: f64| -> Result<Sample, E> {
        let r = f(x)?;
        if !r.value.is_finite() {
            return Err(QuadError::NonFinite { at: vec![x], value: r.value }.into());
        }
        Ok(Sample::from(r))
    };
    adaptive(&sample, a, b, &[], spec.tolerance(), spec.max_evals, true)
}

/// Integration limits of one axis of a nested product domain.
type Bounds<'a> = Box<dyn Fn(&[f64]) -> (f64, f64) + Send + Sync + 'a>;

pub enum Axis<'a> {
    Finite { lo: f64, hi: f64, breaks: Vec<f64> },
    SemiInfinite { breaks: Vec<f64> },
    /// Finite limits computed from the outer coordinates (outermost first).
    Dependent(Bounds<'a>),
}

impl<'a> Axis<'a> {
    pub fn finite(lo: f64, hi: f64) -> Self {
        Axis::Finite {
            lo,
            hi,
            breaks: Vec::new(),
        }
    }

    pub fn semi_infinite() -> Self {
        Axis::SemiInfinite { breaks: Vec::new() }
    }

    pub fn dependent<B>(bounds: B) -> Self
    where
        B: Fn(&[f64]) -> (f64, f64) + Send + Sync + 'a,
    {
        Axis::Dependent(Box::new(bounds))
    }

    /// Add interior points where the integrand along this axis has a kink.
    pub fn with_breaks(mut self, pts: &[f64]) -> Self {
        match &mut self {
            Axis::Finite { breaks, .. } | Axis::SemiInfinite { breaks } => breaks.extend_from_slice(pts),
            Axis::Dependent(_) => {}
        }
        self
    }
}

#[derive(Clone, Copy)]
struct Coords {
    buf: [f64; MAX_DIM],
    len: usize,
}

impl Coords {
    fn push(mut self, x: f64) -> Self {
        self.buf[self.len] = x;
        self.len += 1;
        self
    }

    fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }
}

/// Integrate `f` over a nested product domain, outermost axis first.
///
/// Each point passed to `f` lists the coordinates in axis order. Only the
/// outermost level evaluates its nodes in parallel.
pub fn integrate_nested<F>(f: &F, axes: &[Axis<'_>], spec: &QuadSpec) -> Result<QuadResult, QuadError>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    spec.validate()?;
    if axes.is_empty() || axes.len() > MAX_DIM {
        return Err(QuadError::InvalidDomain(format!(
            "expected 1..={MAX_DIM} axes, got {}",
            axes.len()
        )));
    }
    if let Axis::Dependent(_) = axes[0] {
        return Err(QuadError::InvalidDomain(
            "outermost axis cannot depend on other coordinates".into(),
        ));
    }
    let origin = Coords {
        buf: [0.0; MAX_DIM],
        len: 0,
    };
    nested_level(f, axes, origin, spec.tolerance(), spec, true)
}

fn nested_level<F>(
    f: &F,
    axes: &[Axis<'_>],
    prefix: Coords,
    tol: Tolerance,
    spec: &QuadSpec,
    parallel: bool,
) -> Result<QuadResult, QuadError>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let (axis, rest) = axes.split_first().expect("non-empty axes");
    let inner_tol = tol.halved();
    let sample = |x: f64| -> Result<Sample, QuadError> {
        let here = prefix.push(x);
        if rest.is_empty() {
            let value = f(here.as_slice());
            if !value.is_finite() {
                return Err(QuadError::NonFinite {
                    at: here.as_slice().to_vec(),
                    value,
                });
            }
            Ok(Sample {
                value,
                err: 0.0,
                evals: 1,
                converged: true,
            })
        } else {
            nested_level(f, rest, here, inner_tol, spec, false).map(Sample::from)
        }
    };
    match axis {
        Axis::Finite { lo, hi, breaks } => adaptive(&sample, *lo, *hi, breaks, tol, spec.max_evals, parallel),
        Axis::SemiInfinite { breaks } => semi_infinite(&sample, breaks, tol, spec, parallel),
        Axis::Dependent(bounds) => {
            let (lo, hi) = bounds(prefix.as_slice());
            adaptive(&sample, lo, hi, &[], tol, spec.max_evals, parallel)
        }
    }
}
