//! One-dimensional maximum search and least-squares line fits.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
    pub evals: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`. The reported abscissa
/// is the vertex of the parabola through the best sample and its two
/// neighbours when that vertex falls between them.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Extremum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        seen.push((x, v));
        Ok(v)
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    seen.sort_by(|p, q| p.0.total_cmp(&q.0));
    let best = (0..seen.len())
        .max_by(|&i, &j| seen[i].1.total_cmp(&seen[j].1))
        .expect("at least two samples");
    let (mut x, mut value) = seen[best];
    if best > 0 && best + 1 < seen.len() {
        if let Some((xv, fv)) = parabola_vertex(seen[best - 1], seen[best], seen[best + 1]) {
            if xv > seen[best - 1].0 && xv < seen[best + 1].0 {
                x = xv;
                value = fv;
            }
        }
    }
    Ok(Extremum {
        x,
        value,
        evals: seen.len(),
    })
}

/// Vertex of the parabola through three points with distinct abscissae.
fn parabola_vertex(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> Option<(f64, f64)> {
    let (x0, y0) = p;
    let (x1, y1) = q;
    let (x2, y2) = r;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if !(curv < 0.0) {
        return None;
    }
    // y = y1 + d·(x - x1) + curv·(x - x1)² with d the slope at x1.
    let d = d01 + curv * (x1 - x0);
    let xv = x1 - d / (2.0 * curv);
    let yv = y1 - d * d / (4.0 * curv);
    Some((xv, yv))
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(LineFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
