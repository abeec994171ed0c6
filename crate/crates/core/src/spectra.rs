//! Pressure, the `L^q` and Rényi spectra, `gamma_plus`, the critical
//! exponent `q*`, and the assembled return (`R`) and hitting (`W`) spectra.

use rayon::prelude::*;

use crate::cycle;
use crate::error::{Error, Result};
use crate::model::PotentialModel;
use crate::perron;

/// Default sampling of spectrum curves: 401 points on `[-4, 4]`.
pub const DEFAULT_GRID: (f64, f64, usize) = (-4.0, 4.0, 401);

const Q_STAR_TOLERANCE: f64 = 1e-10;
const CONTINUITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    M,
    H,
    R,
    W,
}

pub const BRANCH_PRESSURE: &str = "P((1-q)phi)";
pub const BRANCH_GAMMA: &str = "gamma_plus";
pub const BRANCH_DOUBLE: &str = "P(2phi)";
pub const BRANCH_RENYI: &str = "-P((1+q)phi)/q";
pub const BRANCH_ENTROPY: &str = "h";

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub value: f64,
    pub branch: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    /// Values of `q` where the analytic branch changes.
    pub breakpoints: Vec<f64>,
    /// For `W`: whether the curve coincides with `R` everywhere.
    pub equals_r: bool,
}

impl SpectrumCurve {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub q_star: f64,
    pub is_max_entropy_degenerate: bool,
}

/// `n` evenly spaced points from `lo` to `hi`, endpoints included.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| (lo * (d - i as f64) + hi * i as f64) / d)
        .collect()
}

pub fn default_grid() -> Vec<f64> {
    grid(DEFAULT_GRID.0, DEFAULT_GRID.1, DEFAULT_GRID.2)
}

/// `P(t phi) = log` of the Perron eigenvalue of the `exp(t phi)` transfer matrix.
pub fn pressure(model: &PotentialModel, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("pressure needs finite t, got {t}")));
    }
    let scaled: Vec<f64> = model.log_g().iter().map(|v| t * v).collect();
    let shift = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|v| (v - shift).exp()).collect();
    let (lambda, _) = perron::right_perron(model.graph(), &weights)?;
    Ok(shift + lambda.ln())
}

pub fn m_spectrum(model: &PotentialModel, q: f64) -> Result<f64> {
    pressure(model, 1.0 - q)
}

/// `H(q) = -P((1+q) phi) / q`, with `H(0) = h`.
pub fn renyi(model: &PotentialModel, q: f64) -> Result<f64> {
    if q == 0.0 {
        return Ok(entropy(model));
    }
    Ok(-pressure(model, 1.0 + q)? / q)
}

pub fn entropy(model: &PotentialModel) -> f64 {
    -model.phi_mean()
}

/// `sup_eta ∫ phi d eta`, the maximum cycle mean of `phi`.
pub fn gamma_plus(model: &PotentialModel) -> f64 {
    cycle::max_cycle_mean(model.graph(), model.log_g())
}

/// `inf_eta ∫ phi d eta`, the minimum cycle mean of `phi`.
pub fn min_cycle_mean(model: &PotentialModel) -> f64 {
    cycle::min_cycle_mean(model.graph(), model.log_g())
}

/// `(n, (1/n) max_{|w|=n} log mu(w))` for `n = 1..=n_max`, by max-plus
/// products rather than enumeration.
pub fn gamma_plus_empirical(model: &PotentialModel, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if n_max == 0 || n_max > 10_000 {
        return Err(Error::Domain(format!(
            "n_max must lie in 1..=10000, got {n_max}"
        )));
    }
    let m = model.memory();
    let k = model.alphabet_size();
    let graph = model.graph();
    let mut out = Vec::with_capacity(n_max);
    // Words shorter than the memory: maximize the exact measure directly.
    for n in 1..=n_max.min(m.saturating_sub(1)) {
        let space = crate::words::WordSpace::new(k, n, u128::MAX)?;
        let best = space
            .iter()
            .map(|w| model.cylinder_measure(&w))
            .fold(f64::NEG_INFINITY, f64::max);
        out.push((n, best / n as f64));
    }
    if n_max < m {
        return Ok(out);
    }
    // best[s]: max log-measure over length-n words whose first m symbols are s
    let mut best = model.log_stationary().to_vec();
    let mut next = vec![f64::NEG_INFINITY; graph.states];
    for n in m..=n_max {
        if n > m {
            next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
            for (x, &lg) in model.log_g().iter().enumerate() {
                let cand = best[graph.future(x)] + lg;
                let slot = &mut next[graph.past(x)];
                if cand > *slot {
                    *slot = cand;
                }
            }
            std::mem::swap(&mut best, &mut next);
        }
        let top = best.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.push((n, top / n as f64));
    }
    Ok(out)
}

/// Root of `M(q) = gamma_plus` on `[-1, 0]`.
pub fn q_star(model: &PotentialModel) -> Result<CriticalPoint> {
    if model.is_max_entropy() {
        return Ok(CriticalPoint {
            q_star: -1.0,
            is_max_entropy_degenerate: true,
        });
    }
    let gamma = gamma_plus(model);
    let f = |q: f64| m_spectrum(model, q).map(|v| v - gamma);
    let (mut lo, mut hi) = (-1.0, 0.0);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo > 1e-12 || f_hi < -1e-12 {
        return Err(Error::NonConvergence(format!(
            "q* bracket violated: M(-1) - gamma_plus = {f_lo}, M(0) - gamma_plus = {f_hi}"
        )));
    }
    while hi - lo > Q_STAR_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalPoint {
        q_star: 0.5 * (lo + hi),
        is_max_entropy_degenerate: false,
    })
}

/// Precomputed scalars shared by the curve builders.
#[derive(Clone, Copy, Debug)]
pub struct SpectrumSummary {
    pub critical: CriticalPoint,
    pub gamma_plus: f64,
    pub entropy: f64,
    pub pressure_double: f64,
}

pub fn summary(model: &PotentialModel) -> Result<SpectrumSummary> {
    Ok(SpectrumSummary {
        critical: q_star(model)?,
        gamma_plus: gamma_plus(model),
        entropy: entropy(model),
        pressure_double: pressure(model, 2.0)?,
    })
}

fn evaluate<F>(grid: &[f64], f: F) -> Result<Vec<CurvePoint>>
where
    F: Fn(f64) -> Result<CurvePoint> + Sync + Send,
{
    grid.par_iter().map(|&q| f(q)).collect()
}

pub fn m_curve(model: &PotentialModel, grid: &[f64]) -> Result<SpectrumCurve> {
    Ok(SpectrumCurve {
        kind: CurveKind::M,
        points: evaluate(grid, |q| {
            Ok(CurvePoint {
                q,
                value: m_spectrum(model, q)?,
                branch: BRANCH_PRESSURE,
            })
        })?,
        breakpoints: Vec::new(),
        equals_r: false,
    })
}

pub fn h_curve(model: &PotentialModel, grid: &[f64]) -> Result<SpectrumCurve> {
    Ok(SpectrumCurve {
        kind: CurveKind::H,
        points: evaluate(grid, |q| {
            Ok(CurvePoint {
                q,
                value: renyi(model, q)?,
                branch: if q == 0.0 { BRANCH_ENTROPY } else { BRANCH_RENYI },
            })
        })?,
        breakpoints: Vec::new(),
        equals_r: false,
    })
}

/// `R(q) = P((1-q) phi)` for `q >= q*` and `gamma_plus` below.
pub fn r_spectrum(model: &PotentialModel, grid: &[f64]) -> Result<SpectrumCurve> {
    let s = summary(model)?;
    r_spectrum_with(model, &s, grid)
}

pub fn r_spectrum_with(
    model: &PotentialModel,
    s: &SpectrumSummary,
    grid: &[f64],
) -> Result<SpectrumCurve> {
    let q_star = s.critical.q_star;
    let jump = (m_spectrum(model, q_star)? - s.gamma_plus).abs();
    if jump > CONTINUITY_TOLERANCE {
        return Err(Error::NonConvergence(format!(
            "R is discontinuous at q* = {q_star}: jump {jump:e}"
        )));
    }
    let points = evaluate(grid, |q| {
        Ok(if q >= q_star {
            CurvePoint {
                q,
                value: m_spectrum(model, q)?,
                branch: BRANCH_PRESSURE,
            }
        } else {
            CurvePoint {
                q,
                value: s.gamma_plus,
                branch: BRANCH_GAMMA,
            }
        })
    })?;
    Ok(SpectrumCurve {
        kind: CurveKind::R,
        points,
        breakpoints: vec![q_star],
        equals_r: true,
    })
}

/// `W(q) = P((1-q) phi)` for `q >= -1` and `P(2 phi)` below.
pub fn w_spectrum(model: &PotentialModel, grid: &[f64]) -> Result<SpectrumCurve> {
    let s = summary(model)?;
    w_spectrum_with(model, &s, grid)
}

pub fn w_spectrum_with(
    model: &PotentialModel,
    s: &SpectrumSummary,
    grid: &[f64],
) -> Result<SpectrumCurve> {
    let points = evaluate(grid, |q| {
        Ok(if q >= -1.0 {
            CurvePoint {
                q,
                value: m_spectrum(model, q)?,
                branch: BRANCH_PRESSURE,
            }
        } else {
            CurvePoint {
                q,
                value: s.pressure_double,
                branch: BRANCH_DOUBLE,
            }
        })
    })?;
    Ok(SpectrumCurve {
        kind: CurveKind::W,
        points,
        breakpoints: vec![-1.0],
        equals_r: s.critical.is_max_entropy_degenerate,
    })
}

/// One row of the combined spectrum table.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub q: f64,
    pub m: f64,
    pub h: f64,
    pub r: f64,
    pub w: f64,
    pub branch: String,
}

pub fn spectrum_table(model: &PotentialModel, grid: &[f64]) -> Result<(SpectrumSummary, Vec<SpectrumRow>)> {
    let s = summary(model)?;
    let m = m_curve(model, grid)?;
    let h = h_curve(model, grid)?;
    let r = r_spectrum_with(model, &s, grid)?;
    let w = w_spectrum_with(model, &s, grid)?;
    let rows = (0..grid.len())
        .map(|i| {
            let (rb, wb) = (r.points[i].branch, w.points[i].branch);
            SpectrumRow {
                q: grid[i],
                m: m.points[i].value,
                h: h.points[i].value,
                r: r.points[i].value,
                w: w.points[i].value,
                branch: if rb == wb {
                    rb.to_string()
                } else {
                    format!("R={rb};W={wb}")
                },
            }
        })
        .collect();
    Ok((s, rows))
}
