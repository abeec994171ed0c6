//! Large-deviation rate functions of `(1/n) log R_n`.
//!
//! `I` is the Legendre conjugate of the return spectrum `R`, restricted to
//! the slopes `R'(q)` with `q > q*`. `J` is the unconstrained conjugate of
//! the `L^q` spectrum `M`. Both are evaluated by inverting the derivative
//! `-∫phi dmu_{(1-q)phi}` with bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PotentialModel;
use crate::return_exact::{exact_lower_tail, exact_tail};
use crate::spectra::{self, CriticalPoint};

const Q_TOLERANCE: f64 = 1e-10;
/// Largest `|q|` the bracket search will try before treating the slope as
/// unreachable.
const Q_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RateKind {
    I,
    J,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateValue {
    Finite { value: f64, q_hat: f64 },
    Infinite,
    /// Below the lower end of the slope interval of `R`, where no limit
    /// statement is available.
    OutsideScope,
}

impl RateValue {
    pub fn value(&self) -> f64 {
        match *self {
            RateValue::Finite { value, .. } => value,
            RateValue::Infinite => f64::INFINITY,
            RateValue::OutsideScope => f64::NAN,
        }
    }

    pub fn q_hat(&self) -> Option<f64> {
        match *self {
            RateValue::Finite { q_hat, .. } => Some(q_hat),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RateValue::Finite { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub u: f64,
    pub value: RateValue,
}

/// A rate function sampled on a grid of `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFunction {
    pub kind: RateKind,
    /// Open interval on which the function is finite (for `I`, its lower
    /// end is attained).
    pub u_lo: f64,
    pub u_hi: f64,
    pub entropy: f64,
    pub points: Vec<RatePoint>,
}

impl RateFunction {
    pub fn new(model: &PotentialModel, kind: RateKind, grid: &[f64]) -> Result<Self> {
        let d = Domain::of(model)?;
        let (u_lo, u_hi) = match kind {
            RateKind::I => (d.u_lo_i, d.u_hi),
            RateKind::J => (d.u_lo_j, d.u_hi),
        };
        let points = grid
            .par_iter()
            .map(|&u| {
                let value = match kind {
                    RateKind::I => match d.rate_i(model, u) {
                        Err(Error::Domain(_)) if u < d.u_lo_i => Ok(RateValue::OutsideScope),
                        other => other,
                    },
                    RateKind::J => d.rate_j(model, u),
                }?;
                Ok(RatePoint { u, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateFunction {
            kind,
            u_lo,
            u_hi,
            entropy: d.entropy,
            points,
        })
    }

    pub fn in_domain(&self, u: f64) -> bool {
        match self.kind {
            RateKind::I => u >= self.u_lo && u < self.u_hi,
            RateKind::J => u > self.u_lo && u < self.u_hi,
        }
    }
}

/// Scalars fixing the domains of `I` and `J`.
#[derive(Clone, Copy, Debug)]
struct Domain {
    critical: CriticalPoint,
    entropy: f64,
    u_lo_i: f64,
    u_lo_j: f64,
    u_hi: f64,
}

impl Domain {
    fn of(model: &PotentialModel) -> Result<Self> {
        let critical = spectra::q_star(model)?;
        if critical.is_max_entropy_degenerate {
            return Err(Error::Domain(
                "rate functions need a non-degenerate model; the measure of maximal entropy has a constant slope".into(),
            ));
        }
        let gamma_plus = spectra::gamma_plus(model);
        Ok(Domain {
            critical,
            entropy: spectra::entropy(model),
            u_lo_i: slope(model, critical.q_star)?,
            u_lo_j: -gamma_plus,
            u_hi: -spectra::min_cycle_mean(model),
        })
    }

    fn rate_i(&self, model: &PotentialModel, u: f64) -> Result<RateValue> {
        if !u.is_finite() {
            return Err(Error::Domain(format!("u must be finite, got {u}")));
        }
        if u >= self.u_hi {
            return Ok(RateValue::Infinite);
        }
        if u < self.u_lo_i {
            return Err(Error::Domain(format!(
                "u = {u} lies below the slope interval of R, which starts at {}",
                self.u_lo_i
            )));
        }
        if u == self.entropy {
            return Ok(RateValue::Finite {
                value: 0.0,
                q_hat: 0.0,
            });
        }
        let q_star = self.critical.q_star;
        let q = invert_slope(model, u, q_star, false)?;
        let q = q.max(q_star);
        Ok(RateValue::Finite {
            value: u * q - spectra::m_spectrum(model, q)?,
            q_hat: q,
        })
    }

    fn rate_j(&self, model: &PotentialModel, u: f64) -> Result<RateValue> {
        if !u.is_finite() {
            return Err(Error::Domain(format!("u must be finite, got {u}")));
        }
        if u >= self.u_hi || u <= self.u_lo_j {
            return Ok(RateValue::Infinite);
        }
        if u == self.entropy {
            return Ok(RateValue::Finite {
                value: 0.0,
                q_hat: 0.0,
            });
        }
        let q = invert_slope(model, u, f64::NEG_INFINITY, true)?;
        Ok(RateValue::Finite {
            value: u * q - spectra::m_spectrum(model, q)?,
            q_hat: q,
        })
    }
}

/// `M'(q) = -∫phi dmu_{(1-q)phi}`, for any real `q`.
fn slope(model: &PotentialModel, q: f64) -> Result<f64> {
    Ok(-model.tilted_phi_mean(1.0 - q)?)
}

/// Solves `M'(q) = u` for `q >= floor` by bisection. `M'` is increasing.
/// With `unbounded_below` the bracket also expands towards `-inf`.
fn invert_slope(model: &PotentialModel, u: f64, floor: f64, unbounded_below: bool) -> Result<f64> {
    let (mut lo, mut hi) = if unbounded_below {
        (-1.0, 1.0)
    } else {
        (floor, floor.max(0.0) + 1.0)
    };
    while slope(model, hi)? < u {
        lo = hi;
        hi = 2.0 * hi + 1.0;
        if hi > Q_LIMIT {
            return Err(Error::NonConvergence(format!(
                "slope {u} not reached for q up to {Q_LIMIT}"
            )));
        }
    }
    if unbounded_below {
        while slope(model, lo)? > u {
            hi = lo;
            lo = 2.0 * lo - 1.0;
            if lo < -Q_LIMIT {
                return Err(Error::NonConvergence(format!(
                    "slope {u} not reached for q down to {}",
                    -Q_LIMIT
                )));
            }
        }
    }
    while hi - lo > Q_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if slope(model, mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `R'(q)` for `q > q*`.
pub fn r_prime(model: &PotentialModel, q: f64) -> Result<f64> {
    let critical = spectra::q_star(model)?;
    if critical.is_max_entropy_degenerate {
        return Err(Error::Domain(
            "R' is constant for the measure of maximal entropy; excluded".into(),
        ));
    }
    if !(q > critical.q_star) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "R' is only the pressure derivative for q > q* = {}, got {q}",
            critical.q_star
        )));
    }
    slope(model, q)
}

/// `I(u)`; `Infinite` at and above `-inf ∫phi`, a domain error below the
/// slope interval of `R`.
pub fn rate_i(model: &PotentialModel, u: f64) -> Result<RateValue> {
    Domain::of(model)?.rate_i(model, u)
}

/// `J(u) = sup_q (u q - M(q))`.
pub fn rate_j(model: &PotentialModel, u: f64) -> Result<RateValue> {
    Domain::of(model)?.rate_j(model, u)
}

/// Endpoints `(u_lo, u_hi)` of the finite region of `I` or `J`.
pub fn domain(model: &PotentialModel, kind: RateKind) -> Result<(f64, f64)> {
    let d = Domain::of(model)?;
    Ok(match kind {
        RateKind::I => (d.u_lo_i, d.u_hi),
        RateKind::J => (d.u_lo_j, d.u_hi),
    })
}

/// `sup_q (u q - R(q))` over a `q` grid, refined by golden-section search
/// around the best grid point. Independent of the slope inversion.
pub fn legendre_sup(model: &PotentialModel, u: f64, q_grid: &[f64]) -> Result<f64> {
    let s = spectra::summary(model)?;
    let r = |q: f64| -> Result<f64> {
        if q >= s.critical.q_star {
            spectra::m_spectrum(model, q)
        } else {
            Ok(s.gamma_plus)
        }
    };
    let values = q_grid
        .iter()
        .map(|&q| Ok(u * q - r(q)?))
        .collect::<Result<Vec<f64>>>()?;
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut a = q_grid[best.saturating_sub(1)];
    let mut b = q_grid[(best + 1).min(q_grid.len() - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let f = |q: f64| -> Result<f64> { Ok(u * q - r(q)?) };
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(values[best].max(fc).max(fd))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// `P((1/n) log R_n > h + u)`.
    Upper,
    /// `P((1/n) log R_n < h - u)`.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdpRow {
    pub n: usize,
    pub u: f64,
    pub tail: Tail,
    /// `-(1/n) log P(...)` from the exact law.
    pub exact_rate: f64,
    /// `I(h + u)` or `I(h - u)`.
    pub rate: f64,
    /// `|exact_rate - rate|`.
    pub gap: f64,
}

/// Exact finite-`n` tail rates against the limiting rate function.
pub fn ldp_compare(
    model: &PotentialModel,
    ns: &[usize],
    u: f64,
    tail: Tail,
    budget: u128,
) -> Result<Vec<LdpRow>> {
    let d = Domain::of(model)?;
    let h = d.entropy;
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("u must be finite and non-negative, got {u}")));
    }
    let target = match tail {
        Tail::Upper => h + u,
        Tail::Lower => {
            if h - u < d.u_lo_i {
                return Err(Error::Domain(format!(
                    "lower-tail deviation u = {u} exceeds h - u_lo = {}",
                    h - d.u_lo_i
                )));
            }
            h - u
        }
    };
    let rate = d.rate_i(model, target)?.value();
    ns.iter()
        .map(|&n| {
            let l = (n as f64 * target).exp();
            let log_p = match tail {
                Tail::Upper => exact_tail(model, n, l, budget)?.log_p,
                Tail::Lower => exact_lower_tail(model, n, l, budget)?.log_p,
            };
            let exact_rate = -log_p / n as f64;
            Ok(LdpRow {
                n,
                u,
                tail,
                exact_rate,
                rate,
                gap: (exact_rate - rate).abs(),
            })
        })
        .collect()
}
