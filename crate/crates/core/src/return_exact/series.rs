//! `L(q, H, rho) = sum_{k>=1} (H + k)^q rho^{k-1}`, the tail sum left over
//! once a return law has become geometric.

use crate::gamma_bounds::scaled_upper_gamma;

const DIRECT_BETA: f64 = 0.01;
const DIRECT_MAX_TERMS: usize = 20_000_000;

// B_{2j} / (2j)! for j = 1, 2, 3
const BERNOULLI_OVER_FACTORIAL: [f64; 3] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30_240.0];

pub(crate) fn geometric_tail(q: f64, h: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return (h + 1.0).powf(q);
    }
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let beta = -rho.ln();
    if beta >= DIRECT_BETA {
        direct(q, h, rho)
    } else {
        euler_maclaurin(q, h, rho, beta)
    }
}

fn direct(q: f64, h: f64, rho: f64) -> f64 {
    let peak = if q > 0.0 { q / -rho.ln() } else { 0.0 };
    let mut sum = 0.0;
    let mut weight = 1.0;
    for k in 1..DIRECT_MAX_TERMS {
        let term = (h + k as f64).powf(q) * weight;
        sum += term;
        if k as f64 > peak && term <= 1e-18 * sum {
            break;
        }
        weight *= rho;
    }
    sum
}

/// Terms `k < k0` summed directly; the rest by Euler–Maclaurin with three
/// Bernoulli corrections, starting where `H + k0 >= 100 (|q| + 1)` so each
/// derivative costs a factor of at most about `1/100`.
fn euler_maclaurin(q: f64, h: f64, rho: f64, beta: f64) -> f64 {
    let need = 100.0 * (q.abs() + 1.0);
    let k0 = ((need - h).ceil()).max(1.0);
    let mut head = 0.0;
    let mut weight = 1.0;
    let mut k = 1.0;
    while k < k0 {
        head += (h + k).powf(q) * weight;
        weight *= rho;
        k += 1.0;
    }
    // weight == rho^{k0 - 1}
    let y0 = h + k0;
    let integral = weight * beta.powf(-q - 1.0) * scaled_upper_gamma(q + 1.0, beta * y0);
    let f_at = |r: usize| -> f64 {
        // r-th derivative of (H + k)^q e^{-beta (k-1)} at k0
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut falling = 1.0;
        for i in 0..=r {
            if i > 0 {
                binom *= (r - i + 1) as f64 / i as f64;
                falling *= q - (i - 1) as f64;
            }
            total += binom * (-beta).powi((r - i) as i32) * falling * y0.powf(q - i as f64);
        }
        weight * total
    };
    let mut tail = integral + 0.5 * f_at(0);
    for (j, b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail -= b * f_at(2 * j + 1);
    }
    head + tail
}
