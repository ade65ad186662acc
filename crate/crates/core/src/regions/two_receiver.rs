//! Closed forms for the three two-receiver schemes with equal message rates.
//!
//! All three take the weak/strong erasure probabilities, the packet width,
//! the library size and `M`, where the symmetric scheme gives `M` to each
//! receiver and the asymmetric schemes give `2M` to receiver 1 and nothing to
//! receiver 2. The schemes are only defined while `M / R <= D / 2` (the
//! uncached sub-message has nonnegative rate); outside that range the
//! functions return [`Error::OutOfRegime`].

use crate::error::{Error, Result};

const REGIME_TOL: f64 = 1e-12;

fn check_inputs(delta1: f64, delta2: f64, packet_bits: u32, library_size: usize, m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta1) || !(0.0..=delta1).contains(&delta2) {
        return Err(Error::Domain(format!(
            "need 0 <= delta2 <= delta1 < 1, got ({delta1}, {delta2})"
        )));
    }
    if packet_bits == 0 || library_size == 0 {
        return Err(Error::Domain("F and D must be positive".into()));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::Domain(format!("M must be nonnegative, got {m}")));
    }
    Ok(())
}

fn regime(rate: f64, m: f64, library_size: usize) -> Result<f64> {
    let floor = 2.0 * m / library_size as f64;
    if rate < floor - REGIME_TOL {
        return Err(Error::OutOfRegime(format!(
            "best rate {rate} gives M/R above D/2 (needs R >= {floor})"
        )));
    }
    Ok(rate)
}

/// Symmetric caches `M_1 = M_2 = M`: XOR of the two cached halves plus two
/// private uncached parts. Largest `R` with
/// `(R - M/D)/(F(1-d1)) + (R - 2M/D)/(F(1-d2)) <= 1`.
pub fn two_rx_symmetric_rate(
    delta1: f64,
    delta2: f64,
    packet_bits: u32,
    library_size: usize,
    m: f64,
) -> Result<f64> {
    check_inputs(delta1, delta2, packet_bits, library_size, m)?;
    let f = f64::from(packet_bits);
    let (a1, a2) = (f * (1.0 - delta1), f * (1.0 - delta2));
    let per = m / library_size as f64;
    let rate = (1.0 + per / a1 + 2.0 * per / a2) / (1.0 / a1 + 1.0 / a2);
    regime(rate, m, library_size)
}

/// Asymmetric caches `(2M, 0)` with separate cache and channel coding:
/// largest `R` with `(R - 2M/D)/(F(1-d1)) + R/(F(1-d2)) <= 1`.
pub fn two_rx_separate_asym_rate(
    delta1: f64,
    delta2: f64,
    packet_bits: u32,
    library_size: usize,
    m: f64,
) -> Result<f64> {
    check_inputs(delta1, delta2, packet_bits, library_size, m)?;
    let f = f64::from(packet_bits);
    let (a1, a2) = (f * (1.0 - delta1), f * (1.0 - delta2));
    let cached = 2.0 * m / library_size as f64;
    let rate = (a1 + cached) * a2 / (a1 + a2);
    regime(rate, m, library_size)
}

/// Asymmetric caches `(2M, 0)` with joint coding: phase 1 (fraction `beta1`)
/// carries receiver 1's uncached part together with receiver 2's cached part,
/// phase 2 carries receiver 2's uncached part. Maximizes `R` over `beta1`
/// subject to
///
/// ```text
/// R - 2M/D <= F(1-d1) beta1
/// R        <= F(1-d2) beta1
/// R - 2M/D <= F(1-d2) (1 - beta1)
/// ```
///
/// Returns `(R, beta1)`; when several `beta1` are optimal the smallest wins.
pub fn two_rx_joint_rate(
    delta1: f64,
    delta2: f64,
    packet_bits: u32,
    library_size: usize,
    m: f64,
) -> Result<(f64, f64)> {
    check_inputs(delta1, delta2, packet_bits, library_size, m)?;
    let f = f64::from(packet_bits);
    let (a1, a2) = (f * (1.0 - delta1), f * (1.0 - delta2));
    let cached = 2.0 * m / library_size as f64;
    // lines (intercept, slope) in beta1
    let lines = [(cached, a1), (0.0, a2), (cached + a2, -a2)];
    let value = |b: f64| {
        lines
            .iter()
            .map(|(c, s)| c + s * b)
            .fold(f64::INFINITY, f64::min)
    };
    let mut candidates = vec![0.0, 1.0];
    for (i, &(c1, s1)) in lines.iter().enumerate() {
        for &(c2, s2) in &lines[i + 1..] {
            if (s1 - s2).abs() > 0.0 {
                let b = (c2 - c1) / (s1 - s2);
                if (0.0..=1.0).contains(&b) {
                    candidates.push(b);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    let best = candidates.iter().map(|&b| value(b)).fold(f64::NEG_INFINITY, f64::max);
    let beta1 = candidates
        .into_iter()
        .find(|&b| value(b) >= best - 1e-15)
        .expect("nonempty candidate set");
    Ok((regime(best, m, library_size)?, beta1))
}
