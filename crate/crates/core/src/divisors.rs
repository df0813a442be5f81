//! Small-divisor sequences controlling the homological equation.
//!
//! For non-negative integer vectors `k` and labels `j` that are non-resonant
//! with `omega`, the divisor moduli `|e^{i<k,omega> +- i omega_j} - 1|` are
//! collected degree by degree:
//!
//! ```text
//!     beta_s  = min over |k| = s+1 of the moduli,
//!     alpha_0 = 1,  alpha_s = min(beta_s, alpha_{s-1}),
//!     T_0     = 1,  T_r = T_{r-1} / alpha_r .
//! ```
//!
//! `alpha_s` bounds from below every divisor that can appear in the solution
//! of the homological equation up to order `s`, and `T_r` tracks their
//! accumulation across orders.  Enumeration is exhaustive over non-negative
//! `k` with both signs, so the cost grows combinatorially with the dimension;
//! `n <= 3` is enforced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation::RotationSpec;

/// Divisors treated as exactly resonant (excluded from the minima).
const EXACT_RESONANCE_EPS: f64 = 1e-13;

const MAX_DOF: usize = 3;

/// The sequences `beta`, `alpha`, `T` plus an optional fitted Diophantine
/// diagnostic `(gamma, tau)` such that `beta_s ~ gamma / (s+1)^tau`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisorTable {
    /// `beta[s-1]` holds `beta_s`, `s = 1..=s_max`.
    pub beta: Vec<f64>,
    /// `alpha[s]` holds `alpha_s`, `s = 0..=s_max`.
    pub alpha: Vec<f64>,
    /// `t[s]` holds `T_s`, `s = 0..=s_max`.
    pub t: Vec<f64>,
    /// Least-squares fit of `log beta_s = log gamma - tau log(s+1)`;
    /// diagnostic only, never used to claim rigor.
    pub diophantine_fit: Option<(f64, f64)>,
}

impl DivisorTable {
    pub fn s_max(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_at(&self, s: usize) -> f64 {
        self.beta[s - 1]
    }

    pub fn alpha_at(&self, s: usize) -> f64 {
        self.alpha[s]
    }

    pub fn t_at(&self, s: usize) -> f64 {
        self.t[s]
    }
}

/// Compute the divisor table for orders `1..=s_max` by exhaustive
/// enumeration.
pub fn divisor_sequences(rotation: &RotationSpec, s_max: usize) -> Result<DivisorTable> {
    let n = rotation.n_dof();
    if n > MAX_DOF {
        return Err(Error::DofTooLarge { n_dof: n, max: MAX_DOF });
    }
    let omega = rotation.omega();
    let mut beta = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let mut min_mod = f64::INFINITY;
        for k in compositions(s + 1, n) {
            let k_dot: f64 = k.iter().zip(omega).map(|(&ki, &w)| ki as f64 * w).sum();
            for &w_j in omega {
                for sign in [1.0, -1.0] {
                    let modulus = divisor_modulus(k_dot + sign * w_j);
                    if modulus > EXACT_RESONANCE_EPS {
                        min_mod = min_mod.min(modulus);
                    }
                }
            }
        }
        if !min_mod.is_finite() {
            return Err(Error::Invalid(format!(
                "every divisor at order {s} is resonant for omega = {omega:?}"
            )));
        }
        beta.push(min_mod);
    }
    let mut alpha = vec![1.0];
    for &b in &beta {
        let prev = *alpha.last().unwrap();
        alpha.push(b.min(prev));
    }
    let mut t = vec![1.0];
    for s in 1..=s_max {
        let prev = *t.last().unwrap();
        t.push(prev / alpha[s]);
    }
    let diophantine_fit = fit_diophantine(&beta);
    Ok(DivisorTable { beta, alpha, t, diophantine_fit })
}

/// `|e^{i theta} - 1| = 2 |sin(theta/2)|`.
pub fn divisor_modulus(theta: f64) -> f64 {
    2.0 * (theta / 2.0).sin().abs()
}

/// All non-negative integer vectors of length `n` summing to `total`.
fn compositions(total: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill(total, 0, &mut current, &mut out);
    out
}

fn fill(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        fill(remaining - v, pos + 1, current, out);
    }
}

fn fit_diophantine(beta: &[f64]) -> Option<(f64, f64)> {
    if beta.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0.0)
        .map(|(i, &b)| (((i + 2) as f64).ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    Some((intercept.exp(), -slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn beta1_hand_enumeration_pi_over_3() {
        // |k| = 2, n = 1: divisors |e^{i(2w+w)}-1| = |e^{i pi}-1| = 2 and
        // |e^{i(2w-w)}-1| = 2 sin(pi/6) = 1, so beta_1 = 1.
        let dt = divisor_sequences(&RotationSpec::new(vec![PI / 3.0]), 1).unwrap();
        assert!((dt.beta_at(1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn alpha_monotone_t_monotone_golden() {
        let rot = RotationSpec::new(vec![PI * (5f64.sqrt() - 1.0)]);
        let dt = divisor_sequences(&rot, 30).unwrap();
        for s in 1..=30 {
            assert!(dt.alpha_at(s) <= dt.alpha_at(s - 1) + 1e-15);
            assert!(dt.t_at(s) >= dt.t_at(s - 1) - 1e-15);
            assert_eq!(dt.alpha_at(s), dt.alpha_at(s - 1).min(dt.beta_at(s)));
        }
    }

    #[test]
    fn resonant_divisors_are_excluded() {
        // omega = 2 pi / 5: k = 4 with +omega hits e^{2 pi i} = 1 exactly and
        // must be skipped, not reported as beta = 0.
        let rot = RotationSpec::new(vec![2.0 * PI / 5.0]);
        let dt = divisor_sequences(&rot, 10).unwrap();
        for s in 1..=10 {
            assert!(dt.beta_at(s) > 1e-13);
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let rot = RotationSpec::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            divisor_sequences(&rot, 3),
            Err(Error::DofTooLarge { .. })
        ));
    }

    #[test]
    fn two_dof_enumeration_includes_mixed_vectors() {
        // n = 2: beta_1 covers k in {(2,0), (1,1), (0,2)} with both labels and
        // signs; spot check against a direct scan.
        let omega = [1.3, 0.4];
        let rot = RotationSpec::new(omega.to_vec());
        let dt = divisor_sequences(&rot, 1).unwrap();
        let mut expect = f64::INFINITY;
        for (k1, k2) in [(2, 0), (1, 1), (0, 2)] {
            let kd = k1 as f64 * omega[0] + k2 as f64 * omega[1];
            for wj in omega {
                for sign in [1.0f64, -1.0] {
                    let m = divisor_modulus(kd + sign * wj);
                    if m > 1e-13 {
                        expect = expect.min(m);
                    }
                }
            }
        }
        assert!((dt.beta_at(1) - expect).abs() < 1e-15);
    }

    #[test]
    fn diophantine_fit_is_reported() {
        let rot = RotationSpec::new(vec![PI * (5f64.sqrt() - 1.0)]);
        let dt = divisor_sequences(&rot, 20).unwrap();
        let (gamma, _tau) = dt.diophantine_fit.expect("fit available");
        assert!(gamma > 0.0);
    }
}
