//! Quantitative bounds on the generating sequence of the normal form.
//!
//! Given constants `A > 0`, `C >= 0` dominating the input generators,
//! `|W_s| <= C^{s-1} A` (with `0^0 = 1`), the solved and normalized
//! sequences obey
//!
//! ```text
//!     |X_s| <= T_s B_r^{s-1} A / s,       |Z_s| <= T_{s-1} B_r^{s-1} A / s,
//!     B_r = 4 C + 8 (r + 2) A,
//! ```
//!
//! with `T_s` the divisor-accumulation sequence, and the remainder obeys
//! `|Q_s| <= B_r^{s-1} A / (s alpha_r^{s-1})` for `s > r`.  Order by order
//! the homological solve itself satisfies `|X_s| <= |Psi_s| / alpha_s`.
//! The report lists bound versus computed norm for every order; these are
//! checks of proven inequalities, so a violation indicates a defect.

use serde::{Deserialize, Serialize};

use crate::divisors::DivisorTable;
use crate::error::{Error, Result};
use crate::normalform::NormalFormResult;

/// Which inequality a row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `|X_s| <= T_s B^{s-1} A / s`
    GeneratorNorm,
    /// `|Z_s| <= T_{s-1} B^{s-1} A / s`
    NormalizedNorm,
    /// `|Q_s| <= B^{s-1} A / (s alpha_r^{s-1})`
    RemainderNorm,
    /// `|X_s| <= |Psi_s| / alpha_s`
    PerOrderSolve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRow {
    pub order: usize,
    pub kind: BoundKind,
    pub bound: f64,
    pub actual: f64,
}

impl EstimateRow {
    pub fn holds(&self) -> bool {
        // Tiny slack for roundoff in norm accumulation.
        self.actual <= self.bound * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }

    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.actual / self.bound
        } else if self.actual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Bound-versus-actual table for one normal form run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub a: f64,
    pub c: f64,
    pub b_r: f64,
    pub rows: Vec<EstimateRow>,
    pub all_bounds_hold: bool,
}

/// `C^{s-1} A` with the convention `0^0 = 1`.
fn w_bound(a: f64, c: f64, s: usize) -> f64 {
    if s == 1 {
        a
    } else {
        c.powi(s as i32 - 1) * a
    }
}

/// Check the supplied constants and compile the per-order report.
pub fn estimate_report(
    nf: &NormalFormResult,
    divisors: &DivisorTable,
    a: f64,
    c: f64,
) -> Result<EstimateReport> {
    if a <= 0.0 || c < 0.0 {
        return Err(Error::Invalid(format!("need A > 0 and C >= 0, got A = {a}, C = {c}")));
    }
    if divisors.s_max() < nf.s_max {
        return Err(Error::Invalid(format!(
            "divisor table covers orders up to {}, run needs {}",
            divisors.s_max(),
            nf.s_max
        )));
    }
    // Validate |W_s| <= C^{s-1} A before using the constants.
    for rec in &nf.records {
        let bound = w_bound(a, c, rec.order);
        if rec.norm_w > bound * (1.0 + 1e-12) {
            return Err(Error::EstimateConstants {
                first_violating_order: rec.order,
                norm: rec.norm_w,
                bound,
            });
        }
    }
    let r = nf.order_r;
    let b_r = 4.0 * c + 8.0 * (r as f64 + 2.0) * a;
    let alpha_r = divisors.alpha_at(r.max(1));
    let mut rows = Vec::new();
    for rec in &nf.records {
        let s = rec.order;
        let geom = b_r.powi(s as i32 - 1) * a / s as f64;
        if s <= r {
            rows.push(EstimateRow {
                order: s,
                kind: BoundKind::GeneratorNorm,
                bound: divisors.t_at(s) * geom,
                actual: rec.norm_x,
            });
            rows.push(EstimateRow {
                order: s,
                kind: BoundKind::NormalizedNorm,
                bound: divisors.t_at(s - 1) * geom,
                actual: rec.norm_z,
            });
            rows.push(EstimateRow {
                order: s,
                kind: BoundKind::PerOrderSolve,
                bound: rec.norm_psi / divisors.alpha_at(s),
                actual: rec.norm_x,
            });
        } else {
            rows.push(EstimateRow {
                order: s,
                kind: BoundKind::RemainderNorm,
                bound: geom / alpha_r.powi(s as i32 - 1),
                actual: rec.norm_q,
            });
        }
    }
    let all_bounds_hold = rows.iter().all(EstimateRow::holds);
    Ok(EstimateReport { a, c, b_r, rows, all_bounds_hold })
}
