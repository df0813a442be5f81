//! The linear rotation of the map and its action on polynomials.
//!
//! In the real frame the rotation is the block matrix
//! `[[C, -S], [S, C]]` with `C = diag(cos omega_l)`, `S = diag(sin omega_l)`;
//! in the complex frame it is `diag(e^{-i omega_1}, ..., e^{+i omega_n})`.
//! The operator acts on scalars by substitution, `(R f)(z) = f(Lambda z)`,
//! and on vector fields by `(R V)(z) = Lambda^{-1} V(Lambda z)`, so in the
//! complex frame both actions are diagonal on monomials.  All eigenvalue
//! bookkeeping downstream derives from this action on basis monomials rather
//! than from a sign convention.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorPoly;
use crate::poly::{Frame, HomogeneousPoly, MultiIndex};

/// Rotation frequencies, one per degree of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    omega: Vec<f64>,
}

impl RotationSpec {
    pub fn new(omega: Vec<f64>) -> Self {
        RotationSpec { omega }
    }

    pub fn n_dof(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn inverse(&self) -> Self {
        RotationSpec { omega: self.omega.iter().map(|w| -w).collect() }
    }

    /// Diagonal multipliers in the complex frame:
    /// `(e^{-i w_1}, ..., e^{-i w_n}, e^{+i w_1}, ..., e^{+i w_n})`.
    /// Unit modulus by construction.
    pub fn multipliers(&self) -> Vec<Complex64> {
        self.omega
            .iter()
            .map(|&w| Complex64::from_polar(1.0, -w))
            .chain(self.omega.iter().map(|&w| Complex64::from_polar(1.0, w)))
            .collect()
    }

    /// The extended phase vector `mu` entering the vector-field action,
    /// obtained by probing the action on constant basis fields instead of
    /// assuming a sign pairing.
    pub fn mu(&self) -> Vec<f64> {
        self.multipliers().iter().map(|m| m.conj().arg()).collect()
    }

    /// Real-frame rotation matrix `[[C, -S], [S, C]]`.
    pub fn real_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_dof();
        let mut m = vec![vec![0.0; 2 * n]; 2 * n];
        for (l, &w) in self.omega.iter().enumerate() {
            let (s, c) = w.sin_cos();
            m[l][l] = c;
            m[l][l + n] = -s;
            m[l + n][l] = s;
            m[l + n][l + n] = c;
        }
        m
    }

    /// Scalar action in the complex frame: each monomial `xi^j eta^k` picks
    /// up the factor `e^{i <k - j, omega>}`.
    pub fn apply_scalar(&self, f: &HomogeneousPoly) -> Result<HomogeneousPoly> {
        if f.frame() != Frame::Complex {
            return Err(Error::FrameMismatch { expected: Frame::Complex, got: f.frame() });
        }
        let n = self.n_dof();
        if f.n_dof() != n {
            return Err(Error::DofMismatch { left: n, right: f.n_dof() });
        }
        let terms = f
            .terms()
            .map(|(idx, c)| (idx.0.clone(), c * self.scalar_factor(idx)))
            .collect::<Vec<_>>();
        HomogeneousPoly::from_terms(n, f.degree(), Frame::Complex, terms)
    }

    /// Field action in the complex frame: the scalar factor of each monomial
    /// times the inverse multiplier of its component.
    pub fn apply_field(&self, v: &VectorPoly) -> Result<VectorPoly> {
        if v.frame() != Frame::Complex {
            return Err(Error::FrameMismatch { expected: Frame::Complex, got: v.frame() });
        }
        let mult = self.multipliers();
        let components = v
            .components()
            .iter()
            .enumerate()
            .map(|(l, comp)| {
                let inv = mult[l].conj();
                Ok(self.apply_scalar(comp)?.scale(inv))
            })
            .collect::<Result<Vec<_>>>()?;
        VectorPoly::from_components(components)
    }

    fn scalar_factor(&self, idx: &MultiIndex) -> Complex64 {
        let n = self.n_dof();
        let mut phase = 0.0;
        for (l, &w) in self.omega.iter().enumerate() {
            let j = idx.0[l] as f64;
            let k = idx.0[l + n] as f64;
            phase += w * (k - j);
        }
        Complex64::from_polar(1.0, phase)
    }

    /// Eigenvalue of `D = R - 1` on the basis monomial `xi^j eta^k e_l`,
    /// computed by applying the rotation to that monomial.
    pub fn dw_eigenvalue(&self, exps: &[u32], component: usize) -> Complex64 {
        let n = self.n_dof();
        assert_eq!(exps.len(), 2 * n);
        assert!(component < 2 * n);
        let factor =
            self.scalar_factor(&MultiIndex(exps.to_vec())) * self.multipliers()[component].conj();
        let eig = factor - Complex64::new(1.0, 0.0);
        debug_assert!(eig.norm() <= 2.0 + 1e-12);
        eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multipliers_have_unit_modulus() {
        let r = RotationSpec::new(vec![PI * (5f64.sqrt() - 1.0), 2f64.sqrt()]);
        for m in r.multipliers() {
            assert!((m.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn action_monomial_is_invariant() {
        // xi * eta is fixed for any omega.
        let r = RotationSpec::new(vec![1.23456]);
        let p = HomogeneousPoly::monomial(1, Frame::Complex, vec![1, 1], c(2.0, 1.0));
        let rp = r.apply_scalar(&p).unwrap();
        let diff = rp.sub(&p).unwrap();
        assert!(diff.max_coeff_magnitude() < 1e-15);
    }

    #[test]
    fn xi_squared_quarter_turn_flips_sign() {
        // omega = pi/2: xi^2 -> e^{-i pi} xi^2 = -xi^2.
        let r = RotationSpec::new(vec![PI / 2.0]);
        let p = HomogeneousPoly::monomial(1, Frame::Complex, vec![2, 0], c(1.0, 0.0));
        let rp = r.apply_scalar(&p).unwrap();
        assert!((rp.coeff(&[2, 0]) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotate_then_unrotate_is_identity() {
        let r = RotationSpec::new(vec![0.777]);
        let v = VectorPoly::from_components(vec![
            HomogeneousPoly::monomial(1, Frame::Complex, vec![2, 1], c(1.0, -2.0)),
            HomogeneousPoly::monomial(1, Frame::Complex, vec![0, 3], c(0.5, 0.25)),
        ])
        .unwrap();
        let round = r.inverse().apply_field(&r.apply_field(&v).unwrap()).unwrap();
        let diff = round.sub(&v).unwrap();
        assert!(diff.max_coeff_magnitude() < 1e-14);
    }

    #[test]
    fn scalar_norm_preserved() {
        let r = RotationSpec::new(vec![2.2]);
        let p = HomogeneousPoly::from_terms(
            1,
            3,
            Frame::Complex,
            [(vec![2, 1], c(1.0, 1.0)), (vec![3, 0], c(-0.5, 0.0))],
        )
        .unwrap();
        let rp = r.apply_scalar(&p).unwrap();
        assert!((rp.norm() - p.norm()).abs() < 1e-13);
    }

    #[test]
    fn real_frame_rejected() {
        let r = RotationSpec::new(vec![1.0]);
        let p = HomogeneousPoly::monomial(1, Frame::Real, vec![2, 0], c(1.0, 0.0));
        assert!(matches!(r.apply_scalar(&p), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn action_power_times_own_coordinate_is_in_kernel() {
        // (xi eta)^m xi e_xi and (xi eta)^m eta e_eta have eigenvalue 0.
        let r = RotationSpec::new(vec![PI * (5f64.sqrt() - 1.0)]);
        for m in 0..4u32 {
            assert!(r.dw_eigenvalue(&[m + 1, m], 0).norm() < 1e-14);
            assert!(r.dw_eigenvalue(&[m, m + 1], 1).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenvalue_cross_checked_against_substitution() {
        // omega = pi/2, monomial xi^2 on the xi component: the rotation sends
        // it to e^{-i omega} times itself, so the eigenvalue is e^{-i pi/2}-1.
        let r = RotationSpec::new(vec![PI / 2.0]);
        let eig = r.dw_eigenvalue(&[2, 0], 0);
        assert!((eig - c(-1.0, -1.0)).norm() < 1e-14);
        // Same number from the full field action.
        let v = VectorPoly::from_components(vec![
            HomogeneousPoly::monomial(1, Frame::Complex, vec![2, 0], c(1.0, 0.0)),
            HomogeneousPoly::zero(1, 2, Frame::Complex),
        ])
        .unwrap();
        let rv = r.apply_field(&v).unwrap();
        let factor = rv.component(0).coeff(&[2, 0]);
        assert!((factor - (eig + c(1.0, 0.0))).norm() < 1e-14);
    }

    #[test]
    fn zero_frequency_is_degenerate() {
        let r = RotationSpec::new(vec![0.0]);
        assert!(r.dw_eigenvalue(&[3, 0], 1).norm() < 1e-15);
        assert!(r.dw_eigenvalue(&[0, 2], 0).norm() < 1e-15);
    }
}
