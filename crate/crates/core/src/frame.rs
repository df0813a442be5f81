//! The real <-> complex coordinate change that diagonalizes the rotation.
//!
//! The change of variables is
//!
//! ```text
//!     x_l = (xi_l + i eta_l) / sqrt(2),    y_l = i (xi_l - i eta_l) / sqrt(2),
//! ```
//!
//! with inverse `xi_l = (x_l - i y_l)/sqrt(2)`, `eta_l = (y_l - i x_l)/sqrt(2)`.
//! It is symplectic, and in the complex variables a real rotation by `omega`
//! acts diagonally with multipliers `exp(-i omega_l)` on `xi` and
//! `exp(+i omega_l)` on `eta`.  Scalars transform by substitution and vector
//! fields contravariantly (conjugation by the constant Jacobian), so the two
//! directions compose to the identity up to roundoff in the sqrt(2) factors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::VectorPoly;
use crate::poly::{Frame, HomogeneousPoly};

const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Matrix of `z = M zeta` (real coordinates from complex ones).
fn real_from_complex_matrix(n: usize) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for l in 0..n {
        // x_l = (xi_l + i eta_l)/sqrt(2)
        m[l][l] = Complex64::new(SQRT2_INV, 0.0);
        m[l][l + n] = Complex64::new(0.0, SQRT2_INV);
        // y_l = (i xi_l + eta_l)/sqrt(2)
        m[l + n][l] = Complex64::new(0.0, SQRT2_INV);
        m[l + n][l + n] = Complex64::new(SQRT2_INV, 0.0);
    }
    m
}

/// Matrix of `zeta = C z` (complex coordinates from real ones).
fn complex_from_real_matrix(n: usize) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for l in 0..n {
        // xi_l = (x_l - i y_l)/sqrt(2)
        m[l][l] = Complex64::new(SQRT2_INV, 0.0);
        m[l][l + n] = Complex64::new(0.0, -SQRT2_INV);
        // eta_l = (-i x_l + y_l)/sqrt(2)
        m[l + n][l] = Complex64::new(0.0, -SQRT2_INV);
        m[l + n][l + n] = Complex64::new(SQRT2_INV, 0.0);
    }
    m
}

/// Express a real-frame scalar in the complex variables.
pub fn poly_to_complex(p: &HomogeneousPoly) -> Result<HomogeneousPoly> {
    if p.frame() != Frame::Real {
        return Err(Error::FrameMismatch { expected: Frame::Real, got: p.frame() });
    }
    let m = real_from_complex_matrix(p.n_dof());
    Ok(p.subst_linear(&m).with_frame(Frame::Complex))
}

/// Express a complex-frame scalar in the real variables.
pub fn poly_to_real(p: &HomogeneousPoly) -> Result<HomogeneousPoly> {
    if p.frame() != Frame::Complex {
        return Err(Error::FrameMismatch { expected: Frame::Complex, got: p.frame() });
    }
    let c = complex_from_real_matrix(p.n_dof());
    Ok(p.subst_linear(&c).with_frame(Frame::Real))
}

/// Push a real-frame vector field (or the graded piece of a coordinate map,
/// which transforms the same way) to the complex frame.
pub fn field_to_complex(v: &VectorPoly) -> Result<VectorPoly> {
    if v.frame() != Frame::Real {
        return Err(Error::FrameMismatch { expected: Frame::Real, got: v.frame() });
    }
    let n = v.n_dof();
    let c = complex_from_real_matrix(n);
    let m = real_from_complex_matrix(n);
    // V^c(zeta) = C . V(M zeta)
    let substituted: Vec<HomogeneousPoly> = v
        .components()
        .iter()
        .map(|comp| comp.subst_linear(&m).with_frame(Frame::Complex))
        .collect();
    linear_combine(&c, &substituted)
}

/// Pull a complex-frame vector field back to the real frame.
pub fn field_to_real(v: &VectorPoly) -> Result<VectorPoly> {
    if v.frame() != Frame::Complex {
        return Err(Error::FrameMismatch { expected: Frame::Complex, got: v.frame() });
    }
    let n = v.n_dof();
    let c = complex_from_real_matrix(n);
    let m = real_from_complex_matrix(n);
    // V^r(z) = M . V^c(C z)
    let substituted: Vec<HomogeneousPoly> = v
        .components()
        .iter()
        .map(|comp| comp.subst_linear(&c).with_frame(Frame::Real))
        .collect();
    linear_combine(&m, &substituted)
}

fn linear_combine(a: &[Vec<Complex64>], comps: &[HomogeneousPoly]) -> Result<VectorPoly> {
    let out: Vec<HomogeneousPoly> = (0..comps.len())
        .map(|i| {
            let mut acc = comps[0].scale(a[i][0]);
            for (j, comp) in comps.iter().enumerate().skip(1) {
                acc = acc.add(&comp.scale(a[i][j]))?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    VectorPoly::from_components(out)
}

/// Complex coordinates of a real phase-space point.
pub fn point_to_complex(z: &[f64]) -> Vec<Complex64> {
    let n = z.len() / 2;
    let mut out = Vec::with_capacity(2 * n);
    for l in 0..n {
        let (x, y) = (z[l], z[l + n]);
        out.push(Complex64::new(x * SQRT2_INV, -y * SQRT2_INV));
    }
    for l in 0..n {
        let (x, y) = (z[l], z[l + n]);
        out.push(Complex64::new(y * SQRT2_INV, -x * SQRT2_INV));
    }
    out
}

/// Real coordinates from complex ones.  The imaginary parts are returned too
/// so callers can verify the point sits on the real slice.
pub fn point_to_real(zeta: &[Complex64]) -> Vec<Complex64> {
    let n = zeta.len() / 2;
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(2 * n);
    for l in 0..n {
        out.push((zeta[l] + i * zeta[l + n]) * SQRT2_INV);
    }
    for l in 0..n {
        out.push((i * zeta[l] + zeta[l + n]) * SQRT2_INV);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn action(n_dof: usize, l: usize) -> HomogeneousPoly {
        // I_l = (x_l^2 + y_l^2)/2
        let mut ex = vec![0u32; 2 * n_dof];
        ex[l] = 2;
        let mut ey = vec![0u32; 2 * n_dof];
        ey[l + n_dof] = 2;
        HomogeneousPoly::from_terms(
            n_dof,
            2,
            Frame::Real,
            [(ex, c(0.5, 0.0)), (ey, c(0.5, 0.0))],
        )
        .unwrap()
    }

    #[test]
    fn action_becomes_i_xi_eta() {
        let p = poly_to_complex(&action(1, 0)).unwrap();
        assert_eq!(p.frame(), Frame::Complex);
        assert!((p.coeff(&[1, 1]) - c(0.0, 1.0)).norm() < 1e-15);
        assert!(p.coeff(&[2, 0]).norm() < 1e-15);
        assert!(p.coeff(&[0, 2]).norm() < 1e-15);
    }

    #[test]
    fn zero_poly_converts_to_zero() {
        let z = HomogeneousPoly::zero(1, 3, Frame::Real);
        assert!(poly_to_complex(&z).unwrap().is_zero());
    }

    #[test]
    fn scalar_round_trip() {
        let p = HomogeneousPoly::from_terms(
            1,
            3,
            Frame::Real,
            [
                (vec![3, 0], c(1.0, 0.0)),
                (vec![2, 1], c(-0.5, 0.0)),
                (vec![0, 3], c(2.0, 0.0)),
            ],
        )
        .unwrap();
        let back = poly_to_real(&poly_to_complex(&p).unwrap()).unwrap();
        let diff = back.sub(&p).unwrap();
        assert!(diff.max_coeff_magnitude() < 1e-13);
    }

    #[test]
    fn field_round_trip() {
        let v = VectorPoly::from_components(vec![
            HomogeneousPoly::monomial(1, Frame::Real, vec![1, 1], c(2.0, 0.0)),
            HomogeneousPoly::monomial(1, Frame::Real, vec![2, 0], c(1.0, 0.0)),
        ])
        .unwrap();
        let back = field_to_real(&field_to_complex(&v).unwrap()).unwrap();
        let diff = back.sub(&v).unwrap();
        assert!(diff.max_coeff_magnitude() < 1e-13);
    }

    #[test]
    fn henon_generator_complex_components() {
        // (0, x^2) -> ( -i (xi + i eta)^2 / (2 sqrt 2), (xi + i eta)^2 / (2 sqrt 2) )
        let v = VectorPoly::from_components(vec![
            HomogeneousPoly::zero(1, 2, Frame::Real),
            HomogeneousPoly::monomial(1, Frame::Real, vec![2, 0], c(1.0, 0.0)),
        ])
        .unwrap();
        let vc = field_to_complex(&v).unwrap();
        let a = 1.0 / (2.0 * 2f64.sqrt());
        assert!((vc.component(0).coeff(&[2, 0]) - c(0.0, -a)).norm() < 1e-15);
        assert!((vc.component(0).coeff(&[1, 1]) - c(2.0 * a, 0.0)).norm() < 1e-15);
        assert!((vc.component(0).coeff(&[0, 2]) - c(0.0, a)).norm() < 1e-15);
        assert!((vc.component(1).coeff(&[2, 0]) - c(a, 0.0)).norm() < 1e-15);
        assert!((vc.component(1).coeff(&[1, 1]) - c(0.0, 2.0 * a)).norm() < 1e-15);
        assert!((vc.component(1).coeff(&[0, 2]) - c(-a, 0.0)).norm() < 1e-15);
        // Norm in the complex frame: 2 sqrt(2).
        assert!((vc.norm() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn point_round_trip() {
        let z = [0.3, -0.7];
        let zeta = point_to_complex(&z);
        let back = point_to_real(&zeta);
        assert!((back[0] - c(0.3, 0.0)).norm() < 1e-15);
        assert!((back[1] - c(-0.7, 0.0)).norm() < 1e-15);
        // I = |xi|^2 on the real slice.
        let i_val = (z[0] * z[0] + z[1] * z[1]) / 2.0;
        assert!((zeta[0].norm_sqr() - i_val).abs() < 1e-15);
    }
}
