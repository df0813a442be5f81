//! Sparse homogeneous polynomials in `2n` variables with complex coefficients.
//!
//! The variable layout is `(x_1, ..., x_n, y_1, ..., y_n)` in the real frame
//! and `(xi_1, ..., xi_n, eta_1, ..., eta_n)` in the complex frame; a
//! polynomial carries its frame as data.  Terms are keyed by the exponent
//! multi-index and kept in ascending lexicographic order, which for a fixed
//! total degree coincides with graded lex.  Coefficients whose magnitude
//! drops below `DROP_TOL` times the largest coefficient of the expression
//! are discarded after every arithmetic operation.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative threshold under which a coefficient is treated as zero.
pub const DROP_TOL: f64 = 1e-16;

/// Coordinate frame tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Real,
    Complex,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Real => write!(f, "real"),
            Frame::Complex => write!(f, "complex"),
        }
    }
}

/// Exponent multi-index of length `2n`.  `Ord` is plain lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// A sparse homogeneous polynomial of fixed total degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoly {
    n_dof: usize,
    degree: usize,
    frame: Frame,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl HomogeneousPoly {
    /// The zero polynomial of the given degree.
    pub fn zero(n_dof: usize, degree: usize, frame: Frame) -> Self {
        HomogeneousPoly { n_dof, degree, frame, terms: BTreeMap::new() }
    }

    /// Build from `(exponents, coefficient)` pairs; every multi-index must
    /// have length `2 n_dof` and sum to `degree`.
    pub fn from_terms<I>(n_dof: usize, degree: usize, frame: Frame, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut poly = HomogeneousPoly::zero(n_dof, degree, frame);
        for (exps, coeff) in terms {
            if exps.len() != 2 * n_dof {
                return Err(Error::Invalid(format!(
                    "multi-index length {} does not match 2n = {}",
                    exps.len(),
                    2 * n_dof
                )));
            }
            let idx = MultiIndex(exps);
            if idx.degree() != degree {
                return Err(Error::Invalid(format!(
                    "multi-index {:?} has degree {}, expected {}",
                    idx.0,
                    idx.degree(),
                    degree
                )));
            }
            add_term(&mut poly.terms, idx, coeff);
        }
        poly.prune();
        Ok(poly)
    }

    /// Single monomial `coeff * z^exps`.
    pub fn monomial(n_dof: usize, frame: Frame, exps: Vec<u32>, coeff: Complex64) -> Self {
        let degree = exps.iter().map(|&e| e as usize).sum();
        HomogeneousPoly::from_terms(n_dof, degree, frame, [(exps, coeff)])
            .expect("monomial exponents are self-consistent")
    }

    /// The coordinate `z_var` as a degree-1 polynomial (`var` is 0-based).
    pub fn variable(n_dof: usize, frame: Frame, var: usize) -> Self {
        assert!(var < 2 * n_dof, "variable index {var} out of range");
        let mut exps = vec![0u32; 2 * n_dof];
        exps[var] = 1;
        HomogeneousPoly::monomial(n_dof, frame, exps, Complex64::new(1.0, 0.0))
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn n_vars(&self) -> usize {
        2 * self.n_dof
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> Complex64 {
        self.terms
            .get(&MultiIndex(exps.to_vec()))
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Retag the frame without touching coefficients.  Only for callers that
    /// perform the actual coordinate change themselves.
    pub(crate) fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Sum of coefficient magnitudes (the polynomial norm).
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_coeff_magnitude(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients below `DROP_TOL` times the largest one.
    pub fn prune(&mut self) {
        let max = self.max_coeff_magnitude();
        if max == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = DROP_TOL * max;
        self.terms.retain(|_, c| c.norm() >= cut);
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_dof != other.n_dof {
            return Err(Error::DofMismatch { left: self.n_dof, right: other.n_dof });
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch { expected: self.frame, got: other.frame });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeMismatch { left: self.degree, right: other.degree });
        }
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (idx, c) in &other.terms {
            add_term(&mut out.terms, idx.clone(), *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = HomogeneousPoly::zero(self.n_dof, self.degree + other.degree, self.frame);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let exps: Vec<u32> =
                    ia.0.iter().zip(&ib.0).map(|(a, b)| a + b).collect();
                add_term(&mut out.terms, MultiIndex(exps), ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Partial derivative with respect to variable `var` (0-based).  The
    /// derivative of a degree-0 polynomial is the zero polynomial.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < 2 * self.n_dof, "variable index {var} out of range");
        let degree = self.degree.saturating_sub(1);
        let mut out = HomogeneousPoly::zero(self.n_dof, degree, self.frame);
        for (idx, c) in &self.terms {
            let e = idx.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = idx.0.clone();
            exps[var] = e - 1;
            add_term(&mut out.terms, MultiIndex(exps), c * e as f64);
        }
        out.prune();
        out
    }

    /// Evaluate at a point given as `2n` complex coordinates.
    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), 2 * self.n_dof);
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in &self.terms {
            let mut m = *c;
            for (v, &e) in point.iter().zip(&idx.0) {
                for _ in 0..e {
                    m *= v;
                }
            }
            acc += m;
        }
        acc
    }

    /// Substitute `z -> A z` for a `2n x 2n` matrix `A`, i.e. compute
    /// `f(A z)`.  Homogeneity is preserved.
    pub fn subst_linear(&self, a: &[Vec<Complex64>]) -> Self {
        let nv = 2 * self.n_dof;
        assert_eq!(a.len(), nv);
        let one = HomogeneousPoly::from_terms(
            self.n_dof,
            0,
            self.frame,
            [(vec![0u32; nv], Complex64::new(1.0, 0.0))],
        )
        .expect("constant one");
        // Linear forms (A z)_i as degree-1 polynomials.
        let forms: Vec<HomogeneousPoly> = (0..nv)
            .map(|i| {
                HomogeneousPoly::from_terms(
                    self.n_dof,
                    1,
                    self.frame,
                    (0..nv).map(|j| {
                        let mut exps = vec![0u32; nv];
                        exps[j] = 1;
                        (exps, a[i][j])
                    }),
                )
                .expect("linear form")
            })
            .collect();
        let mut out = HomogeneousPoly::zero(self.n_dof, self.degree, self.frame);
        for (idx, c) in &self.terms {
            let mut m = one.scale(*c);
            for (i, &e) in idx.0.iter().enumerate() {
                for _ in 0..e {
                    m = m.mul(&forms[i]).expect("same frame");
                }
            }
            out = out.add(&m).expect("same degree");
        }
        out
    }
}

fn add_term(map: &mut BTreeMap<MultiIndex, Complex64>, idx: MultiIndex, coeff: Complex64) {
    match map.entry(idx) {
        Entry::Vacant(e) => {
            e.insert(coeff);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += coeff;
        }
    }
}

// Wire format: {n_dof, degree, frame, terms: [[[e1, e2, ...], [re, im]], ...]}
// with terms in ascending monomial order.
#[derive(Serialize, Deserialize)]
struct PolyWire {
    n_dof: usize,
    degree: usize,
    frame: Frame,
    terms: Vec<(Vec<u32>, (f64, f64))>,
}

impl Serialize for HomogeneousPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = PolyWire {
            n_dof: self.n_dof,
            degree: self.degree,
            frame: self.frame,
            terms: self
                .terms
                .iter()
                .map(|(idx, c)| (idx.0.clone(), (c.re, c.im)))
                .collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HomogeneousPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PolyWire::deserialize(deserializer)?;
        HomogeneousPoly::from_terms(
            wire.n_dof,
            wire.degree,
            wire.frame,
            wire.terms
                .into_iter()
                .map(|(exps, (re, im))| (exps, Complex64::new(re, im))),
        )
        .map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl fmt::Display for HomogeneousPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names: Vec<String> = match self.frame {
            Frame::Real => (1..=self.n_dof)
                .map(|i| format!("x{i}"))
                .chain((1..=self.n_dof).map(|i| format!("y{i}")))
                .collect(),
            Frame::Complex => (1..=self.n_dof)
                .map(|i| format!("xi{i}"))
                .chain((1..=self.n_dof).map(|i| format!("eta{i}")))
                .collect(),
        };
        let mut first = true;
        for (idx, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6e}{:+.6e}i)", c.re, c.im)?;
            for (name, &e) in names.iter().zip(&idx.0) {
                match e {
                    0 => {}
                    1 => write!(f, " {name}")?,
                    _ => write!(f, " {name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // x^2 in one degree of freedom, real frame.
    fn x_squared() -> HomogeneousPoly {
        HomogeneousPoly::monomial(1, Frame::Real, vec![2, 0], c(1.0, 0.0))
    }

    #[test]
    fn monomial_product() {
        let y = HomogeneousPoly::variable(1, Frame::Real, 1);
        let p = x_squared().mul(&y).unwrap();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.coeff(&[2, 1]), c(1.0, 0.0));
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn derivative_of_square() {
        let d = x_squared().derivative(0);
        assert_eq!(d.degree(), 1);
        assert_eq!(d.coeff(&[1, 0]), c(2.0, 0.0));
        // No x-dependence in the other slot.
        assert!(x_squared().derivative(1).is_zero());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let one = HomogeneousPoly::from_terms(1, 0, Frame::Real, [(vec![0, 0], c(3.0, 0.0))])
            .unwrap();
        assert!(one.derivative(0).is_zero());
    }

    #[test]
    fn complex_square_expansion() {
        // ((x - i y)/sqrt(2))^2 = (x^2 - 2 i x y - y^2)/2
        let s = 1.0 / 2f64.sqrt();
        let f = HomogeneousPoly::from_terms(
            1,
            1,
            Frame::Real,
            [(vec![1, 0], c(s, 0.0)), (vec![0, 1], c(0.0, -s))],
        )
        .unwrap();
        let sq = f.mul(&f).unwrap();
        assert!((sq.coeff(&[2, 0]) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((sq.coeff(&[1, 1]) - c(0.0, -1.0)).norm() < 1e-15);
        assert!((sq.coeff(&[0, 2]) - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn norm_sums_magnitudes() {
        let p = HomogeneousPoly::from_terms(
            1,
            2,
            Frame::Real,
            [(vec![2, 0], c(1.0, 0.0)), (vec![0, 2], c(2.0, 0.0))],
        )
        .unwrap();
        assert_eq!(p.norm(), 3.0);
    }

    #[test]
    fn mismatched_degree_add_rejected() {
        let err = x_squared().add(&HomogeneousPoly::variable(1, Frame::Real, 0));
        assert!(matches!(err, Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn mismatched_frame_rejected() {
        let p = HomogeneousPoly::monomial(1, Frame::Complex, vec![2, 0], c(1.0, 0.0));
        assert!(matches!(x_squared().add(&p), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn invalid_term_degree_rejected() {
        let r = HomogeneousPoly::from_terms(1, 2, Frame::Real, [(vec![1, 0], c(1.0, 0.0))]);
        assert!(r.is_err());
    }

    #[test]
    fn prune_drops_tiny_coefficients() {
        let p = HomogeneousPoly::from_terms(
            1,
            2,
            Frame::Real,
            [(vec![2, 0], c(1.0, 0.0)), (vec![0, 2], c(1e-20, 0.0))],
        )
        .unwrap();
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn subst_identity_fixes_poly() {
        let id = vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let p = x_squared();
        assert_eq!(p.subst_linear(&id), p);
    }

    #[test]
    fn subst_rotation_quarter_turn() {
        // f(x, y) = x^2 under (x, y) -> (-y, x) becomes y^2.
        let a = vec![
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ];
        let p = x_squared().subst_linear(&a);
        assert_eq!(p.coeff(&[0, 2]), c(1.0, 0.0));
        assert_eq!(p.coeff(&[2, 0]), c(0.0, 0.0));
    }

    #[test]
    fn eval_matches_hand_value() {
        let p = x_squared();
        let v = p.eval(&[c(0.5, 0.0), c(1.0, 0.0)]);
        assert_eq!(v, c(0.25, 0.0));
    }

    #[test]
    fn json_round_trip_keeps_sorted_terms() {
        let p = HomogeneousPoly::from_terms(
            1,
            2,
            Frame::Real,
            [(vec![0, 2], c(2.0, 0.0)), (vec![2, 0], c(1.0, -1.0))],
        )
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        // Ascending monomial order: [0,2] before [2,0].
        assert!(json.find("[0,2]").unwrap() < json.find("[2,0]").unwrap());
        let back: HomogeneousPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
