//! Lie derivatives, the Lie transform and its calculus.
//!
//! For a generating sequence `X = {X_s}` of polynomial vector fields (order
//! `s` means component degree `s + 1`) the transform operator is
//!
//! ```text
//!     T_X = sum_s E_s,    E_0 = 1,    E_s = sum_{j=1..s} (j/s) L_{X_j} E_{s-j},
//! ```
//!
//! where `L_X f = sum_j X_j df/dz_j` on scalars and
//! `(L_X v)_j = sum_l (X_l dv_j/dz_l - v_l dX_j/dz_l)` on vector fields.
//! `E_s` raises the order of its target by exactly `s`; that grading is a
//! hard assertion.  Everything here is truncated at a caller-supplied order:
//! a truncated application retains output pieces of order at most
//! `trunc_order` (degree at most `trunc_order + 1`).
//!
//! `T_X` is an algebra morphism (it preserves products) and the composition
//! of two transforms is again a transform, with generators
//!
//! ```text
//!     Z_1 = X_1 + Y_1,    Z_s = X_s + Y_s + sum_{j<s} (j/s) E^X_{s-j} Y_j.
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::VectorPoly;
use crate::poly::{Frame, HomogeneousPoly};

/// A graded family `{X_s}` of generating vector fields; absent orders are
/// zero fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSequence {
    n_dof: usize,
    frame: Frame,
    s_max: usize,
    entries: BTreeMap<usize, VectorPoly>,
}

impl GeneratingSequence {
    pub fn new(n_dof: usize, frame: Frame, s_max: usize) -> Self {
        GeneratingSequence { n_dof, frame, s_max, entries: BTreeMap::new() }
    }

    /// Insert the order-`s` generator; its components must have degree `s+1`.
    pub fn insert(&mut self, s: usize, field: VectorPoly) -> Result<()> {
        if s == 0 {
            return Err(Error::Invalid("generator orders start at 1".into()));
        }
        if field.n_dof() != self.n_dof {
            return Err(Error::DofMismatch { left: self.n_dof, right: field.n_dof() });
        }
        if field.frame() != self.frame {
            return Err(Error::FrameMismatch { expected: self.frame, got: field.frame() });
        }
        if !field.is_zero() && field.degree() != s + 1 {
            return Err(Error::DegreeMismatch { left: s + 1, right: field.degree() });
        }
        if field.is_zero() {
            self.entries.remove(&s);
        } else {
            self.entries.insert(s, field);
        }
        Ok(())
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn set_s_max(&mut self, s_max: usize) {
        self.s_max = s_max;
    }

    pub fn get(&self, s: usize) -> Option<&VectorPoly> {
        self.entries.get(&s)
    }

    pub fn orders(&self) -> impl Iterator<Item = (usize, &VectorPoly)> {
        self.entries.iter().map(|(s, v)| (*s, v))
    }

    pub fn max_order(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry-wise sum (used to add control terms to a map's generators).
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n_dof != other.n_dof {
            return Err(Error::DofMismatch { left: self.n_dof, right: other.n_dof });
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch { expected: self.frame, got: other.frame });
        }
        let mut out =
            GeneratingSequence::new(self.n_dof, self.frame, self.s_max.max(other.s_max));
        let orders: std::collections::BTreeSet<usize> =
            self.entries.keys().chain(other.entries.keys()).copied().collect();
        for s in orders {
            let field = match (self.get(s), other.get(s)) {
                (Some(a), Some(b)) => a.add(b)?,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            out.insert(s, field)?;
        }
        Ok(out)
    }

    pub fn map_fields<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &VectorPoly) -> Result<VectorPoly>,
    {
        let mut out = GeneratingSequence::new(self.n_dof, self.frame, self.s_max);
        for (s, v) in &self.entries {
            let mapped = f(*s, v)?;
            out.frame = mapped.frame();
            out.insert(*s, mapped)?;
        }
        if self.entries.is_empty() {
            out.frame = self.frame;
        }
        Ok(out)
    }
}

// Wire format: ascending array of (order, field) pairs.
#[derive(Serialize, Deserialize)]
struct SeqWire {
    n_dof: usize,
    frame: Frame,
    s_max: usize,
    entries: Vec<(usize, VectorPoly)>,
}

impl Serialize for GeneratingSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeqWire {
            n_dof: self.n_dof,
            frame: self.frame,
            s_max: self.s_max,
            entries: self.entries.iter().map(|(s, v)| (*s, v.clone())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GeneratingSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SeqWire::deserialize(deserializer)?;
        let mut seq = GeneratingSequence::new(wire.n_dof, wire.frame, wire.s_max);
        for (s, v) in wire.entries {
            seq.insert(s, v).map_err(|e| D::Error::custom(e.to_string()))?;
        }
        Ok(seq)
    }
}

/// Anything `E_s` can act on: scalars and vector fields.
pub trait LieTarget: Clone {
    fn lie_derivative(x: &VectorPoly, target: &Self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale_re(&self, factor: f64) -> Self;
    fn zero_like(&self, degree: usize) -> Self;
    fn degree(&self) -> usize;
    fn norm(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl LieTarget for HomogeneousPoly {
    fn lie_derivative(x: &VectorPoly, target: &Self) -> Self {
        lie_scalar(x, target)
    }

    fn add(&self, other: &Self) -> Self {
        HomogeneousPoly::add(self, other).expect("graded sum")
    }

    fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    fn zero_like(&self, degree: usize) -> Self {
        HomogeneousPoly::zero(self.n_dof(), degree, self.frame())
    }

    fn degree(&self) -> usize {
        HomogeneousPoly::degree(self)
    }

    fn norm(&self) -> f64 {
        HomogeneousPoly::norm(self)
    }

    fn is_zero(&self) -> bool {
        HomogeneousPoly::is_zero(self)
    }
}

impl LieTarget for VectorPoly {
    fn lie_derivative(x: &VectorPoly, target: &Self) -> Self {
        lie_field(x, target)
    }

    fn add(&self, other: &Self) -> Self {
        VectorPoly::add(self, other).expect("graded sum")
    }

    fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    fn zero_like(&self, degree: usize) -> Self {
        VectorPoly::zero(self.n_dof(), degree, self.frame())
    }

    fn degree(&self) -> usize {
        VectorPoly::degree(self)
    }

    fn norm(&self) -> f64 {
        VectorPoly::norm(self)
    }

    fn is_zero(&self) -> bool {
        VectorPoly::is_zero(self)
    }
}

/// Lie derivative of a scalar along a field: `L_X f = sum_j X_j df/dz_j`.
pub fn lie_scalar(x: &VectorPoly, f: &HomogeneousPoly) -> HomogeneousPoly {
    assert_eq!(x.n_dof(), f.n_dof(), "Lie derivative across different phase spaces");
    assert_eq!(x.frame(), f.frame(), "Lie derivative across frames");
    let out_degree = x.degree() + f.degree() - 1;
    let mut acc = HomogeneousPoly::zero(f.n_dof(), out_degree, f.frame());
    for (j, xj) in x.components().iter().enumerate() {
        if xj.is_zero() {
            continue;
        }
        let df = f.derivative(j);
        if df.is_zero() {
            continue;
        }
        acc = acc.add(&xj.mul(&df).expect("same frame")).expect("same degree");
    }
    acc
}

/// Lie derivative of a field along a field (the commutator):
/// `(L_X v)_j = sum_l (X_l dv_j/dz_l - v_l dX_j/dz_l)`.
pub fn lie_field(x: &VectorPoly, v: &VectorPoly) -> VectorPoly {
    assert_eq!(x.n_dof(), v.n_dof(), "Lie derivative across different phase spaces");
    assert_eq!(x.frame(), v.frame(), "Lie derivative across frames");
    let components = v
        .components()
        .iter()
        .enumerate()
        .map(|(j, vj)| {
            let advect = lie_scalar(x, vj);
            let stretch = lie_scalar(v, x.component(j));
            advect.sub(&stretch).expect("same degree")
        })
        .collect();
    VectorPoly::from_components(components).expect("component count preserved")
}

/// Cached `E_s` terms of one generating sequence applied to one target.
///
/// The recursion reuses lower terms heavily; an instance owns the memo for
/// one `(sequence, target)` pair.  Results are identical with or without the
/// memo since summation order is fixed (ascending `j`).
pub struct ETerms<'a, T: LieTarget> {
    seq: &'a GeneratingSequence,
    terms: Vec<T>,
}

impl<'a, T: LieTarget> ETerms<'a, T> {
    pub fn new(seq: &'a GeneratingSequence, target: T) -> Self {
        ETerms { seq, terms: vec![target] }
    }

    pub fn target(&self) -> &T {
        &self.terms[0]
    }

    /// `E_s target`, computing and memoizing any missing lower terms.
    pub fn term(&mut self, s: usize) -> &T {
        while self.terms.len() <= s {
            let k = self.terms.len();
            let mut acc = self.terms[0].zero_like(self.terms[0].degree() + k);
            for j in 1..=k {
                if let Some(xj) = self.seq.get(j) {
                    let lower = &self.terms[k - j];
                    if lower.is_zero() {
                        continue;
                    }
                    let term = T::lie_derivative(xj, lower).scale_re(j as f64 / k as f64);
                    acc = acc.add(&term);
                }
            }
            assert_eq!(
                acc.degree(),
                self.terms[0].degree() + k,
                "E_s must raise the degree by exactly s"
            );
            self.terms.push(acc);
        }
        &self.terms[s]
    }
}

/// One-shot `E_s` without a reusable cache.
pub fn e_apply<T: LieTarget>(seq: &GeneratingSequence, s: usize, target: &T) -> T {
    let mut e = ETerms::new(seq, target.clone());
    e.term(s).clone()
}

/// `sum_{s=0..} E_s target`, keeping output orders `<= trunc_order`.
/// Piece `k` of the result has degree `target.degree() + k`.
pub fn transform_apply<T: LieTarget>(
    seq: &GeneratingSequence,
    target: &T,
    trunc_order: usize,
) -> Vec<T> {
    let base_order = target.degree().saturating_sub(1);
    let mut e = ETerms::new(seq, target.clone());
    let mut out = Vec::new();
    for s in 0..=trunc_order.saturating_sub(base_order) {
        out.push(e.term(s).clone());
    }
    out
}

/// Solve `T_X g = target` for the graded `g`, order by order:
/// `g_D = target_D - sum_{s>=1} E_s g_{D-s}` keeping orders `<= trunc_order`.
pub fn transform_inverse_apply<T: LieTarget>(
    seq: &GeneratingSequence,
    target: &T,
    trunc_order: usize,
) -> Vec<T> {
    let base_order = target.degree().saturating_sub(1);
    let n_pieces = trunc_order.saturating_sub(base_order) + 1;
    let mut pieces: Vec<T> = Vec::with_capacity(n_pieces);
    let mut caches: Vec<ETerms<T>> = Vec::with_capacity(n_pieces);
    for k in 0..n_pieces {
        let mut acc = target.zero_like(target.degree() + k);
        if k == 0 {
            acc = acc.add(target);
        }
        for (s, cache) in caches.iter_mut().enumerate().take(k) {
            // cache holds g_s; subtract E_{k-s} g_s.
            let term = cache.term(k - s);
            if !term.is_zero() {
                acc = acc.add(&term.scale_re(-1.0));
            }
        }
        caches.push(ETerms::new(seq, acc.clone()));
        pieces.push(acc);
    }
    pieces
}

/// Generating sequence of `T_X o T_Y` (first apply `T_Y`, then `T_X` as
/// operators on functions).
pub fn compose_transforms(
    x: &GeneratingSequence,
    y: &GeneratingSequence,
) -> Result<GeneratingSequence> {
    if x.n_dof() != y.n_dof() {
        return Err(Error::DofMismatch { left: x.n_dof(), right: y.n_dof() });
    }
    if x.frame() != y.frame() {
        return Err(Error::FrameMismatch { expected: x.frame(), got: y.frame() });
    }
    if x.s_max() != y.s_max() {
        return Err(Error::Invalid(format!(
            "composition requires equal truncation orders, got {} and {}",
            x.s_max(),
            y.s_max()
        )));
    }
    let s_max = x.s_max();
    let mut out = GeneratingSequence::new(x.n_dof(), x.frame(), s_max);
    let mut y_caches: BTreeMap<usize, ETerms<VectorPoly>> = y
        .orders()
        .map(|(j, yj)| (j, ETerms::new(x, yj.clone())))
        .collect();
    for s in 1..=s_max {
        let mut z = VectorPoly::zero(x.n_dof(), s + 1, x.frame());
        if let Some(xs) = x.get(s) {
            z = z.add(xs)?;
        }
        if let Some(ys) = y.get(s) {
            z = z.add(ys)?;
        }
        for j in 1..s {
            if let Some(cache) = y_caches.get_mut(&j) {
                let term = cache.term(s - j);
                if !term.is_zero() {
                    z = z.add(&term.scale(Complex64::new(j as f64 / s as f64, 0.0)))?;
                }
            }
        }
        out.insert(s, z)?;
    }
    Ok(out)
}

/// Near-identity coordinate change `w = T_X z` realized as graded polynomial
/// pieces; `pieces[d-1]` holds the degree-`d` part, starting with the
/// identity at degree 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMap {
    pub n_dof: usize,
    pub frame: Frame,
    pub pieces: Vec<VectorPoly>,
}

impl CoordinateMap {
    pub fn identity(n_dof: usize, frame: Frame) -> Self {
        let components = (0..2 * n_dof)
            .map(|j| HomogeneousPoly::variable(n_dof, frame, j))
            .collect();
        CoordinateMap {
            n_dof,
            frame,
            pieces: vec![VectorPoly::from_components(components).expect("identity")],
        }
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.len()
    }

    pub fn eval(&self, point: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * self.n_dof];
        for piece in &self.pieces {
            for (acc, v) in out.iter_mut().zip(piece.eval(point)) {
                *acc += v;
            }
        }
        out
    }

    /// Degree-`d` piece (zero if beyond the stored truncation).
    pub fn piece(&self, d: usize) -> VectorPoly {
        if d >= 1 && d <= self.pieces.len() {
            self.pieces[d - 1].clone()
        } else {
            VectorPoly::zero(self.n_dof, d, self.frame)
        }
    }
}

/// Realize `w = T_X z` on the coordinate tuple through `max_degree`.
pub fn transform_coordinates(seq: &GeneratingSequence, max_degree: usize) -> CoordinateMap {
    coordinate_map_from(seq, max_degree, false)
}

/// Realize the inverse change `z = T_X^{-1} w` through `max_degree`.
pub fn inverse_transform_coordinates(
    seq: &GeneratingSequence,
    max_degree: usize,
) -> CoordinateMap {
    coordinate_map_from(seq, max_degree, true)
}

fn coordinate_map_from(seq: &GeneratingSequence, max_degree: usize, inverse: bool) -> CoordinateMap {
    assert!(max_degree >= 1);
    let n_dof = seq.n_dof();
    let frame = seq.frame();
    let trunc_order = max_degree - 1;
    let per_coord: Vec<Vec<HomogeneousPoly>> = (0..2 * n_dof)
        .map(|j| {
            let zj = HomogeneousPoly::variable(n_dof, frame, j);
            if inverse {
                transform_inverse_apply(seq, &zj, trunc_order)
            } else {
                transform_apply(seq, &zj, trunc_order)
            }
        })
        .collect();
    let pieces = (0..max_degree)
        .map(|k| {
            let components = per_coord
                .iter()
                .map(|pieces_j| {
                    pieces_j
                        .get(k)
                        .cloned()
                        .unwrap_or_else(|| HomogeneousPoly::zero(n_dof, k + 1, frame))
                })
                .collect();
            VectorPoly::from_components(components).expect("aligned pieces")
        })
        .collect();
    CoordinateMap { n_dof, frame, pieces }
}
