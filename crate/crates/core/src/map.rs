//! Polynomial symplectic maps near an elliptic fixed point and their
//! representation as rotation composed with a Lie transform.
//!
//! A `PolyMap` stores `z' = Lambda (z + f_2(z) + f_3(z) + ...)` with the
//! nonlinearity inside the rotation.  The same map can be written in two
//! transform forms,
//!
//! ```text
//!     z' = Lambda . Phi_V(z)        (rotation after the transform)
//!     z' = Phi_W(Lambda z)          (transform after the rotation)
//! ```
//!
//! where `Phi_V` is the near-identity map realized by `T_V` on coordinates.
//! The composition convention is pinned by a test, not by notation: the
//! quadratic Henon map must come out of `V_1 = (0, x_1^2)` exactly.  The two
//! generator families are related by conjugation with the rotation,
//! `W_s(z) = Lambda V_s(Lambda^{-1} z)`, which in terms of the pullback
//! action implemented by [`RotationSpec`] reads `W_s = R_{-omega} V_s`.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::VectorPoly;
use crate::frame::{field_to_complex, field_to_real};
use crate::lie::{lie_scalar, transform_coordinates, CoordinateMap, GeneratingSequence};
use crate::poly::{Frame, HomogeneousPoly};
use crate::rotation::RotationSpec;

/// An explicit truncated polynomial map `z' = Lambda (z + sum_d f_d(z))`
/// with the fixed point at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    rotation: RotationSpec,
    frame: Frame,
    /// `nonlinear[i]` is the homogeneous piece of degree `i + 2`.
    nonlinear: Vec<VectorPoly>,
}

impl PolyMap {
    pub fn new(rotation: RotationSpec, frame: Frame, nonlinear: Vec<VectorPoly>) -> Result<Self> {
        let n = rotation.n_dof();
        for (i, piece) in nonlinear.iter().enumerate() {
            if piece.n_dof() != n {
                return Err(Error::DofMismatch { left: n, right: piece.n_dof() });
            }
            if piece.frame() != frame {
                return Err(Error::FrameMismatch { expected: frame, got: piece.frame() });
            }
            if !piece.is_zero() && piece.degree() != i + 2 {
                return Err(Error::DegreeMismatch { left: i + 2, right: piece.degree() });
            }
        }
        Ok(PolyMap { rotation, frame, nonlinear })
    }

    /// Built-in maps selectable by name.
    pub fn builtin(name: &str, omega: Vec<f64>) -> Result<Self> {
        match name {
            "henon" => {
                if omega.len() != 1 {
                    return Err(Error::Invalid(
                        "the quadratic henon map has one degree of freedom".into(),
                    ));
                }
                Ok(henon_map(omega[0]))
            }
            other => Err(Error::Invalid(format!("unknown built-in map '{other}'"))),
        }
    }

    pub fn rotation(&self) -> &RotationSpec {
        &self.rotation
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn n_dof(&self) -> usize {
        self.rotation.n_dof()
    }

    pub fn d_max(&self) -> usize {
        self.nonlinear.len() + 1
    }

    pub fn nonlinear(&self) -> &[VectorPoly] {
        &self.nonlinear
    }

    /// Degree-`d` nonlinear piece (inside the rotation).
    pub fn piece(&self, d: usize) -> VectorPoly {
        if d >= 2 && d <= self.d_max() {
            self.nonlinear[d - 2].clone()
        } else {
            VectorPoly::zero(self.n_dof(), d, self.frame)
        }
    }

    fn linear_matrix(&self) -> Vec<Vec<Complex64>> {
        match self.frame {
            Frame::Real => self
                .rotation
                .real_matrix()
                .into_iter()
                .map(|row| row.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect(),
            Frame::Complex => {
                let m = self.rotation.multipliers();
                let nv = m.len();
                (0..nv)
                    .map(|i| {
                        (0..nv)
                            .map(|j| if i == j { m[i] } else { Complex64::new(0.0, 0.0) })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    pub fn eval(&self, point: &[Complex64]) -> Vec<Complex64> {
        let nv = 2 * self.n_dof();
        assert_eq!(point.len(), nv);
        let mut inner: Vec<Complex64> = point.to_vec();
        for piece in &self.nonlinear {
            for (acc, v) in inner.iter_mut().zip(piece.eval(point)) {
                *acc += v;
            }
        }
        let lambda = self.linear_matrix();
        (0..nv)
            .map(|i| (0..nv).map(|j| lambda[i][j] * inner[j]).sum())
            .collect()
    }

    /// Evaluate a real-frame map at a real point.
    pub fn eval_real(&self, point: &[f64]) -> Vec<f64> {
        assert_eq!(self.frame, Frame::Real);
        let z: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&z).into_iter().map(|v| v.re).collect()
    }

    /// Jacobian matrix at a point.
    pub fn jacobian(&self, point: &[Complex64]) -> Vec<Vec<Complex64>> {
        let nv = 2 * self.n_dof();
        let mut inner = vec![vec![Complex64::new(0.0, 0.0); nv]; nv];
        for (i, row) in inner.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        for piece in &self.nonlinear {
            for (i, comp) in piece.components().iter().enumerate() {
                for (j, entry) in inner[i].iter_mut().enumerate() {
                    *entry += comp.derivative(j).eval(point);
                }
            }
        }
        let lambda = self.linear_matrix();
        (0..nv)
            .map(|i| {
                (0..nv)
                    .map(|k| (0..nv).map(|j| lambda[i][j] * inner[j][k]).sum())
                    .collect()
            })
            .collect()
    }

    /// Determinant of the Jacobian at a point (area/volume distortion).
    pub fn jacobian_det(&self, point: &[Complex64]) -> Complex64 {
        det(self.jacobian(point))
    }
}

fn det(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut result = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .expect("non-empty");
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            result = -result;
        }
        let inv = Complex64::new(1.0, 0.0) / m[col][col];
        result *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] * inv;
            if factor.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let sub = factor * m[col][k];
                m[row][k] -= sub;
            }
        }
    }
    result
}

/// The quadratic Henon-type map
/// `(x_1, x_2) -> Lambda_omega (x_1, x_2 + x_1^2)`.
pub fn henon_map(omega1: f64) -> PolyMap {
    let f2 = VectorPoly::from_components(vec![
        HomogeneousPoly::zero(1, 2, Frame::Real),
        HomogeneousPoly::monomial(1, Frame::Real, vec![2, 0], Complex64::new(1.0, 0.0)),
    ])
    .expect("henon nonlinearity");
    PolyMap::new(RotationSpec::new(vec![omega1]), Frame::Real, vec![f2])
        .expect("henon map is well formed")
}

/// Which side of the rotation the transform sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepresentationForm {
    /// `z' = Lambda . Phi_V(z)` — generators `V`.
    RotationThenTransform,
    /// `z' = Phi_W(Lambda z)` — generators `W`.
    TransformThenRotation,
}

/// A map written as rotation plus generating sequence (complex frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRepresentation {
    form: RepresentationForm,
    rotation: RotationSpec,
    generators: GeneratingSequence,
}

impl MapRepresentation {
    pub fn new(
        form: RepresentationForm,
        rotation: RotationSpec,
        generators: GeneratingSequence,
    ) -> Result<Self> {
        if generators.frame() != Frame::Complex {
            return Err(Error::FrameMismatch {
                expected: Frame::Complex,
                got: generators.frame(),
            });
        }
        if generators.n_dof() != rotation.n_dof() {
            return Err(Error::DofMismatch {
                left: rotation.n_dof(),
                right: generators.n_dof(),
            });
        }
        Ok(MapRepresentation { form, rotation, generators })
    }

    pub fn form(&self) -> RepresentationForm {
        self.form
    }

    pub fn rotation(&self) -> &RotationSpec {
        &self.rotation
    }

    pub fn generators(&self) -> &GeneratingSequence {
        &self.generators
    }

    pub fn generators_in_real(&self) -> Result<GeneratingSequence> {
        self.generators.map_fields(|_, v| field_to_real(v))
    }

    /// Rewrite in the other form.  `W_s` is the conjugate of `V_s` by the
    /// rotation: `W_s = R_{-omega} V_s` and conversely `V_s = R_omega W_s`.
    pub fn to_form(&self, form: RepresentationForm) -> Result<Self> {
        if form == self.form {
            return Ok(self.clone());
        }
        let rot = match form {
            RepresentationForm::TransformThenRotation => self.rotation.inverse(),
            RepresentationForm::RotationThenTransform => self.rotation.clone(),
        };
        let generators = self.generators.map_fields(|_, v| rot.apply_field(v))?;
        MapRepresentation::new(form, self.rotation.clone(), generators)
    }

    /// The post-rotation generators `W`, regardless of the stored form.
    pub fn w_generators(&self) -> Result<GeneratingSequence> {
        Ok(self.to_form(RepresentationForm::TransformThenRotation)?.generators)
    }
}

/// Solve for the generating sequence `V` of `z' = Lambda . Phi_V(z)` that
/// reproduces `map` through order `s_max`, matching homogeneous terms order
/// by order.
pub fn extract_generators(map: &PolyMap, s_max: usize) -> Result<MapRepresentation> {
    let n = map.n_dof();
    // Graded pieces of Phi_V = z + f_2 + f_3 + ... in the complex frame.
    let mut pieces: Vec<VectorPoly> = Vec::with_capacity(s_max + 1);
    pieces.push(identity_tuple(n, Frame::Complex));
    for d in 2..=s_max + 1 {
        let piece = map.piece(d);
        let piece = match map.frame() {
            Frame::Real => field_to_complex(&piece)?,
            Frame::Complex => piece,
        };
        pieces.push(piece);
    }

    let mut seq = GeneratingSequence::new(n, Frame::Complex, s_max);
    for s in 1..=s_max {
        // E_s z = V_s + sum_{m<s} (m/s) L_{V_m} E_{s-m} z  and  E_k z is the
        // degree-(k+1) piece of Phi_V, so V_s follows by subtraction.
        let mut tail = VectorPoly::zero(n, s + 1, Frame::Complex);
        for m in 1..s {
            if let Some(vm) = seq.get(m) {
                let advected = lie_tuple(vm, &pieces[s - m]);
                tail = tail.add(&advected.scale(Complex64::new(m as f64 / s as f64, 0.0)))?;
            }
        }
        let vs = pieces[s].sub(&tail)?;
        seq.insert(s, vs)?;
    }
    MapRepresentation::new(RepresentationForm::RotationThenTransform, map.rotation().clone(), seq)
}

/// Realize a representation as an explicit truncated polynomial map in the
/// real frame, through total degree `d_max`.
pub fn realize_map(rep: &MapRepresentation, d_max: usize) -> Result<PolyMap> {
    let n = rep.rotation().n_dof();
    let coords = transform_coordinates(rep.generators(), d_max);
    let inside: Vec<VectorPoly> = match rep.form() {
        RepresentationForm::RotationThenTransform => {
            // z' = Lambda Phi_V(z): the inside pieces are Phi_V itself.
            (2..=d_max).map(|d| coords.piece(d)).collect()
        }
        RepresentationForm::TransformThenRotation => {
            // z' = Phi_W(Lambda z) = Lambda (z + sum_d Lambda^{-1} g_d) with
            // g_d the degree-d piece of Phi_W composed with the rotation.
            let mult = rep.rotation().multipliers();
            (2..=d_max)
                .map(|d| {
                    let substituted = rep.rotation().apply_scalar_tuple(&coords.piece(d))?;
                    let components = substituted
                        .components()
                        .iter()
                        .enumerate()
                        .map(|(l, comp)| comp.scale(mult[l].conj()))
                        .collect();
                    VectorPoly::from_components(components)
                })
                .collect::<Result<_>>()?
        }
    };
    let nonlinear = inside
        .into_iter()
        .map(|piece| field_to_real(&piece))
        .collect::<Result<Vec<_>>>()?;
    let _ = n;
    PolyMap::new(rep.rotation().clone(), Frame::Real, nonlinear)
}

impl RotationSpec {
    /// Substitute `z -> Lambda z` in every component of a graded map piece
    /// (scalar action applied componentwise).
    pub fn apply_scalar_tuple(&self, piece: &VectorPoly) -> Result<VectorPoly> {
        let components = piece
            .components()
            .iter()
            .map(|c| self.apply_scalar(c))
            .collect::<Result<Vec<_>>>()?;
        VectorPoly::from_components(components)
    }
}

fn identity_tuple(n_dof: usize, frame: Frame) -> VectorPoly {
    CoordinateMap::identity(n_dof, frame).pieces[0].clone()
}

fn lie_tuple(x: &VectorPoly, tuple: &VectorPoly) -> VectorPoly {
    tuple.map_components(|c| lie_scalar(x, c))
}

// Ingestion wire format:
// { omega: [...], frame: "real", nonlinear: [{degree, components: [...]}, ...] }
#[derive(Serialize, Deserialize)]
struct MapWire {
    omega: Vec<f64>,
    frame: Frame,
    nonlinear: Vec<MapPieceWire>,
}

#[derive(Serialize, Deserialize)]
struct MapPieceWire {
    degree: usize,
    components: Vec<HomogeneousPoly>,
}

impl Serialize for PolyMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MapWire {
            omega: self.rotation.omega().to_vec(),
            frame: self.frame,
            nonlinear: self
                .nonlinear
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(i, p)| MapPieceWire {
                    degree: i + 2,
                    components: p.components().to_vec(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolyMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = MapWire::deserialize(deserializer)?;
        let n = wire.omega.len();
        let d_max = wire.nonlinear.iter().map(|p| p.degree).max().unwrap_or(1);
        let mut nonlinear: Vec<VectorPoly> = (2..=d_max)
            .map(|d| VectorPoly::zero(n, d, wire.frame))
            .collect();
        for piece in wire.nonlinear {
            if piece.degree < 2 {
                return Err(D::Error::custom("nonlinear pieces start at degree 2"));
            }
            let field = VectorPoly::from_components(piece.components)
                .map_err(|e| D::Error::custom(e.to_string()))?;
            nonlinear[piece.degree - 2] = field;
        }
        PolyMap::new(RotationSpec::new(wire.omega), wire.frame, nonlinear)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
