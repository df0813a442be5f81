//! Vector-valued homogeneous polynomials.
//!
//! A `VectorPoly` with components of degree `s + 1` is a polynomial vector
//! field "of order `s`"; degree-1 tuples also appear as the linear piece of
//! near-identity coordinate maps.  A field is Hamiltonian when it can be
//! written `J grad H` for a scalar `H`; that is exactly the symmetry of the
//! Jacobian of `J^{-1} X`, which `symplecticity_check` tests coefficient-wise.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{Frame, HomogeneousPoly};

/// A homogeneous polynomial vector field with `2n` components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPoly {
    components: Vec<HomogeneousPoly>,
}

impl VectorPoly {
    pub fn zero(n_dof: usize, degree: usize, frame: Frame) -> Self {
        VectorPoly {
            components: (0..2 * n_dof)
                .map(|_| HomogeneousPoly::zero(n_dof, degree, frame))
                .collect(),
        }
    }

    /// Assemble from `2n` components of equal degree, frame and `n_dof`.
    pub fn from_components(components: Vec<HomogeneousPoly>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Invalid("vector field needs components".into()))?;
        let (n_dof, frame) = (first.n_dof(), first.frame());
        if components.len() != 2 * n_dof {
            return Err(Error::Invalid(format!(
                "expected {} components, got {}",
                2 * n_dof,
                components.len()
            )));
        }
        let degree = components
            .iter()
            .find(|c| !c.is_zero())
            .map(|c| c.degree())
            .unwrap_or(first.degree());
        for c in &components {
            if c.n_dof() != n_dof {
                return Err(Error::DofMismatch { left: n_dof, right: c.n_dof() });
            }
            if c.frame() != frame {
                return Err(Error::FrameMismatch { expected: frame, got: c.frame() });
            }
            if !c.is_zero() && c.degree() != degree {
                return Err(Error::DegreeMismatch { left: degree, right: c.degree() });
            }
        }
        // Normalize zero components to the shared degree.
        let components = components
            .into_iter()
            .map(|c| {
                if c.is_zero() && c.degree() != degree {
                    HomogeneousPoly::zero(n_dof, degree, frame)
                } else {
                    c
                }
            })
            .collect();
        Ok(VectorPoly { components })
    }

    pub fn n_dof(&self) -> usize {
        self.components[0].n_dof()
    }

    pub fn frame(&self) -> Frame {
        self.components[0].frame()
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    /// Order of the field: component degree minus one.
    pub fn order(&self) -> usize {
        self.degree().saturating_sub(1)
    }

    pub fn components(&self) -> &[HomogeneousPoly] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &HomogeneousPoly {
        &self.components[j]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Field norm: sum of the component polynomial norms.
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm()).sum()
    }

    pub fn max_coeff_magnitude(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_coeff_magnitude())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        VectorPoly::from_components(components)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        VectorPoly {
            components: self.components.iter().map(|c| c.scale(factor)).collect(),
        }
    }

    pub fn eval(&self, point: &[Complex64]) -> Vec<Complex64> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    pub(crate) fn map_components<F>(&self, f: F) -> Self
    where
        F: Fn(&HomogeneousPoly) -> HomogeneousPoly,
    {
        VectorPoly { components: self.components.iter().map(f).collect() }
    }

    /// Test whether the field is generated by a scalar, `X = J grad H`.
    ///
    /// With `G = J^{-1} X` the condition is that the Jacobian of `G` is
    /// symmetric; the residual is the largest violating coefficient relative
    /// to the size of the derivative entries.
    pub fn symplecticity_check(&self, tol: f64) -> SymplecticityReport {
        let n = self.n_dof();
        // G = J^{-1} X with J = [[0, I], [-I, 0]]:  G_a = -X_{a+n} (a < n),
        // G_a = X_{a-n} (a >= n).
        let g: Vec<HomogeneousPoly> = (0..2 * n)
            .map(|a| {
                if a < n {
                    self.components[a + n].scale(Complex64::new(-1.0, 0.0))
                } else {
                    self.components[a - n].clone()
                }
            })
            .collect();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for a in 0..2 * n {
            for b in (a + 1)..2 * n {
                let dga = g[b].derivative(a);
                let dgb = g[a].derivative(b);
                scale = scale.max(dga.max_coeff_magnitude());
                scale = scale.max(dgb.max_coeff_magnitude());
                if let Ok(diff) = dga.sub(&dgb) {
                    worst = worst.max(diff.max_coeff_magnitude());
                }
            }
        }
        let residual = if scale > 0.0 { worst / scale } else { worst };
        SymplecticityReport { hamiltonian: residual <= tol, residual }
    }
}

/// Outcome of [`VectorPoly::symplecticity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticityReport {
    /// True when the field is generated by a scalar within tolerance.
    pub hamiltonian: bool,
    /// Largest violation of the integrability condition, relative to the
    /// size of the derivative coefficients (0 for the zero field).
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    n_dof: usize,
    order: usize,
    components: Vec<HomogeneousPoly>,
}

impl Serialize for VectorPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FieldWire {
            n_dof: self.n_dof(),
            order: self.order(),
            components: self.components.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VectorPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = FieldWire::deserialize(deserializer)?;
        VectorPoly::from_components(wire.components).map_err(|e| D::Error::custom(e.to_string()))
    }
}
