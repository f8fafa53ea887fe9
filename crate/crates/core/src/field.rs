//! Discretized field values on the unit interval.
//!
//! A [`FieldState`] is either a vector of nodal values at the interior grid
//! points `xi_i = i / (J + 1)` (Dirichlet boundary values are implicit zeros)
//! or a vector of sine coefficients with respect to `e_j = sqrt(2) sin(j pi .)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Grid values at interior nodes.
    Nodal,
    /// Coefficients in the Dirichlet sine basis.
    Modal,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Nodal => f.write_str("nodal"),
            Representation::Modal => f.write_str("modal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    values: Vec<f64>,
    repr: Representation,
}

impl FieldState {
    pub fn new(values: Vec<f64>, repr: Representation) -> Self {
        FieldState { values, repr }
    }

    pub fn zeros(len: usize, repr: Representation) -> Self {
        FieldState {
            values: vec![0.0; len],
            repr,
        }
    }

    pub fn nodal(values: Vec<f64>) -> Self {
        Self::new(values, Representation::Nodal)
    }

    pub fn modal(values: Vec<f64>) -> Self {
        Self::new(values, Representation::Modal)
    }

    /// Unit coefficient vector for mode `j` (1-indexed).
    pub fn unit_mode(len: usize, j: usize) -> Self {
        let mut values = vec![0.0; len];
        values[j - 1] = 1.0;
        Self::modal(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mesh width of the grid this state lives on.
    pub fn mesh_width(&self) -> f64 {
        1.0 / (self.values.len() as f64 + 1.0)
    }

    pub fn expect(&self, repr: Representation, len: usize) -> Result<()> {
        if self.repr != repr {
            return Err(Error::RepresentationMismatch {
                expected: repr,
                found: self.repr,
            });
        }
        if self.values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Checks that `other` has the same representation and length.
    pub fn expect_like(&self, other: &FieldState) -> Result<()> {
        other.expect(self.repr, self.values.len())
    }

    /// L2(0,1) norm: coefficient norm for modal states, `sqrt(h sum x_i^2)`
    /// for nodal ones.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        match self.repr {
            Representation::Modal => s,
            Representation::Nodal => s * self.mesh_width(),
        }
    }

    /// L2(0,1) distance between two states of the same shape.
    pub fn l2_distance(&self, other: &FieldState) -> Result<f64> {
        self.expect_like(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(match self.repr {
            Representation::Modal => s.sqrt(),
            Representation::Nodal => (s * self.mesh_width()).sqrt(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &FieldState) -> Result<()> {
        self.expect_like(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }
}
