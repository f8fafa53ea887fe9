use crate::error::Result;
use crate::field::{FieldState, Representation};
use crate::sine::SineTransform;

/// Scalar functionals of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// `|x|^2 = int x^2`.
    SquaredNorm,
    /// `exp(-|x|^2)`.
    ExpNegSquaredNorm,
    /// `int x`.
    SpatialMean,
    /// `int cos x`.
    CosMean,
    /// Grid quadratic variation.
    QuadraticVariation,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::SquaredNorm => "sq_norm",
            Observable::ExpNegSquaredNorm => "exp_neg_sq_norm",
            Observable::SpatialMean => "mean",
            Observable::CosMean => "cos_mean",
            Observable::QuadraticVariation => "qv",
        }
    }

    /// Integrals use `h sum_i`; modal inputs are synthesized on the grid
    /// when needed.
    pub fn evaluate(self, x: &FieldState) -> Result<f64> {
        match self {
            Observable::SquaredNorm => return Ok(x.l2_norm_sq()),
            Observable::ExpNegSquaredNorm => return Ok((-x.l2_norm_sq()).exp()),
            _ => {}
        }
        let nodal = match x.representation() {
            Representation::Nodal => x.clone(),
            Representation::Modal => {
                let mut v = vec![0.0; x.len()];
                SineTransform::shared(x.len()).synthesize(x.values(), &mut v);
                FieldState::nodal(v)
            }
        };
        let h = nodal.mesh_width();
        Ok(match self {
            Observable::SpatialMean => h * nodal.values().iter().sum::<f64>(),
            Observable::CosMean => h * nodal.values().iter().map(|z| z.cos()).sum::<f64>(),
            Observable::QuadraticVariation => super::quadratic_variation(&nodal)?,
            Observable::SquaredNorm | Observable::ExpNegSquaredNorm => unreachable!(),
        })
    }
}
