//! Per-element diffusion coefficients, possibly vanishing.

use crate::error::{DclError, Result};
use crate::mesh::Mesh;
use serde::Serialize;

/// Symbolic coefficient family, evaluated at element midpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CoeffFamily {
    Constant(f64),
    /// c(x) = |x|^alpha
    PowerLaw { alpha: f64 },
    /// Piecewise constant: (lo, hi, value); zero outside all pieces.
    Piecewise(Vec<(f64, f64, f64)>),
    /// Direct per-element table.
    Custom,
}

impl CoeffFamily {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoeffFamily::Constant(c) => *c,
            CoeffFamily::PowerLaw { alpha } => {
                if *alpha == 0.0 {
                    1.0
                } else {
                    x.abs().powf(*alpha)
                }
            }
            CoeffFamily::Piecewise(pieces) => pieces
                .iter()
                .find(|(lo, hi, _)| x >= *lo && x < *hi)
                .map(|(_, _, v)| *v)
                .unwrap_or(0.0),
            CoeffFamily::Custom => panic!("custom family has no pointwise rule"),
        }
    }
}

/// Nonnegative diffusion coefficient per element of a fixed mesh.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientField {
    values: Vec<f64>,
    family: CoeffFamily,
}

impl CoefficientField {
    /// Evaluate a symbolic family at the element midpoints of `mesh`.
    pub fn from_family(mesh: &Mesh, family: CoeffFamily) -> Result<Self> {
        let values: Vec<f64> = (0..mesh.n_elements())
            .map(|e| family.eval(mesh.element_midpoint(e)))
            .collect();
        Self::validated(values, family)
    }

    /// Direct per-element values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::validated(values, CoeffFamily::Custom)
    }

    fn validated(values: Vec<f64>, family: CoeffFamily) -> Result<Self> {
        if let Some((e, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(DclError::InvalidCoefficient(format!(
                "element {e} has coefficient {v}"
            )));
        }
        Ok(CoefficientField { values, family })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn family(&self) -> &CoeffFamily {
        &self.family
    }

    pub fn n_elements(&self) -> usize {
        self.values.len()
    }

    /// Scale every element value by `a >= 0`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::validated(self.values.iter().map(|v| a * v).collect(), CoeffFamily::Custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Grading};

    #[test]
    fn power_law_uses_midpoints() {
        let mesh = build_mesh((0.0, 1.0), 4, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::PowerLaw { alpha: 2.0 }).unwrap();
        assert_eq!(c.values(), &[0.125 * 0.125, 0.375 * 0.375, 0.625 * 0.625, 0.875 * 0.875]);
    }

    #[test]
    fn power_law_alpha_zero_is_one_at_origin() {
        let mesh = build_mesh((-1.0, 1.0), 2, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::PowerLaw { alpha: 0.0 }).unwrap();
        assert_eq!(c.values(), &[1.0, 1.0]);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(CoefficientField::from_values(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn piecewise_defaults_to_zero() {
        let f = CoeffFamily::Piecewise(vec![(0.0, 1.0, 2.0)]);
        assert_eq!(f.eval(-0.5), 0.0);
        assert_eq!(f.eval(0.5), 2.0);
    }
}
