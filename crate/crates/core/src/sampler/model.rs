use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::operator::{check_input, LinearOperator, OpRef};

/// Affine map `x = T x̃ + x₀` from standard-form coordinates back to the
/// original parameterization.
#[derive(Clone, Debug, Default)]
pub struct BackTransform {
    pub map: Option<OpRef>,
    pub offset: Option<Vec<f64>>,
}

impl BackTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(map: Option<OpRef>, offset: Option<Vec<f64>>) -> Self {
        Self { map, offset }
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_none() && self.offset.is_none()
    }

    /// Dimension of the original parameter space given the standard-form one.
    pub fn output_dim(&self, standard_dim: usize) -> usize {
        self.map.as_ref().map_or(standard_dim, |m| m.rows())
    }

    pub fn apply(&self, x_std: &[f64]) -> Vec<f64> {
        let mut x = match &self.map {
            Some(t) => {
                let mut out = vec![0.0; t.rows()];
                t.apply_into(x_std, &mut out);
                out
            }
            None => x_std.to_vec(),
        };
        if let Some(x0) = &self.offset {
            x.iter_mut().zip(x0).for_each(|(a, b)| *a += b);
        }
        x
    }
}

/// `b = A x + e` with `x ~ N(0, I_n)`, `e ~ N(0, I_m)`.
#[derive(Clone, Debug)]
pub struct StandardFormModel {
    pub op: OpRef,
    pub b: Vec<f64>,
    pub back_transform: BackTransform,
}

impl StandardFormModel {
    pub fn new(op: OpRef, b: Vec<f64>) -> Result<Self> {
        Self::with_back_transform(op, b, BackTransform::identity())
    }

    pub fn from_operator(op: impl LinearOperator + 'static, b: Vec<f64>) -> Result<Self> {
        Self::new(Arc::new(op), b)
    }

    pub fn with_back_transform(op: OpRef, b: Vec<f64>, back_transform: BackTransform) -> Result<Self> {
        check_input(&b, op.rows(), "standard-form data")?;
        if let Some(t) = &back_transform.map {
            if t.cols() != op.cols() {
                return Err(Error::DimensionMismatch {
                    context: "back-transform input dimension",
                    expected: op.cols(),
                    found: t.cols(),
                });
            }
        }
        if let Some(x0) = &back_transform.offset {
            let dim = back_transform.output_dim(op.cols());
            if x0.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "back-transform offset",
                    expected: dim,
                    found: x0.len(),
                });
            }
        }
        Ok(Self {
            op,
            b,
            back_transform,
        })
    }

    /// Data dimension `m`.
    pub fn m(&self) -> usize {
        self.op.rows()
    }

    /// Parameter dimension `n` in standard-form coordinates.
    pub fn n(&self) -> usize {
        self.op.cols()
    }

    /// Same operator and back-transform with replaced data.
    pub fn with_data(&self, b: Vec<f64>) -> Result<Self> {
        Self::with_back_transform(self.op.clone(), b, self.back_transform.clone())
    }
}
