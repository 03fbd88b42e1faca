use std::sync::Arc;

use num_complex::Complex64;

use super::LatticeGrid;
use crate::error::{Error, Result};

/// Real scalar per site, e.g. the quadratures `X` and `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Arc<LatticeGrid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Arc<LatticeGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Arc<LatticeGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<LatticeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    /// Evaluates `f(x, y)` at every site position.
    pub fn from_fn(grid: Arc<LatticeGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.position(i);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<LatticeGrid> {
        &self.grid
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

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(site) => Err(Error::NonFinite { site, context }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<RealField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(RealField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect()
    }
}

/// An independent `(plus, cross)` pair of complex fields, e.g. `(α, α⁺)`.
///
/// The two members are not constrained to be complex conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFieldPair {
    grid: Arc<LatticeGrid>,
    pub plus: Vec<Complex64>,
    pub cross: Vec<Complex64>,
}

impl ComplexFieldPair {
    pub fn zeros(grid: Arc<LatticeGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            plus: vec![Complex64::new(0.0, 0.0); n],
            cross: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn uniform(grid: Arc<LatticeGrid>, plus: Complex64, cross: Complex64) -> Self {
        let n = grid.len();
        Self {
            grid,
            plus: vec![plus; n],
            cross: vec![cross; n],
        }
    }

    pub fn from_parts(
        grid: Arc<LatticeGrid>,
        plus: Vec<Complex64>,
        cross: Vec<Complex64>,
    ) -> Result<Self> {
        if plus.len() != grid.len() || cross.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, plus, cross })
    }

    pub fn grid(&self) -> &Arc<LatticeGrid> {
        &self.grid
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        let bad = |v: &[Complex64]| {
            v.iter()
                .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        };
        match bad(&self.plus).or_else(|| bad(&self.cross)) {
            Some(site) => Err(Error::NonFinite { site, context }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.cross)
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}
