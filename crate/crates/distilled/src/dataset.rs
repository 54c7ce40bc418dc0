//! The synthetic dataset — the decision variable every distiller optimizes.

use serde::{Deserialize, Serialize};

use crate::error::{DistillError, Result};
use crate::linalg::Mat;

/// What a column of a synthetic dataset holds. Drives CSV naming, search
/// masks and the integer-valuedness check of the categorical variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    /// Coordinate or label column of PDE interior points. Boundary rows of
    /// the same dataset reuse the theta/y columns; which rows are boundary
    /// rows is positional and tracked by the pinn pipeline.
    InteriorPoint,
    /// Column of a boundary-only sample set.
    BoundaryPoint,
    /// GDBN variable at a time slice.
    DbnVariable { var: usize, slice: usize },
    /// Integer-valued state in {0,1,2}; frozen to the lattice, optimized by
    /// discrete search rather than perturbation.
    CategoricalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.into(),
            role,
        }
    }
}

/// A synthetic dataset: `ipc` rows of real values plus a column schema.
///
/// Invariants enforced on construction: the value matrix is exactly
/// ipc × schema-length, every entry is finite, and categorical columns hold
/// only {0, 1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    schema: Vec<ColumnSpec>,
    values: Mat,
}

impl SyntheticDataset {
    pub fn new(schema: Vec<ColumnSpec>, values: Mat) -> Result<Self> {
        if values.cols() != schema.len() {
            return Err(DistillError::ShapeMismatch {
                context: "synthetic dataset schema",
                expected: schema.len(),
                got: values.cols(),
            });
        }
        if values.rows() == 0 {
            return Err(DistillError::NoSamples("synthetic dataset"));
        }
        let d = SyntheticDataset { schema, values };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.data().iter().enumerate() {
            if !v.is_finite() {
                return Err(DistillError::NonFinite {
                    context: "synthetic dataset entry",
                    index: i,
                });
            }
        }
        for (c, spec) in self.schema.iter().enumerate() {
            if spec.role == ColumnRole::CategoricalState {
                for r in 0..self.values.rows() {
                    let v = self.values.get(r, c);
                    if v != 0.0 && v != 1.0 && v != 2.0 {
                        return Err(DistillError::StateOutOfRange {
                            value: v as i64,
                            index: r * self.values.cols() + c,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ipc(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn schema(&self) -> &[ColumnSpec] {
        &self.schema
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Mat {
        &mut self.values
    }

    /// Replace the value matrix, keeping the schema. Shape-checked.
    pub fn with_values(&self, values: Mat) -> Result<Self> {
        SyntheticDataset::new(self.schema.clone(), values)
    }

    /// True when every column is continuous and may be perturbed by the
    /// gradient-style optimizers.
    pub fn is_continuous(&self) -> bool {
        self.schema
            .iter()
            .all(|s| s.role != ColumnRole::CategoricalState)
    }
}

/// Schema for a GDBN-shaped dataset: columns `v{i}_t{s}`, slice-major.
pub fn dbn_schema(n_vars: usize, n_slices: usize) -> Vec<ColumnSpec> {
    let mut schema = Vec::with_capacity(n_vars * n_slices);
    for s in 0..n_slices {
        for v in 0..n_vars {
            schema.push(ColumnSpec::new(
                format!("v{v}_t{s}"),
                ColumnRole::DbnVariable { var: v, slice: s },
            ));
        }
    }
    schema
}

/// Schema for a PDE point cloud: columns r, theta, y.
pub fn pinn_schema() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::new("r", ColumnRole::InteriorPoint),
        ColumnSpec::new("theta", ColumnRole::InteriorPoint),
        ColumnSpec::new("y", ColumnRole::InteriorPoint),
    ]
}

/// Schema for a flattened categorical window: columns t{t}_f{f}, time-major.
pub fn categorical_schema(length: usize, n_features: usize) -> Vec<ColumnSpec> {
    let mut schema = Vec::with_capacity(length * n_features);
    for t in 0..length {
        for f in 0..n_features {
            schema.push(ColumnSpec::new(
                format!("t{t}_f{f}"),
                ColumnRole::CategoricalState,
            ));
        }
    }
    schema
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        let schema = pinn_schema();
        let values = Mat::from_rows(vec![vec![0.1, 0.2, f64::NAN]]);
        assert!(SyntheticDataset::new(schema, values).is_err());
    }

    #[test]
    fn rejects_out_of_range_categorical() {
        let schema = categorical_schema(2, 1);
        let values = Mat::from_rows(vec![vec![0.0, 3.0]]);
        assert!(SyntheticDataset::new(schema, values).is_err());
    }

    #[test]
    fn accepts_valid_categorical() {
        let schema = categorical_schema(2, 1);
        let values = Mat::from_rows(vec![vec![0.0, 2.0], vec![1.0, 1.0]]);
        let d = SyntheticDataset::new(schema, values).unwrap();
        assert_eq!(d.ipc(), 2);
        assert!(!d.is_continuous());
    }

    #[test]
    fn schema_width_must_match() {
        let schema = pinn_schema();
        let values = Mat::from_rows(vec![vec![0.1, 0.2]]);
        assert!(SyntheticDataset::new(schema, values).is_err());
    }
}
