//! Designs and training data containers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of `n` input points in `p` dimensions, one point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>, // row-major
}

impl DesignMatrix {
    /// Build a design from row slices. All rows must share one length ≥ 1.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "design matrix needs at least one row".into(),
            ));
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::InvalidArgument(
                "design matrix needs at least one column".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "design matrix row",
                    expected: p,
                    got: rows[i].len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols: p,
            data,
        })
    }

    /// Build an empty design with a known input dimension.
    pub fn empty(p: usize) -> Self {
        Self {
            rows: 0,
            cols: p,
            data: Vec::new(),
        }
    }

    /// Single-column design from a slice of scalars.
    pub fn from_column(xs: &[f64]) -> Self {
        Self {
            rows: xs.len(),
            cols: 1,
            data: xs.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Copy into an `nalgebra` matrix (n × p).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().copied())
    }

    /// Index pair of the first exactly duplicated row, if any.
    pub fn duplicate_rows(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in (i + 1)..self.rows {
                if self.row(i) == self.row(j) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Stack several designs (shared dimension) into one.
    pub fn vstack(parts: &[&DesignMatrix]) -> Result<Self> {
        let p = parts
            .iter()
            .find(|d| d.cols > 0)
            .map(|d| d.cols)
            .unwrap_or(0);
        if p == 0 {
            return Err(Error::InvalidArgument("cannot stack empty designs".into()));
        }
        let mut data = Vec::new();
        let mut rows = 0;
        for d in parts {
            if !d.is_empty() && d.cols != p {
                return Err(Error::DimensionMismatch {
                    context: "design stack",
                    expected: p,
                    got: d.cols,
                });
            }
            data.extend_from_slice(&d.data);
            rows += d.rows;
        }
        Ok(Self {
            rows,
            cols: p,
            data,
        })
    }

    /// Per-column (min, max) over the rows.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.cols];
        for r in self.rows_iter() {
            for (j, &v) in r.iter().enumerate() {
                out[j].0 = out[j].0.min(v);
                out[j].1 = out[j].1.max(v);
            }
        }
        out
    }

    /// Translate every point by `shift` (length p).
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "design shift",
                expected: self.cols,
                got: shift.len(),
            });
        }
        let mut data = self.data.clone();
        for r in data.chunks_exact_mut(self.cols) {
            for (v, s) in r.iter_mut().zip(shift) {
                *v += s;
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}

/// Training data for one fidelity level: a design and its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelData {
    pub x: DesignMatrix,
    #[serde(with = "crate::design::vec_f64")]
    pub y: DVector<f64>,
    /// 1-based level index; 1 is the cheapest level.
    pub level_index: usize,
}

impl LevelData {
    /// Validates that `y` matches the design and rejects duplicated rows.
    pub fn new(x: DesignMatrix, y: Vec<f64>, level_index: usize) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                context: "level outputs",
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if level_index == 0 {
            return Err(Error::InvalidArgument("level index starts at 1".into()));
        }
        if let Some((i, j)) = x.duplicate_rows() {
            return Err(Error::InvalidArgument(format!(
                "design rows {i} and {j} of level {level_index} are identical"
            )));
        }
        Ok(Self {
            x,
            y: DVector::from_vec(y),
            level_index,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Ordered training data for every level, cheapest (index 1) first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiLevelData {
    levels: Vec<LevelData>,
}

impl MultiLevelData {
    pub fn new(levels: Vec<LevelData>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("need at least one level".into()));
        }
        let p = levels[0].input_dim();
        let mut prev = 0usize;
        for l in &levels {
            if l.input_dim() != p {
                return Err(Error::DimensionMismatch {
                    context: "level input dimension",
                    expected: p,
                    got: l.input_dim(),
                });
            }
            if l.level_index <= prev {
                return Err(Error::InvalidArgument(
                    "level indices must be strictly increasing".into(),
                ));
            }
            prev = l.level_index;
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn input_dim(&self) -> usize {
        self.levels[0].input_dim()
    }

    pub fn top(&self) -> &LevelData {
        self.levels.last().expect("at least one level")
    }

    /// Stack the designs and outputs of `levels[..k]` into one data set.
    pub fn stacked(&self, k: usize) -> Result<(DesignMatrix, DVector<f64>)> {
        let parts: Vec<&DesignMatrix> = self.levels[..k].iter().map(|l| &l.x).collect();
        let x = DesignMatrix::vstack(&parts)?;
        let mut y = Vec::with_capacity(x.nrows());
        for l in &self.levels[..k] {
            y.extend(l.y.iter().copied());
        }
        Ok((x, DVector::from_vec(y)))
    }
}

/// Serde adapter: store `DVector<f64>` as a plain JSON array.
pub(crate) mod vec_f64 {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_rejected() {
        let err = DesignMatrix::from_rows(&[vec![0.0, 1.0], vec![0.5]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn duplicate_rows_detected() {
        let d = DesignMatrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4], vec![0.1, 0.2]]).unwrap();
        assert_eq!(d.duplicate_rows(), Some((0, 2)));
        assert!(LevelData::new(d, vec![1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn stacking_preserves_order() {
        let a = DesignMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let b = DesignMatrix::from_rows(&[vec![2.0]]).unwrap();
        let s = DesignMatrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(s.nrows(), 3);
        assert_eq!(s.row(2), &[2.0]);
    }

    #[test]
    fn level_indices_must_increase() {
        let x1 = DesignMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let x2 = DesignMatrix::from_rows(&[vec![0.5]]).unwrap();
        let l1 = LevelData::new(x1, vec![0.0, 1.0], 2).unwrap();
        let l2 = LevelData::new(x2, vec![0.5], 1).unwrap();
        assert!(MultiLevelData::new(vec![l1, l2]).is_err());
    }
}
