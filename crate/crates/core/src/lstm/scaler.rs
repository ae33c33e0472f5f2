use nalgebra::DMatrix;

use crate::error::{Result, RomError};

/// A dimension whose range is below this fraction of its magnitude is
/// treated as constant. Projected coefficients of an exactly constant mode
/// still wobble at round-off level, which would otherwise be blown up to
/// the full [-1, 1] range.
pub const CONSTANT_RANGE_TOLERANCE: f64 = 1e-9;

/// Per-dimension affine map of `[min, max]` onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits on the rows of `data` (one dimension per row, samples as columns).
    pub fn fit(data: &DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(RomError::InvalidInput("cannot fit a scaler on zero samples".into()));
        }
        let mut min = Vec::with_capacity(data.nrows());
        let mut max = Vec::with_capacity(data.nrows());
        for row in data.row_iter() {
            min.push(row.iter().copied().fold(f64::INFINITY, f64::min));
            max.push(row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(Self { min, max })
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    pub fn is_constant(&self, d: usize) -> bool {
        let (lo, hi) = (self.min[d], self.max[d]);
        hi - lo <= CONSTANT_RANGE_TOLERANCE * lo.abs().max(hi.abs())
    }

    pub fn scale_value(&self, d: usize, x: f64) -> f64 {
        if self.is_constant(d) {
            0.0
        } else {
            2.0 * (x - self.min[d]) / (self.max[d] - self.min[d]) - 1.0
        }
    }

    pub fn unscale_value(&self, d: usize, y: f64) -> f64 {
        if self.is_constant(d) {
            0.5 * (self.min[d] + self.max[d])
        } else {
            self.min[d] + 0.5 * (y + 1.0) * (self.max[d] - self.min[d])
        }
    }

    fn check(&self, data: &DMatrix<f64>) -> Result<()> {
        if data.nrows() != self.dims() {
            return Err(RomError::Dimension(format!(
                "scaler has {} dimensions, data has {} rows",
                self.dims(),
                data.nrows()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(data)?;
        Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |d, j| self.scale_value(d, data[(d, j)])))
    }

    pub fn inverse_transform(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(data)?;
        Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |d, j| self.unscale_value(d, data[(d, j)])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn maps_range_to_unit_interval() {
        let s = MinMaxScaler::fit(&DMatrix::from_row_slice(1, 2, &[0.0, 10.0])).unwrap();
        assert_eq!((s.min[0], s.max[0]), (0.0, 10.0));
        assert_eq!(s.scale_value(0, 5.0), 0.0);
        assert_eq!(s.scale_value(0, 0.0), -1.0);
        assert_eq!(s.scale_value(0, 10.0), 1.0);
    }

    #[test]
    fn constant_row() {
        let s = MinMaxScaler::fit(&DMatrix::from_row_slice(1, 3, &[4.5, 4.5, 4.5])).unwrap();
        assert!(s.is_constant(0));
        assert_eq!(s.scale_value(0, 4.5), 0.0);
        assert_eq!(s.unscale_value(0, 0.0), 4.5);
        assert_eq!(s.unscale_value(0, 0.3), 4.5);
    }

    #[test]
    fn round_off_wobble_counts_as_constant() {
        let s = MinMaxScaler::fit(&DMatrix::from_row_slice(1, 2, &[21.0, 21.0 + 1e-13])).unwrap();
        assert!(s.is_constant(0));
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            let m = DMatrix::from_row_slice(1, rows.len(), &rows);
            let s = MinMaxScaler::fit(&m).unwrap();
            let back = s.inverse_transform(&s.transform(&m).unwrap()).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                if !s.is_constant(0) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
        }
    }
}
