//! Training datasets: short lists of (x, y) pairs, usually a periodic orbit
//! written as X = [a, b, c], Y = [b, c, a].

use alloc::vec::Vec;

use crate::math::abs;

/// Relative separation required between any two inputs.
const MIN_RELATIVE_GAP: f64 = 1e-12;

/// How a dataset was built, which downstream analyses use to decide what the
/// trained map is expected to do (e.g. period-3 data forces a chaotic
/// quadratic normal form).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetLabel {
    /// X is a length-n orbit and Y its cyclic shift by one.
    PeriodN(usize),
    /// X = [a, b, c], Y = [b, c, d] with d ≤ a < b < c or d ≥ a > b > c,
    /// the ordering that forces period three (and with it all periods).
    LiYorke,
    /// Arbitrary pairs with distinct inputs.
    Generic,
}

/// Why a dataset could not be constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetError {
    /// No points were supplied.
    Empty,
    /// xs and ys lengths differ.
    LengthMismatch { xs: usize, ys: usize },
    /// Some coordinate is NaN or infinite.
    NonFinite,
    /// Two inputs closer than the relative separation floor.
    DuplicateInputs { i: usize, j: usize },
    /// The four Li–Yorke values are not monotone in either direction.
    InvalidLiYorkeOrder,
}

impl core::fmt::Display for DatasetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DatasetError::Empty => write!(f, "dataset needs at least one point"),
            DatasetError::LengthMismatch { xs, ys } => {
                write!(f, "xs has {xs} entries but ys has {ys}")
            }
            DatasetError::NonFinite => write!(f, "dataset coordinates must be finite"),
            DatasetError::DuplicateInputs { i, j } => {
                write!(f, "inputs {i} and {j} are closer than the 1e-12 relative gap")
            }
            DatasetError::InvalidLiYorkeOrder => {
                write!(f, "need d <= a < b < c or d >= a > b > c")
            }
        }
    }
}

impl core::error::Error for DatasetError {}

/// Training pairs (X, Y) with pairwise-distinct inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicDataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    label: DatasetLabel,
}

impl PeriodicDataset {
    /// Dataset from a period-n orbit: X = points, Y = points shifted
    /// cyclically by one, so the trained map should step along the orbit.
    pub fn period_orbit(points: &[f64]) -> Result<Self, DatasetError> {
        let xs: Vec<f64> = points.to_vec();
        let n = xs.len();
        let ys: Vec<f64> = (0..n).map(|i| xs[(i + 1) % n]).collect();
        Self::validated(xs, ys, DatasetLabel::PeriodN(n))
    }

    /// Dataset [a, b, c] → [b, c, d] in the Li–Yorke ordering
    /// d ≤ a < b < c (or the mirror d ≥ a > b > c).
    pub fn li_yorke(a: f64, b: f64, c: f64, d: f64) -> Result<Self, DatasetError> {
        let ascending = d <= a && a < b && b < c;
        let descending = d >= a && a > b && b > c;
        if !(ascending || descending) {
            if [a, b, c, d].iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite);
            }
            return Err(DatasetError::InvalidLiYorkeOrder);
        }
        Self::validated(
            [a, b, c].to_vec(),
            [b, c, d].to_vec(),
            DatasetLabel::LiYorke,
        )
    }

    /// Arbitrary pairs with distinct inputs.
    pub fn generic(xs: &[f64], ys: &[f64]) -> Result<Self, DatasetError> {
        Self::validated(xs.to_vec(), ys.to_vec(), DatasetLabel::Generic)
    }

    /// Rebuild a dataset that was validated before (e.g. read back from a
    /// file this library wrote). Skips all checks.
    pub fn from_raw_unchecked(xs: Vec<f64>, ys: Vec<f64>, label: DatasetLabel) -> Self {
        PeriodicDataset { xs, ys, label }
    }

    fn validated(
        xs: Vec<f64>,
        ys: Vec<f64>,
        label: DatasetLabel,
    ) -> Result<Self, DatasetError> {
        Self::check(&xs, &ys)?;
        Ok(PeriodicDataset { xs, ys, label })
    }

    /// Re-check the construction invariants, e.g. on a dataset rebuilt with
    /// [`PeriodicDataset::from_raw_unchecked`].
    pub fn validate(&self) -> Result<(), DatasetError> {
        Self::check(&self.xs, &self.ys)
    }

    fn check(xs: &[f64], ys: &[f64]) -> Result<(), DatasetError> {
        if xs.is_empty() {
            return Err(DatasetError::Empty);
        }
        if xs.len() != ys.len() {
            return Err(DatasetError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite);
        }
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                let scale = f64::max(1.0, f64::max(abs(xs[i]), abs(xs[j])));
                if abs(xs[i] - xs[j]) <= MIN_RELATIVE_GAP * scale {
                    return Err(DatasetError::DuplicateInputs { i, j });
                }
            }
        }
        Ok(())
    }

    /// Inputs X.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Targets Y.
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Construction label.
    pub fn label(&self) -> DatasetLabel {
        self.label
    }

    /// Number of pairs |D|.
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    /// Always false for a constructed dataset; mirrors `len`.
    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}
