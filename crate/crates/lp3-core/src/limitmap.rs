//! Trained maps in the infinite-width limit: ridgeless kernel regression
//! against a closed-form kernel, evaluated exactly and wrapped as a 1-D
//! dynamical system with a feedback factor σ_fb.

use alloc::vec::Vec;

use crate::dataset::{DatasetError, PeriodicDataset};
use crate::dynamics::Map1D;
use crate::kernels::{gram_matrix, KernelError, KernelSpec};
use crate::linalg::{solve_spd_ladder, SingularGram};
use crate::math::abs;

#[derive(Clone, Debug, PartialEq)]
pub enum FitError {
    Dataset(DatasetError),
    Kernel(KernelError),
    /// The kernel Gram matrix on the data is numerically singular.
    SingularGram { condition: f64 },
    Shape(&'static str),
}

impl From<DatasetError> for FitError {
    fn from(e: DatasetError) -> Self {
        FitError::Dataset(e)
    }
}

impl From<KernelError> for FitError {
    fn from(e: KernelError) -> Self {
        FitError::Kernel(e)
    }
}

impl From<SingularGram> for FitError {
    fn from(e: SingularGram) -> Self {
        FitError::SingularGram {
            condition: e.condition,
        }
    }
}

impl core::fmt::Display for FitError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FitError::Dataset(e) => write!(f, "dataset: {e}"),
            FitError::Kernel(e) => write!(f, "kernel: {e}"),
            FitError::SingularGram { condition } => {
                write!(f, "gram matrix is numerically singular (condition {condition:e})")
            }
            FitError::Shape(msg) => write!(f, "shape mismatch: {msg}"),
        }
    }
}

impl core::error::Error for FitError {}

/// The exact infinite-width trained map
/// f(x) = σ_fb · Σ_i w_i Θ(x, x_i), w = Θ(X, X)⁻¹ y.
#[derive(Clone, Debug)]
pub struct TrainedMap {
    data: PeriodicDataset,
    kernel: KernelSpec,
    dual_coeffs: Vec<f64>,
    sigma_fb: f64,
    gram_condition: f64,
}

/// Solve the kernel normal equations on `data` exactly. The returned map has
/// feedback 1; use [`TrainedMap::with_feedback`] to rescale.
pub fn fit_limit(data: &PeriodicDataset, kernel: &KernelSpec) -> Result<TrainedMap, FitError> {
    data.validate()?;
    let gram = gram_matrix(kernel, data.xs())?;
    let (dual_coeffs, gram_condition) = solve_spd_ladder(&gram, data.len(), data.ys())?;
    Ok(TrainedMap {
        data: data.clone(),
        kernel: kernel.clone(),
        dual_coeffs,
        sigma_fb: 1.0,
        gram_condition,
    })
}

impl TrainedMap {
    /// Rebuild from stored fields (e.g. a map file this library wrote).
    pub fn from_parts(
        data: PeriodicDataset,
        kernel: KernelSpec,
        dual_coeffs: Vec<f64>,
        sigma_fb: f64,
        gram_condition: f64,
    ) -> Result<Self, FitError> {
        if dual_coeffs.len() != data.len() {
            return Err(FitError::Shape("dual coefficient count must match data"));
        }
        if !sigma_fb.is_finite() || dual_coeffs.iter().any(|w| !w.is_finite()) {
            return Err(FitError::Shape("coefficients must be finite"));
        }
        Ok(TrainedMap {
            data,
            kernel,
            dual_coeffs,
            sigma_fb,
            gram_condition,
        })
    }

    pub fn data(&self) -> &PeriodicDataset {
        &self.data
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    pub fn sigma_fb(&self) -> f64 {
        self.sigma_fb
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    /// Same fit with a different feedback factor; the dual coefficients are
    /// untouched (feedback multiplies the whole map, not the regression).
    pub fn with_feedback(&self, sigma_fb: f64) -> TrainedMap {
        let mut m = self.clone();
        m.sigma_fb = sigma_fb;
        m
    }

    /// σ_fb · Σ_i w_i Θ(x, x_i); NaN when the kernel cannot be evaluated.
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (&xi, &w) in self.data.xs().iter().zip(&self.dual_coeffs) {
            match self.kernel.eval(x, xi) {
                Ok(v) => acc += w * v,
                Err(_) => return f64::NAN,
            }
        }
        self.sigma_fb * acc
    }

    /// First (`order` 1) or second (`order` 2) derivative of the map in x.
    pub fn evaluate_deriv(&self, x: f64, order: u8) -> Result<f64, KernelError> {
        let mut acc = 0.0;
        for (&xi, &w) in self.data.xs().iter().zip(&self.dual_coeffs) {
            let d = match order {
                1 => self.kernel.dx(x, xi)?,
                2 => self.kernel.dx2(x, xi)?,
                _ => return Err(KernelError::Unsupported("derivative order must be 1 or 2")),
            };
            acc += w * d;
        }
        Ok(self.sigma_fb * acc)
    }
}

impl Map1D for TrainedMap {
    fn eval(&self, x: f64) -> f64 {
        self.evaluate(x)
    }

    fn deriv(&self, x: f64) -> Option<f64> {
        self.evaluate_deriv(x, 1).ok()
    }
}

/// Trains on the three-point cycle (a, −a, c) and on its pointwise negation,
/// and returns the largest violation of f_D(x) = −f_{−D}(−x) over `grid`.
/// Zero (to rounding) exactly when the kernel is sign-symmetric.
pub fn symmetry_residual(
    a: f64,
    c: f64,
    kernel: &KernelSpec,
    grid: &[f64],
) -> Result<f64, FitError> {
    let plus = PeriodicDataset::period_orbit(&[a, -a, c])?;
    let minus = PeriodicDataset::period_orbit(&[-a, a, -c])?;
    let f_plus = fit_limit(&plus, kernel)?;
    let f_minus = fit_limit(&minus, kernel)?;
    let mut worst = 0.0;
    for &x in grid {
        let r = abs(f_plus.evaluate(x) + f_minus.evaluate(-x));
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}
