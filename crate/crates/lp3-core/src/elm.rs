//! Finite-width random-feature networks: weight sampling, hidden features
//! with the 1/√N output scaling, minimum-norm ridgeless readout training,
//! and evaluation with a feedback factor σ_fb.

use alloc::vec::Vec;
use core::f64::consts::FRAC_2_SQRT_PI;

use crate::dataset::PeriodicDataset;
use crate::dynamics::Map1D;
use crate::linalg::jacobi_svd_columns;
use crate::math::{cos, erf, exp, sgn0, sin, sqrt};
use crate::rng::Rng;

/// Relative singular-value cutoff of the ridgeless (minimum-norm) readout
/// solve: directions with s ≤ rcond·s_max are dropped.
const RCOND: f64 = 1e-12;

/// Feature nonlinearity of a finite network. Unlike the kernel families this
/// includes the sign function, which only exists at finite width (its
/// infinite-width kernel is the sign-limit family) and has no derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Erf,
    Sin,
    Cos,
    Relu,
    Sgn,
}

impl Activation {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Erf => erf(t),
            Activation::Sin => sin(t),
            Activation::Cos => cos(t),
            Activation::Relu => {
                if t > 0.0 {
                    t
                } else {
                    0.0
                }
            }
            Activation::Sgn => sgn0(t),
        }
    }

    /// φ′(t); `None` for the sign activation. The ReLU kink at 0 is assigned
    /// derivative 0.
    pub fn derivative(self, t: f64) -> Option<f64> {
        match self {
            Activation::Erf => Some(FRAC_2_SQRT_PI * exp(-t * t)),
            Activation::Sin => Some(cos(t)),
            Activation::Cos => Some(-sin(t)),
            Activation::Relu => Some(if t > 0.0 { 1.0 } else { 0.0 }),
            Activation::Sgn => None,
        }
    }
}

/// Distribution of the input weights and biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightLaw {
    /// Standard normal.
    Gaussian,
    /// Uniform on [−1, 1].
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElmError {
    InvalidParam(&'static str),
    /// Training data has more points than the network has nodes.
    DataExceedsWidth { n_data: usize, n_nodes: usize },
    /// Evaluation requested before the readout exists.
    Untrained,
}

impl core::fmt::Display for ElmError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ElmError::InvalidParam(msg) => write!(f, "invalid network parameter: {msg}"),
            ElmError::DataExceedsWidth { n_data, n_nodes } => {
                write!(f, "{n_data} data points exceed network width {n_nodes}")
            }
            ElmError::Untrained => write!(f, "network has no output weights yet"),
        }
    }
}

impl core::error::Error for ElmError {}

/// A one-hidden-layer random-feature network
/// f(x) = W_out · R(x), R_i(x) = φ(σ_w W_in_i x + σ_b b_i)/√N.
/// Input weights are fixed at sampling time; only W_out is trainable.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteNetwork {
    activation: Activation,
    weight_law: WeightLaw,
    sigma_w: f64,
    sigma_b: f64,
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_out: Option<Vec<f64>>,
    degenerate_training: bool,
}

impl FiniteNetwork {
    /// Draw a fresh untrained network. Each node draws its input weight and
    /// then its bias, so the stream matches the kernel Monte-Carlo sampler
    /// and the two produce identical feature sets for identical seeds.
    pub fn sample(
        n_nodes: usize,
        activation: Activation,
        sigma_w: f64,
        sigma_b: f64,
        weight_law: WeightLaw,
        seed: u64,
    ) -> Result<Self, ElmError> {
        if n_nodes == 0 {
            return Err(ElmError::InvalidParam("n_nodes must be >= 1"));
        }
        check_scales(sigma_w, sigma_b)?;
        let mut rng = Rng::from_seed(seed);
        let mut w_in = Vec::with_capacity(n_nodes);
        let mut b_in = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            w_in.push(draw(&mut rng, weight_law));
            b_in.push(draw(&mut rng, weight_law));
        }
        Ok(FiniteNetwork {
            activation,
            weight_law,
            sigma_w,
            sigma_b,
            w_in,
            b_in,
            w_out: None,
            degenerate_training: false,
        })
    }

    /// Rebuild a network from stored fields (e.g. a file this library
    /// wrote), validating shapes and scales.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        activation: Activation,
        weight_law: WeightLaw,
        sigma_w: f64,
        sigma_b: f64,
        w_in: Vec<f64>,
        b_in: Vec<f64>,
        w_out: Option<Vec<f64>>,
        degenerate_training: bool,
    ) -> Result<Self, ElmError> {
        check_scales(sigma_w, sigma_b)?;
        if w_in.is_empty() || w_in.len() != b_in.len() {
            return Err(ElmError::InvalidParam("w_in and b_in lengths must match"));
        }
        if let Some(out) = &w_out {
            if out.len() != w_in.len() {
                return Err(ElmError::InvalidParam("w_out length must equal n_nodes"));
            }
        }
        Ok(FiniteNetwork {
            activation,
            weight_law,
            sigma_w,
            sigma_b,
            w_in,
            b_in,
            w_out,
            degenerate_training,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.w_in.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight_law(&self) -> WeightLaw {
        self.weight_law
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    pub fn w_in(&self) -> &[f64] {
        &self.w_in
    }

    pub fn b_in(&self) -> &[f64] {
        &self.b_in
    }

    pub fn w_out(&self) -> Option<&[f64]> {
        self.w_out.as_deref()
    }

    /// True when the last training hit a feature matrix of deficient
    /// numerical rank; interpolation is then not guaranteed.
    pub fn degenerate_training(&self) -> bool {
        self.degenerate_training
    }

    /// Feature vector R(x) including the 1/√N factor.
    pub fn hidden_features(&self, x: f64) -> Vec<f64> {
        let scale = 1.0 / sqrt(self.n_nodes() as f64);
        self.w_in
            .iter()
            .zip(&self.b_in)
            .map(|(&w, &b)| scale * self.activation.apply(self.sigma_w * w * x + self.sigma_b * b))
            .collect()
    }

    /// Minimum-norm least-squares readout: the ridge λ → 0 limit. Singular
    /// values below `1e-12·s_max` of the feature matrix are truncated; a
    /// deficient rank sets the degenerate-training flag on the result.
    pub fn train_readout(&self, data: &PeriodicDataset) -> Result<FiniteNetwork, ElmError> {
        let n = self.n_nodes();
        let m = data.len();
        if m > n {
            return Err(ElmError::DataExceedsWidth {
                n_data: m,
                n_nodes: n,
            });
        }
        // Column-major N×m feature matrix, one column per data point.
        let mut features = Vec::with_capacity(n * m);
        for &x in data.xs() {
            features.extend_from_slice(&self.hidden_features(x));
        }
        let (s, v) = jacobi_svd_columns(&mut features, n, m);
        let cutoff = RCOND * s[0];
        let mut w = alloc::vec![0.0; n];
        let mut rank = 0;
        for k in 0..m {
            if !(s[k] > cutoff) || s[k] == 0.0 {
                continue;
            }
            rank += 1;
            let vk = &v[k * m..(k + 1) * m];
            let mut proj = 0.0;
            for (j, &y) in data.ys().iter().enumerate() {
                proj += vk[j] * y;
            }
            let factor = proj / (s[k] * s[k]);
            let uk_sk = &features[k * n..(k + 1) * n];
            for i in 0..n {
                w[i] += factor * uk_sk[i];
            }
        }
        let mut trained = self.clone();
        trained.w_out = Some(w);
        trained.degenerate_training = rank < m;
        Ok(trained)
    }

    /// Untrained network with output weights drawn from the input-weight law
    /// scaled by `scale` (for studies of random, unfitted maps).
    pub fn with_random_readout(&self, scale: f64, seed: u64) -> FiniteNetwork {
        let mut rng = Rng::from_seed(seed);
        let w = (0..self.n_nodes())
            .map(|_| scale * draw(&mut rng, self.weight_law))
            .collect();
        let mut net = self.clone();
        net.w_out = Some(w);
        net.degenerate_training = false;
        net
    }

    /// σ_fb · W_out · R(x).
    pub fn eval(&self, x: f64, sigma_fb: f64) -> Result<f64, ElmError> {
        let w_out = self.w_out.as_ref().ok_or(ElmError::Untrained)?;
        let scale = 1.0 / sqrt(self.n_nodes() as f64);
        let mut acc = 0.0;
        for ((&w, &b), &wo) in self.w_in.iter().zip(&self.b_in).zip(w_out) {
            acc += wo * scale * self.activation.apply(self.sigma_w * w * x + self.sigma_b * b);
        }
        Ok(sigma_fb * acc)
    }

    /// Wrap a trained network as a dynamical map with feedback σ_fb.
    pub fn map(&self, sigma_fb: f64) -> Result<FiniteMap, ElmError> {
        if self.w_out.is_none() {
            return Err(ElmError::Untrained);
        }
        Ok(FiniteMap {
            net: self.clone(),
            sigma_fb,
        })
    }
}

fn check_scales(sigma_w: f64, sigma_b: f64) -> Result<(), ElmError> {
    if !(sigma_w.is_finite() && sigma_w > 0.0 && sigma_b.is_finite() && sigma_b > 0.0) {
        return Err(ElmError::InvalidParam("scales must be finite and > 0"));
    }
    Ok(())
}

fn draw(rng: &mut Rng, law: WeightLaw) -> f64 {
    match law {
        WeightLaw::Gaussian => rng.normal(),
        WeightLaw::Uniform => rng.uniform(-1.0, 1.0),
    }
}

/// A trained finite network as a 1-D dynamical system x ↦ σ_fb·f_N(x).
#[derive(Clone, Debug)]
pub struct FiniteMap {
    net: FiniteNetwork,
    sigma_fb: f64,
}

impl FiniteMap {
    pub fn network(&self) -> &FiniteNetwork {
        &self.net
    }

    pub fn sigma_fb(&self) -> f64 {
        self.sigma_fb
    }
}

impl Map1D for FiniteMap {
    fn eval(&self, x: f64) -> f64 {
        self.net
            .eval(x, self.sigma_fb)
            .expect("FiniteMap is always trained")
    }

    fn deriv(&self, x: f64) -> Option<f64> {
        let w_out = self.net.w_out.as_ref()?;
        let scale = 1.0 / sqrt(self.net.n_nodes() as f64);
        let mut acc = 0.0;
        for ((&w, &b), &wo) in self.net.w_in.iter().zip(&self.net.b_in).zip(w_out) {
            let slope = self
                .net
                .activation
                .derivative(self.net.sigma_w * w * x + self.net.sigma_b * b)?;
            acc += wo * scale * slope * self.net.sigma_w * w;
        }
        Some(self.sigma_fb * acc)
    }
}
