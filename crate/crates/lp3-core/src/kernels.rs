//! Infinite-width kernels Θ(x, y) of one-dimensional random-feature networks:
//! closed forms for erf/sin/cos/ReLU features, their large-scale limits, an
//! output-bias wrapper, a numerically integrated uniform-weight kernel, and
//! deep NNGP/NTK recursions, together with ∂Θ/∂x, ∂²Θ/∂x², and Monte-Carlo
//! estimates from finitely many sampled features.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, FRAC_2_SQRT_PI, PI};

use crate::math::{abs, acos, asin, clamp_unit, cos, erf, exp, expm1, sgn0, sin, sqrt};
use crate::quadrature::integrate_unit_box;
use crate::rng::Rng;

/// Tolerated arcsin/arccos argument overshoot before a domain error: the
/// closed forms keep arguments in [−1, 1] exactly, so anything beyond
/// roundoff indicates a real problem.
const CLAMP_TOL: f64 = 1e-9;

/// Default quadrature order for the uniform-weight kernel (nodes per axis).
pub const DEFAULT_UNIFORM_NODES: usize = 128;

/// Feature nonlinearity φ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Erf,
    Sin,
    Cos,
    Relu,
}

impl Activation {
    /// φ(t).
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
        }
    }

    /// φ′(t). For ReLU the kink at 0 is assigned derivative 0.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Activation::Erf => FRAC_2_SQRT_PI * exp(-t * t),
            Activation::Sin => cos(t),
            Activation::Cos => -sin(t),
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Which deep-kernel recursion to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeepKind {
    /// Feature (NNGP) kernel K of the last hidden layer.
    Nngp,
    /// Tangent kernel Θ accumulated across layers.
    Ntk,
}

/// Kernel family: which feature distribution and architecture Θ describes.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    /// Gaussian weights, φ = erf.
    Erf,
    /// Gaussian weights, φ = sin.
    Sin,
    /// Gaussian weights, φ = cos.
    Cos,
    /// Gaussian weights, φ = ReLU.
    Relu,
    /// σ → ∞ limit of the erf kernel; also the kernel of sign features.
    /// Carries no weight scales.
    SgnLimit,
    /// σ → ∞ limit of the sin/cos kernels: ½·1{x = y}, exact float equality.
    DeltaLimit,
    /// Weights and biases uniform on [−1, 1]; Θ evaluated by tensorized
    /// Gauss–Legendre quadrature with `nodes` points per axis.
    UniformNumeric { activation: Activation, nodes: usize },
    /// Infinite-width deep network with `depth` hidden layers, reporting the
    /// NNGP or NTK recursion.
    Deep {
        activation: Activation,
        depth: usize,
        kind: DeepKind,
    },
    /// Inner kernel plus a trainable output bias: Θ(x, y) + 1.
    WithOutputBias(Box<KernelFamily>),
}

/// What went wrong inside a kernel computation.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    /// A [`KernelSpec`] scale or family parameter is out of range.
    InvalidSpec(&'static str),
    /// x or y is NaN or infinite.
    NonFiniteInput,
    /// An arcsin/arccos argument overshot [−1, 1] beyond roundoff tolerance.
    NumericalDomain { argument: f64 },
    /// The requested derivative does not exist at this point (e.g. the
    /// sign-limit kernel on the diagonal).
    SingularPoint,
    /// The operation is not defined for this family.
    Unsupported(&'static str),
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::InvalidSpec(msg) => write!(f, "invalid kernel spec: {msg}"),
            KernelError::NonFiniteInput => write!(f, "kernel inputs must be finite"),
            KernelError::NumericalDomain { argument } => {
                write!(f, "arc-function argument {argument} outside [-1,1] beyond tolerance")
            }
            KernelError::SingularPoint => {
                write!(f, "derivative is singular at this point (x on the diagonal)")
            }
            KernelError::Unsupported(msg) => write!(f, "operation not defined: {msg}"),
        }
    }
}

impl core::error::Error for KernelError {}

/// Mean and standard error of a finite-feature Monte-Carlo kernel estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// A kernel family plus the weight scales σ_w (input weights) and σ_b
/// (biases). The two limit families ignore the scales but validation still
/// requires them to be positive and finite, keeping the constructor uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    sigma_w: f64,
    sigma_b: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, sigma_w: f64, sigma_b: f64) -> Result<Self, KernelError> {
        if !(sigma_w.is_finite() && sigma_w > 0.0) {
            return Err(KernelError::InvalidSpec("sigma_w must be finite and > 0"));
        }
        if !(sigma_b.is_finite() && sigma_b > 0.0) {
            return Err(KernelError::InvalidSpec("sigma_b must be finite and > 0"));
        }
        validate_family(&family)?;
        Ok(KernelSpec {
            family,
            sigma_w,
            sigma_b,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    /// Θ(x, y).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, KernelError> {
        check_finite(x, y)?;
        family_eval(&self.family, self.sigma_w, self.sigma_b, x, y)
    }

    /// Θ(x, y) − Θ(0, 0) for the families whose closed forms let the
    /// difference be taken analytically: erf (arcsine difference identity),
    /// sin/cos (expm1 envelopes), and output-bias wrappers of these (the
    /// bias constant cancels). `None` for every other family.
    ///
    /// The point is conditioning: at small σ_w the kernel is the constant
    /// Θ(0, 0) plus an O(σ_w²) correction, and `eval(x, y) - eval(0, 0)`
    /// loses that correction to rounding exactly where solvers need it.
    pub(crate) fn eval_centered(&self, x: f64, y: f64) -> Option<Result<f64, KernelError>> {
        fn go(
            family: &KernelFamily,
            sw2: f64,
            sb2: f64,
            x: f64,
            y: f64,
        ) -> Option<Result<f64, KernelError>> {
            match family {
                KernelFamily::Erf => Some(erf_centered(sw2, sb2, x, y)),
                KernelFamily::Sin => Some(Ok(sincos_centered(sw2, sb2, x, y, -1.0))),
                KernelFamily::Cos => Some(Ok(sincos_centered(sw2, sb2, x, y, 1.0))),
                KernelFamily::WithOutputBias(inner) => go(inner, sw2, sb2, x, y),
                _ => None,
            }
        }
        if let Err(e) = check_finite(x, y) {
            return Some(Err(e));
        }
        let sw2 = self.sigma_w * self.sigma_w;
        let sb2 = self.sigma_b * self.sigma_b;
        go(&self.family, sw2, sb2, x, y)
    }

    /// ∂Θ/∂x(x, y). Defined for every family except DeltaLimit; the
    /// sign-limit kernel and the deep ReLU NTK are singular at x = y.
    pub fn dx(&self, x: f64, y: f64) -> Result<f64, KernelError> {
        check_finite(x, y)?;
        family_dx(&self.family, self.sigma_w, self.sigma_b, x, y)
    }

    /// ∂²Θ/∂x²(x, y) for the four closed-form single-layer families. The
    /// ReLU kernel's second derivative extends continuously to 0 on the
    /// diagonal (the kink contributions of |x−y| and ψ cancel), so x = y
    /// returns exactly 0.
    pub fn dx2(&self, x: f64, y: f64) -> Result<f64, KernelError> {
        check_finite(x, y)?;
        let sw2 = self.sigma_w * self.sigma_w;
        let sb2 = self.sigma_b * self.sigma_b;
        match &self.family {
            KernelFamily::Erf => erf_dx2(sw2, sb2, x, y),
            KernelFamily::Sin => Ok(sincos_dx2(sw2, sb2, x, y, -1.0)),
            KernelFamily::Cos => Ok(sincos_dx2(sw2, sb2, x, y, 1.0)),
            KernelFamily::Relu => Ok(relu_dx2(self.sigma_w, self.sigma_b, x, y)),
            _ => Err(KernelError::Unsupported(
                "second derivative: only erf/sin/cos/relu",
            )),
        }
    }

    /// Empirical Θ̂(x, y) from `n_features` sampled feature pairs, with the
    /// standard error of the mean. Deterministic in `seed`.
    pub fn monte_carlo(
        &self,
        x: f64,
        y: f64,
        n_features: usize,
        seed: u64,
    ) -> Result<MonteCarloEstimate, KernelError> {
        check_finite(x, y)?;
        if n_features == 0 {
            return Err(KernelError::InvalidSpec("n_features must be >= 1"));
        }
        let mut rng = Rng::from_seed(seed);
        family_mc(
            &self.family,
            self.sigma_w,
            self.sigma_b,
            x,
            y,
            n_features,
            &mut rng,
        )
    }
}

/// Row-major Gram matrix Θ(x_i, x_j) over the given points.
pub fn gram_matrix(spec: &KernelSpec, xs: &[f64]) -> Result<Vec<f64>, KernelError> {
    let n = xs.len();
    let mut g = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval(xs[i], xs[j])?;
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    Ok(g)
}

fn check_finite(x: f64, y: f64) -> Result<(), KernelError> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(KernelError::NonFiniteInput)
    }
}

fn validate_family(family: &KernelFamily) -> Result<(), KernelError> {
    match family {
        KernelFamily::UniformNumeric { nodes, .. } => {
            if !(4..=2048).contains(nodes) {
                return Err(KernelError::InvalidSpec(
                    "uniform kernel nodes must be in 4..=2048",
                ));
            }
        }
        KernelFamily::Deep { depth, .. } => {
            if !(1..=16).contains(depth) {
                return Err(KernelError::InvalidSpec("deep kernel depth must be in 1..=16"));
            }
        }
        KernelFamily::WithOutputBias(inner) => validate_family(inner)?,
        _ => {}
    }
    Ok(())
}

fn clamped_asin(s: f64) -> Result<f64, KernelError> {
    match clamp_unit(s, CLAMP_TOL) {
        Some(c) => Ok(asin(c)),
        None => Err(KernelError::NumericalDomain { argument: s }),
    }
}

fn clamped_acos(s: f64) -> Result<f64, KernelError> {
    match clamp_unit(s, CLAMP_TOL) {
        Some(c) => Ok(acos(c)),
        None => Err(KernelError::NumericalDomain { argument: s }),
    }
}

// ---------------------------------------------------------------------------
// Single-layer closed forms.
// ---------------------------------------------------------------------------

fn erf_eval(sw2: f64, sb2: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let v = sb2 + sw2 * x * y;
    let a = 1.0 + 2.0 * (sb2 + sw2 * x * x);
    let b = 1.0 + 2.0 * (sb2 + sw2 * y * y);
    Ok(FRAC_2_PI * clamped_asin(2.0 * v / sqrt(a * b))?)
}

/// a·b − 4v² of the erf kernel, expanded into a cancellation-free form.
fn erf_q(sw2: f64, sb2: f64, x: f64, y: f64) -> f64 {
    1.0 + 4.0 * sb2 + 2.0 * sw2 * (x * x + y * y) + 4.0 * sb2 * sw2 * (x - y) * (x - y)
}

fn erf_dx(sw2: f64, sb2: f64, x: f64, y: f64) -> f64 {
    let n = y - 2.0 * sb2 * (x - y);
    let a = 1.0 + 2.0 * (sb2 + sw2 * x * x);
    let q = erf_q(sw2, sb2, x, y);
    4.0 * sw2 / PI * n / (a * sqrt(q))
}

fn erf_dx2(sw2: f64, sb2: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let n = y - 2.0 * sb2 * (x - y);
    let dn = -2.0 * sb2;
    let a = 1.0 + 2.0 * (sb2 + sw2 * x * x);
    let da = 4.0 * sw2 * x;
    let q = erf_q(sw2, sb2, x, y);
    let dq = 4.0 * sw2 * x + 8.0 * sb2 * sw2 * (x - y);
    let sq = sqrt(q);
    Ok(4.0 * sw2 / PI * (dn / (a * sq) - n * da / (a * a * sq) - n * dq / (2.0 * a * q * sq)))
}

/// Θ(x, y) − Θ(0, 0) for the erf kernel without subtractive cancellation.
///
/// Writing the kernel as (2/π)·asin u with u = 2v/√(ab), the value at the
/// origin is (2/π)·asin u₀ with u₀ = 2σ_b²/s, s = 1 + 2σ_b². For u ≥ 0 the
/// two arcsines share a sign and fold into one on the principal branch,
///   asin u − asin u₀ = asin[(u² − u₀²) / (u·√(1−u₀²) + u₀·√(1−u²))],
/// where 1 − u₀² = (1+4σ_b²)/s² and 1 − u² = q/(ab) with q the expanded
/// form from [`erf_q`]. The numerator is expanded symbolically so the
/// O(σ_w²) leading term survives at full precision:
///   (a·b·s²/4)·(u² − u₀²) = 2σ_w²·s·σ_b²·(xy − σ_b²(x−y)²)
///                         + σ_w⁴·x²y²·(1+4σ_b²).
/// For v < 0 the arcsines have opposite signs — their difference is an
/// addition in magnitude with no cancellation, and the folded form can
/// leave the principal branch — so the plain two-term evaluation is used.
fn erf_centered(sw2: f64, sb2: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let v = sb2 + sw2 * x * y;
    if v < 0.0 {
        return Ok(erf_eval(sw2, sb2, x, y)? - erf_eval(sw2, sb2, 0.0, 0.0)?);
    }
    let s = 1.0 + 2.0 * sb2;
    let a = s + 2.0 * sw2 * x * x;
    let b = s + 2.0 * sw2 * y * y;
    let w = 1.0 + 4.0 * sb2;
    let num = 2.0 * sw2 * s * sb2 * (x * y - sb2 * (x - y) * (x - y))
        + sw2 * sw2 * x * x * y * y * w;
    let den = sqrt(a * b) * s * (v * sqrt(w) + sb2 * sqrt(erf_q(sw2, sb2, x, y)));
    if !(den > 0.0) {
        return Ok(erf_eval(sw2, sb2, x, y)? - erf_eval(sw2, sb2, 0.0, 0.0)?);
    }
    Ok(FRAC_2_PI * clamped_asin(2.0 * num / den)?)
}

/// The two Gaussian envelopes shared by the sin and cos kernels:
/// e^{−σ_w²(x−y)²/2} and e^{−σ_w²(x+y)²/2 − 2σ_b²}.
fn sincos_envelopes(sw2: f64, sb2: f64, x: f64, y: f64) -> (f64, f64) {
    let em = exp(-sw2 * (x - y) * (x - y) / 2.0);
    let ep = exp(-sw2 * (x + y) * (x + y) / 2.0 - 2.0 * sb2);
    (em, ep)
}

/// `pm` = −1 gives the sin kernel ½(E₋ − E₊), +1 the cos kernel ½(E₋ + E₊).
fn sincos_eval(sw2: f64, sb2: f64, x: f64, y: f64, pm: f64) -> f64 {
    let (em, ep) = sincos_envelopes(sw2, sb2, x, y);
    0.5 * (em + pm * ep)
}

/// Θ(x, y) − Θ(0, 0) for the sin/cos kernels: each envelope equals its
/// origin value times e^{−σ_w²(·)²/2}, so the difference is
///   ½·[expm1(−σ_w²(x−y)²/2) ± e^{−2σ_b²}·expm1(−σ_w²(x+y)²/2)],
/// exact to full relative precision even when σ_w²·x·y underflows the
/// envelopes' last digits.
fn sincos_centered(sw2: f64, sb2: f64, x: f64, y: f64, pm: f64) -> f64 {
    let dm = expm1(-sw2 * (x - y) * (x - y) / 2.0);
    let dp = exp(-2.0 * sb2) * expm1(-sw2 * (x + y) * (x + y) / 2.0);
    0.5 * (dm + pm * dp)
}

fn sincos_dx(sw2: f64, sb2: f64, x: f64, y: f64, pm: f64) -> f64 {
    let (em, ep) = sincos_envelopes(sw2, sb2, x, y);
    -(sw2 / 2.0) * ((x - y) * em + pm * (x + y) * ep)
}

fn sincos_dx2(sw2: f64, sb2: f64, x: f64, y: f64, pm: f64) -> f64 {
    let (em, ep) = sincos_envelopes(sw2, sb2, x, y);
    let d = x - y;
    let s = x + y;
    -(sw2 / 2.0) * ((1.0 - sw2 * d * d) * em + pm * (1.0 - sw2 * s * s) * ep)
}

/// ReLU kernel written with r = σ_w/σ_b factored out:
/// Θ = (σ_b²/2π)·[r|x−y| + (π − ψ)(1 + r²xy)] with ψ the angle between the
/// lifted inputs. The bracket depends on the scales only through r, which is
/// exactly 1.0 whenever σ_w = σ_b.
fn relu_parts(sw: f64, sb: f64, x: f64, y: f64) -> Result<(f64, f64, f64, f64), KernelError> {
    let r = sw / sb;
    let px = 1.0 + r * r * x * x;
    let py = 1.0 + r * r * y * y;
    let c = 1.0 + r * r * x * y;
    let psi = clamped_acos(c / sqrt(px * py))?;
    Ok((r, px, c, psi))
}

fn relu_eval(sw: f64, sb: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let (r, _px, c, psi) = relu_parts(sw, sb, x, y)?;
    Ok(sb * sb / (2.0 * PI) * (r * abs(x - y) + (PI - psi) * c))
}

fn relu_dx(sw: f64, sb: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let (r, px, _c, psi) = relu_parts(sw, sb, x, y)?;
    Ok(sw * sw / (2.0 * PI) * (r * x * abs(x - y) / px + (PI - psi) * y))
}

/// ∂²Θ/∂x² of the ReLU kernel: σ_w²·r·|x−y| / (π·(1 + r²x²)²). The one-sided
/// kink contributions cancel on the diagonal, so the continuous extension 0
/// at x = y is the true second derivative there.
fn relu_dx2(sw: f64, sb: f64, x: f64, y: f64) -> f64 {
    let r = sw / sb;
    let px = 1.0 + r * r * x * x;
    sw * sw * r * abs(x - y) / (PI * px * px)
}

fn sgn_eval(x: f64, y: f64) -> Result<f64, KernelError> {
    let s = (1.0 + x * y) / sqrt((1.0 + x * x) * (1.0 + y * y));
    Ok(FRAC_2_PI * clamped_asin(s)?)
}

fn sgn_dx(x: f64, y: f64) -> Result<f64, KernelError> {
    if x == y {
        return Err(KernelError::SingularPoint);
    }
    Ok(-FRAC_2_PI * sgn0(x - y) / (1.0 + x * x))
}

// ---------------------------------------------------------------------------
// Uniform-weight kernel (numerical).
// ---------------------------------------------------------------------------

fn uniform_eval(act: Activation, nodes: usize, sw: f64, sb: f64, x: f64, y: f64) -> f64 {
    0.25 * integrate_unit_box(nodes, |w, b| {
        act.apply(sw * w * x + sb * b) * act.apply(sw * w * y + sb * b)
    })
}

fn uniform_dx(act: Activation, nodes: usize, sw: f64, sb: f64, x: f64, y: f64) -> f64 {
    0.25 * integrate_unit_box(nodes, |w, b| {
        sw * w * act.derivative(sw * w * x + sb * b) * act.apply(sw * w * y + sb * b)
    })
}

// ---------------------------------------------------------------------------
// Deep NNGP/NTK recursions.
//
// The layer map works on the bivariate-Gaussian second moments
// u = E[a²], v = E[ab], w = E[b²]:
//   T(u, v, w)  = E[φ(a)φ(b)]   and   Ṫ(u, v, w) = E[φ′(a)φ′(b)].
// Starting from the affine input kernel u = σ_w²x² + σ_b² (etc.), `depth`
// applications of
//   K ← σ_w²·T + σ_b²,   Θ ← σ_w²·Θ·Ṫ + K
// yield the NNGP kernel K and the NTK Θ of a depth-layer network.
// ---------------------------------------------------------------------------

fn t_map(act: Activation, u: f64, v: f64, w: f64) -> Result<f64, KernelError> {
    match act {
        Activation::Erf => {
            let p = (1.0 + 2.0 * u) * (1.0 + 2.0 * w);
            Ok(FRAC_2_PI * clamped_asin(2.0 * v / sqrt(p))?)
        }
        Activation::Sin | Activation::Cos => {
            let em = exp(-(u - 2.0 * v + w) / 2.0);
            let ep = exp(-(u + 2.0 * v + w) / 2.0);
            Ok(match act {
                Activation::Sin => 0.5 * (em - ep),
                _ => 0.5 * (em + ep),
            })
        }
        Activation::Relu => {
            let disc = f64::max(u * w - v * v, 0.0);
            let psi = clamped_acos(v / sqrt(u * w))?;
            Ok((sqrt(disc) + (PI - psi) * v) / (2.0 * PI))
        }
    }
}

fn tdot_map(act: Activation, u: f64, v: f64, w: f64) -> Result<f64, KernelError> {
    match act {
        Activation::Erf => {
            let r = (1.0 + 2.0 * u) * (1.0 + 2.0 * w) - 4.0 * v * v;
            if r <= 0.0 {
                return Err(KernelError::NumericalDomain { argument: r });
            }
            Ok(4.0 / PI / sqrt(r))
        }
        // Ṫ of sin is the cos map and vice versa.
        Activation::Sin => t_map(Activation::Cos, u, v, w),
        Activation::Cos => t_map(Activation::Sin, u, v, w),
        Activation::Relu => {
            let psi = clamped_acos(v / sqrt(u * w))?;
            Ok((PI - psi) / (2.0 * PI))
        }
    }
}

/// (∂T/∂u, ∂T/∂v, ∂T/∂w).
fn t_partials(act: Activation, u: f64, v: f64, w: f64) -> Result<(f64, f64, f64), KernelError> {
    match act {
        Activation::Erf => {
            let a = 1.0 + 2.0 * u;
            let b = 1.0 + 2.0 * w;
            let p = a * b;
            let r = p - 4.0 * v * v;
            if r <= 0.0 {
                return Err(KernelError::NumericalDomain { argument: r });
            }
            let sr = sqrt(r);
            Ok((
                -4.0 * v * b / (PI * p * sr),
                4.0 / (PI * sr),
                -4.0 * v * a / (PI * p * sr),
            ))
        }
        Activation::Sin | Activation::Cos => {
            let em = exp(-(u - 2.0 * v + w) / 2.0);
            let ep = exp(-(u + 2.0 * v + w) / 2.0);
            Ok(match act {
                Activation::Sin => (-0.25 * (em - ep), 0.5 * (em + ep), -0.25 * (em - ep)),
                _ => (-0.25 * (em + ep), 0.5 * (em - ep), -0.25 * (em + ep)),
            })
        }
        Activation::Relu => {
            let disc = f64::max(u * w - v * v, 0.0);
            let sd = sqrt(disc);
            let psi = clamped_acos(v / sqrt(u * w))?;
            Ok((
                sd / (4.0 * PI * u),
                (PI - psi) / (2.0 * PI),
                sd / (4.0 * PI * w),
            ))
        }
    }
}

/// (∂Ṫ/∂u, ∂Ṫ/∂v, ∂Ṫ/∂w). For ReLU these blow up as uw − v² → 0, which is
/// exactly the diagonal x = y of the deep ReLU NTK derivative.
fn tdot_partials(act: Activation, u: f64, v: f64, w: f64) -> Result<(f64, f64, f64), KernelError> {
    match act {
        Activation::Erf => {
            let a = 1.0 + 2.0 * u;
            let b = 1.0 + 2.0 * w;
            let r = a * b - 4.0 * v * v;
            if r <= 0.0 {
                return Err(KernelError::NumericalDomain { argument: r });
            }
            let r32 = r * sqrt(r);
            Ok((
                -4.0 / PI * b / r32,
                16.0 * v / (PI * r32),
                -4.0 / PI * a / r32,
            ))
        }
        Activation::Sin => t_partials(Activation::Cos, u, v, w),
        Activation::Cos => t_partials(Activation::Sin, u, v, w),
        Activation::Relu => {
            let disc = u * w - v * v;
            if disc <= 0.0 {
                return Err(KernelError::SingularPoint);
            }
            let sd = sqrt(disc);
            Ok((
                -v / (4.0 * PI * u * sd),
                1.0 / (2.0 * PI * sd),
                -v / (4.0 * PI * w * sd),
            ))
        }
    }
}

fn deep_eval(
    act: Activation,
    depth: usize,
    kind: DeepKind,
    sw2: f64,
    sb2: f64,
    x: f64,
    y: f64,
) -> Result<f64, KernelError> {
    let mut u = sw2 * x * x + sb2;
    let mut w = sw2 * y * y + sb2;
    let mut v = sw2 * x * y + sb2;
    let mut theta = v;
    for _ in 0..depth {
        let t = t_map(act, u, v, w)?;
        let td = tdot_map(act, u, v, w)?;
        let tu = t_map(act, u, u, u)?;
        let tw = t_map(act, w, w, w)?;
        let v_next = sw2 * t + sb2;
        theta = sw2 * theta * td + v_next;
        v = v_next;
        u = sw2 * tu + sb2;
        w = sw2 * tw + sb2;
    }
    Ok(match kind {
        DeepKind::Nngp => v,
        DeepKind::Ntk => theta,
    })
}

fn deep_dx(
    act: Activation,
    depth: usize,
    kind: DeepKind,
    sw2: f64,
    sb2: f64,
    x: f64,
    y: f64,
) -> Result<f64, KernelError> {
    // Second-moment state and its x-derivative; w depends only on y, so its
    // derivative is identically zero and is dropped from the updates.
    let mut u = sw2 * x * x + sb2;
    let mut du = 2.0 * sw2 * x;
    let mut w = sw2 * y * y + sb2;
    let mut v = sw2 * x * y + sb2;
    let mut dv = sw2 * y;
    let mut theta = v;
    let mut dtheta = dv;
    for _ in 0..depth {
        let t = t_map(act, u, v, w)?;
        let (t1, t2, _) = t_partials(act, u, v, w)?;
        let tu = t_map(act, u, u, u)?;
        let (s1, s2, s3) = t_partials(act, u, u, u)?;
        let tw = t_map(act, w, w, w)?;
        let v_next = sw2 * t + sb2;
        let dv_next = sw2 * (t1 * du + t2 * dv);
        if kind == DeepKind::Ntk {
            let td = tdot_map(act, u, v, w)?;
            let (d1, d2, _) = tdot_partials(act, u, v, w)?;
            dtheta = sw2 * (dtheta * td + theta * (d1 * du + d2 * dv)) + dv_next;
            theta = sw2 * theta * td + v_next;
        }
        v = v_next;
        dv = dv_next;
        u = sw2 * tu + sb2;
        du = sw2 * (s1 + s2 + s3) * du;
        w = sw2 * tw + sb2;
    }
    Ok(match kind {
        DeepKind::Nngp => dv,
        DeepKind::Ntk => dtheta,
    })
}

// ---------------------------------------------------------------------------
// Dispatch.
// ---------------------------------------------------------------------------

fn family_eval(
    family: &KernelFamily,
    sw: f64,
    sb: f64,
    x: f64,
    y: f64,
) -> Result<f64, KernelError> {
    let sw2 = sw * sw;
    let sb2 = sb * sb;
    match family {
        KernelFamily::Erf => erf_eval(sw2, sb2, x, y),
        KernelFamily::Sin => Ok(sincos_eval(sw2, sb2, x, y, -1.0)),
        KernelFamily::Cos => Ok(sincos_eval(sw2, sb2, x, y, 1.0)),
        KernelFamily::Relu => relu_eval(sw, sb, x, y),
        KernelFamily::SgnLimit => sgn_eval(x, y),
        KernelFamily::DeltaLimit => Ok(if x == y { 0.5 } else { 0.0 }),
        KernelFamily::UniformNumeric { activation, nodes } => {
            Ok(uniform_eval(*activation, *nodes, sw, sb, x, y))
        }
        KernelFamily::Deep {
            activation,
            depth,
            kind,
        } => deep_eval(*activation, *depth, *kind, sw2, sb2, x, y),
        KernelFamily::WithOutputBias(inner) => Ok(family_eval(inner, sw, sb, x, y)? + 1.0),
    }
}

fn family_dx(
    family: &KernelFamily,
    sw: f64,
    sb: f64,
    x: f64,
    y: f64,
) -> Result<f64, KernelError> {
    let sw2 = sw * sw;
    let sb2 = sb * sb;
    match family {
        KernelFamily::Erf => Ok(erf_dx(sw2, sb2, x, y)),
        KernelFamily::Sin => Ok(sincos_dx(sw2, sb2, x, y, -1.0)),
        KernelFamily::Cos => Ok(sincos_dx(sw2, sb2, x, y, 1.0)),
        KernelFamily::Relu => relu_dx(sw, sb, x, y),
        KernelFamily::SgnLimit => sgn_dx(x, y),
        KernelFamily::DeltaLimit => Err(KernelError::Unsupported(
            "derivative of the delta-limit kernel",
        )),
        KernelFamily::UniformNumeric { activation, nodes } => {
            Ok(uniform_dx(*activation, *nodes, sw, sb, x, y))
        }
        KernelFamily::Deep {
            activation,
            depth,
            kind,
        } => deep_dx(*activation, *depth, *kind, sw2, sb2, x, y),
        KernelFamily::WithOutputBias(inner) => family_dx(inner, sw, sb, x, y),
    }
}

fn family_mc(
    family: &KernelFamily,
    sw: f64,
    sb: f64,
    x: f64,
    y: f64,
    n: usize,
    rng: &mut Rng,
) -> Result<MonteCarloEstimate, KernelError> {
    let sample: &mut dyn FnMut(&mut Rng) -> f64 = match family {
        KernelFamily::Erf | KernelFamily::Sin | KernelFamily::Cos | KernelFamily::Relu => {
            let act = match family {
                KernelFamily::Erf => Activation::Erf,
                KernelFamily::Sin => Activation::Sin,
                KernelFamily::Cos => Activation::Cos,
                _ => Activation::Relu,
            };
            &mut move |rng: &mut Rng| {
                let w = rng.normal();
                let b = rng.normal();
                act.apply(sw * w * x + sb * b) * act.apply(sw * w * y + sb * b)
            }
        }
        KernelFamily::SgnLimit => &mut move |rng: &mut Rng| {
            let w = rng.normal();
            let b = rng.normal();
            sgn0(w * x + b) * sgn0(w * y + b)
        },
        KernelFamily::UniformNumeric { activation, .. } => {
            let act = *activation;
            &mut move |rng: &mut Rng| {
                let w = rng.uniform(-1.0, 1.0);
                let b = rng.uniform(-1.0, 1.0);
                act.apply(sw * w * x + sb * b) * act.apply(sw * w * y + sb * b)
            }
        }
        KernelFamily::WithOutputBias(inner) => {
            let est = family_mc(inner, sw, sb, x, y, n, rng)?;
            return Ok(MonteCarloEstimate {
                mean: est.mean + 1.0,
                std_error: est.std_error,
            });
        }
        KernelFamily::DeltaLimit | KernelFamily::Deep { .. } => {
            return Err(KernelError::Unsupported(
                "Monte-Carlo sampling: no finite-feature realization",
            ));
        }
    };
    // Single-pass mean and variance (Welford).
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let z = sample(rng);
        let delta = z - mean;
        mean += delta / (i as f64 + 1.0);
        m2 += delta * (z - mean);
    }
    let std_error = if n > 1 {
        sqrt(m2 / (n as f64 * (n as f64 - 1.0)))
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { mean, std_error })
}
