//! Quadratic reduction of three-point trained maps: the interpolating
//! parabola through a dataset, its feedback family σ·q(x), the affine
//! conjugacy onto the normal family u ↦ u² + κ(σ), shape classification of
//! the κ curve, attractor-birth scans, and the distance of an arbitrary map
//! from its own parabola.

use alloc::vec::Vec;

use crate::dataset::PeriodicDataset;
use crate::dynamics::Map1D;
use crate::kernels::KernelError;
use crate::limitmap::TrainedMap;
use crate::linalg::{dot, solve_dense};
use crate::math::{abs, sqrt};

/// Period-3 onset: κ values at or below this admit a 3-cycle of u² + κ.
pub const KAPPA_PERIOD_THREE: f64 = -1.75;
/// Slack on the κ(1) ≤ −7/4 gate, absorbing fit rounding.
const KAPPA_GATE_TOL: f64 = 1e-9;
/// Iteration budget per parameter in an attractor-birth scan.
const BIRTH_MAX_ITERS: usize = 100_000;
/// Relative closure tolerance for period detection in a birth scan.
const BIRTH_EPS: f64 = 1e-9;
/// Orbits beyond this magnitude count as divergent in a birth scan.
const BIRTH_DIVERGE_BOUND: f64 = 1e8;
/// Candidate period points must be pairwise separated by this (relative):
/// a spiral into a fixed point with multiplier near −1 closes at n = 2
/// before n = 1 and would otherwise fake a 2-cycle.
const BIRTH_SEPARATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadraticError {
    /// A parabola is fit through exactly three points.
    NeedExactlyThreePoints { len: usize },
    /// The Vandermonde system is singular or the leading coefficient is 0.
    DegenerateFit(&'static str),
    /// κ(1) = Δ + β/2 sits above −7/4, so the full-feedback map has no
    /// 3-cycle and the κ-shape classification does not apply.
    NotPeriodThree { kappa_one: f64 },
    InvalidParam(&'static str),
}

impl core::fmt::Display for QuadraticError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            QuadraticError::NeedExactlyThreePoints { len } => {
                write!(f, "quadratic fit needs exactly 3 points, got {len}")
            }
            QuadraticError::DegenerateFit(msg) => write!(f, "degenerate quadratic fit: {msg}"),
            QuadraticError::NotPeriodThree { kappa_one } => {
                write!(f, "kappa(1) = {kappa_one} > -7/4: no 3-cycle at full feedback")
            }
            QuadraticError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for QuadraticError {}

/// The parabola q(x) = γx² + βx + α through three data points, together with
/// everything derived from it: the feedback family f_σ(x) = σ·q(x), the
/// conjugacy h(x) = σ(γx + β/2) with h ∘ f_σ ∘ h⁻¹ = u² + κ(σ), and the
/// curvature invariant Δ = αγ − β²/4 giving κ(σ) = Δσ² + βσ/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl QuadraticFit {
    /// Interpolate the three pairs of `data` by a parabola (Vandermonde
    /// solve with partial pivoting).
    pub fn from_dataset(data: &PeriodicDataset) -> Result<Self, QuadraticError> {
        if data.len() != 3 {
            return Err(QuadraticError::NeedExactlyThreePoints { len: data.len() });
        }
        let xs = data.xs();
        let mut v = [0.0; 9];
        for (i, &x) in xs.iter().enumerate() {
            v[i * 3] = 1.0;
            v[i * 3 + 1] = x;
            v[i * 3 + 2] = x * x;
        }
        let coeffs = solve_dense(&v, 3, data.ys())
            .ok_or(QuadraticError::DegenerateFit("Vandermonde system is singular"))?;
        Self::from_coefficients(coeffs[0], coeffs[1], coeffs[2])
    }

    /// Build directly from coefficients q(x) = γx² + βx + α.
    pub fn from_coefficients(alpha: f64, beta: f64, gamma: f64) -> Result<Self, QuadraticError> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(QuadraticError::DegenerateFit("coefficients must be finite"));
        }
        if gamma == 0.0 {
            return Err(QuadraticError::DegenerateFit("leading coefficient is zero"));
        }
        Ok(QuadraticFit { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Δ = αγ − β²/4, the σ² coefficient of κ.
    pub fn discriminant(&self) -> f64 {
        self.alpha * self.gamma - 0.25 * self.beta * self.beta
    }

    /// κ(σ) = Δσ² + βσ/2: the normal-form parameter of σ·q under conjugacy.
    pub fn kappa(&self, sigma: f64) -> f64 {
        sigma * (self.discriminant() * sigma + 0.5 * self.beta)
    }

    /// h(x) = σ(γx + β/2), the conjugacy onto the normal family at feedback σ.
    pub fn to_normal(&self, sigma: f64, x: f64) -> f64 {
        sigma * (self.gamma * x + 0.5 * self.beta)
    }

    /// h⁻¹(u); requires σ ≠ 0.
    pub fn from_normal(&self, sigma: f64, u: f64) -> f64 {
        (u / sigma - 0.5 * self.beta) / self.gamma
    }

    /// Critical point of q (and of every σ·q): x_c = −β/(2γ).
    pub fn critical_point(&self) -> f64 {
        -0.5 * self.beta / self.gamma
    }

    /// The parabola as a dynamical map x ↦ σ_fb·q(x).
    pub fn map(&self, sigma_fb: f64) -> QuadraticMap {
        QuadraticMap {
            fit: *self,
            sigma_fb,
        }
    }
}

/// Shape of σ ↦ κ(σ) on [0, 1] for a fit whose κ(1) ≤ −7/4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaClass {
    /// Δ ≤ 0 with the vertex at σ ≤ 0: κ falls monotonically, concave.
    DecreasingConcave,
    /// Δ < 0 with the vertex inside (0, 1): κ first rises, then falls.
    InteriorMaximum,
    /// Δ > 0 with the vertex inside (0, 1): κ first falls, then rises.
    InteriorMinimum,
    /// Δ > 0 with the vertex at σ ≥ 1: κ falls monotonically, convex.
    DecreasingConvex,
}

/// Classify the κ curve of `fit`, returning the class together with β and Δ.
/// Fails with `NotPeriodThree` when κ(1) > −7/4 (up to an 1e-9 slack).
pub fn classify_kappa(fit: &QuadraticFit) -> Result<(KappaClass, f64, f64), QuadraticError> {
    let beta = fit.beta();
    let delta = fit.discriminant();
    let kappa_one = fit.kappa(1.0);
    if kappa_one > KAPPA_PERIOD_THREE + KAPPA_GATE_TOL {
        return Err(QuadraticError::NotPeriodThree { kappa_one });
    }
    if delta == 0.0 {
        // κ is the line σβ/2 with β ≤ −7/2 here: decreasing, flat curvature.
        return Ok((KappaClass::DecreasingConcave, beta, delta));
    }
    let vertex = -beta / (4.0 * delta);
    let class = if delta < 0.0 {
        if vertex <= 0.0 {
            KappaClass::DecreasingConcave
        } else {
            // vertex ≥ 1 would force κ(1) ≥ κ(0) = 0, excluded by the gate.
            KappaClass::InteriorMaximum
        }
    } else if vertex >= 1.0 {
        KappaClass::DecreasingConvex
    } else {
        // vertex ≤ 0 would force κ increasing on [0,1], excluded by the gate.
        KappaClass::InteriorMinimum
    };
    Ok((class, beta, delta))
}

/// Multiplier 1 + √(1 − 4κ) of the larger fixed point of u ↦ u² + κ
/// (NaN when no real fixed point exists).
pub fn fixed_point_multiplier(kappa: f64) -> f64 {
    1.0 + sqrt(1.0 - 4.0 * kappa)
}

/// First feedback σ (on the ascending grid `resolution`, 2·`resolution`, …, 1)
/// at which the attractor of σ·q, reached from the critical point, has each
/// minimal period 1 ..= `n_max`. Periods that never appear stay `None`.
pub fn attractor_births(
    fit: &QuadraticFit,
    n_max: usize,
    resolution: f64,
) -> Result<Vec<Option<f64>>, QuadraticError> {
    if n_max == 0 {
        return Err(QuadraticError::InvalidParam("n_max must be >= 1"));
    }
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 1.0) {
        return Err(QuadraticError::InvalidParam("resolution must be in (0, 1]"));
    }
    let x_c = fit.critical_point();
    let steps = (1.0 / resolution + 0.5) as usize;
    let mut births = alloc::vec![None; n_max];
    for i in 1..=steps {
        let sigma = (i as f64 * resolution).min(1.0);
        if let Some(period) = attractor_period(&fit.map(sigma), x_c, n_max) {
            if births[period - 1].is_none() {
                births[period - 1] = Some(sigma);
                if births.iter().all(Option::is_some) {
                    break;
                }
            }
        }
    }
    Ok(births)
}

/// Minimal period of the attractor reached from `x0`, or `None` when the
/// orbit diverges or no period ≤ `n_max` closes within the budget. This is
/// the per-σ detector behind [`attractor_births`]; callers sweeping σ grids
/// in parallel can invoke it chunk-wise and merge first hits in grid order.
pub fn attractor_period<M: Map1D + ?Sized>(map: &M, x0: f64, n_max: usize) -> Option<usize> {
    let mut x = x0;
    let mut t = 0usize;
    let mut pts: Vec<f64> = Vec::with_capacity(n_max);
    while t < BIRTH_MAX_ITERS {
        let block = 256.min(BIRTH_MAX_ITERS - t);
        for _ in 0..block {
            x = map.eval(x);
            t += 1;
            if !x.is_finite() || abs(x) > BIRTH_DIVERGE_BOUND {
                return None;
            }
        }
        pts.clear();
        pts.push(x);
        let mut xi = x;
        for n in 1..=n_max {
            xi = map.eval(xi);
            if abs(xi - x) <= BIRTH_EPS * f64::max(1.0, abs(x)) {
                if points_separated(&pts[..n], f64::max(1.0, abs(x))) {
                    return Some(n);
                }
                // Not yet settled: iterate further before retrying.
                break;
            }
            pts.push(xi);
        }
    }
    None
}

fn points_separated(pts: &[f64], scale: f64) -> bool {
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if abs(pts[i] - pts[j]) <= BIRTH_SEPARATION * scale {
                return false;
            }
        }
    }
    true
}

/// Relative distance of a map from its parabola, from data at the origin:
/// ‖(f(0) − α, f′(0) − β, f″(0)/2 − γ)‖₂ / ‖(α, β, γ)‖₂.
pub fn quadratic_error_parts(f0: f64, f1: f64, half_f2: f64, fit: &QuadraticFit) -> f64 {
    let da = f0 - fit.alpha();
    let db = f1 - fit.beta();
    let dc = half_f2 - fit.gamma();
    let num = sqrt(da * da + db * db + dc * dc);
    let den = sqrt(
        fit.alpha() * fit.alpha() + fit.beta() * fit.beta() + fit.gamma() * fit.gamma(),
    );
    num / den
}

/// [`quadratic_error_parts`] evaluated on a trained kernel map.
///
/// The Taylor coefficients are not read off `evaluate`/`evaluate_deriv`
/// when a better route exists: at small σ_w the Gram matrix is the constant
/// Θ(0,0) plus an O(σ_w²) correction, its condition number grows like
/// σ_w⁻⁴, and the dual weights grow to match — the direct inner products
/// then bottom out at ≈ κ(G)·ε, orders of magnitude above the true
/// coefficients. [`centered_taylor`] avoids that floor for the kernels with
/// an analytic centered form; the rest use the direct evaluation.
pub fn quadratic_error(map: &TrainedMap, fit: &QuadraticFit) -> Result<f64, KernelError> {
    if let Some([f0, f1, half_f2]) = centered_taylor(map) {
        return Ok(quadratic_error_parts(f0, f1, half_f2, fit));
    }
    let f0 = map.evaluate(0.0);
    if !f0.is_finite() {
        return Err(KernelError::NonFiniteInput);
    }
    let f1 = map.evaluate_deriv(0.0, 1)?;
    let f2 = map.evaluate_deriv(0.0, 2)?;
    Ok(quadratic_error_parts(f0, f1, 0.5 * f2, fit))
}

/// (f(0), f′(0), ½f″(0)) of a trained map via the rank-one split
/// G = Θ(0,0)·J + ΔG, J the all-ones matrix and ΔG the centered Gram from
/// [`KernelSpec::eval_centered`]. `None` when the kernel has no centered
/// form or a solve degenerates; callers then fall back to direct evaluation.
///
/// Each coefficient is c_r·(1ᵀw) + δ_rᵀw for the dual weights w = G⁻¹y,
/// kernel rows δ_r ∈ {Δ(0,·), Θ_x(0,·), ½Θ_xx(0,·)} and c_r = (Θ(0,0), 0, 0).
/// Sherman–Morrison reduces both contractions of w to contractions of the
/// well-scaled solves u = ΔG⁻¹1 and g_r = ΔG⁻¹δ_r:
///   1ᵀw = (uᵀy)/d,   δ_rᵀw = g_rᵀy − (g_rᵀ1)·Θ(0,0)·(1ᵀw),
/// with d = 1 + Θ(0,0)·(uᵀ1). Nothing of size κ(G) is ever materialized, so
/// the result tracks the analytic coefficients down to κ(ΔG)·ε ≈ σ_w⁻²·ε
/// instead of σ_w⁻⁴·ε.
fn centered_taylor(map: &TrainedMap) -> Option<[f64; 3]> {
    let kernel = map.kernel();
    let xs = map.data().xs();
    let ys = map.data().ys();
    let m = xs.len();
    let theta00 = kernel.eval(0.0, 0.0).ok()?;

    let mut dg = alloc::vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = kernel.eval_centered(xs[i], xs[j])?.ok()?;
            dg[i * m + j] = v;
            dg[j * m + i] = v;
        }
    }
    let mut d0 = alloc::vec![0.0; m];
    let mut d1 = alloc::vec![0.0; m];
    let mut d2 = alloc::vec![0.0; m];
    for i in 0..m {
        d0[i] = kernel.eval_centered(0.0, xs[i])?.ok()?;
        d1[i] = kernel.dx(0.0, xs[i]).ok()?;
        d2[i] = 0.5 * kernel.dx2(0.0, xs[i]).ok()?;
    }

    let ones = alloc::vec![1.0; m];
    let u = solve_dense(&dg, m, &ones)?;
    let g0 = solve_dense(&dg, m, &d0)?;
    let g1 = solve_dense(&dg, m, &d1)?;
    let g2 = solve_dense(&dg, m, &d2)?;

    let d = 1.0 + theta00 * dot(&u, &ones);
    if !d.is_finite() || d == 0.0 {
        return None;
    }
    let s = theta00 * dot(&u, ys) / d;
    let f0 = s + dot(&g0, ys) - dot(&g0, &ones) * s;
    let f1 = dot(&g1, ys) - dot(&g1, &ones) * s;
    let half_f2 = dot(&g2, ys) - dot(&g2, &ones) * s;
    let sigma_fb = map.sigma_fb();
    let out = [sigma_fb * f0, sigma_fb * f1, sigma_fb * half_f2];
    out.iter().all(|t| t.is_finite()).then_some(out)
}

/// The normal quadratic family u ↦ u² + κ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalQuadratic {
    pub kappa: f64,
}

impl Map1D for NormalQuadratic {
    fn eval(&self, x: f64) -> f64 {
        x * x + self.kappa
    }

    fn deriv(&self, x: f64) -> Option<f64> {
        Some(2.0 * x)
    }
}

/// A fitted parabola under feedback: x ↦ σ_fb · q(x).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticMap {
    fit: QuadraticFit,
    sigma_fb: f64,
}

impl QuadraticMap {
    pub fn fit(&self) -> &QuadraticFit {
        &self.fit
    }

    pub fn sigma_fb(&self) -> f64 {
        self.sigma_fb
    }
}

impl Map1D for QuadraticMap {
    fn eval(&self, x: f64) -> f64 {
        self.sigma_fb * ((self.fit.gamma * x + self.fit.beta) * x + self.fit.alpha)
    }

    fn deriv(&self, x: f64) -> Option<f64> {
        Some(self.sigma_fb * (2.0 * self.fit.gamma * x + self.fit.beta))
    }
}
