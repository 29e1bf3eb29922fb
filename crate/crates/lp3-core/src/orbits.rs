//! Periodic-orbit censuses and parameter continuation for 1-D maps:
//! damped-Newton multistart root finding on f^p(x) − x, orbit deduplication,
//! per-period stability counts, and continuation of an orbit along a
//! one-parameter family down to its fold.

use alloc::vec::Vec;

use crate::dynamics::Map1D;
use crate::math::{abs, ln};

/// Newton iteration budget per start.
const NEWTON_MAX_ITERS: usize = 60;
/// Step halvings per Newton iteration before giving up on descent.
const MAX_HALVINGS: usize = 4;
/// Chain products of slopes are clamped to ±this to avoid overflow.
const CHAIN_CLAMP: f64 = 1e12;
/// Newton is abandoned when |d(f^p − id)/dx| falls below this.
const MIN_SLOPE: f64 = 1e-14;
/// Convergence: |f^p(x) − x| ≤ this · max(1, |x|).
const ROOT_TOL: f64 = 1e-12;
/// Accepted orbits must close to this relative tolerance.
const CLOSURE_TOL: f64 = 1e-10;
/// Relative tolerance used to detect a divisor period inside a longer cycle.
const MINIMALITY_TOL: f64 = 1e-9;
/// Two orbits are the same when any two of their points are this close.
const DEDUP_TOL: f64 = 1e-2;
/// |λ_p| below this counts as marginal in a census.
const MARGINAL_TOL: f64 = 1e-10;
/// A corrected continuation point may move at most this far from the last
/// accepted point (and secant predictions are clamped to the same window);
/// larger moves are treated as branch jumps and rejected.
const JUMP_TOL: f64 = 0.25;
/// Continuation stops once step halving pushes the step below this. Near a
/// fold the multiplier behaves like 1 ± K·√(σ − σ*), so the floor must be
/// tiny for |m − 1| to come down into the fold window before we give up.
const STEP_FLOOR: f64 = 1e-11;
/// At a dead end, a cycle multiplier within this of +1 is called a fold.
const FOLD_MULTIPLIER_TOL: f64 = 1e-2;
/// Continuation seeds must have |multiplier − 1| above this.
const SEED_GENERICITY_TOL: f64 = 1e-8;

/// One periodic orbit of a map: its minimal period, the orbit points rotated
/// so the smallest comes first, and the cycle Lyapunov exponent
/// λ_p = ln|∏ f′(x_k)| (the log multiplier, not divided by the period).
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub period: usize,
    pub points: Vec<f64>,
    pub lambda: f64,
    pub stable: bool,
    /// Feedback factor the map was analyzed at; 1 for a bare census.
    pub sigma_fb: f64,
}

/// Per-period stability counts of a census.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusRow {
    pub period: usize,
    pub stable: usize,
    pub unstable: usize,
    /// Orbits with |λ_p| < 1e-10, reported separately because their
    /// stability is not numerically decidable.
    pub marginal: usize,
}

/// f^p(x) − x and its derivative (chain product − 1), or `None` when the
/// orbit leaves the finite range or the map has no derivative.
fn cycle_g<M: Map1D + ?Sized>(map: &M, x: f64, p: usize) -> Option<(f64, f64)> {
    let mut xi = x;
    let mut chain = 1.0_f64;
    for _ in 0..p {
        let d = map.deriv(xi)?;
        chain = (chain * d).clamp(-CHAIN_CLAMP, CHAIN_CLAMP);
        xi = map.eval(xi);
        if !xi.is_finite() {
            return None;
        }
    }
    Some((xi - x, chain - 1.0))
}

/// Cycle log-multiplier λ_p and the raw multiplier ∏ f′(x_k).
fn cycle_lambda<M: Map1D + ?Sized>(map: &M, x: f64, p: usize) -> Option<(f64, f64)> {
    let mut xi = x;
    let mut m = 1.0_f64;
    for _ in 0..p {
        m *= map.deriv(xi)?;
        xi = map.eval(xi);
        if !xi.is_finite() {
            return None;
        }
    }
    let lambda = if m == 0.0 {
        f64::NEG_INFINITY
    } else {
        ln(abs(m))
    };
    Some((lambda, m))
}

/// Damped Newton on f^p(x) − x from `x0`; `None` when it does not converge.
fn newton_cycle<M: Map1D + ?Sized>(map: &M, x0: f64, p: usize) -> Option<f64> {
    let mut x = x0;
    let (mut g, mut gp) = cycle_g(map, x, p)?;
    for _ in 0..NEWTON_MAX_ITERS {
        if abs(g) <= ROOT_TOL * f64::max(1.0, abs(x)) {
            return Some(x);
        }
        if abs(gp) < MIN_SLOPE {
            return None;
        }
        let full = g / gp;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = x - t * full;
            if let Some((gc, gpc)) = cycle_g(map, cand, p) {
                if abs(gc) < abs(g) {
                    x = cand;
                    g = gc;
                    gp = gpc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if abs(g) <= ROOT_TOL * f64::max(1.0, abs(x)) {
        Some(x)
    } else {
        None
    }
}

/// Smallest divisor d of p with f^d(x) ≈ x.
fn minimal_period<M: Map1D + ?Sized>(map: &M, x: f64, p: usize) -> usize {
    for d in 1..p {
        if p % d != 0 {
            continue;
        }
        let mut xi = x;
        for _ in 0..d {
            xi = map.eval(xi);
        }
        if abs(xi - x) <= MINIMALITY_TOL * f64::max(1.0, abs(x)) {
            return d;
        }
    }
    p
}

fn orbits_overlap(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .any(|&x| b.iter().any(|&y| abs(x - y) <= DEDUP_TOL))
}

/// Census of periodic orbits with minimal period ≤ `p_max`. Newton is run on
/// f^p(x) − x from `n_starts` midpoints of an even partition of `interval`;
/// converged roots are reduced to their minimal period, deduplicated, and
/// returned sorted by period, then by leading point.
pub fn find_orbits<M: Map1D + ?Sized>(
    map: &M,
    p_max: usize,
    interval: (f64, f64),
    n_starts: usize,
) -> Vec<OrbitRecord> {
    let (lo, hi) = interval;
    assert!(p_max >= 1, "p_max must be >= 1");
    assert!(n_starts >= 1, "n_starts must be >= 1");
    assert!(lo.is_finite() && hi.is_finite() && lo < hi, "bad interval");
    let width = hi - lo;
    let mut records: Vec<OrbitRecord> = Vec::new();
    for p in 1..=p_max {
        for i in 0..n_starts {
            let x0 = lo + (i as f64 + 0.5) * width / n_starts as f64;
            let Some(mut root) = newton_cycle(map, x0, p) else {
                continue;
            };
            let q = minimal_period(map, root, p);
            if q < p {
                // Re-polish at the minimal period so the record meets the
                // closure tolerance for q, not just for p.
                match newton_cycle(map, root, q) {
                    Some(r) => root = r,
                    None => continue,
                }
            }
            let mut points = Vec::with_capacity(q);
            let mut xi = root;
            for _ in 0..q {
                points.push(xi);
                xi = map.eval(xi);
            }
            if !xi.is_finite() || abs(xi - root) > CLOSURE_TOL * f64::max(1.0, abs(root)) {
                continue;
            }
            let k_min = points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(k, _)| k)
                .unwrap();
            points.rotate_left(k_min);
            if records
                .iter()
                .any(|r| r.period == q && orbits_overlap(&r.points, &points))
            {
                continue;
            }
            let Some((lambda, _)) = cycle_lambda(map, points[0], q) else {
                continue;
            };
            records.push(OrbitRecord {
                period: q,
                points,
                lambda,
                stable: lambda < 0.0,
                sigma_fb: 1.0,
            });
        }
    }
    records.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then(a.points[0].partial_cmp(&b.points[0]).unwrap())
    });
    records
}

/// Stability counts per period, one row for every period up to `p_max`
/// (periods with no orbits get zero rows).
pub fn orbit_census(records: &[OrbitRecord], p_max: usize) -> Vec<CensusRow> {
    let mut rows: Vec<CensusRow> = (1..=p_max)
        .map(|period| CensusRow {
            period,
            stable: 0,
            unstable: 0,
            marginal: 0,
        })
        .collect();
    for r in records {
        if r.period == 0 || r.period > p_max {
            continue;
        }
        let row = &mut rows[r.period - 1];
        if r.lambda.is_finite() && abs(r.lambda) < MARGINAL_TOL {
            row.marginal += 1;
        } else if r.lambda < 0.0 {
            row.stable += 1;
        } else {
            row.unstable += 1;
        }
    }
    rows
}

/// How a continuation run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminus {
    /// The branch was followed all the way down to `sigma_min`.
    ReachedMin,
    /// The branch died with cycle multiplier ≈ +1: a tangent (fold)
    /// bifurcation at this parameter.
    Fold { sigma: f64 },
    /// Correction stopped converging away from any detectable fold.
    LostConvergence { sigma: f64 },
}

/// One accepted continuation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    pub sigma: f64,
    pub x: f64,
    pub lambda: f64,
}

/// A continued orbit branch, with `path` in descending parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct Continuation {
    pub period: usize,
    pub path: Vec<BranchPoint>,
    pub terminus: Terminus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContinuationError {
    InvalidParam(&'static str),
    /// The seed has cycle multiplier ≈ +1, so the corrector is singular.
    DegenerateSeed { multiplier: f64 },
    /// Newton failed to lock onto an orbit at the starting parameter.
    SeedNotConverged,
    /// The map family provides no derivative along the orbit.
    MissingDerivative,
}

impl core::fmt::Display for ContinuationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ContinuationError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            ContinuationError::DegenerateSeed { multiplier } => {
                write!(f, "seed multiplier {multiplier} is too close to 1")
            }
            ContinuationError::SeedNotConverged => {
                write!(f, "seed did not converge to a periodic orbit")
            }
            ContinuationError::MissingDerivative => {
                write!(f, "map family has no derivative along the orbit")
            }
        }
    }
}

impl core::error::Error for ContinuationError {}

/// Follow one periodic-orbit branch of the family σ ↦ `family(σ)` from
/// (`sigma_start`, `x_seed`) down to `sigma_min`, with a secant predictor and
/// damped-Newton corrector, halving the step on failure. The terminus
/// distinguishes folds (multiplier pinned at +1) from plain convergence loss.
pub fn continue_orbit<M: Map1D>(
    family: impl Fn(f64) -> M,
    sigma_start: f64,
    x_seed: f64,
    period: usize,
    step: f64,
    sigma_min: f64,
) -> Result<Continuation, ContinuationError> {
    if period == 0 {
        return Err(ContinuationError::InvalidParam("period must be >= 1"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(ContinuationError::InvalidParam("step must be > 0"));
    }
    if !(sigma_start.is_finite() && sigma_min.is_finite() && sigma_min >= 0.0)
        || sigma_min >= sigma_start
    {
        return Err(ContinuationError::InvalidParam(
            "need 0 <= sigma_min < sigma_start",
        ));
    }
    let map0 = family(sigma_start);
    let x0 = newton_cycle(&map0, x_seed, period).ok_or(ContinuationError::SeedNotConverged)?;
    let (lambda0, m0) =
        cycle_lambda(&map0, x0, period).ok_or(ContinuationError::MissingDerivative)?;
    if abs(m0 - 1.0) <= SEED_GENERICITY_TOL {
        return Err(ContinuationError::DegenerateSeed { multiplier: m0 });
    }
    let mut path = alloc::vec![BranchPoint {
        sigma: sigma_start,
        x: x0,
        lambda: lambda0,
    }];
    let mut h = step;
    let terminus = loop {
        let last = *path.last().unwrap();
        if last.sigma <= sigma_min + 1e-12 {
            break Terminus::ReachedMin;
        }
        let target = f64::max(last.sigma - h, sigma_min);
        // Secant prediction, clamped: near a fold the branch slope diverges
        // like 1/√(σ − σ*) and an unclamped extrapolation can land on an
        // unrelated root.
        let predicted = if path.len() >= 2 {
            let prev = path[path.len() - 2];
            let delta =
                (last.x - prev.x) * (target - last.sigma) / (last.sigma - prev.sigma);
            last.x + delta.clamp(-JUMP_TOL, JUMP_TOL)
        } else {
            last.x
        };
        let map = family(target);
        let corrected = newton_cycle(&map, predicted, period)
            .filter(|&xc| {
                // Reject branch jumps and slides onto divisor-period roots
                // of f^p − id (e.g. a fixed point below a 3-cycle fold).
                abs(xc - last.x) <= JUMP_TOL && minimal_period(&map, xc, period) == period
            })
            .and_then(|xc| cycle_lambda(&map, xc, period).map(|(l, _)| (xc, l)));
        match corrected {
            Some((x, lambda)) => {
                path.push(BranchPoint {
                    sigma: target,
                    x,
                    lambda,
                });
                h = step;
            }
            None => {
                h *= 0.5;
                if h < STEP_FLOOR {
                    let m = cycle_lambda(&family(last.sigma), last.x, period)
                        .map(|(_, m)| m)
                        .unwrap_or(f64::NAN);
                    break if abs(m - 1.0) < FOLD_MULTIPLIER_TOL {
                        Terminus::Fold { sigma: last.sigma }
                    } else {
                        Terminus::LostConvergence { sigma: last.sigma }
                    };
                }
            }
        }
    };
    Ok(Continuation {
        period,
        path,
        terminus,
    })
}

/// Largest parameter at which λ crosses zero downward along the path (path
/// descending in σ: λ positive at the larger σ, non-positive at the smaller),
/// linearly interpolated. The edge value is returned when the crossing drops
/// straight to −∞.
pub fn birth_sigma(path: &[BranchPoint]) -> Option<f64> {
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.lambda > 0.0 && b.lambda <= 0.0 {
            if !a.lambda.is_finite() || !b.lambda.is_finite() {
                return Some(a.sigma);
            }
            let t = a.lambda / (a.lambda - b.lambda);
            return Some(a.sigma + t * (b.sigma - a.sigma));
        }
    }
    None
}
