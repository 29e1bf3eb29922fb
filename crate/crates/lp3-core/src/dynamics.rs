//! Iteration of one-dimensional maps: Lyapunov exponents, attractor period
//! detection with a relative tolerance, divergence guards, and basin grids.

use alloc::vec::Vec;

use crate::math::{abs, ln, round};

/// A real map of the line. `deriv` powers Lyapunov exponents and Newton orbit
/// searches; maps without a derivative (e.g. sign-activation networks) leave
/// it `None` and only trajectory-based analyses apply.
pub trait Map1D {
    fn eval(&self, x: f64) -> f64;

    fn deriv(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl<M: Map1D + ?Sized> Map1D for &M {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }

    fn deriv(&self, x: f64) -> Option<f64> {
        (**self).deriv(x)
    }
}

/// How a trajectory is run and judged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsConfig {
    /// Steps discarded before any statistics.
    pub transient: usize,
    /// Steps T over which the Lyapunov average runs; the period test starts
    /// from the state reached afterwards.
    pub horizon: usize,
    /// Initial condition.
    pub x0: f64,
    /// Relative tolerance ε of the period test
    /// |fⁿ(x_T) − x_T| ≤ ε·max(|x_T|, |fⁿ(x_T)|).
    pub eps_period: f64,
    /// Largest period searched.
    pub n_max: usize,
    /// |x| beyond this (or non-finite) counts as divergence.
    pub diverge_bound: f64,
    /// If nonzero, keep this many trailing iterates in the summary.
    pub sample_len: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            transient: 1000,
            horizon: 10_000,
            x0: 0.0,
            eps_period: 1e-12,
            n_max: 20,
            diverge_bound: 1e8,
            sample_len: 0,
        }
    }
}

/// Time-averaged log-derivative of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lyapunov {
    Finite(f64),
    /// The orbit hit a point with f′ = 0 (superstable); the average is −∞.
    NegInf,
    /// The map does not expose a derivative.
    Unavailable,
}

/// What one trajectory did.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSummary {
    pub lyapunov: Lyapunov,
    /// Minimal n ≤ n_max with fⁿ(x_T) returning to x_T within tolerance.
    pub period: Option<usize>,
    pub diverged: bool,
    /// State after the horizon (the last finite state when diverged).
    pub final_state: f64,
    /// Trailing iterates of the averaging window, oldest first (empty unless
    /// requested via `sample_len`).
    pub trajectory_sample: Vec<f64>,
}

/// Attractor identity for basin maps: periodic orbits are named by period
/// plus orbit centroid rounded to 1e−6, so the same attractor reached from
/// different cells gets the same label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttractorLabel {
    Periodic { period: usize, centroid_micro: i64 },
    Divergent,
    /// No period ≤ n_max and a positive Lyapunov exponent.
    Chaotic,
    /// No period ≤ n_max and no evidence of chaos.
    Undetected,
}

fn out_of_bounds(x: f64, bound: f64) -> bool {
    !x.is_finite() || abs(x) > bound
}

/// Run one trajectory: transient, Lyapunov average over the horizon, then the
/// period test. Divergence at any point stops the run.
pub fn iterate<M: Map1D + ?Sized>(map: &M, cfg: &DynamicsConfig) -> OrbitSummary {
    assert!(cfg.horizon >= 1, "horizon must be at least 1");
    assert!(cfg.eps_period > 0.0, "eps_period must be positive");
    assert!(cfg.n_max >= 1, "n_max must be at least 1");
    let mut x = cfg.x0;
    let mut sample = Vec::new();
    let diverged_summary = |lyapunov: Lyapunov, last_finite: f64, sample: Vec<f64>| OrbitSummary {
        lyapunov,
        period: None,
        diverged: true,
        final_state: last_finite,
        trajectory_sample: sample,
    };

    for _ in 0..cfg.transient {
        let next = map.eval(x);
        if out_of_bounds(next, cfg.diverge_bound) {
            return diverged_summary(Lyapunov::Unavailable, x, sample);
        }
        x = next;
    }

    let mut log_sum = 0.0;
    let mut hit_zero_derivative = false;
    let mut derivative_missing = false;
    for _ in 0..cfg.horizon {
        match map.deriv(x) {
            None => derivative_missing = true,
            Some(d) => {
                if d == 0.0 {
                    hit_zero_derivative = true;
                } else if !hit_zero_derivative {
                    log_sum += ln(abs(d));
                }
            }
        }
        if cfg.sample_len > 0 {
            if sample.len() == cfg.sample_len {
                sample.remove(0);
            }
            sample.push(x);
        }
        let next = map.eval(x);
        if out_of_bounds(next, cfg.diverge_bound) {
            let lyap = current_lyapunov(
                derivative_missing,
                hit_zero_derivative,
                log_sum,
                cfg.horizon,
            );
            return diverged_summary(lyap, x, sample);
        }
        x = next;
    }
    let lyapunov = current_lyapunov(
        derivative_missing,
        hit_zero_derivative,
        log_sum,
        cfg.horizon,
    );

    // Period test from x_T = x.
    let x_t = x;
    let mut period = None;
    let mut probe = x_t;
    for n in 1..=cfg.n_max {
        probe = map.eval(probe);
        if out_of_bounds(probe, cfg.diverge_bound) {
            return diverged_summary(lyapunov, x_t, sample);
        }
        if abs(probe - x_t) <= cfg.eps_period * f64::max(abs(x_t), abs(probe)) {
            period = Some(n);
            break;
        }
    }

    OrbitSummary {
        lyapunov,
        period,
        diverged: false,
        final_state: x_t,
        trajectory_sample: sample,
    }
}

fn current_lyapunov(missing: bool, zero: bool, log_sum: f64, horizon: usize) -> Lyapunov {
    if missing {
        Lyapunov::Unavailable
    } else if zero {
        Lyapunov::NegInf
    } else {
        Lyapunov::Finite(log_sum / horizon as f64)
    }
}

/// Label the attractor reached from `cfg.x0`.
pub fn attractor_label<M: Map1D + ?Sized>(map: &M, cfg: &DynamicsConfig) -> AttractorLabel {
    let summary = iterate(map, cfg);
    if summary.diverged {
        return AttractorLabel::Divergent;
    }
    match summary.period {
        Some(period) => {
            let mut x = summary.final_state;
            let mut sum = 0.0;
            for _ in 0..period {
                sum += x;
                x = map.eval(x);
            }
            let centroid = sum / period as f64;
            AttractorLabel::Periodic {
                period,
                centroid_micro: round(centroid * 1e6) as i64,
            }
        }
        None => match summary.lyapunov {
            Lyapunov::Finite(l) if l > 0.0 => AttractorLabel::Chaotic,
            _ => AttractorLabel::Undetected,
        },
    }
}

/// Attractor labels over a (parameter, initial-condition) grid: one row per
/// parameter value, one column per x0. Cells are independent; this runs them
/// sequentially and callers may parallelize across rows themselves.
pub fn basin_grid<M, F>(
    family: F,
    param_values: &[f64],
    x0_values: &[f64],
    cfg: &DynamicsConfig,
) -> Vec<Vec<AttractorLabel>>
where
    M: Map1D,
    F: Fn(f64) -> M,
{
    param_values
        .iter()
        .map(|&p| {
            let map = family(p);
            x0_values
                .iter()
                .map(|&x0| {
                    let cell_cfg = DynamicsConfig { x0, ..*cfg };
                    attractor_label(&map, &cell_cfg)
                })
                .collect()
        })
        .collect()
}
