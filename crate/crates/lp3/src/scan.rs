//! Reproducible parameter sweeps over trained maps: bifurcation scans in the
//! third data point c, two-dimensional (c, σ) diagrams, externalization
//! sweeps in the feedback strength, finite-width versus exact-map distance
//! tables, and periodic-orbit histograms over random datasets.
//!
//! Grid cells are independent work items; sweeps run on whatever Rayon pool
//! is installed and merge results in grid order, so output is byte-identical
//! for any worker count. All randomness derives from a root seed and a
//! per-task label, never from scheduling.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::core::dataset::PeriodicDataset;
use crate::core::dynamics::{iterate, DynamicsConfig, Lyapunov, Map1D, OrbitSummary};
use crate::core::elm::{self, FiniteNetwork};
use crate::core::kernels::{Activation, KernelError, KernelFamily, KernelSpec};
use crate::core::limitmap::{fit_limit, FitError, TrainedMap};
use crate::core::math::abs;
use crate::core::orbits::{find_orbits, orbit_census};
use crate::core::rng::{derive_seed, Rng};
use crate::io::{format_float, json_number, lyapunov_csv, lyapunov_json};

/// Periodic-orbit censuses inside histogram sweeps search this interval...
pub const CENSUS_INTERVAL: (f64, f64) = (-100.0, 100.0);
/// ...from this many Newton starts.
pub const CENSUS_STARTS: usize = 1000;

/// Two parameter values closer than this (relative) collide on a grid.
const EXCLUSION_TOL: f64 = 1e-12;

/// An even closed grid `min ..= max` with `steps` points (so `steps - 1`
/// intervals), named after the parameter it sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, steps: usize) -> Result<Self, ScanError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(ScanError::InvalidParam(format!(
                "axis {name}: need finite min < max, got {min}..{max}"
            )));
        }
        if steps < 2 {
            return Err(ScanError::InvalidParam(format!(
                "axis {name}: steps must be >= 2, got {steps}"
            )));
        }
        Ok(Axis {
            name: name.to_string(),
            min,
            max,
            steps,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + i as f64 * h
                }
            })
            .collect()
    }
}

/// Scan layout: primary axis, optional second axis, initial conditions,
/// trajectory settings, and parameter values to skip (emitted as gap rows).
#[derive(Clone, Debug)]
pub struct ScanGrid {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub x0_set: Vec<f64>,
    pub dynamics: DynamicsConfig,
    pub excluded: Vec<f64>,
}

/// One measured grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSample {
    /// Axis values, in axis order.
    pub params: Vec<f64>,
    pub x0: f64,
    pub period: Option<usize>,
    pub lyapunov: Lyapunov,
    pub diverged: bool,
    /// |f′(x₁)···f′(xₙ)| over the training points, when the map has a
    /// derivative: < 1 means the trained orbit is locally attracting.
    pub stability_product: Option<f64>,
    /// Post-transient tail, decimated to one orbit when a period was found.
    pub attractor_points: Vec<f64>,
}

/// Why a grid cell was skipped.
#[derive(Clone, Debug, PartialEq)]
pub enum GapReason {
    /// The parameter collides with an excluded value (e.g. c ∈ {a, b}).
    Excluded,
    /// The kernel Gram matrix on the data was numerically singular.
    SingularGram { condition: f64 },
    /// The kernel could not be evaluated on this cell's data.
    KernelFailure,
}

impl GapReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapReason::Excluded => "excluded",
            GapReason::SingularGram { .. } => "singular-gram",
            GapReason::KernelFailure => "kernel-failure",
        }
    }
}

/// A measured cell or an explicit gap; skipped cells are never dropped.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanRow {
    Sample(ScanSample),
    Gap { params: Vec<f64>, reason: GapReason },
}

#[derive(Debug)]
pub enum ScanError {
    InvalidParam(String),
    Fit(FitError),
    Kernel(KernelError),
    Elm(elm::ElmError),
    Unsupported(String),
}

impl std::fmt::Display for ScanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScanError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            ScanError::Fit(e) => write!(f, "fit: {e}"),
            ScanError::Kernel(e) => write!(f, "kernel: {e}"),
            ScanError::Elm(e) => write!(f, "network: {e}"),
            ScanError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl std::error::Error for ScanError {}

impl From<FitError> for ScanError {
    fn from(e: FitError) -> Self {
        ScanError::Fit(e)
    }
}

impl From<KernelError> for ScanError {
    fn from(e: KernelError) -> Self {
        ScanError::Kernel(e)
    }
}

impl From<elm::ElmError> for ScanError {
    fn from(e: elm::ElmError) -> Self {
        ScanError::Elm(e)
    }
}

fn collides(v: f64, w: f64) -> bool {
    abs(v - w) <= EXCLUSION_TOL * f64::max(1.0, f64::max(abs(v), abs(w)))
}

fn is_excluded(v: f64, excluded: &[f64]) -> bool {
    excluded.iter().any(|&e| collides(v, e))
}

/// |Π f′(xᵢ)| over the training inputs, `None` without a derivative.
fn stability_product<M: Map1D + ?Sized>(map: &M, xs: &[f64]) -> Option<f64> {
    let mut prod = 1.0;
    for &x in xs {
        prod *= map.deriv(x)?;
    }
    Some(abs(prod))
}

fn sample_from_summary(
    params: Vec<f64>,
    x0: f64,
    summary: OrbitSummary,
    stability: Option<f64>,
) -> ScanSample {
    let mut tail = summary.trajectory_sample;
    if let Some(p) = summary.period {
        if tail.len() > p {
            tail.drain(..tail.len() - p);
        }
    }
    ScanSample {
        params,
        x0,
        period: summary.period,
        lyapunov: summary.lyapunov,
        diverged: summary.diverged,
        stability_product: stability,
        attractor_points: tail,
    }
}

fn run_cell<M: Map1D + ?Sized>(
    map: &M,
    params: &[f64],
    x0_set: &[f64],
    dynamics: &DynamicsConfig,
    stability: Option<f64>,
) -> Vec<ScanRow> {
    x0_set
        .iter()
        .map(|&x0| {
            let cfg = DynamicsConfig { x0, ..*dynamics };
            let summary = iterate(map, &cfg);
            ScanRow::Sample(sample_from_summary(params.to_vec(), x0, summary, stability))
        })
        .collect()
}

/// Fit on {a, b, c} and run every initial condition, or explain the gap.
fn fit_and_run(
    kernel: &KernelSpec,
    points: &[f64],
    params: &[f64],
    x0_set: &[f64],
    dynamics: &DynamicsConfig,
) -> Vec<ScanRow> {
    let gap = |reason| {
        vec![ScanRow::Gap {
            params: params.to_vec(),
            reason,
        }]
    };
    let data = match PeriodicDataset::period_orbit(points) {
        Ok(d) => d,
        Err(_) => return gap(GapReason::Excluded),
    };
    let map = match fit_limit(&data, kernel) {
        Ok(m) => m,
        Err(FitError::SingularGram { condition }) => {
            return gap(GapReason::SingularGram { condition })
        }
        Err(_) => return gap(GapReason::KernelFailure),
    };
    let stability = stability_product(&map, data.xs());
    run_cell(&map, params, x0_set, dynamics, stability)
}

/// Bifurcation scan in the third training point: for each c on the axis,
/// fit the map on {a, b, c} and run every initial condition. c values
/// colliding with a, b, or an excluded value become gap rows, as do cells
/// whose Gram matrix is singular.
pub fn scan_c(
    kernel: &KernelSpec,
    a: f64,
    b: f64,
    grid: &ScanGrid,
) -> Result<Vec<ScanRow>, ScanError> {
    if grid.axis2.is_some() {
        return Err(ScanError::InvalidParam(
            "scan_c sweeps one axis; axis2 must be empty".into(),
        ));
    }
    if !(a.is_finite() && b.is_finite()) || collides(a, b) {
        return Err(ScanError::InvalidParam("need finite a != b".into()));
    }
    if grid.x0_set.is_empty() {
        return Err(ScanError::InvalidParam("x0_set must not be empty".into()));
    }
    let mut excluded = grid.excluded.clone();
    excluded.push(a);
    excluded.push(b);
    let cells: Vec<Vec<ScanRow>> = grid
        .axis1
        .values()
        .par_iter()
        .map(|&c| {
            if is_excluded(c, &excluded) {
                return vec![ScanRow::Gap {
                    params: vec![c],
                    reason: GapReason::Excluded,
                }];
            }
            fit_and_run(kernel, &[a, b, c], &[c], &grid.x0_set, &grid.dynamics)
        })
        .collect();
    Ok(cells.into_iter().flatten().collect())
}

/// Two-dimensional scan over (c, σ) with σ_w = σ_b = σ, one trajectory per
/// cell from `x0`. Rows are ordered c-major: all σ for the first c, then the
/// next c. Divergence marks the cell, not the run.
pub fn scan_2d(
    family: &KernelFamily,
    a: f64,
    b: f64,
    grid: &ScanGrid,
    x0: f64,
) -> Result<Vec<ScanRow>, ScanError> {
    let axis2 = grid
        .axis2
        .as_ref()
        .ok_or_else(|| ScanError::InvalidParam("scan_2d needs axis2 (σ)".into()))?;
    if !(a.is_finite() && b.is_finite()) || collides(a, b) {
        return Err(ScanError::InvalidParam("need finite a != b".into()));
    }
    if axis2.min <= 0.0 {
        return Err(ScanError::InvalidParam(
            "σ axis must be strictly positive".into(),
        ));
    }
    let sigmas = axis2.values();
    let mut excluded = grid.excluded.clone();
    excluded.push(a);
    excluded.push(b);
    let x0_set = [x0];
    let rows: Vec<Vec<ScanRow>> = grid
        .axis1
        .values()
        .par_iter()
        .map(|&c| {
            let mut row = Vec::with_capacity(sigmas.len());
            for &sigma in &sigmas {
                if is_excluded(c, &excluded) {
                    row.push(ScanRow::Gap {
                        params: vec![c, sigma],
                        reason: GapReason::Excluded,
                    });
                    continue;
                }
                let spec = match KernelSpec::new(family.clone(), sigma, sigma) {
                    Ok(s) => s,
                    Err(e) => return Err(ScanError::Kernel(e)),
                };
                row.extend(fit_and_run(
                    &spec,
                    &[a, b, c],
                    &[c, sigma],
                    &x0_set,
                    &grid.dynamics,
                ));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Attractor diagram over the feedback strength: for each σ_fb on the axis,
/// rescale the trained map and run every initial condition. Pairs with
/// orbit continuation output for stability overlays.
pub fn scan_externalization(
    map: &TrainedMap,
    grid: &ScanGrid,
) -> Result<Vec<ScanRow>, ScanError> {
    if grid.axis2.is_some() {
        return Err(ScanError::InvalidParam(
            "externalization sweeps one axis; axis2 must be empty".into(),
        ));
    }
    if grid.x0_set.is_empty() {
        return Err(ScanError::InvalidParam("x0_set must not be empty".into()));
    }
    let cells: Vec<Vec<ScanRow>> = grid
        .axis1
        .values()
        .par_iter()
        .map(|&sigma_fb| {
            if is_excluded(sigma_fb, &grid.excluded) {
                return vec![ScanRow::Gap {
                    params: vec![sigma_fb],
                    reason: GapReason::Excluded,
                }];
            }
            let scaled = map.with_feedback(sigma_fb);
            let stability = stability_product(&scaled, map.data().xs());
            run_cell(
                &scaled,
                &[sigma_fb],
                &grid.x0_set,
                &grid.dynamics,
                stability,
            )
        })
        .collect();
    Ok(cells.into_iter().flatten().collect())
}

/// One trained finite network compared against the exact map.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTrial {
    pub n_nodes: usize,
    pub trial: usize,
    /// Derived sampling seed actually used (reproducible in isolation).
    pub seed: u64,
    /// sup over the probe grid of |f_N(x) − f_∞(x)|.
    pub sup_distance: f64,
    /// Training hit rank deficiency; the row is kept but flagged.
    pub degenerate: bool,
}

/// Pointwise min/max of the finite-network maps across trials at one width.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopePoint {
    pub n_nodes: usize,
    pub x: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub f_limit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteVsLimit {
    pub trials: Vec<FiniteTrial>,
    pub envelope: Vec<EnvelopePoint>,
}

/// Feature model matching a kernel family, for sampling finite networks.
fn feature_model(family: &KernelFamily) -> Result<(elm::Activation, elm::WeightLaw), ScanError> {
    use elm::WeightLaw::{Gaussian, Uniform};
    match family {
        KernelFamily::Erf => Ok((elm::Activation::Erf, Gaussian)),
        KernelFamily::Sin => Ok((elm::Activation::Sin, Gaussian)),
        KernelFamily::Cos => Ok((elm::Activation::Cos, Gaussian)),
        KernelFamily::Relu => Ok((elm::Activation::Relu, Gaussian)),
        KernelFamily::SgnLimit => Ok((elm::Activation::Sgn, Gaussian)),
        KernelFamily::UniformNumeric { activation, .. } => {
            let act = match activation {
                Activation::Erf => elm::Activation::Erf,
                Activation::Sin => elm::Activation::Sin,
                Activation::Cos => elm::Activation::Cos,
                Activation::Relu => elm::Activation::Relu,
            };
            Ok((act, Uniform))
        }
        other => Err(ScanError::Unsupported(format!(
            "no finite feature model for this kernel family: {other:?}"
        ))),
    }
}

/// Distance between trained finite networks and the exact map: per (width,
/// trial) the sup-grid distance, plus a per-point min/max envelope of the
/// finite maps at each width.
pub fn scan_finite_vs_limit(
    kernel: &KernelSpec,
    data: &PeriodicDataset,
    n_values: &[usize],
    n_seeds: usize,
    grid: &[f64],
    root_seed: u64,
) -> Result<FiniteVsLimit, ScanError> {
    if n_values.is_empty() || n_seeds == 0 || grid.is_empty() {
        return Err(ScanError::InvalidParam(
            "need n_values, n_seeds >= 1, and a probe grid".into(),
        ));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n < data.len()) {
        return Err(ScanError::InvalidParam(format!(
            "width {n} is smaller than the dataset ({} points)",
            data.len()
        )));
    }
    let (activation, law) = feature_model(kernel.family())?;
    let limit = fit_limit(data, kernel)?;
    let limit_vals: Vec<f64> = grid.iter().map(|&x| limit.evaluate(x)).collect();

    let tasks: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..n_seeds).map(move |k| (n, k)))
        .collect();
    let results: Vec<(FiniteTrial, Vec<f64>)> = tasks
        .par_iter()
        .map(|&(n, k)| {
            let seed = derive_seed(root_seed, &format!("finite-vs-limit/n={n}/trial={k}"));
            let net = FiniteNetwork::sample(
                n,
                activation,
                kernel.sigma_w(),
                kernel.sigma_b(),
                law,
                seed,
            )?
            .train_readout(data)?;
            let degenerate = net.degenerate_training();
            let map = net.map(1.0)?;
            let vals: Vec<f64> = grid.iter().map(|&x| map.eval(x)).collect();
            let sup = vals
                .iter()
                .zip(&limit_vals)
                .map(|(&f, &g)| abs(f - g))
                .fold(0.0_f64, f64::max);
            Ok((
                FiniteTrial {
                    n_nodes: n,
                    trial: k,
                    seed,
                    sup_distance: sup,
                    degenerate,
                },
                vals,
            ))
        })
        .collect::<Result<_, ScanError>>()?;

    let mut trials = Vec::with_capacity(results.len());
    let mut envelope = Vec::with_capacity(n_values.len() * grid.len());
    for (ni, &n) in n_values.iter().enumerate() {
        let block = &results[ni * n_seeds..(ni + 1) * n_seeds];
        for (gi, &x) in grid.iter().enumerate() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (_, vals) in block {
                lo = lo.min(vals[gi]);
                hi = hi.max(vals[gi]);
            }
            envelope.push(EnvelopePoint {
                n_nodes: n,
                x,
                f_min: lo,
                f_max: hi,
                f_limit: limit_vals[gi],
            });
        }
        trials.extend(block.iter().map(|(t, _)| t.clone()));
    }
    Ok(FiniteVsLimit { trials, envelope })
}

/// Where the maps for a period histogram come from.
#[derive(Clone, Debug, PartialEq)]
pub enum HistogramSource {
    /// Fit each random period-n dataset exactly.
    FittedMap,
    /// Skip training: sample untrained networks with a random readout.
    RandomNetwork { n_nodes: usize, readout_scale: f64 },
}

/// Stable/unstable/marginal orbit counts for one period, totalled over all
/// realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramRow {
    pub period: usize,
    pub stable: usize,
    pub unstable: usize,
    pub marginal: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodHistogram {
    pub rows: Vec<HistogramRow>,
    /// Realizations whose fit failed (singular Gram or colliding points).
    pub skipped: usize,
    /// Realizations counted into `rows`.
    pub counted: usize,
}

/// Periodic-orbit census totals over random realizations: random period-n
/// datasets fitted exactly, or untrained random networks. Each census runs
/// Newton from [`CENSUS_STARTS`] points of [`CENSUS_INTERVAL`] for all
/// periods ≤ `p_max`.
pub fn scan_period_histogram(
    kernel: &KernelSpec,
    n_period: usize,
    n_datasets: usize,
    data_interval: (f64, f64),
    p_max: usize,
    source: &HistogramSource,
    root_seed: u64,
) -> Result<PeriodHistogram, ScanError> {
    if !(1..=5).contains(&n_period) {
        return Err(ScanError::InvalidParam(
            "n_period must be in 1..=5".into(),
        ));
    }
    if n_datasets == 0 || p_max == 0 {
        return Err(ScanError::InvalidParam(
            "need n_datasets >= 1 and p_max >= 1".into(),
        ));
    }
    let (lo, hi) = data_interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ScanError::InvalidParam("bad data interval".into()));
    }
    if let HistogramSource::RandomNetwork { n_nodes, .. } = source {
        if *n_nodes == 0 {
            return Err(ScanError::InvalidParam("n_nodes must be >= 1".into()));
        }
        feature_model(kernel.family())?;
    }

    let censuses: Vec<Option<Vec<(usize, usize, usize)>>> = (0..n_datasets)
        .into_par_iter()
        .map(|i| {
            let map: Box<dyn Map1D + Send + Sync> = match source {
                HistogramSource::FittedMap => {
                    let mut rng = Rng::from_seed(derive_seed(
                        root_seed,
                        &format!("histogram/n={n_period}/dataset={i}"),
                    ));
                    let mut points: Vec<f64> =
                        (0..n_period).map(|_| rng.uniform(lo, hi)).collect();
                    if n_period >= 3 {
                        // Randomize the cyclic visiting order of the points.
                        rng.shuffle(&mut points);
                    }
                    let data = match PeriodicDataset::period_orbit(&points) {
                        Ok(d) => d,
                        Err(_) => return None,
                    };
                    match fit_limit(&data, kernel) {
                        Ok(m) => Box::new(m),
                        Err(_) => return None,
                    }
                }
                HistogramSource::RandomNetwork {
                    n_nodes,
                    readout_scale,
                } => {
                    let (activation, law) =
                        feature_model(kernel.family()).expect("validated above");
                    let structure_seed =
                        derive_seed(root_seed, &format!("histogram/random-net/{i}/structure"));
                    let readout_seed =
                        derive_seed(root_seed, &format!("histogram/random-net/{i}/readout"));
                    let net = match FiniteNetwork::sample(
                        *n_nodes,
                        activation,
                        kernel.sigma_w(),
                        kernel.sigma_b(),
                        law,
                        structure_seed,
                    ) {
                        Ok(n) => n.with_random_readout(*readout_scale, readout_seed),
                        Err(_) => return None,
                    };
                    match net.map(1.0) {
                        Ok(m) => Box::new(m),
                        Err(_) => return None,
                    }
                }
            };
            let records = find_orbits(map.as_ref(), p_max, CENSUS_INTERVAL, CENSUS_STARTS);
            Some(
                orbit_census(&records, p_max)
                    .into_iter()
                    .map(|row| (row.stable, row.unstable, row.marginal))
                    .collect(),
            )
        })
        .collect();

    let mut rows: Vec<HistogramRow> = (1..=p_max)
        .map(|period| HistogramRow {
            period,
            stable: 0,
            unstable: 0,
            marginal: 0,
        })
        .collect();
    let mut skipped = 0;
    let mut counted = 0;
    for census in censuses {
        match census {
            None => skipped += 1,
            Some(per_period) => {
                counted += 1;
                for (row, (s, u, m)) in rows.iter_mut().zip(per_period) {
                    row.stable += s;
                    row.unstable += u;
                    row.marginal += m;
                }
            }
        }
    }
    Ok(PeriodHistogram {
        rows,
        skipped,
        counted,
    })
}

/// CSV header matching [`scan_rows_csv`].
pub fn scan_csv_header(axis_names: &[&str]) -> String {
    let mut cols: Vec<&str> = axis_names.to_vec();
    cols.extend([
        "x0",
        "period",
        "lyapunov",
        "diverged",
        "stability_product",
        "attractor",
        "gap",
    ]);
    cols.join(",")
}

/// CSV rows for scan output; gap rows carry only their parameters and the
/// reason in the final column.
pub fn scan_rows_csv(rows: &[ScanRow]) -> Vec<String> {
    rows.iter()
        .map(|row| match row {
            ScanRow::Sample(s) => {
                let params: Vec<String> = s.params.iter().map(|&v| format_float(v)).collect();
                let attractor: Vec<String> = s
                    .attractor_points
                    .iter()
                    .map(|&v| format_float(v))
                    .collect();
                format!(
                    "{},{},{},{},{},{},{},",
                    params.join(","),
                    format_float(s.x0),
                    s.period.map(|p| p.to_string()).unwrap_or_default(),
                    lyapunov_csv(s.lyapunov),
                    s.diverged,
                    s.stability_product.map(format_float).unwrap_or_default(),
                    attractor.join(";"),
                )
            }
            ScanRow::Gap { params, reason } => {
                let params: Vec<String> = params.iter().map(|&v| format_float(v)).collect();
                format!("{},,,,,,,{}", params.join(","), reason.as_str())
            }
        })
        .collect()
}

/// JSON rows carrying the same values as [`scan_rows_csv`].
pub fn scan_rows_json(rows: &[ScanRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| match row {
                ScanRow::Sample(s) => json!({
                    "params": s.params.iter().map(|&v| json_number(v)).collect::<Vec<_>>(),
                    "x0": json_number(s.x0),
                    "period": s.period,
                    "lyapunov": lyapunov_json(s.lyapunov),
                    "diverged": s.diverged,
                    "stability_product": s.stability_product.map(json_number),
                    "attractor": s.attractor_points.iter().map(|&v| json_number(v)).collect::<Vec<_>>(),
                }),
                ScanRow::Gap { params, reason } => json!({
                    "params": params.iter().map(|&v| json_number(v)).collect::<Vec<_>>(),
                    "gap": reason.as_str(),
                }),
            })
            .collect(),
    )
}
