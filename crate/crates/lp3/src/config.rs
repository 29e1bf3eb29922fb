//! Name grammar for kernel families and activations, list/interval argument
//! parsing shared by the CLI and TOML run configs, and the run-config schema
//! itself.
//!
//! A run config (TOML file or CLI flags) resolves to a JSON value with every
//! default filled in; that value is echoed into output metadata and hashed,
//! so any artifact can be reproduced from its header. Scheduling knobs
//! (worker count, output destination) are deliberately not part of the
//! resolved config: results must be byte-identical across worker counts and
//! output paths.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::core::dynamics::DynamicsConfig;
use crate::core::elm;
use crate::core::kernels::{Activation, DeepKind, KernelFamily, KernelSpec};
use crate::scan::Axis;

/// Version of the run-config schema embedded in artifacts and `--version`.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Kernel family grammar:
/// `erf`, `sin`, `cos`, `relu`, `sgn-limit`, `delta-limit`,
/// `uniform:<activation>:<nodes>`, `deep-nngp:<activation>:<depth>`,
/// `deep-ntk:<activation>:<depth>`, and `bias:<inner>` for an added
/// trainable output bias.
pub fn parse_family(s: &str) -> Result<KernelFamily, String> {
    match s {
        "erf" => return Ok(KernelFamily::Erf),
        "sin" => return Ok(KernelFamily::Sin),
        "cos" => return Ok(KernelFamily::Cos),
        "relu" => return Ok(KernelFamily::Relu),
        "sgn-limit" => return Ok(KernelFamily::SgnLimit),
        "delta-limit" => return Ok(KernelFamily::DeltaLimit),
        _ => {}
    }
    if let Some(inner) = s.strip_prefix("bias:") {
        return Ok(KernelFamily::WithOutputBias(Box::new(parse_family(inner)?)));
    }
    if let Some(rest) = s.strip_prefix("uniform:") {
        let (act, nodes) = split_two(rest, s)?;
        return Ok(KernelFamily::UniformNumeric {
            activation: parse_activation(act)?,
            nodes: nodes
                .parse()
                .map_err(|_| format!("bad node count {nodes:?} in {s:?}"))?,
        });
    }
    for (prefix, kind) in [("deep-nngp:", DeepKind::Nngp), ("deep-ntk:", DeepKind::Ntk)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let (act, depth) = split_two(rest, s)?;
            return Ok(KernelFamily::Deep {
                activation: parse_activation(act)?,
                depth: depth
                    .parse()
                    .map_err(|_| format!("bad depth {depth:?} in {s:?}"))?,
                kind,
            });
        }
    }
    Err(format!(
        "unknown kernel family {s:?}; expected erf, sin, cos, relu, sgn-limit, delta-limit, \
         uniform:<act>:<nodes>, deep-nngp:<act>:<depth>, deep-ntk:<act>:<depth>, or bias:<inner>"
    ))
}

fn split_two<'a>(rest: &'a str, whole: &str) -> Result<(&'a str, &'a str), String> {
    rest.split_once(':')
        .ok_or_else(|| format!("expected two ':'-separated parts after the prefix in {whole:?}"))
}

/// Canonical spelling of a family, inverse of [`parse_family`].
pub fn family_string(family: &KernelFamily) -> String {
    match family {
        KernelFamily::Erf => "erf".into(),
        KernelFamily::Sin => "sin".into(),
        KernelFamily::Cos => "cos".into(),
        KernelFamily::Relu => "relu".into(),
        KernelFamily::SgnLimit => "sgn-limit".into(),
        KernelFamily::DeltaLimit => "delta-limit".into(),
        KernelFamily::UniformNumeric { activation, nodes } => {
            format!("uniform:{}:{}", activation_string(*activation), nodes)
        }
        KernelFamily::Deep {
            activation,
            depth,
            kind,
        } => {
            let tag = match kind {
                DeepKind::Nngp => "deep-nngp",
                DeepKind::Ntk => "deep-ntk",
            };
            format!("{tag}:{}:{}", activation_string(*activation), depth)
        }
        KernelFamily::WithOutputBias(inner) => format!("bias:{}", family_string(inner)),
    }
}

pub fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "erf" => Ok(Activation::Erf),
        "sin" => Ok(Activation::Sin),
        "cos" => Ok(Activation::Cos),
        "relu" => Ok(Activation::Relu),
        _ => Err(format!(
            "unknown activation {s:?}; expected erf, sin, cos, or relu"
        )),
    }
}

pub fn activation_string(a: Activation) -> &'static str {
    match a {
        Activation::Erf => "erf",
        Activation::Sin => "sin",
        Activation::Cos => "cos",
        Activation::Relu => "relu",
    }
}

/// Feature-network activations add `sgn` to the kernel set.
pub fn parse_elm_activation(s: &str) -> Result<elm::Activation, String> {
    match s {
        "erf" => Ok(elm::Activation::Erf),
        "sin" => Ok(elm::Activation::Sin),
        "cos" => Ok(elm::Activation::Cos),
        "relu" => Ok(elm::Activation::Relu),
        "sgn" => Ok(elm::Activation::Sgn),
        _ => Err(format!(
            "unknown activation {s:?}; expected erf, sin, cos, relu, or sgn"
        )),
    }
}

pub fn elm_activation_string(a: elm::Activation) -> &'static str {
    match a {
        elm::Activation::Erf => "erf",
        elm::Activation::Sin => "sin",
        elm::Activation::Cos => "cos",
        elm::Activation::Relu => "relu",
        elm::Activation::Sgn => "sgn",
    }
}

pub fn parse_weight_law(s: &str) -> Result<elm::WeightLaw, String> {
    match s {
        "gaussian" => Ok(elm::WeightLaw::Gaussian),
        "uniform" => Ok(elm::WeightLaw::Uniform),
        _ => Err(format!(
            "unknown weight law {s:?}; expected gaussian or uniform"
        )),
    }
}

pub fn weight_law_string(law: elm::WeightLaw) -> &'static str {
    match law {
        elm::WeightLaw::Gaussian => "gaussian",
        elm::WeightLaw::Uniform => "uniform",
    }
}

/// Comma-separated reals, e.g. `-1,1,0`.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number {t:?} in list {s:?}"))
        })
        .collect()
}

/// `lo,hi` with lo < hi.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let v = parse_number_list(s)?;
    if v.len() != 2 || !(v[0] < v[1]) {
        return Err(format!("interval {s:?} must be lo,hi with lo < hi"));
    }
    Ok((v[0], v[1]))
}

/// Comma-separated positive integers, e.g. `1,2,3,4,5,6`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad count {t:?} in list {s:?}"))
        })
        .collect()
}

/// What a `scan run` config computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ScanC,
    Scan2d,
    Externalization,
    FiniteVsLimit,
    PeriodHistogram,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ScanC => "scan-c",
            Mode::Scan2d => "scan-2d",
            Mode::Externalization => "externalization",
            Mode::FiniteVsLimit => "finite-vs-limit",
            Mode::PeriodHistogram => "period-histogram",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct KernelSection {
    pub family: String,
    /// Shorthand setting both scales.
    pub sigma: Option<f64>,
    pub sigma_w: Option<f64>,
    pub sigma_b: Option<f64>,
}

impl KernelSection {
    pub fn to_spec(&self) -> Result<KernelSpec, String> {
        let family = parse_family(&self.family)?;
        let sw = self.sigma_w.or(self.sigma).unwrap_or(1.0);
        let sb = self.sigma_b.or(self.sigma).unwrap_or(1.0);
        KernelSpec::new(family, sw, sb).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AxisSection {
    pub name: Option<String>,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSection {
    pub fn to_axis(&self, default_name: &str) -> Result<Axis, String> {
        Axis::new(
            self.name.as_deref().unwrap_or(default_name),
            self.min,
            self.max,
            self.steps,
        )
        .map_err(|e| e.to_string())
    }
}

/// Initial conditions: an explicit list, or an even grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct X0Section {
    pub values: Option<Vec<f64>>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub steps: Option<usize>,
}

impl X0Section {
    pub fn to_values(&self) -> Result<Vec<f64>, String> {
        match (&self.values, self.min, self.max, self.steps) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(min), Some(max), Some(steps)) => {
                Ok(Axis::new("x0", min, max, steps).map_err(|e| e.to_string())?.values())
            }
            _ => Err("x0 needs either values = [...] or min/max/steps".into()),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DynamicsSection {
    pub transient: Option<usize>,
    pub horizon: Option<usize>,
    pub eps_period: Option<f64>,
    pub n_max: Option<usize>,
    pub diverge_bound: Option<f64>,
    pub sample_len: Option<usize>,
}

impl DynamicsSection {
    /// Fill unset fields from the library defaults, but keep a 100-point
    /// attractor tail unless explicitly overridden: scans exist to draw
    /// bifurcation diagrams.
    pub fn to_config(&self) -> DynamicsConfig {
        let d = DynamicsConfig::default();
        DynamicsConfig {
            transient: self.transient.unwrap_or(d.transient),
            horizon: self.horizon.unwrap_or(d.horizon),
            x0: 0.0,
            eps_period: self.eps_period.unwrap_or(d.eps_period),
            n_max: self.n_max.unwrap_or(d.n_max),
            diverge_bound: self.diverge_bound.unwrap_or(d.diverge_bound),
            sample_len: self.sample_len.unwrap_or(100),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum SourceSection {
    #[serde(rename = "fitted")]
    Fitted,
    #[serde(rename = "random-network")]
    RandomNetwork {
        nodes: usize,
        #[serde(rename = "readout-scale")]
        readout_scale: f64,
    },
}

/// One `scan run` description. Unknown keys are rejected; optional sections
/// are validated per mode when the run is assembled.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    /// Scheduling only; never part of the resolved config or its hash.
    pub workers: Option<usize>,
    pub kernel: KernelSection,
    /// Orbit points of the training data, in visit order.
    pub data: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub axis1: Option<AxisSection>,
    pub axis2: Option<AxisSection>,
    pub x0: Option<X0Section>,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub excluded: Vec<f64>,
    // finite-vs-limit
    pub n_values: Option<Vec<usize>>,
    pub n_seeds: Option<usize>,
    pub grid: Option<AxisSection>,
    // period-histogram
    pub n_period: Option<usize>,
    pub n_datasets: Option<usize>,
    pub data_interval: Option<[f64; 2]>,
    pub p_max: Option<usize>,
    pub source: Option<SourceSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config: {e}"))
    }

    fn require<T: Clone>(opt: &Option<T>, key: &str, mode: Mode) -> Result<T, String> {
        opt.clone()
            .ok_or_else(|| format!("mode {:?} requires the key {key}", mode.as_str()))
    }

    pub fn data_points(&self) -> Result<Vec<f64>, String> {
        Self::require(&self.data, "data", self.mode)
    }

    pub fn axis1(&self, default_name: &str) -> Result<Axis, String> {
        Self::require(&self.axis1, "axis1", self.mode)?.to_axis(default_name)
    }

    pub fn axis2(&self, default_name: &str) -> Result<Axis, String> {
        Self::require(&self.axis2, "axis2", self.mode)?.to_axis(default_name)
    }

    pub fn x0_values(&self) -> Result<Vec<f64>, String> {
        Self::require(&self.x0, "x0", self.mode)?.to_values()
    }
}

/// JSON value of a kernel spec as embedded in configs and map files.
pub fn kernel_json(spec: &KernelSpec) -> Value {
    json!({
        "family": family_string(spec.family()),
        "sigma_w": spec.sigma_w(),
        "sigma_b": spec.sigma_b(),
    })
}

/// JSON value of dynamics settings as embedded in configs.
pub fn dynamics_json(cfg: &DynamicsConfig) -> Value {
    json!({
        "transient": cfg.transient,
        "horizon": cfg.horizon,
        "eps_period": cfg.eps_period,
        "n_max": cfg.n_max,
        "diverge_bound": cfg.diverge_bound,
        "sample_len": cfg.sample_len,
    })
}
