//! Text formats: 17-significant-digit CSV values with `nan`/`inf`/`-inf`
//! spellings, config-stamped CSV and JSON documents, and the JSON files for
//! trained maps (`map.json`) and finite networks (`net.json`).
//!
//! Every document starts from the fully resolved run config: CSV carries
//! `# config-hash:` and `# config:` comment lines before the header, JSON
//! carries `config` and `config_hash` members. The hash is FNV-1a over the
//! compact JSON encoding of the config (keys sorted), so identical configs
//! hash identically across runs and platforms.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{kernel_json, parse_family};
use crate::core::dataset::{DatasetLabel, PeriodicDataset};
use crate::core::dynamics::{AttractorLabel, Lyapunov};
use crate::core::elm::FiniteNetwork;
use crate::core::kernels::KernelSpec;
use crate::core::limitmap::TrainedMap;
use crate::core::orbits::Terminus;
use crate::core::rng::fnv1a64;
use crate::config::{parse_elm_activation, parse_weight_law};
use crate::config::{elm_activation_string, weight_law_string};

/// A file failed to parse or describe a valid object.
#[derive(Debug)]
pub enum ReadError {
    Io(std::io::Error),
    Format(String),
}

impl std::fmt::Display for ReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReadError::Io(e) => write!(f, "i/o: {e}"),
            ReadError::Format(msg) => write!(f, "format: {msg}"),
        }
    }
}

impl std::error::Error for ReadError {}

impl From<std::io::Error> for ReadError {
    fn from(e: std::io::Error) -> Self {
        ReadError::Io(e)
    }
}

fn format_err(msg: impl Into<String>) -> ReadError {
    ReadError::Format(msg.into())
}

/// 17 significant digits; non-finite values spelled `nan`, `inf`, `-inf`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// CSV cell for a Lyapunov exponent: the −∞ superstable marker is `-inf`,
/// an unavailable derivative leaves the cell empty.
pub fn lyapunov_csv(l: Lyapunov) -> String {
    match l {
        Lyapunov::Finite(v) => format_float(v),
        Lyapunov::NegInf => "-inf".into(),
        Lyapunov::Unavailable => String::new(),
    }
}

/// JSON value for a Lyapunov exponent: finite as a number, the −∞ marker as
/// the string `"-inf"`, unavailable as null.
pub fn lyapunov_json(l: Lyapunov) -> Value {
    match l {
        Lyapunov::Finite(v) => json_number(v),
        Lyapunov::NegInf => Value::String("-inf".into()),
        Lyapunov::Unavailable => Value::Null,
    }
}

/// Finite reals stay JSON numbers; non-finite ones become their CSV
/// spellings as strings (JSON has no literal for them).
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(format_float(v))
    }
}

/// Basin/attractor label cell: `p<period>@<centroid in micro-units>`,
/// `inf`, `chaotic`, or `undetected`.
pub fn label_string(label: AttractorLabel) -> String {
    match label {
        AttractorLabel::Periodic {
            period,
            centroid_micro,
        } => format!("p{period}@{centroid_micro}"),
        AttractorLabel::Divergent => "inf".into(),
        AttractorLabel::Chaotic => "chaotic".into(),
        AttractorLabel::Undetected => "undetected".into(),
    }
}

pub fn terminus_string(t: Terminus) -> &'static str {
    match t {
        Terminus::ReachedMin => "reached-min",
        Terminus::Fold { .. } => "fold",
        Terminus::LostConvergence { .. } => "lost-convergence",
    }
}

/// Hex FNV-1a hash of the compact JSON encoding of a config value.
pub fn config_hash(config: &Value) -> String {
    format!("{:016x}", fnv1a64(config.to_string().as_bytes()))
}

/// CSV document: `# config-hash:` line, `# config:` line, header, rows.
pub fn csv_document(config: &Value, header: &str, rows: &[String]) -> String {
    let mut out = String::new();
    out.push_str("# config-hash: ");
    out.push_str(&config_hash(config));
    out.push('\n');
    out.push_str("# config: ");
    out.push_str(&config.to_string());
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// JSON document with the same metadata as [`csv_document`].
pub fn json_document(config: &Value, rows: Value) -> String {
    let doc = json!({
        "config": config,
        "config_hash": config_hash(config),
        "rows": rows,
    });
    let mut text = doc.to_string();
    text.push('\n');
    text
}

/// Write to a file, or to standard output when `path` is `None`.
pub fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(p, text)
        }
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn label_tag(label: DatasetLabel) -> String {
    match label {
        DatasetLabel::PeriodN(n) => format!("period-{n}"),
        DatasetLabel::LiYorke => "li-yorke".into(),
        DatasetLabel::Generic => "generic".into(),
    }
}

fn parse_label_tag(s: &str) -> Result<DatasetLabel, ReadError> {
    if let Some(n) = s.strip_prefix("period-") {
        let n: usize = n
            .parse()
            .map_err(|_| format_err(format!("bad dataset label {s:?}")))?;
        return Ok(DatasetLabel::PeriodN(n));
    }
    match s {
        "li-yorke" => Ok(DatasetLabel::LiYorke),
        "generic" => Ok(DatasetLabel::Generic),
        _ => Err(format_err(format!("bad dataset label {s:?}"))),
    }
}

fn floats_json(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&v| json_number(v)).collect())
}

fn get<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value, ReadError> {
    obj.get(key)
        .ok_or_else(|| format_err(format!("missing key {key:?}")))
}

fn as_object<'v>(v: &'v Value, what: &str) -> Result<&'v Map<String, Value>, ReadError> {
    v.as_object()
        .ok_or_else(|| format_err(format!("{what} must be a JSON object")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64, ReadError> {
    v.as_f64()
        .ok_or_else(|| format_err(format!("{what} must be a number")))
}

fn as_floats(v: &Value, what: &str) -> Result<Vec<f64>, ReadError> {
    v.as_array()
        .ok_or_else(|| format_err(format!("{what} must be an array")))?
        .iter()
        .map(|x| as_f64(x, what))
        .collect()
}

fn as_str<'v>(v: &'v Value, what: &str) -> Result<&'v str, ReadError> {
    v.as_str()
        .ok_or_else(|| format_err(format!("{what} must be a string")))
}

fn kernel_from_json(v: &Value) -> Result<KernelSpec, ReadError> {
    let obj = as_object(v, "kernel")?;
    let family = parse_family(as_str(get(obj, "family")?, "kernel.family")?)
        .map_err(format_err)?;
    let sw = as_f64(get(obj, "sigma_w")?, "kernel.sigma_w")?;
    let sb = as_f64(get(obj, "sigma_b")?, "kernel.sigma_b")?;
    KernelSpec::new(family, sw, sb).map_err(|e| format_err(e.to_string()))
}

/// JSON form of a trained map, the `map.json` the CLI writes and reads.
pub fn map_to_json(map: &TrainedMap) -> Value {
    json!({
        "format": "lp3-map",
        "schema": 1,
        "kernel": kernel_json(map.kernel()),
        "data": {
            "xs": floats_json(map.data().xs()),
            "ys": floats_json(map.data().ys()),
            "label": label_tag(map.data().label()),
        },
        "dual_coeffs": floats_json(map.dual_coeffs()),
        "sigma_fb": map.sigma_fb(),
        "gram_condition": map.gram_condition(),
    })
}

pub fn map_from_json(v: &Value) -> Result<TrainedMap, ReadError> {
    let obj = as_object(v, "map file")?;
    if as_str(get(obj, "format")?, "format")? != "lp3-map" {
        return Err(format_err("not a map file (format != lp3-map)"));
    }
    let data_obj = as_object(get(obj, "data")?, "data")?;
    let xs = as_floats(get(data_obj, "xs")?, "data.xs")?;
    let ys = as_floats(get(data_obj, "ys")?, "data.ys")?;
    let label = parse_label_tag(as_str(get(data_obj, "label")?, "data.label")?)?;
    let data = PeriodicDataset::from_raw_unchecked(xs, ys, label);
    data.validate()
        .map_err(|e| format_err(format!("data: {e}")))?;
    let kernel = kernel_from_json(get(obj, "kernel")?)?;
    let dual = as_floats(get(obj, "dual_coeffs")?, "dual_coeffs")?;
    let sigma_fb = as_f64(get(obj, "sigma_fb")?, "sigma_fb")?;
    let condition = as_f64(get(obj, "gram_condition")?, "gram_condition")?;
    TrainedMap::from_parts(data, kernel, dual, sigma_fb, condition)
        .map_err(|e| format_err(e.to_string()))
}

pub fn write_map(path: &Path, map: &TrainedMap) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(&map_to_json(map)).expect("map json");
    text.push('\n');
    write_text(Some(path), &text)
}

pub fn read_map(path: &Path) -> Result<TrainedMap, ReadError> {
    let text = fs::read_to_string(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| format_err(format!("{}: {e}", path.display())))?;
    map_from_json(&value)
}

/// JSON form of a finite feature network, the `net.json` the CLI writes.
pub fn net_to_json(net: &FiniteNetwork) -> Value {
    json!({
        "format": "lp3-net",
        "schema": 1,
        "activation": elm_activation_string(net.activation()),
        "weight_law": weight_law_string(net.weight_law()),
        "sigma_w": net.sigma_w(),
        "sigma_b": net.sigma_b(),
        "w_in": floats_json(net.w_in()),
        "b_in": floats_json(net.b_in()),
        "w_out": match net.w_out() {
            Some(w) => floats_json(w),
            None => Value::Null,
        },
        "degenerate_training": net.degenerate_training(),
    })
}

pub fn net_from_json(v: &Value) -> Result<FiniteNetwork, ReadError> {
    let obj = as_object(v, "network file")?;
    if as_str(get(obj, "format")?, "format")? != "lp3-net" {
        return Err(format_err("not a network file (format != lp3-net)"));
    }
    let activation = parse_elm_activation(as_str(get(obj, "activation")?, "activation")?)
        .map_err(format_err)?;
    let law = parse_weight_law(as_str(get(obj, "weight_law")?, "weight_law")?)
        .map_err(format_err)?;
    let sigma_w = as_f64(get(obj, "sigma_w")?, "sigma_w")?;
    let sigma_b = as_f64(get(obj, "sigma_b")?, "sigma_b")?;
    let w_in = as_floats(get(obj, "w_in")?, "w_in")?;
    let b_in = as_floats(get(obj, "b_in")?, "b_in")?;
    let w_out = match get(obj, "w_out")? {
        Value::Null => None,
        v => Some(as_floats(v, "w_out")?),
    };
    let degenerate = get(obj, "degenerate_training")?
        .as_bool()
        .ok_or_else(|| format_err("degenerate_training must be a boolean"))?;
    FiniteNetwork::from_parts(activation, law, sigma_w, sigma_b, w_in, b_in, w_out, degenerate)
        .map_err(|e| format_err(e.to_string()))
}

pub fn write_net(path: &Path, net: &FiniteNetwork) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(&net_to_json(net)).expect("net json");
    text.push('\n');
    write_text(Some(path), &text)
}

pub fn read_net(path: &Path) -> Result<FiniteNetwork, ReadError> {
    let text = fs::read_to_string(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| format_err(format!("{}: {e}", path.display())))?;
    net_from_json(&value)
}
