//! Experiment configuration: strict JSON parsing (duplicate and unknown keys
//! rejected) and validation with field-level messages.

use std::path::PathBuf;

use serde::de::{Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Experiment {
    #[serde(rename = "SWEEP")]
    Sweep,
    #[serde(rename = "DIAGNOSE")]
    Diagnose,
    #[serde(rename = "VARCHECK")]
    Varcheck,
    #[serde(rename = "RESIDUAL")]
    Residual,
    #[serde(rename = "NORMCHECK")]
    Normcheck,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Sweep => "SWEEP",
            Experiment::Diagnose => "DIAGNOSE",
            Experiment::Varcheck => "VARCHECK",
            Experiment::Residual => "RESIDUAL",
            Experiment::Normcheck => "NORMCHECK",
        }
    }
}

/// Which law the sweep compares against. With an exactly rational aspect the
/// finite-n ratio equals the limit, so both choices evaluate the same law;
/// the switch is kept because rate statements are phrased against the
/// finite-n law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ReferenceLaw {
    #[serde(rename = "LAW_AT_C")]
    LawAtC,
    #[serde(rename = "LAW_AT_CN")]
    LawAtCn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OutputFormat {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "json")]
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kind: EnsembleKind,
    pub aspect_num: u64,
    pub aspect_den: u64,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
    pub reference: ReferenceLaw,
    pub alpha: f64,
    pub v: f64,
    pub points: usize,
    pub beta: usize,
    pub beta_list: Vec<usize>,
    pub z_re: f64,
    pub z_im: f64,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The ensemble spec at one row count.
    pub fn spec_at(&self, n: usize) -> Result<EnsembleSpec> {
        EnsembleSpec::new(self.kind, n, self.aspect_num, self.aspect_den, self.beta)
    }

    pub fn aspect_f64(&self) -> f64 {
        self.aspect_num as f64 / self.aspect_den as f64
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    kind: EnsembleKind,
    aspect: String,
    n_list: Vec<u64>,
    master_seed: u64,
    trials: Option<u64>,
    reference: Option<ReferenceLaw>,
    alpha: Option<f64>,
    v: Option<f64>,
    points: Option<u64>,
    beta: Option<u64>,
    beta_list: Option<Vec<u64>>,
    z_re: Option<f64>,
    z_im: Option<f64>,
    out: Option<String>,
    format: Option<OutputFormat>,
    cache_dir: Option<String>,
}

/// Parses "num/den" (or a bare integer, meaning den = 1).
pub fn parse_aspect(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::Config(format!("aspect must look like \"2/1\", got {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: u64 = num.trim().parse().map_err(|_| bad())?;
    let den: u64 = den.trim().parse().map_err(|_| bad())?;
    if num == 0 || den == 0 {
        return Err(Error::Config("aspect numerator and denominator must be positive".into()));
    }
    Ok((num, den))
}

/// Parses and validates an experiment configuration from JSON text.
///
/// Unknown keys are rejected; duplicate keys are rejected rather than
/// silently last-wins; defaults are trials=20, alpha=8, v=0.5, points=33,
/// reference=LAW_AT_CN, beta=0, beta_list=[0], z_re=1, z_im=1.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    reject_duplicate_keys(text)?;
    let raw: RawConfig = serde_json::from_str(text).map_err(classify_json_error)?;
    validate(raw)
}

fn classify_json_error(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Config(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig> {
    let (aspect_num, aspect_den) = parse_aspect(&raw.aspect)?;
    if raw.n_list.is_empty() {
        return Err(Error::Config("n_list must be nonempty".into()));
    }
    if raw.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n_list must be strictly increasing".into()));
    }
    let n_list: Vec<usize> = raw
        .n_list
        .iter()
        .map(|&n| {
            usize::try_from(n).map_err(|_| Error::Config(format!("n_list entry {n} out of range")))
        })
        .collect::<Result<_>>()?;
    let trials = raw.trials.unwrap_or(20);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let alpha = raw.alpha.unwrap_or(8.0);
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("alpha = {alpha} must be positive")));
    }
    let v = raw.v.unwrap_or(0.5);
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Config(format!("v = {v} must lie in (0, 1]")));
    }
    let points = raw.points.unwrap_or(33);
    if points == 0 {
        return Err(Error::Config("points must be at least 1".into()));
    }

    let is_varcheck = raw.experiment == Experiment::Varcheck;
    if !is_varcheck {
        if raw.beta_list.is_some() {
            return Err(Error::Config("beta_list is only valid for VARCHECK".into()));
        }
        if raw.z_re.is_some() || raw.z_im.is_some() {
            return Err(Error::Config("z_re/z_im are only valid for VARCHECK".into()));
        }
    }
    let beta = usize::try_from(raw.beta.unwrap_or(0))
        .map_err(|_| Error::Config("beta out of range".into()))?;
    let beta_list: Vec<usize> = raw
        .beta_list
        .unwrap_or_else(|| vec![0])
        .iter()
        .map(|&b| usize::try_from(b).map_err(|_| Error::Config(format!("beta {b} out of range"))))
        .collect::<Result<_>>()?;
    if beta_list.is_empty() {
        return Err(Error::Config("beta_list must be nonempty".into()));
    }
    let z_re = raw.z_re.unwrap_or(1.0);
    let z_im = raw.z_im.unwrap_or(1.0);
    if !(z_im > 0.0) {
        return Err(Error::Config(format!("z_im = {z_im} must be positive")));
    }

    let cfg = ExperimentConfig {
        experiment: raw.experiment,
        kind: raw.kind,
        aspect_num,
        aspect_den,
        n_list,
        trials,
        master_seed: raw.master_seed,
        reference: raw.reference.unwrap_or(ReferenceLaw::LawAtCn),
        alpha,
        v,
        points: points as usize,
        beta,
        beta_list,
        z_re,
        z_im,
        out: raw.out.map(PathBuf::from),
        format: raw.format,
        cache_dir: raw.cache_dir.map(PathBuf::from),
    };

    match cfg.experiment {
        Experiment::Varcheck => {
            if cfg.kind != EnsembleKind::MovingAverageRows {
                return Err(Error::Config(format!(
                    "kind must be MOVING_AVERAGE_ROWS for VARCHECK, got {}",
                    cfg.kind
                )));
            }
            for &n in &cfg.n_list {
                for &b in &cfg.beta_list {
                    EnsembleSpec::new(cfg.kind, n, cfg.aspect_num, cfg.aspect_den, b)
                        .map_err(|e| Error::Config(format!("n_list/beta_list: {e}")))?;
                }
            }
        }
        Experiment::Diagnose => {
            if !cfg.kind.has_independent_rows() {
                return Err(Error::Config(format!(
                    "kind {} has dependent rows; DIAGNOSE requires independent rows",
                    cfg.kind
                )));
            }
            for &n in &cfg.n_list {
                cfg.spec_at(n).map_err(|e| Error::Config(format!("n_list: {e}")))?;
            }
        }
        _ => {
            for &n in &cfg.n_list {
                cfg.spec_at(n).map_err(|e| Error::Config(format!("n_list: {e}")))?;
            }
        }
    }
    Ok(cfg)
}

/// Pointwise law evaluation request (the `mp-eval` subcommand).
#[derive(Debug, Clone, PartialEq)]
pub struct MpEvalConfig {
    pub aspect_num: u64,
    pub aspect_den: u64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: usize,
    /// When set, also evaluates the Stieltjes transform along `x + i v_im`.
    pub v_im: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMpEval {
    aspect: String,
    x_min: Option<f64>,
    x_max: Option<f64>,
    points: Option<u64>,
    v_im: Option<f64>,
    out: Option<String>,
    format: Option<OutputFormat>,
}

pub fn parse_mp_eval_config(text: &str) -> Result<MpEvalConfig> {
    reject_duplicate_keys(text)?;
    let raw: RawMpEval = serde_json::from_str(text).map_err(classify_json_error)?;
    let (aspect_num, aspect_den) = parse_aspect(&raw.aspect)?;
    let points = raw.points.unwrap_or(201);
    if points < 2 {
        return Err(Error::Config("points must be at least 2".into()));
    }
    if let Some(v) = raw.v_im {
        if !(v > 0.0) {
            return Err(Error::Config(format!("v_im = {v} must be positive")));
        }
    }
    Ok(MpEvalConfig {
        aspect_num,
        aspect_den,
        x_min: raw.x_min,
        x_max: raw.x_max,
        points: points as usize,
        v_im: raw.v_im,
        out: raw.out.map(PathBuf::from),
        format: raw.format,
    })
}

/// Walks the JSON document and errors on the first duplicated object key.
pub fn reject_duplicate_keys(text: &str) -> Result<()> {
    struct AnyValue;
    struct AnyVisitor;

    impl<'de> Visitor<'de> for AnyVisitor {
        type Value = ();

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("any JSON value")
        }

        fn visit_bool<E>(self, _: bool) -> std::result::Result<(), E> {
            Ok(())
        }
        fn visit_i64<E>(self, _: i64) -> std::result::Result<(), E> {
            Ok(())
        }
        fn visit_u64<E>(self, _: u64) -> std::result::Result<(), E> {
            Ok(())
        }
        fn visit_f64<E>(self, _: f64) -> std::result::Result<(), E> {
            Ok(())
        }
        fn visit_str<E>(self, _: &str) -> std::result::Result<(), E> {
            Ok(())
        }
        fn visit_unit<E>(self) -> std::result::Result<(), E> {
            Ok(())
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
            while seq.next_element::<AnyValue>()?.is_some() {}
            Ok(())
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<(), A::Error> {
            let mut seen = std::collections::HashSet::new();
            while let Some(key) = map.next_key::<String>()? {
                if !seen.insert(key.clone()) {
                    return Err(serde::de::Error::custom(format!("duplicate key {key:?}")));
                }
                map.next_value::<AnyValue>()?;
            }
            Ok(())
        }
    }

    impl<'de> Deserialize<'de> for AnyValue {
        fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<AnyValue, D::Error> {
            d.deserialize_any(AnyVisitor)?;
            Ok(AnyValue)
        }
    }

    let mut de = serde_json::Deserializer::from_str(text);
    AnyValue::deserialize(&mut de).map_err(classify_json_error)?;
    de.end().map_err(classify_json_error)?;
    Ok(())
}
