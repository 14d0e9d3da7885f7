//! Experiment configuration files.
//!
//! The primary format is sectioned `key = value` text (TOML). A JSON object
//! with the same layout is accepted too; text whose first non-blank
//! character is `{` is read as JSON.
//!
//! ```toml
//! base_seed = 7              # required
//! periods = 100
//! replications = 100
//! rate_threshold = 1.0
//! channel_budget = 10000
//! enforce_channel_budget = false
//!
//! [topology]
//! grid_side = 200.0
//! small_cell_offsets = [[-50.0, 0.0], [50.0, 0.0]]
//! irs_per_cell = 8
//! irs_radius = 20.0
//! eavesdroppers_per_cell = 2
//! eve_radius = 25.0
//! ue_count = 20
//! distribution = "random"    # random | clustered
//! cluster_size = 10
//! cluster_spread = 50.0
//! # detection_threshold_db = -10.0
//!
//! [channel]
//! carrier_hz = 5e9
//! pathloss_exponent = 2.2
//! ref_loss_db = 0.0
//! irs_gain_db = 65.0
//! tx_power_db = 5.0
//! noise_power_db = 0.0
//! units = "normalized"       # normalized | absolute
//! # bandwidth_hz, noise_figure_db: absolute units only
//!
//! [policy]
//! kind = "cb"                # cb | greedy
//! omega = 0.1
//! phi = 2
//!
//! [sweep]
//! policies = ["cb", "greedy"]
//! cases = ["random", "clustered"]
//! phi = [1, 2, 4]
//! omega = [0.1]              # defaults to [policy.omega]
//!
//! [output]
//! path = "trace.csv"
//! format = "csv"             # csv | json
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use irs_assoc::channel::LinkUnits;
use irs_assoc::{DistributionCase, PolicyKind, Position, SimulationConfig};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::experiment::{ExperimentSpec, OutputFormat, Sweep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` must be {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    /// Dotted key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax(_) => None,
            ConfigError::MissingKey(k) | ConfigError::UnknownKey(k) => Some(k),
            ConfigError::TypeMismatch { key, .. } | ConfigError::Invalid { key, .. } => Some(key),
        }
    }
}

impl From<irs_assoc::Error> for ConfigError {
    fn from(e: irs_assoc::Error) -> Self {
        match e {
            irs_assoc::Error::InvalidConfig { key, reason } => ConfigError::Invalid {
                key: key.to_string(),
                reason,
            },
            irs_assoc::Error::CellOutsideGrid { .. } => ConfigError::Invalid {
                key: "topology.small_cell_offsets".into(),
                reason: e.to_string(),
            },
            other => ConfigError::Invalid {
                key: "config".into(),
                reason: other.to_string(),
            },
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

/// One table of the config with consumed-key tracking.
struct Section<'a> {
    prefix: &'a str,
    map: &'a Map<String, Value>,
    seen: BTreeSet<&'a str>,
}

impl<'a> Section<'a> {
    fn new(prefix: &'a str, map: &'a Map<String, Value>) -> Self {
        Self {
            prefix,
            map,
            seen: BTreeSet::new(),
        }
    }

    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    fn get(&mut self, name: &'a str) -> Option<&'a Value> {
        self.seen.insert(name);
        self.map.get(name)
    }

    fn mismatch(&self, name: &str, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            key: self.key(name),
            expected,
        }
    }

    fn f64(&mut self, name: &'a str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.mismatch(name, "a number")),
        }
    }

    fn opt_f64(&mut self, name: &'a str) -> Result<Option<f64>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.mismatch(name, "a number")),
        }
    }

    fn u64(&mut self, name: &'a str, default: u64) -> Result<u64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| self.mismatch(name, "a non-negative integer")),
        }
    }

    fn usize(&mut self, name: &'a str, default: usize) -> Result<usize> {
        let v = self.u64(name, default as u64)?;
        usize::try_from(v).map_err(|_| self.mismatch(name, "an integer that fits in usize"))
    }

    fn u32(&mut self, name: &'a str, default: u32) -> Result<u32> {
        let v = self.u64(name, default as u64)?;
        u32::try_from(v).map_err(|_| self.mismatch(name, "an integer below 2^32"))
    }

    fn bool(&mut self, name: &'a str, default: bool) -> Result<bool> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.mismatch(name, "a boolean")),
        }
    }

    fn str(&mut self, name: &'a str) -> Result<Option<&'a str>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.mismatch(name, "a string")),
        }
    }

    fn parsed<T>(&mut self, name: &'a str, default: T) -> Result<T>
    where
        T: std::str::FromStr<Err = String>,
    {
        match self.str(name)? {
            None => Ok(default),
            Some(s) => s.parse().map_err(|reason| ConfigError::Invalid {
                key: self.key(name),
                reason,
            }),
        }
    }

    fn array(&mut self, name: &'a str) -> Result<Option<&'a Vec<Value>>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.as_array().map(Some).ok_or_else(|| self.mismatch(name, "an array")),
        }
    }

    fn table(&mut self, name: &'a str) -> Result<Option<&'a Map<String, Value>>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.as_object().map(Some).ok_or_else(|| self.mismatch(name, "a table")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.seen.contains(k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(self.key(k))),
            None => Ok(()),
        }
    }
}

fn to_value(text: &str) -> Result<Value> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    } else {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| ConfigError::Syntax(e.to_string()))
    }
}

/// Parses and validates a config, filling every absent key with its default.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let root_value = to_value(text)?;
    let root_map = root_value
        .as_object()
        .ok_or_else(|| ConfigError::Syntax("top level must be a table".into()))?;
    let mut root = Section::new("", root_map);
    let d = SimulationConfig::default();

    let base_seed = match root.get("base_seed") {
        None => return Err(ConfigError::MissingKey("base_seed".into())),
        Some(v) => v.as_u64().ok_or_else(|| root.mismatch("base_seed", "a non-negative integer"))?,
    };
    let mut base = SimulationConfig {
        base_seed,
        periods: root.usize("periods", d.periods)?,
        replications: root.usize("replications", d.replications)?,
        rate_threshold: root.f64("rate_threshold", d.rate_threshold)?,
        channel_budget: root.u64("channel_budget", d.channel_budget)?,
        enforce_channel_budget: root.bool("enforce_channel_budget", d.enforce_channel_budget)?,
        ..d.clone()
    };

    let empty = Map::new();
    let topo_map = root.table("topology")?.unwrap_or(&empty);
    let mut topo = Section::new("topology", topo_map);
    let t = &mut base.topology;
    t.grid_side = topo.f64("grid_side", t.grid_side)?;
    if let Some(offsets) = topo.array("small_cell_offsets")? {
        t.small_cell_offsets = offsets
            .iter()
            .map(|o| match o.as_array().map(|a| a.as_slice()) {
                Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                    (Some(x), Some(y)) => Ok(Position::new(x, y)),
                    _ => Err(topo.mismatch("small_cell_offsets", "a list of [x, y] number pairs")),
                },
                _ => Err(topo.mismatch("small_cell_offsets", "a list of [x, y] number pairs")),
            })
            .collect::<Result<_>>()?;
    }
    t.irs_per_cell = topo.usize("irs_per_cell", t.irs_per_cell)?;
    t.irs_radius = topo.f64("irs_radius", t.irs_radius)?;
    t.eavesdroppers_per_cell = topo.usize("eavesdroppers_per_cell", t.eavesdroppers_per_cell)?;
    t.eve_radius = topo.f64("eve_radius", t.eve_radius)?;
    t.ue_count = topo.usize("ue_count", t.ue_count)?;
    t.distribution_case = topo.parsed("distribution", t.distribution_case)?;
    t.cluster_size = topo.usize("cluster_size", t.cluster_size)?;
    t.cluster_spread = topo.f64("cluster_spread", t.cluster_spread)?;
    t.detection_threshold_db = topo.opt_f64("detection_threshold_db")?;
    topo.finish()?;

    let chan_map = root.table("channel")?.unwrap_or(&empty);
    let mut chan = Section::new("channel", chan_map);
    let c = &mut base.channel;
    c.carrier_hz = chan.f64("carrier_hz", c.carrier_hz)?;
    c.pathloss_exponent = chan.f64("pathloss_exponent", c.pathloss_exponent)?;
    c.ref_loss_db = chan.f64("ref_loss_db", c.ref_loss_db)?;
    c.irs_gain_db = chan.f64("irs_gain_db", c.irs_gain_db)?;
    c.tx_power_db = chan.f64("tx_power_db", c.tx_power_db)?;
    c.noise_power_db = chan.f64("noise_power_db", c.noise_power_db)?;
    let bandwidth = chan.opt_f64("bandwidth_hz")?;
    let noise_figure = chan.opt_f64("noise_figure_db")?;
    c.units = match chan.str("units")?.unwrap_or("normalized") {
        "normalized" => {
            if bandwidth.is_some() || noise_figure.is_some() {
                return Err(ConfigError::Invalid {
                    key: "channel.units".into(),
                    reason: "bandwidth_hz / noise_figure_db need units = \"absolute\"".into(),
                });
            }
            LinkUnits::Normalized
        }
        "absolute" => LinkUnits::Absolute {
            bandwidth_hz: bandwidth.ok_or_else(|| ConfigError::MissingKey("channel.bandwidth_hz".into()))?,
            noise_figure_db: noise_figure.unwrap_or(0.0),
        },
        other => {
            return Err(ConfigError::Invalid {
                key: "channel.units".into(),
                reason: format!("unknown units `{other}` (expected normalized|absolute)"),
            })
        }
    };
    chan.finish()?;

    let pol_map = root.table("policy")?.unwrap_or(&empty);
    let mut pol = Section::new("policy", pol_map);
    let p = &mut base.policy;
    p.kind = pol.parsed("kind", p.kind)?;
    p.omega = pol.f64("omega", p.omega)?;
    p.phi = pol.u32("phi", p.phi)?;
    pol.finish()?;
    base.validate()?;

    let sweep_map = root.table("sweep")?.unwrap_or(&empty);
    let mut sw = Section::new("sweep", sweep_map);
    let sweep = Sweep {
        policies: list(&mut sw, "policies", |v| {
            v.as_str().and_then(|s| s.parse::<PolicyKind>().ok())
        }, "a list of policy names (cb|greedy)")?
        .unwrap_or_else(|| vec![PolicyKind::ContextualBandit, PolicyKind::Greedy]),
        cases: list(&mut sw, "cases", |v| {
            v.as_str().and_then(|s| s.parse::<DistributionCase>().ok())
        }, "a list of distribution cases (random|clustered)")?
        .unwrap_or_else(|| vec![DistributionCase::Random, DistributionCase::Clustered]),
        phi: list(&mut sw, "phi", |v| v.as_u64().and_then(|x| u32::try_from(x).ok()), "a list of integers")?
            .unwrap_or_else(|| vec![1, 2, 4]),
        omega: list(&mut sw, "omega", Value::as_f64, "a list of numbers")?.unwrap_or_else(|| vec![base.policy.omega]),
    };
    sw.finish()?;
    sweep.validate()?;

    let out_map = root.table("output")?.unwrap_or(&empty);
    let mut out = Section::new("output", out_map);
    let output_path = PathBuf::from(out.str("path")?.unwrap_or("trace.csv"));
    let format = out.parsed("format", OutputFormat::Csv)?;
    out.finish()?;
    if output_path.as_os_str().is_empty() {
        return Err(ConfigError::Invalid {
            key: "output.path".into(),
            reason: "must not be empty".into(),
        });
    }

    root.finish()?;
    Ok(ExperimentSpec {
        base,
        sweep,
        output_path,
        format,
    })
}

fn list<'a, T>(
    sec: &mut Section<'a>,
    name: &'a str,
    item: impl Fn(&Value) -> Option<T>,
    expected: &'static str,
) -> Result<Option<Vec<T>>> {
    match sec.array(name)? {
        None => Ok(None),
        Some(values) => values
            .iter()
            .map(|v| item(v).ok_or_else(|| sec.mismatch(name, expected)))
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

/// Renders `spec` as config text that [`parse_config`] reads back to an
/// equal spec.
pub fn to_config_text(spec: &ExperimentSpec) -> String {
    use toml::{Table, Value as T};

    let b = &spec.base;
    let mut root = Table::new();
    root.insert("base_seed".into(), T::Integer(b.base_seed as i64));
    root.insert("periods".into(), T::Integer(b.periods as i64));
    root.insert("replications".into(), T::Integer(b.replications as i64));
    root.insert("rate_threshold".into(), T::Float(b.rate_threshold));
    root.insert("channel_budget".into(), T::Integer(b.channel_budget as i64));
    root.insert("enforce_channel_budget".into(), T::Boolean(b.enforce_channel_budget));

    let t = &b.topology;
    let mut topo = Table::new();
    topo.insert("grid_side".into(), T::Float(t.grid_side));
    topo.insert(
        "small_cell_offsets".into(),
        T::Array(
            t.small_cell_offsets
                .iter()
                .map(|o| T::Array(vec![T::Float(o.x), T::Float(o.y)]))
                .collect(),
        ),
    );
    topo.insert("irs_per_cell".into(), T::Integer(t.irs_per_cell as i64));
    topo.insert("irs_radius".into(), T::Float(t.irs_radius));
    topo.insert("eavesdroppers_per_cell".into(), T::Integer(t.eavesdroppers_per_cell as i64));
    topo.insert("eve_radius".into(), T::Float(t.eve_radius));
    topo.insert("ue_count".into(), T::Integer(t.ue_count as i64));
    topo.insert("distribution".into(), T::String(t.distribution_case.to_string()));
    topo.insert("cluster_size".into(), T::Integer(t.cluster_size as i64));
    topo.insert("cluster_spread".into(), T::Float(t.cluster_spread));
    if let Some(th) = t.detection_threshold_db {
        topo.insert("detection_threshold_db".into(), T::Float(th));
    }
    root.insert("topology".into(), T::Table(topo));

    let c = &b.channel;
    let mut chan = Table::new();
    chan.insert("carrier_hz".into(), T::Float(c.carrier_hz));
    chan.insert("pathloss_exponent".into(), T::Float(c.pathloss_exponent));
    chan.insert("ref_loss_db".into(), T::Float(c.ref_loss_db));
    chan.insert("irs_gain_db".into(), T::Float(c.irs_gain_db));
    chan.insert("tx_power_db".into(), T::Float(c.tx_power_db));
    chan.insert("noise_power_db".into(), T::Float(c.noise_power_db));
    match c.units {
        LinkUnits::Normalized => {
            chan.insert("units".into(), T::String("normalized".into()));
        }
        LinkUnits::Absolute {
            bandwidth_hz,
            noise_figure_db,
        } => {
            chan.insert("units".into(), T::String("absolute".into()));
            chan.insert("bandwidth_hz".into(), T::Float(bandwidth_hz));
            chan.insert("noise_figure_db".into(), T::Float(noise_figure_db));
        }
    }
    root.insert("channel".into(), T::Table(chan));

    let mut pol = Table::new();
    pol.insert("kind".into(), T::String(b.policy.kind.to_string()));
    pol.insert("omega".into(), T::Float(b.policy.omega));
    pol.insert("phi".into(), T::Integer(b.policy.phi as i64));
    root.insert("policy".into(), T::Table(pol));

    let s = &spec.sweep;
    let mut sweep = Table::new();
    sweep.insert(
        "policies".into(),
        T::Array(s.policies.iter().map(|p| T::String(p.to_string())).collect()),
    );
    sweep.insert(
        "cases".into(),
        T::Array(s.cases.iter().map(|c| T::String(c.to_string())).collect()),
    );
    sweep.insert("phi".into(), T::Array(s.phi.iter().map(|&p| T::Integer(p as i64)).collect()));
    sweep.insert("omega".into(), T::Array(s.omega.iter().map(|&o| T::Float(o)).collect()));
    root.insert("sweep".into(), T::Table(sweep));

    let mut out = Table::new();
    out.insert("path".into(), T::String(spec.output_path.display().to_string()));
    out.insert("format".into(), T::String(spec.format.to_string()));
    root.insert("output".into(), T::Table(out));

    toml::to_string(&root).expect("config tables always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let spec = parse_config("base_seed = 7\n").unwrap();
        let want = SimulationConfig {
            base_seed: 7,
            ..SimulationConfig::default()
        };
        assert_eq!(spec.base, want);
        assert_eq!(spec.sweep.policies, vec![PolicyKind::ContextualBandit, PolicyKind::Greedy]);
        assert_eq!(spec.sweep.cases, vec![DistributionCase::Random, DistributionCase::Clustered]);
        assert_eq!(spec.sweep.phi, vec![1, 2, 4]);
        assert_eq!(spec.sweep.omega, vec![0.1]);
        assert_eq!(spec.format, OutputFormat::Csv);
    }

    #[test]
    fn missing_seed() {
        assert_eq!(
            parse_config("periods = 10\n"),
            Err(ConfigError::MissingKey("base_seed".into()))
        );
    }

    #[test]
    fn omega_out_of_range_is_named() {
        let err = parse_config("base_seed = 1\n[policy]\nomega = 1.5\n").unwrap_err();
        assert_eq!(err.key(), Some("policy.omega"));
        assert!(err.to_string().contains("[0, 1]"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("base_seed = 1\n[channel]\nirs_gain = 3.0\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("channel.irs_gain".into()));
        let err = parse_config("base_seed = 1\nseeds = 3\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("seeds".into()));
    }

    #[test]
    fn type_mismatch_is_named() {
        let err = parse_config("base_seed = 1\nperiods = \"many\"\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::TypeMismatch {
                key: "periods".into(),
                expected: "a non-negative integer"
            }
        );
        let err = parse_config("base_seed = 1\n[sweep]\nphi = [1, \"x\"]\n").unwrap_err();
        assert_eq!(err.key(), Some("sweep.phi"));
    }

    #[test]
    fn clustered_split_is_validated() {
        let err = parse_config("base_seed = 1\n[topology]\ndistribution = \"clustered\"\nue_count = 15\n").unwrap_err();
        assert_eq!(err.key(), Some("topology.ue_count"));
    }

    #[test]
    fn sweep_values_are_validated() {
        let err = parse_config("base_seed = 1\n[sweep]\nomega = [0.1, -0.2]\n").unwrap_err();
        assert_eq!(err.key(), Some("sweep.omega"));
        let err = parse_config("base_seed = 1\n[sweep]\nphi = []\n").unwrap_err();
        assert_eq!(err.key(), Some("sweep.phi"));
    }

    #[test]
    fn json_is_accepted() {
        let spec = parse_config(r#"{"base_seed": 3, "policy": {"phi": 4}, "output": {"format": "json"}}"#).unwrap();
        assert_eq!(spec.base.base_seed, 3);
        assert_eq!(spec.base.policy.phi, 4);
        assert_eq!(spec.format, OutputFormat::Json);
    }

    #[test]
    fn defaults_round_trip() {
        let spec = parse_config("base_seed = 99\n").unwrap();
        let text = to_config_text(&spec);
        assert_eq!(parse_config(&text).unwrap(), spec);
    }

    #[test]
    fn absolute_units_round_trip() {
        let text = "base_seed = 1\n[channel]\nunits = \"absolute\"\nbandwidth_hz = 2e7\nnoise_figure_db = 7.0\ntx_power_db = 20.0\n[topology]\ndetection_threshold_db = -80.0\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(
            spec.base.channel.units,
            LinkUnits::Absolute {
                bandwidth_hz: 2e7,
                noise_figure_db: 7.0
            }
        );
        assert_eq!(parse_config(&to_config_text(&spec)).unwrap(), spec);
    }

    #[test]
    fn syntax_errors_surface() {
        assert!(matches!(parse_config("base_seed = = 1"), Err(ConfigError::Syntax(_))));
    }
}
