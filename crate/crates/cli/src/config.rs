//! Experiment configuration: a TOML file with flat dotted keys, checked
//! against a field registry and echoed back in canonical form.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            line: None,
        }
    }

    fn at(mut self, line: Option<usize>) -> Self {
        self.line = self.line.or(line);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub kind: String,
    pub epsilon: Vec<f64>,
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub truncation: u64,
    pub rho_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub chart: String,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub x_steps: u64,
    pub p_steps: u64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_steps: u64,
    pub angles: u64,
    /// Uniform jitter of every node, as a fraction of the node spacing.
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityConfig {
    pub levels: u64,
    pub radius: f64,
    pub radial_nodes: u64,
    pub angular_nodes: u64,
    pub radius_sweep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchardConfig {
    pub max_order: u64,
    pub x_max: f64,
    pub x_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub rho_max: f64,
    pub rho_steps: u64,
    pub epsilons: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WkbConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nodes: u64,
    pub dt: f64,
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub x0: f64,
    pub p0: f64,
    pub t0: f64,
    pub slices: u64,
    pub sigma: f64,
    pub hbar_scan: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig {
    pub invariance: f64,
    pub drift: f64,
    pub wedge: f64,
    pub remark_match: f64,
    pub remark_gap: f64,
    pub fit_residual: f64,
    pub fit_constant: f64,
    pub energy: f64,
    pub touchard: f64,
    pub identity: f64,
    pub ccr: f64,
    pub ccr_corner: f64,
    pub refinement_ratio: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: String,
    pub seed: u64,
    pub family: FamilyConfig,
    pub spectrum_epsilon: Vec<f64>,
    pub grid: GridConfig,
    pub time_samples: u64,
    pub time_periods: f64,
    pub constants_levels: Vec<u64>,
    pub fit_epsilons: Vec<Vec<f64>>,
    pub identity: IdentityConfig,
    pub touchard: TouchardConfig,
    pub energy: EnergyConfig,
    pub wkb: WkbConfig,
    pub tolerance: ToleranceConfig,
    pub output_dir: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            seed: 0,
            family: FamilyConfig {
                kind: "canonical".into(),
                epsilon: vec![0.0, 1.0],
                hbar: 1.0,
                mass: 1.0,
                omega: 1.0,
                truncation: 64,
                rho_min: 1e-6,
            },
            spectrum_epsilon: vec![0.5, 1.0],
            grid: GridConfig {
                chart: "cartesian".into(),
                x_min: -2.0,
                x_max: 2.0,
                p_min: -2.0,
                p_max: 2.0,
                x_steps: 9,
                p_steps: 9,
                rho_min: 0.5,
                rho_max: 4.0,
                rho_steps: 8,
                angles: 8,
                jitter: 0.0,
            },
            time_samples: 16,
            time_periods: 1.0,
            constants_levels: vec![0, 1, 2, 5],
            fit_epsilons: vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
            identity: IdentityConfig {
                levels: 10,
                radius: 8.0,
                radial_nodes: 200,
                angular_nodes: 256,
                radius_sweep: vec![8.0, 9.0, 10.0],
            },
            touchard: TouchardConfig {
                max_order: 10,
                x_max: 10.0,
                x_steps: 41,
            },
            energy: EnergyConfig {
                rho_max: 6.0,
                rho_steps: 24,
                epsilons: vec![
                    vec![0.5, 1.0],
                    vec![0.0, 1.0, 0.5],
                    vec![0.1, 0.4, 0.3, 0.2],
                    vec![0.0, 1.0, 0.0, 1.0],
                ],
            },
            wkb: WkbConfig {
                x_min: -20.0,
                x_max: 20.0,
                nodes: 1024,
                dt: 1e-3,
                hbar: 1.0,
                mass: 1.0,
                omega: 1.0,
                x0: 2.0,
                p0: 0.0,
                t0: 0.5,
                slices: 5,
                sigma: 1.0,
                hbar_scan: vec![1.0, 0.5, 0.25],
            },
            tolerance: ToleranceConfig {
                invariance: 1e-12,
                drift: 1e-12,
                wedge: 1e-8,
                remark_match: 1e-8,
                remark_gap: 0.1,
                fit_residual: 1e-6,
                fit_constant: 1e-6,
                energy: 1e-10,
                touchard: 1e-12,
                identity: 1e-6,
                ccr: 1e-13,
                ccr_corner: 1e-10,
                refinement_ratio: 3.5,
                slope: 0.05,
            },
            output_dir: "results".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Float(f64),
    Int(u64),
    Text(String),
    Floats(Vec<f64>),
    Ints(Vec<u64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Text,
    Floats,
    Ints,
    Rows,
}

struct Field {
    key: &'static str,
    kind: Kind,
    get: fn(&Config) -> Value,
    set: fn(&mut Config, Value),
}

macro_rules! registry {
    ($($key:literal => $kind:ident : $($path:ident).+),* $(,)?) => {
        &[$(Field {
            key: $key,
            kind: Kind::$kind,
            get: |c| Value::$kind(c.$($path).+.clone()),
            set: |c, v| match v {
                Value::$kind(x) => c.$($path).+ = x,
                _ => unreachable!("kind checked before set"),
            },
        }),*]
    };
}

static FIELDS: &[Field] = registry! {
    "experiment" => Text: experiment,
    "seed" => Int: seed,
    "family.kind" => Text: family.kind,
    "family.epsilon" => Floats: family.epsilon,
    "family.hbar" => Float: family.hbar,
    "family.mass" => Float: family.mass,
    "family.omega" => Float: family.omega,
    "family.truncation" => Int: family.truncation,
    "family.rho_min" => Float: family.rho_min,
    "spectrum.epsilon" => Floats: spectrum_epsilon,
    "grid.chart" => Text: grid.chart,
    "grid.x_min" => Float: grid.x_min,
    "grid.x_max" => Float: grid.x_max,
    "grid.p_min" => Float: grid.p_min,
    "grid.p_max" => Float: grid.p_max,
    "grid.x_steps" => Int: grid.x_steps,
    "grid.p_steps" => Int: grid.p_steps,
    "grid.rho_min" => Float: grid.rho_min,
    "grid.rho_max" => Float: grid.rho_max,
    "grid.rho_steps" => Int: grid.rho_steps,
    "grid.angles" => Int: grid.angles,
    "grid.jitter" => Float: grid.jitter,
    "time.samples" => Int: time_samples,
    "time.periods" => Float: time_periods,
    "constants.levels" => Ints: constants_levels,
    "fit.epsilons" => Rows: fit_epsilons,
    "identity.levels" => Int: identity.levels,
    "identity.radius" => Float: identity.radius,
    "identity.radial_nodes" => Int: identity.radial_nodes,
    "identity.angular_nodes" => Int: identity.angular_nodes,
    "identity.radius_sweep" => Floats: identity.radius_sweep,
    "touchard.max_order" => Int: touchard.max_order,
    "touchard.x_max" => Float: touchard.x_max,
    "touchard.x_steps" => Int: touchard.x_steps,
    "energy.rho_max" => Float: energy.rho_max,
    "energy.rho_steps" => Int: energy.rho_steps,
    "energy.epsilons" => Rows: energy.epsilons,
    "wkb.x_min" => Float: wkb.x_min,
    "wkb.x_max" => Float: wkb.x_max,
    "wkb.nodes" => Int: wkb.nodes,
    "wkb.dt" => Float: wkb.dt,
    "wkb.hbar" => Float: wkb.hbar,
    "wkb.mass" => Float: wkb.mass,
    "wkb.omega" => Float: wkb.omega,
    "wkb.x0" => Float: wkb.x0,
    "wkb.p0" => Float: wkb.p0,
    "wkb.t0" => Float: wkb.t0,
    "wkb.slices" => Int: wkb.slices,
    "wkb.sigma" => Float: wkb.sigma,
    "wkb.hbar_scan" => Floats: wkb.hbar_scan,
    "tolerance.invariance" => Float: tolerance.invariance,
    "tolerance.drift" => Float: tolerance.drift,
    "tolerance.wedge" => Float: tolerance.wedge,
    "tolerance.remark_match" => Float: tolerance.remark_match,
    "tolerance.remark_gap" => Float: tolerance.remark_gap,
    "tolerance.fit_residual" => Float: tolerance.fit_residual,
    "tolerance.fit_constant" => Float: tolerance.fit_constant,
    "tolerance.energy" => Float: tolerance.energy,
    "tolerance.touchard" => Float: tolerance.touchard,
    "tolerance.identity" => Float: tolerance.identity,
    "tolerance.ccr" => Float: tolerance.ccr,
    "tolerance.ccr_corner" => Float: tolerance.ccr_corner,
    "tolerance.refinement_ratio" => Float: tolerance.refinement_ratio,
    "tolerance.slope" => Float: tolerance.slope,
    "output.dir" => Text: output_dir,
};

/// All registered keys in declaration order.
pub fn keys() -> impl Iterator<Item = &'static str> {
    FIELDS.iter().map(|f| f.key)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Line of the first assignment to the leaf of `key`, if it can be found.
fn line_of(source: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    source
        .lines()
        .position(|line| {
            let t = line.trim_start();
            let lhs = t.split('=').next().unwrap_or("").trim();
            t.contains('=') && (lhs == key || lhs == leaf || lhs.ends_with(&format!(".{leaf}")))
        })
        .map(|i| i + 1)
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn floats(v: &toml::Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(number).collect()
}

fn convert(kind: Kind, v: &toml::Value) -> Option<Value> {
    Some(match kind {
        Kind::Float => Value::Float(number(v)?),
        Kind::Int => Value::Int(u64::try_from(v.as_integer()?).ok()?),
        Kind::Text => Value::Text(v.as_str()?.to_owned()),
        Kind::Floats => Value::Floats(floats(v)?),
        Kind::Ints => Value::Ints(
            v.as_array()?
                .iter()
                .map(|x| x.as_integer().and_then(|i| u64::try_from(i).ok()))
                .collect::<Option<_>>()?,
        ),
        Kind::Rows => Value::Rows(v.as_array()?.iter().map(floats).collect::<Option<_>>()?),
    })
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Float => "a number",
        Kind::Int => "a non-negative integer",
        Kind::Text => "a string",
        Kind::Floats => "an array of numbers",
        Kind::Ints => "an array of non-negative integers",
        Kind::Rows => "an array of number arrays",
    }
}

impl Config {
    /// Parses a config file; absent keys keep their defaults.
    pub fn from_toml(source: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = source.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| source[..s.start].lines().count().max(1));
            ConfigError::new(e.message().to_owned()).at(line)
        })?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);
        let mut config = Config::default();
        for (key, value) in &entries {
            config
                .assign(key, value)
                .map_err(|e| e.at(line_of(source, key)))?;
        }
        config
            .validate()
            .map_err(|(key, e)| e.at(line_of(source, key)))?;
        Ok(config)
    }

    fn assign(&mut self, key: &str, value: &toml::Value) -> Result<(), ConfigError> {
        let field = FIELDS
            .iter()
            .find(|f| f.key == key)
            .ok_or_else(|| ConfigError::new(format!("unknown field `{key}`")))?;
        let v = convert(field.kind, value).ok_or_else(|| {
            ConfigError::new(format!("field `{key}` must be {}", kind_name(field.kind)))
        })?;
        (field.set)(self, v);
        Ok(())
    }

    /// Applies a `key=value` override; the value is read as a TOML value,
    /// falling back to a bare string.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("override `{spec}` is not key=value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
        self.assign(key, &value)?;
        self.validate().map_err(|(_, e)| e)
    }

    fn validate(&self) -> Result<(), (&'static str, ConfigError)> {
        let fail = |key: &'static str, msg: String| {
            Err((key, ConfigError::new(format!("field `{key}` {msg}"))))
        };
        for field in FIELDS {
            let bad = match (field.get)(self) {
                Value::Float(v) => !v.is_finite(),
                Value::Floats(v) => v.iter().any(|x| !x.is_finite()),
                Value::Rows(v) => v.iter().flatten().any(|x| !x.is_finite()),
                _ => false,
            };
            if bad {
                return fail(field.key, "must be finite".into());
            }
        }
        let positive: [(&'static str, f64); 8] = [
            ("family.hbar", self.family.hbar),
            ("family.mass", self.family.mass),
            ("family.omega", self.family.omega),
            ("identity.radius", self.identity.radius),
            ("wkb.dt", self.wkb.dt),
            ("wkb.hbar", self.wkb.hbar),
            ("wkb.mass", self.wkb.mass),
            ("wkb.omega", self.wkb.omega),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return fail(key, format!("must be > 0, got {v}"));
            }
        }
        for field in FIELDS.iter().filter(|f| f.key.starts_with("tolerance.")) {
            if let Value::Float(v) = (field.get)(self) {
                if v <= 0.0 {
                    return fail(field.key, format!("must be > 0, got {v}"));
                }
            }
        }
        if !["canonical", "deformed"].contains(&self.family.kind.as_str()) {
            return fail(
                "family.kind",
                format!(
                    "must be \"canonical\" or \"deformed\", got {:?}",
                    self.family.kind
                ),
            );
        }
        if !["cartesian", "polar"].contains(&self.grid.chart.as_str()) {
            return fail(
                "grid.chart",
                format!(
                    "must be \"cartesian\" or \"polar\", got {:?}",
                    self.grid.chart
                ),
            );
        }
        if !self.experiment.is_empty()
            && !crate::experiments::NAMES.contains(&self.experiment.as_str())
        {
            return fail(
                "experiment",
                format!("names no experiment: {:?}", self.experiment),
            );
        }
        if self.family.truncation == 0 {
            return fail("family.truncation", "must be >= 1".into());
        }
        let counts: [(&'static str, u64); 11] = [
            ("grid.x_steps", self.grid.x_steps),
            ("grid.p_steps", self.grid.p_steps),
            ("grid.rho_steps", self.grid.rho_steps),
            ("grid.angles", self.grid.angles),
            ("time.samples", self.time_samples),
            ("identity.radial_nodes", self.identity.radial_nodes),
            ("identity.angular_nodes", self.identity.angular_nodes),
            ("touchard.x_steps", self.touchard.x_steps),
            ("energy.rho_steps", self.energy.rho_steps),
            ("wkb.nodes", self.wkb.nodes),
            ("wkb.slices", self.wkb.slices),
        ];
        for (key, v) in counts {
            if v == 0 {
                return fail(key, "must be >= 1".into());
            }
        }
        if self.wkb.slices < 3 {
            return fail("wkb.slices", "must be >= 3".into());
        }
        if !self.wkb.nodes.is_power_of_two() {
            return fail(
                "wkb.nodes",
                format!("must be a power of two, got {}", self.wkb.nodes),
            );
        }
        if !(0.0..0.5).contains(&self.grid.jitter) {
            return fail(
                "grid.jitter",
                format!("must lie in [0, 0.5), got {}", self.grid.jitter),
            );
        }
        if self.grid.x_min > self.grid.x_max || self.grid.p_min > self.grid.p_max {
            return fail("grid.x_min", "grid bounds are reversed".into());
        }
        if !(0.0 < self.grid.rho_min && self.grid.rho_min <= self.grid.rho_max) {
            return fail("grid.rho_min", "needs 0 < rho_min <= rho_max".into());
        }
        Ok(())
    }

    /// `key = value` lines in registry order; floats print in shortest
    /// round-trip form so re-parsing reproduces the config exactly.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for field in FIELDS {
            let _ = writeln!(out, "{} = {}", field.key, render((field.get)(self)));
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn render_float(v: f64) -> String {
    format!("{v:?}")
}

fn render_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    format!("[{}]", items.iter().map(f).collect::<Vec<_>>().join(", "))
}

fn render(v: Value) -> String {
    match v {
        Value::Float(x) => render_float(x),
        Value::Int(x) => x.to_string(),
        Value::Text(s) => toml::Value::String(s).to_string(),
        Value::Floats(xs) => render_list(&xs, |x| render_float(*x)),
        Value::Ints(xs) => render_list(&xs, |x| x.to_string()),
        Value::Rows(rows) => render_list(&rows, |r| render_list(r, |x| render_float(*x))),
    }
}
