//! Run configuration: a flat dotted-key schema parsed from key-value text or
//! from an equivalent nested JSON document. Unknown keys are rejected with
//! their schema path.

use gplab::field::{DomainMask, GridSpec};
use gplab::operator::ProblemParams;
use gplab::solver::{DiscretizationMode, SolverConfig};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Configuration or usage errors (exit code 1 territory).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

/// Flat key-value view of a config file with consumption tracking, so any
/// key left unread at the end is reported as unknown.
pub struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> CResult<Self> {
        let trimmed = text.trim_start();
        let values = if trimmed.starts_with('{') {
            let json: Value = serde_json::from_str(trimmed)
                .map_err(|e| ConfigError(format!("invalid JSON config: {e}")))?;
            let mut map = BTreeMap::new();
            flatten_json("", &json, &mut map)?;
            map
        } else {
            parse_kv(text)?
        };
        Ok(Self { values, consumed: Default::default() })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key).map(String::as_str);
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn get(&self, key: &str) -> CResult<&str> {
        self.raw(key).ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
    }

    pub fn get_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn get_f64(&self, key: &str) -> CResult<f64> {
        parse_f64(key, self.get(key)?)
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> CResult<f64> {
        match self.raw(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    pub fn get_usize_or(&self, key: &str, default: usize) -> CResult<usize> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not an integer"))),
            None => Ok(default),
        }
    }

    /// Comma-separated f64 list.
    pub fn get_f64_list(&self, key: &str) -> CResult<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| parse_f64(key, s.trim()))
                .collect::<CResult<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn get_usize_list(&self, key: &str) -> CResult<Option<Vec<usize>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        ConfigError(format!("key `{key}`: `{s}` is not an integer"))
                    })
                })
                .collect::<CResult<Vec<_>>>()
                .map(Some),
        }
    }

    /// Errors on any key that was never consumed by the command's schema.
    pub fn finish(&self) -> CResult<()> {
        let consumed = self.consumed.borrow();
        for key in self.values.keys() {
            if !consumed.contains(key) {
                return Err(ConfigError(format!(
                    "unknown key `{key}` (see docs/config.md for the schema)"
                )));
            }
        }
        Ok(())
    }

    /// The full resolved map, for embedding into report JSON.
    pub fn resolved(&self) -> Value {
        Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

fn parse_f64(key: &str, v: &str) -> CResult<f64> {
    v.parse().map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a number")))
}

fn parse_kv(text: &str) -> CResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

fn flatten_json(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) -> CResult<()> {
    match v {
        Value::Object(obj) => {
            for (k, sub) in obj {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, sub, out)?;
            }
            Ok(())
        }
        Value::Array(items) => {
            let rendered: CResult<Vec<String>> = items
                .iter()
                .map(|item| match item {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    other => Err(ConfigError(format!(
                        "key `{prefix}`: array entries must be scalars, got {other}"
                    ))),
                })
                .collect();
            out.insert(prefix.to_string(), rendered?.join(","));
            Ok(())
        }
        Value::Number(n) => {
            out.insert(prefix.to_string(), n.to_string());
            Ok(())
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
            Ok(())
        }
        Value::Bool(b) => {
            out.insert(prefix.to_string(), b.to_string());
            Ok(())
        }
        Value::Null => Err(ConfigError(format!("key `{prefix}`: null is not a value"))),
    }
}

/// The problem block shared by most subcommands.
pub struct ProblemSpec {
    pub params: ProblemParams,
    pub dim: usize,
    pub domain: DomainKind,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub bc: DataKind,
    pub f: DataKind,
    pub f_value: f64,
    pub oracle_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Box,
    Annulus { inner: f64, outer: f64 },
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Zero,
    Oracle,
    Constant,
    Affine,
}

impl ProblemSpec {
    pub fn from_config(cfg: &RawConfig) -> CResult<Self> {
        let gamma = cfg.get_f64("problem.gamma")?;
        let p = cfg.get_f64("problem.p")?;
        let lambda = cfg.get_f64_or("problem.lambda", 0.0)?;
        let epsilon = cfg.get_f64_or("problem.epsilon", 1e-3)?;
        let params = ProblemParams::new(gamma, p, epsilon, lambda)
            .map_err(|e| ConfigError(format!("problem block: {e}")))?;
        let dim = cfg.get_usize_or("problem.dim", 2)?;
        let lo = cfg.get_f64_or("problem.lo", -1.0)?;
        let hi = cfg.get_f64_or("problem.hi", 1.0)?;
        let count = cfg.get_usize_or("problem.count", 65)?;
        let domain = match cfg.get_or("problem.domain", "box") {
            "box" => DomainKind::Box,
            "annulus" => DomainKind::Annulus {
                inner: cfg.get_f64_or("problem.inner_radius", 0.25)?,
                outer: cfg.get_f64_or("problem.outer_radius", 1.0)?,
            },
            "disk" => DomainKind::Disk { radius: cfg.get_f64_or("problem.radius", 0.95)? },
            other => {
                return Err(ConfigError(format!(
                    "key `problem.domain`: `{other}` is not one of box, annulus, disk"
                )))
            }
        };
        let bc = parse_data_kind(cfg, "problem.bc", "zero")?;
        let f = parse_data_kind(cfg, "problem.f", "zero")?;
        let f_value = cfg.get_f64_or("problem.f_value", 0.0)?;
        let oracle_c = cfg.get_f64_or("oracle.c", 1.0)?;
        Ok(Self { params, dim, domain, lo, hi, count, bc, f, f_value, oracle_c })
    }

    pub fn grid(&self, count: usize) -> CResult<GridSpec> {
        GridSpec::cube(self.dim, self.lo, self.hi, count)
            .map_err(|e| ConfigError(format!("problem block: {e}")))
    }

    pub fn mask(&self, grid: GridSpec) -> DomainMask {
        match self.domain {
            DomainKind::Box => DomainMask::solid_box(grid),
            DomainKind::Annulus { inner, outer } => {
                DomainMask::annulus(grid, [0.0; 3], inner, outer)
            }
            DomainKind::Disk { radius } => DomainMask::disk(grid, [0.0; 3], radius),
        }
    }
}

fn parse_data_kind(cfg: &RawConfig, key: &str, default: &str) -> CResult<DataKind> {
    match cfg.get_or(key, default) {
        "zero" => Ok(DataKind::Zero),
        "oracle" => Ok(DataKind::Oracle),
        "constant" => Ok(DataKind::Constant),
        "affine" => Ok(DataKind::Affine),
        other => Err(ConfigError(format!(
            "key `{key}`: `{other}` is not one of zero, oracle, constant, affine"
        ))),
    }
}

/// Solver block, layered over the library defaults for the problem.
pub fn solver_config(cfg: &RawConfig, params: &ProblemParams) -> CResult<SolverConfig> {
    let mut sc = SolverConfig::default_for(params);
    match cfg.get_or("solver.mode", "") {
        "" => {}
        "central" => sc.mode = DiscretizationMode::Central,
        "aligned" => sc.mode = DiscretizationMode::Aligned,
        other => {
            return Err(ConfigError(format!(
                "key `solver.mode`: `{other}` is not one of central, aligned"
            )))
        }
    }
    sc.inner_tol = cfg.get_f64_or("solver.inner_tol", sc.inner_tol)?;
    sc.inner_max_iter = cfg.get_usize_or("solver.inner_max_iter", sc.inner_max_iter)?;
    sc.outer_tol = cfg.get_f64_or("solver.outer_tol", sc.outer_tol)?;
    sc.outer_max_iter = cfg.get_usize_or("solver.outer_max_iter", sc.outer_max_iter)?;
    sc.damping = cfg.get_f64_or("solver.damping", sc.damping)?;
    if let Some(schedule) = cfg.get_f64_list("solver.epsilon_schedule")? {
        sc.epsilon_schedule = schedule;
    }
    sc.validate().map_err(|e| ConfigError(format!("solver block: {e}")))?;
    Ok(sc)
}
