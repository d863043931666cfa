//! Typed command parameters resolved from defaults, a config file and flags.

use std::collections::BTreeMap;
use std::path::Path;

use winmart::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Count,
    Seed,
    Flag,
    Text,
    Reals,
}

impl Kind {
    pub fn placeholder(self) -> &'static str {
        match self {
            Kind::Real => "REAL",
            Kind::Count => "N",
            Kind::Seed => "SEED",
            Kind::Flag => "BOOL",
            Kind::Text => "NAME",
            Kind::Reals => "R1,R2,..",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn param(
    name: &'static str,
    kind: Kind,
    default: &'static str,
    help: &'static str,
) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        default: Some(default),
        help,
    }
}

/// A parameter with no default: required unless the command treats its
/// absence specially.
pub const fn optional(name: &'static str, kind: Kind, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        default: None,
        help,
    }
}

/// Normalise a config key: `n_paths` and `n-paths` are the same key.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parse a flat `key = value` file; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!(
                "{}:{}: expected key = value, got '{raw}'",
                path.display(),
                n + 1
            ))
        })?;
        out.insert(normalize_key(k), v.trim().to_string());
    }
    Ok(out)
}

fn parse_real(name: &str, s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Usage(format!(
            "--{name}: expected a finite number, got '{s}'"
        ))),
    }
}

fn parse_count(name: &str, s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    // Accept 1e5-style counts.
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15 => Ok(v as u64),
        _ => Err(Error::Usage(format!(
            "--{name}: expected a nonnegative integer, got '{s}'"
        ))),
    }
}

fn parse_flag(name: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Usage(format!(
            "--{name}: expected true or false, got '{s}'"
        ))),
    }
}

fn parse_reals(name: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_real(name, p))
        .collect()
}

fn check(spec: &ParamSpec, s: &str) -> Result<()> {
    match spec.kind {
        Kind::Real => parse_real(spec.name, s).map(drop),
        Kind::Count => parse_count(spec.name, s).map(drop),
        Kind::Seed => s.trim().parse::<u64>().map(drop).map_err(|_| {
            Error::Usage(format!(
                "--{}: expected a 64-bit unsigned seed, got '{s}'",
                spec.name
            ))
        }),
        Kind::Flag => parse_flag(spec.name, s).map(drop),
        Kind::Text => Ok(()),
        Kind::Reals => parse_reals(spec.name, s).map(drop),
    }
}

/// Resolved parameter values of one command invocation.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<&'static str, String>,
}

impl Params {
    /// Resolve `flags` over `config` over the declared defaults. Every value
    /// is parsed once here so malformed input fails before dispatch.
    pub fn resolve(
        specs: &[ParamSpec],
        config: &BTreeMap<String, String>,
        flags: &BTreeMap<&'static str, String>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for spec in specs {
            let v = flags
                .get(spec.name)
                .cloned()
                .or_else(|| config.get(spec.name).cloned())
                .or_else(|| spec.default.map(str::to_string));
            if let Some(v) = v {
                check(spec, &v)?;
                values.insert(spec.name, v);
            }
        }
        Ok(Self { values })
    }

    pub fn resolved(&self) -> &BTreeMap<&'static str, String> {
        &self.values
    }

    fn raw(&self, name: &str) -> Result<&str> {
        self.values
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::Usage(format!("missing required parameter --{name}")))
    }

    pub fn has(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        parse_real(name, self.raw(name)?)
    }

    pub fn opt_real(&self, name: &str) -> Result<Option<f64>> {
        self.has(name).then(|| self.real(name)).transpose()
    }

    pub fn count(&self, name: &str) -> Result<usize> {
        let v = parse_count(name, self.raw(name)?)?;
        usize::try_from(v).map_err(|_| Error::Usage(format!("--{name}: {v} is too large")))
    }

    pub fn opt_count(&self, name: &str) -> Result<Option<usize>> {
        self.has(name).then(|| self.count(name)).transpose()
    }

    pub fn seed(&self, name: &str) -> Result<u64> {
        Ok(self
            .raw(name)?
            .trim()
            .parse::<u64>()
            .expect("checked on resolve"))
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        parse_flag(name, self.raw(name)?)
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        self.raw(name).map(str::trim)
    }

    pub fn reals(&self, name: &str) -> Result<Vec<f64>> {
        let v = parse_reals(name, self.raw(name)?)?;
        if v.is_empty() {
            return Err(Error::Usage(format!(
                "--{name}: expected at least one value"
            )));
        }
        Ok(v)
    }

    pub fn opt_reals(&self, name: &str) -> Result<Option<Vec<f64>>> {
        self.has(name).then(|| self.reals(name)).transpose()
    }
}
