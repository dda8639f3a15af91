//! Run configuration: flat `key = value` files merged with command-line flags.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: [&str; 13] = [
    "m", "mu", "q", "c", "p", "n", "r_max", "tol_grad", "max_iter", "c_list", "q_list", "out",
    "format",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected `csv` or `json`, got `{s}`")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Every configurable value, each optional until defaults are applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub m: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub c: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub tol_grad: Option<f64>,
    pub max_iter: Option<usize>,
    pub c_list: Option<Vec<f64>>,
    pub q_list: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    /// Values set in `other` win.
    pub fn overlay(self, other: Settings) -> Settings {
        Settings {
            m: other.m.or(self.m),
            mu: other.mu.or(self.mu),
            q: other.q.or(self.q),
            c: other.c.or(self.c),
            p: other.p.or(self.p),
            n: other.n.or(self.n),
            r_max: other.r_max.or(self.r_max),
            tol_grad: other.tol_grad.or(self.tol_grad),
            max_iter: other.max_iter.or(self.max_iter),
            c_list: other.c_list.or(self.c_list),
            q_list: other.q_list.or(self.q_list),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
        }
    }

    pub fn parse_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("parse_config: cannot read {}", path.display()))?;
        Self::parse_str(&text).with_context(|| format!("parse_config: {}", path.display()))
    }

    pub fn parse_str(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {lineno}: expected `key = value`, got `{line}`"))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if !KEYS.contains(&key.as_str()) {
                bail!(
                    "line {lineno}: unknown key `{key}` (allowed: {})",
                    KEYS.join(", ")
                );
            }
            if !seen.insert(key.clone()) {
                bail!("line {lineno}: duplicate key `{key}`");
            }
            s.set(&key, value)
                .map_err(|e| anyhow!("line {lineno}: key `{key}` {e}"))?;
        }
        Ok(s)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "m" => self.m = Some(parse_real(value)?),
            "mu" => self.mu = Some(parse_real(value)?),
            "q" => self.q = Some(parse_real(value)?),
            "c" => self.c = Some(parse_real(value)?),
            "p" => self.p = Some(parse_real(value)?),
            "n" => self.n = Some(parse_count(value)?),
            "r_max" => self.r_max = Some(parse_real(value)?),
            "tol_grad" => self.tol_grad = Some(parse_real(value)?),
            "max_iter" => self.max_iter = Some(parse_count(value)?),
            "c_list" => self.c_list = Some(parse_list(value)?),
            "q_list" => self.q_list = Some(parse_list(value)?),
            "out" => {
                if value.is_empty() {
                    return Err("expects a path".into());
                }
                self.out = Some(PathBuf::from(value))
            }
            "format" => self.format = Some(value.parse()?),
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }
}

/// Reals accept `inf` for `c`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| format!("expects a real number, got `{s}`"))
}

pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| format!("expects a non-negative integer, got `{s}`"))
}

/// Comma-separated reals; an empty value is the empty list.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| parse_real(x).map_err(|_| format!("expects a comma-separated list of reals, got `{s}`")))
        .collect()
}
