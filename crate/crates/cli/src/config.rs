//! Run configuration: defaults, a line-based `key = value` file, and command-line overrides.

use rtf_local::padic::{is_odd_prime, max_precision, work_prec};
use rtf_local::{Complex64, ExtKind, HeckeElt};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Largest `|val xi|` accepted for report windows.
pub const MAX_WINDOW: i32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// One Hecke element as `(n, coefficient)` pairs in the `h_n` basis.
pub type HeckeSpec = Vec<(u32, f64)>;

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub p: u32,
    pub ext: &'static str,
    pub hecke: Vec<HeckeSpec>,
    pub val_window: (i32, i32),
    pub precision: u32,
    pub tolerance: f64,
    pub seed: u64,
    pub jobs: usize,
    pub samples: usize,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn kind(&self) -> ExtKind {
        if self.ext == "inert" {
            ExtKind::Inert
        } else {
            ExtKind::Split
        }
    }

    pub fn hecke_elements(&self) -> Vec<HeckeElt> {
        self.hecke
            .iter()
            .map(|h| {
                let pairs: Vec<(u32, Complex64)> = h.iter().map(|&(n, c)| (n, Complex64::new(c, 0.0))).collect();
                HeckeElt::from_pairs(&pairs)
            })
            .collect()
    }
}

/// Raw settings before validation; later layers override earlier ones key by key.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, Vec<String>>,
}

const KEYS: [&str; 10] = ["p", "ext", "hecke", "val-window", "precision", "tolerance", "seed", "jobs", "samples", "format"];

impl Settings {
    pub fn from_file_text(text: &str) -> Result<Self, UsageError> {
        let mut s = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key = value", i + 1));
            };
            let k = k.trim().replace('_', "-");
            if !KEYS.contains(&k.as_str()) && k != "out" {
                return usage(format!("config line {}: unknown key {:?}", i + 1, k));
            }
            s.values.entry(k).or_default().push(v.trim().to_string());
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, vals: Vec<String>) {
        if !vals.is_empty() {
            self.values.insert(key.to_string(), vals);
        }
    }

    fn last(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, UsageError> {
        match self.last(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| usage(format!("--{}: cannot parse {:?}", key, v))),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, UsageError> {
        let p: u32 = self.parsed("p", 3)?;
        if !is_odd_prime(p as u64) {
            return usage(format!("--p {}: not an odd prime", p));
        }
        let ext = match self.last("ext").unwrap_or("split") {
            "split" => "split",
            "inert" => "inert",
            other => return usage(format!("--ext {:?}: expected split or inert", other)),
        };
        let hecke = match self.values.get("hecke") {
            None => vec![vec![(0, 1.0)]],
            Some(list) => list.iter().map(|s| parse_hecke(s)).collect::<Result<_, _>>()?,
        };
        let val_window = match self.last("val-window") {
            None => (-4, 4),
            Some(s) => parse_window(s)?,
        };
        let precision: u32 = self.parsed("precision", work_prec(p))?;
        if precision < work_prec(p) || precision > max_precision(p) {
            return usage(format!("--precision {}: must lie in [{}, {}] for p = {}", precision, work_prec(p), max_precision(p), p));
        }
        let tolerance: f64 = self.parsed("tolerance", 1e-8)?;
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return usage("--tolerance must be positive");
        }
        let seed: u64 = self.parsed("seed", 1)?;
        let jobs: usize = self.parsed("jobs", 0)?;
        let samples: usize = self.parsed("samples", 50)?;
        let format = match self.last("format").unwrap_or("json") {
            "json" => Format::Json,
            "csv" => Format::Csv,
            other => return usage(format!("--format {:?}: expected json or csv", other)),
        };
        let out = self.last("out").map(PathBuf::from);
        Ok(RunConfig { p, ext, hecke, val_window, precision, tolerance, seed, jobs, samples, format, out })
    }
}

/// `n:c[,n:c...]`; the empty string is `h_0`.
pub fn parse_hecke(s: &str) -> Result<HeckeSpec, UsageError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![(0, 1.0)]);
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let Some((n, c)) = part.split_once(':') else {
            return usage(format!("--hecke {:?}: expected n:c", part));
        };
        let n: u32 = n.trim().parse().or_else(|_| usage(format!("--hecke {:?}: bad degree", part)))?;
        let c: f64 = c.trim().parse().or_else(|_| usage(format!("--hecke {:?}: bad coefficient", part)))?;
        if n > 6 {
            return usage(format!("--hecke degree {} above 6", n));
        }
        out.push((n, c));
    }
    Ok(out)
}

pub fn parse_window(s: &str) -> Result<(i32, i32), UsageError> {
    let bad = || UsageError(format!("--val-window {:?}: expected a:b with a <= b", s));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    if a < -MAX_WINDOW || b > MAX_WINDOW {
        return usage(format!("--val-window {}:{} outside [-{}, {}]", a, b, MAX_WINDOW, MAX_WINDOW));
    }
    Ok((a, b))
}
