//! Run settings: defaults, then a flat `section.key = value` file, then
//! command-line flags.

use std::path::Path;

use qrexp::dynamics::{ClassifyParams, PlaneSlice, Window};
use qrexp::{BranchIndex, Cutoff, GConfig, MapConfig, Point3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UsageError {
    #[error("{file}:{line}: {msg}")]
    File { file: String, line: usize, msg: String },
    #[error("invalid value for {key}: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read {file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

fn bad(key: &str, msg: impl ToString) -> UsageError {
    UsageError::Value { key: key.to_string(), msg: msg.to_string() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub lambda: f64,
    pub ceiling: f64,
    pub cutoff: Cutoff,
    pub branch: (i64, i64, u8),
    pub overflow_radius: f64,
    pub budget: usize,
    pub r_zero: f64,
    pub r_escape: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let params = ClassifyParams::default();
        Settings {
            lambda: 5e-5,
            ceiling: 2.0,
            cutoff: Cutoff::Linear,
            branch: (0, 0, 0),
            overflow_radius: 1e10,
            budget: params.budget,
            r_zero: params.r_zero,
            r_escape: params.r_escape,
            workers: 1,
            seed: 0,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, format!("'{value}': {e}")))
}

impl Settings {
    pub const KEYS: [&'static str; 12] = [
        "map.lambda",
        "map.branch.n",
        "map.branch.m",
        "map.branch.p",
        "map.overflow_radius",
        "g.L",
        "g.cutoff",
        "dynamics.budget",
        "dynamics.r_zero",
        "dynamics.r_escape",
        "run.workers",
        "run.seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        match key {
            "map.lambda" => self.lambda = number(key, value)?,
            "map.branch.n" => self.branch.0 = number(key, value)?,
            "map.branch.m" => self.branch.1 = number(key, value)?,
            "map.branch.p" => self.branch.2 = number(key, value)?,
            "map.overflow_radius" => self.overflow_radius = number(key, value)?,
            "g.L" => self.ceiling = number(key, value)?,
            "g.cutoff" => self.cutoff = value.trim().parse().map_err(|e| bad(key, e))?,
            "dynamics.budget" => self.budget = number(key, value)?,
            "dynamics.r_zero" => self.r_zero = number(key, value)?,
            "dynamics.r_escape" => self.r_escape = number(key, value)?,
            "run.workers" => self.workers = number(key, value)?,
            "run.seed" => self.seed = number(key, value)?,
            _ => return Err(bad(key, format!("unknown key; expected one of {}", Self::KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, file: &str, text: &str) -> Result<(), UsageError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| UsageError::File { file: file.to_string(), line: idx + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected 'section.key = value'".into()))?;
            self.set(key.trim(), value).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), UsageError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| UsageError::Io { file: name.clone(), source })?;
        self.apply_text(&name, &text)
    }

    pub fn g_config(&self) -> Result<GConfig, UsageError> {
        GConfig::new(self.ceiling, self.cutoff).map_err(|e| bad("g.L", e))
    }

    pub fn map_config(&self) -> Result<MapConfig, UsageError> {
        let (n, m, p) = self.branch;
        let branch = BranchIndex::new(n, m, p).map_err(|e| bad("map.branch.p", e))?;
        MapConfig::new(self.lambda, self.g_config()?)
            .map_err(|e| bad("map.lambda", e))?
            .with_branch(branch)
            .with_overflow_radius(self.overflow_radius)
            .map_err(|e| bad("map.overflow_radius", e))
    }

    pub fn classify_params(&self) -> Result<ClassifyParams, UsageError> {
        let p = ClassifyParams { budget: self.budget, r_zero: self.r_zero, r_escape: self.r_escape };
        p.validate().map_err(|e| bad("dynamics", e))?;
        Ok(p)
    }
}

fn floats(key: &str, s: &str, n: usize) -> Result<Vec<f64>, UsageError> {
    let v: Vec<f64> = s.split(',').map(|t| number(key, t)).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(bad(key, format!("expected {n} comma-separated numbers, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(key, "values must be finite"));
    }
    Ok(v)
}

pub fn parse_point(s: &str) -> Result<Point3, UsageError> {
    let v = floats("--point", s, 3)?;
    Ok(Point3::new(v[0], v[1], v[2]))
}

pub fn parse_branch(s: &str) -> Result<(i64, i64, u8), UsageError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(bad("--branch", "expected n,m,p"));
    }
    Ok((number("--branch", parts[0])?, number("--branch", parts[1])?, number("--branch", parts[2])?))
}

pub fn parse_window(s: &str) -> Result<Window, UsageError> {
    let v = floats("--window", s, 4)?;
    Window::new(v[0], v[1], v[2], v[3]).map_err(|e| bad("--window", e))
}

/// `default`, or nine numbers: origin, first and second spanning vectors.
pub fn parse_slice(s: &str) -> Result<PlaneSlice, UsageError> {
    if s == "default" {
        return Ok(PlaneSlice::default());
    }
    let v = floats("--slice", s, 9)?;
    let p = |k: usize| Point3::new(v[k], v[k + 1], v[k + 2]);
    PlaneSlice::new(p(0), p(3), p(6)).map_err(|e| bad("--slice", e))
}

/// `N` or `WxH`.
pub fn parse_res(s: &str) -> Result<(usize, usize), UsageError> {
    let (w, h) = match s.split_once('x') {
        Some((w, h)) => (number("--res", w)?, number("--res", h)?),
        None => {
            let n = number("--res", s)?;
            (n, n)
        }
    };
    if w == 0 || h == 0 {
        return Err(bad("--res", "dimensions must be positive"));
    }
    Ok((w, h))
}

pub fn parse_box(s: &str) -> Result<(Point3, Point3), UsageError> {
    let v = floats("--box", s, 6)?;
    let (lo, hi) = (Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]));
    if !(lo.x1 <= hi.x1 && lo.x2 <= hi.x2 && lo.x3 <= hi.x3) {
        return Err(bad("--box", "lower corner must not exceed upper corner"));
    }
    Ok((lo, hi))
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, UsageError> {
    let v: Vec<f64> = s.split(',').map(|t| number(key, t)).collect::<Result<_, _>>()?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(bad(key, "expected finite comma-separated numbers"));
    }
    Ok(v)
}
