use std::path::PathBuf;
use std::str::FromStr;

use crate::control::{Bounds, OptimizerConfig};
use crate::error::{Error, Result};
use crate::verify::ProblemId;

pub const DEFAULT_LEVELS: [usize; 4] = [4, 8, 16, 32];

/// Settings shared by all commands. Missing values take the defaults of the
/// L-shape experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub levels: Vec<usize>,
    pub alpha: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        Self {
            problem: ProblemId::default(),
            n: None,
            steps: None,
            levels: DEFAULT_LEVELS.to_vec(),
            alpha: opt.alpha,
            u_a: opt.bounds.lower(),
            u_b: opt.bounds.upper(),
            step: opt.step,
            tol: opt.tol,
            max_iter: opt.max_iter,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.u_a >= self.u_b {
            return Err(Error::Validation(format!(
                "lower bound u_a = {} must be below upper bound u_b = {}",
                self.u_a, self.u_b
            )));
        }
        let to_validation = |e| match e {
            Error::InvalidParameter(m) => Error::Validation(m),
            other => other,
        };
        Bounds::new(self.u_a, self.u_b).map_err(to_validation)?;
        self.optimizer().validate().map_err(to_validation)
    }

    /// Optimizer settings; the bounds fall back to the defaults when
    /// [`RunConfig::validate`] would reject them.
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            alpha: self.alpha,
            bounds: Bounds::new(self.u_a, self.u_b).unwrap_or_default(),
            step: self.step,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Comma-separated list of mesh levels, e.g. `4,8,16`.
pub fn parse_levels(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad level `{}`: {e}", p.trim()))
        })
        .collect()
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("invalid value `{raw}` for key `{key}`: {e}"),
    })
}

/// Reads `key=value` lines; `#` starts a comment. Keys: `problem`, `n`,
/// `steps`, `levels`, `alpha`, `u_a`, `u_b`, `step`, `tol`, `max_iter`, `out`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected key=value, got `{content}`"),
        })?;
        let (key, raw) = (key.trim(), raw.trim());
        match key {
            "problem" => {
                cfg.problem = raw.parse().map_err(|e: Error| Error::Parse {
                    line,
                    message: format!("key `problem`: {e}"),
                })?
            }
            "n" => cfg.n = Some(value(key, raw, line)?),
            "steps" => cfg.steps = Some(value(key, raw, line)?),
            "levels" => {
                cfg.levels = parse_levels(raw).map_err(|m| Error::Parse {
                    line,
                    message: format!("key `levels`: {m}"),
                })?
            }
            "alpha" => cfg.alpha = value(key, raw, line)?,
            "u_a" => cfg.u_a = value(key, raw, line)?,
            "u_b" => cfg.u_b = value(key, raw, line)?,
            "step" => cfg.step = Some(value(key, raw, line)?),
            "tol" => cfg.tol = value(key, raw, line)?,
            "max_iter" => cfg.max_iter = value(key, raw, line)?,
            "out" => cfg.out = Some(PathBuf::from(raw)),
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
