//! Flat `key = value` configuration files with dotted keys.
//!
//! ```text
//! # comment
//! seed = 20240607
//! domain.nodes = 63
//! geometry.radii = 0.08, 0.12, 0.18, 0.24
//! sets.e = 0.1:0.2, 0.3:0.45
//! ```

use std::fmt;

use stochheat::observability::EnergyConstant;
use stochheat::suite::{NoiseMode, SuiteConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, key: Some(key.to_string()), message: message.into() }
}

fn parse_f64(line: Option<usize>, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| err(line, key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(err(line, key, "value must be finite"));
    }
    Ok(x)
}

fn parse_usize(line: Option<usize>, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|_| err(line, key, format!("expected a non-negative integer, got `{v}`")))
}

fn parse_list(line: Option<usize>, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| parse_f64(line, key, s)).collect()
}

fn parse_intervals(line: Option<usize>, key: &str, v: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    v.split(',')
        .map(|part| {
            let (a, b) = part.split_once(':').ok_or_else(|| err(line, key, format!("expected `lo:hi`, got `{}`", part.trim())))?;
            Ok((parse_f64(line, key, a)?, parse_f64(line, key, b)?))
        })
        .collect()
}

/// Applies one `key = value` assignment.
pub fn apply(cfg: &mut SuiteConfig, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
    let v = value.trim();
    let f = |v: &str| parse_f64(line, key, v);
    let u = |v: &str| parse_usize(line, key, v);
    match key {
        "seed" => cfg.seed = v.parse().map_err(|_| err(line, key, format!("expected an unsigned integer, got `{v}`")))?,
        "domain.lo" => cfg.extent.0 = f(v)?,
        "domain.hi" => cfg.extent.1 = f(v)?,
        "domain.nodes" => cfg.nodes = u(v)?,
        "time.horizon" => cfg.horizon = f(v)?,
        "time.depth" => cfg.depth = u(v)?,
        "noise.tree_cap" => cfg.tree_cap = u(v)?,
        "noise.mode" => cfg.mode = parse_mode(v).map_err(|m| err(line, key, m))?,
        "geometry.x0" => cfg.x0 = f(v)?,
        "geometry.radii" => {
            let r = parse_list(line, key, v)?;
            cfg.radii = r.try_into().map_err(|r: Vec<f64>| err(line, key, format!("expected 4 radii, got {}", r.len())))?;
        }
        "geometry.g0.center" => cfg.g0.0 = f(v)?,
        "geometry.g0.radius" => cfg.g0.1 = f(v)?,
        "sets.e" => cfg.e = parse_intervals(line, key, v)?,
        "sets.e1" => cfg.e1 = parse_intervals(line, key, v)?,
        "coefficients.a_bound" => cfg.a_bound = f(v)?,
        "coefficients.b_bound" => cfg.b_bound = f(v)?,
        "sweep.size" => cfg.sweep_size = u(v)?,
        "frequency.lambda" => cfg.lambda = f(v)?,
        "frequency.eps_steps" => cfg.eps_steps = if v == "auto" { None } else { Some(u(v)?) },
        "constants.energy" => {
            cfg.energy = match v {
                "linear" => EnergyConstant::Linear,
                "squared" => EnergyConstant::Squared,
                "larger" => EnergyConstant::Larger,
                _ => return Err(err(line, key, format!("expected linear | squared | larger, got `{v}`"))),
            }
        }
        "density.ratio" => cfg.density_ratio = f(v)?,
        "density.depth" => cfg.density_depth = u(v)?,
        "tolerance.scale" => cfg.tol_scale = f(v)?,
        "control.nodes" => cfg.control.nodes = u(v)?,
        "control.depth" => cfg.control.depth = u(v)?,
        "control.horizon" => cfg.control.horizon = f(v)?,
        "control.g0.center" => cfg.control.g0.0 = f(v)?,
        "control.g0.radius" => cfg.control.g0.1 = f(v)?,
        "control.e1" => cfg.control.e1 = parse_intervals(line, key, v)?,
        "control.cg_tol" => cfg.control.cg_tol = f(v)?,
        "control.max_iter" => cfg.control.max_iter = u(v)?,
        "control.trials" => cfg.control.trials = u(v)?,
        "control.target_modes" => cfg.control.target_modes = u(v)?,
        _ => return Err(err(line, key, "unknown key")),
    }
    Ok(())
}

/// Paths of `mc` without an explicit count.
pub const DEFAULT_PATHS: usize = 256;

/// `tree`, `mc`, `mc:M` or `sampled:M`.
pub fn parse_mode(v: &str) -> Result<NoiseMode, String> {
    match v.split_once(':') {
        None if v == "tree" => Ok(NoiseMode::Tree),
        None if v == "mc" => Ok(NoiseMode::Sampled { paths: DEFAULT_PATHS }),
        Some(("sampled" | "mc", m)) => match m.trim().parse::<usize>() {
            Ok(paths) if paths > 0 => Ok(NoiseMode::Sampled { paths }),
            _ => Err(format!("path count must be a positive integer, got `{m}`")),
        },
        _ => Err(format!("expected `tree`, `mc`, `mc:M` or `sampled:M`, got `{v}`")),
    }
}

pub fn parse(text: &str) -> Result<SuiteConfig, ConfigError> {
    let mut cfg = SuiteConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = Some(i + 1);
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| ConfigError { line, key: None, message: format!("expected `key = value`, got `{body}`") })?;
        let k = k.trim();
        if !seen.insert(k.to_string()) {
            return Err(err(line, k, "duplicate key"));
        }
        apply(&mut cfg, k, v, line)?;
    }
    Ok(cfg)
}

/// Checks the assembled configuration.
pub fn check(cfg: &SuiteConfig) -> Result<(), ConfigError> {
    let r = cfg.radii;
    if !(0.0 < r[0] && r[0] < r[1] && r[1] < r[2] && r[2] < r[3]) {
        return Err(err(None, "geometry.radii", format!("need 0 < r1 < r2 < r3 < r4, got {r:?}")));
    }
    if cfg.depth < 3 {
        return Err(err(None, "time.depth", "need at least 3 steps for the refinement studies"));
    }
    cfg.validate().map_err(|e| ConfigError { line: None, key: None, message: e.to_string() })
}

/// Canonical text of a configuration (stable across formatting of the input).
pub fn canonical(cfg: &SuiteConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_comments() {
        let c = parse("seed = 5 # note\n\ngeometry.radii = 0.1, 0.2,0.3 ,0.4\nsets.e = 0.1:0.2, 0.3:0.4\nnoise.mode = sampled:32\n").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.radii, [0.1, 0.2, 0.3, 0.4]);
        assert_eq!(c.e, vec![(0.1, 0.2), (0.3, 0.4)]);
        assert_eq!(c.mode, NoiseMode::Sampled { paths: 32 });
        assert_eq!(parse_mode("mc"), Ok(NoiseMode::Sampled { paths: DEFAULT_PATHS }));
        assert!(parse_mode("mc:0").is_err());
    }

    #[test]
    fn reports_line_and_key() {
        let e = parse("seed = 1\ndomain.nodes = many\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.key.as_deref(), Some("domain.nodes"));
        let e = parse("bogus.key = 1").unwrap_err();
        assert!(e.to_string().contains("unknown key"));
        assert!(parse("seed = 1\nseed = 2").is_err());
        assert!(parse("just words").is_err());
    }

    #[test]
    fn radii_ordering_is_checked() {
        let c = parse("geometry.radii = 0.2, 0.1, 0.3, 0.4").unwrap();
        assert_eq!(check(&c).unwrap_err().key.as_deref(), Some("geometry.radii"));
        assert!(check(&SuiteConfig::default()).is_ok());
    }

    #[test]
    fn canonical_form_ignores_layout() {
        let a = parse("seed=3\ndomain.nodes=31").unwrap();
        let b = parse("# x\ndomain.nodes = 31\n  seed = 3  ").unwrap();
        assert_eq!(canonical(&a), canonical(&b));
    }
}
