//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Numbers may be written
//! as powers of two (`2^-8`). Lists are comma separated. Unknown and repeated
//! keys are errors; command-line overrides replace file values.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrators::steps_for;
use crate::operators::{FdOperator, SpatialOperator, SpectralOperator};

pub const KNOWN_KEYS: &[&str] = &[
    "J",
    "J_list",
    "M",
    "N",
    "T",
    "a_coeff",
    "alphas",
    "batch_len",
    "burn_in",
    "chains",
    "epsilons",
    "mcmc_steps",
    "observable",
    "operator",
    "problem",
    "refinement",
    "schemes",
    "sde_steps",
    "sde_tau",
    "seed",
    "tau",
    "tau_ref",
    "taus",
    "thin",
    "x0",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses a number, allowing `2^k` and `b^k` notation.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad number `{s}`")))?;
        let e: i32 = exp
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad exponent in `{s}`")))?;
        return Ok(b.powi(e));
    }
    s.parse()
        .map_err(|_| config_err(format!("bad number `{s}`")))
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if cfg.entries.contains_key(key) {
                return Err(config_err(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), parse_number)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                let x = parse_number(v)?;
                if x < 0.0 || x.fract() != 0.0 || x > 1e15 {
                    return Err(config_err(format!(
                        "`{key}` must be a non-negative integer, got `{v}`"
                    )));
                }
                Ok(x as usize)
            }
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| config_err(format!("`{key}` must be an unsigned integer, got `{v}`"))),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(parse_number).collect(),
        }
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| config_err(format!("bad integer `{s}` in `{key}`")))
                })
                .collect(),
        }
    }

    pub fn str_list_or(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.get(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        }
    }

    /// Resolves `(tau, N)` from `tau` together with `N` and/or `T`, enforcing
    /// `T = N tau` when all three are given.
    pub fn time_grid(&self, default_tau: f64, default_t: f64) -> Result<(f64, usize)> {
        let tau = self.f64_or("tau", default_tau)?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(config_err(format!("tau must be positive, got {tau}")));
        }
        match (self.get("N"), self.get("T")) {
            (Some(_), Some(_)) => {
                let n = self.usize_or("N", 0)?;
                let t = self.f64_or("T", 0.0)?;
                if (n as f64 * tau - t).abs() > 1e-12 * t.max(tau) {
                    return Err(config_err(format!(
                        "T = {t} but N tau = {}",
                        n as f64 * tau
                    )));
                }
                Ok((tau, n))
            }
            (Some(_), None) => Ok((tau, self.usize_or("N", 0)?)),
            (None, _) => {
                let t = self.f64_or("T", default_t)?;
                Ok((
                    tau,
                    steps_for(t, tau).map_err(|e| config_err(e.to_string()))?,
                ))
            }
        }
    }

    /// Builds the spatial operator from `operator`, `J` and `a_coeff`.
    pub fn operator(&self, default_kind: &str, default_j: usize) -> Result<SpatialOperator> {
        let j = self.usize_or("J", default_j)?;
        let coeff = self.str_or("a_coeff", "1");
        match self.str_or("operator", default_kind) {
            "spectral" => {
                if parse_number(coeff).ok() != Some(1.0) {
                    return Err(config_err(
                        "the spectral operator only supports a_coeff = 1",
                    ));
                }
                Ok(SpectralOperator::dirichlet_laplacian(j)?.into())
            }
            "fd" => {
                let a = parse_coefficient(coeff)?;
                Ok(FdOperator::assemble(j, a)?.into())
            }
            other => Err(config_err(format!(
                "operator must be spectral or fd, got `{other}`"
            ))),
        }
    }
}

/// Diffusion coefficient: `c`, `affine:c0,c1` (`c0 + c1 xi`) or
/// `sine:c0,c1` (`c0 + c1 sin(2 pi xi)`).
pub fn parse_coefficient(spec: &str) -> Result<Box<dyn Fn(f64) -> f64>> {
    let spec = spec.trim();
    if let Ok(c) = parse_number(spec) {
        return Ok(Box::new(move |_| c));
    }
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| config_err(format!("bad a_coeff `{spec}`")))?;
    let c: Vec<f64> = args.split(',').map(parse_number).collect::<Result<_>>()?;
    if c.len() != 2 {
        return Err(config_err(format!("a_coeff `{spec}` needs two parameters")));
    }
    let (c0, c1) = (c[0], c[1]);
    match kind.trim() {
        "affine" => Ok(Box::new(move |x| c0 + c1 * x)),
        "sine" => Ok(Box::new(move |x| {
            c0 + c1 * (2.0 * std::f64::consts::PI * x).sin()
        })),
        other => Err(config_err(format!("unknown a_coeff form `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let cfg = RunConfig::parse_str("# comment\nJ = 255\n\ntau = 2^-8\nT=1\nseed=1\n").unwrap();
        assert_eq!(cfg.usize_or("J", 0).unwrap(), 255);
        assert_eq!(cfg.time_grid(0.1, 1.0).unwrap(), (1.0 / 256.0, 256));
        assert_eq!(cfg.u64_or("seed", 0).unwrap(), 1);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(RunConfig::parse_str("colour = red").is_err());
        assert!(RunConfig::parse_str("J = 1\nJ = 2").is_err());
        assert!(RunConfig::parse_str("J 1").is_err());
    }

    #[test]
    fn enforces_horizon_consistency() {
        let bad = RunConfig::parse_str("tau = 0.1\nN = 5\nT = 1").unwrap();
        assert!(bad.time_grid(0.1, 1.0).is_err());
        let off_grid = RunConfig::parse_str("tau = 0.3\nT = 1").unwrap();
        assert!(off_grid.time_grid(0.1, 1.0).is_err());
        let ok = RunConfig::parse_str("tau = 0.25\nN = 4\nT = 1").unwrap();
        assert_eq!(ok.time_grid(0.1, 1.0).unwrap(), (0.25, 4));
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RunConfig::parse_str("J = 8").unwrap();
        cfg.set_pair("J=16").unwrap();
        assert_eq!(cfg.usize_or("J", 0).unwrap(), 16);
        assert!(cfg.set_pair("bogus=1").is_err());
    }

    #[test]
    fn builds_operators() {
        let cfg = RunConfig::parse_str("operator = fd\nJ = 7\na_coeff = affine:1,0.5").unwrap();
        let op = cfg.operator("fd", 3).unwrap();
        assert_eq!(op.len(), 7);
        let spec = RunConfig::parse_str("operator = spectral\na_coeff = 2").unwrap();
        assert!(spec.operator("fd", 3).is_err());
        assert!(RunConfig::parse_str("a_coeff = -1")
            .unwrap()
            .operator("fd", 3)
            .is_err());
    }
}
