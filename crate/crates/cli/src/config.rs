//! Run configuration: flat `key=value` files overridden by flags.

use gelshoot::io::{linspace, logspace};
use gelshoot::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Every key a config file or flag may set.
pub const KEYS: &[&str] = &[
    "gamma", "b", "tol", "y_max", "grid", "format", "digits", "eps", "eta", "a1", "x", "xi", "x_end", "horizon",
    "chains", "levels", "t_end", "init", "terms",
];

/// Resolved key-value map. Ordered, so echoes are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parse a config file body. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("config line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::domain(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::domain(format!("unknown config key '{key}'")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::domain(format!("{key}: '{s}' is not a number"))),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            None => Err(Error::domain(format!("missing required --{}", key.replace('_', "-")))),
            Some(_) => self.f64_or(key, f64::NAN),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::domain(format!("{key}: '{s}' is not a count"))),
        }
    }

    /// `lo:hi:n` (linear) or `lo:hi:n:log`.
    pub fn grid(&self, default: (f64, f64, usize, bool)) -> Result<Vec<f64>> {
        let (lo, hi, n, log) = match self.get("grid") {
            None => default,
            Some(s) => parse_grid(s)?,
        };
        Ok(if log { logspace(lo, hi, n) } else { linspace(lo, hi, n) })
    }

    /// `key=value` pairs joined by spaces.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.values.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect())
    }
}

pub fn parse_grid(s: &str) -> Result<(f64, f64, usize, bool)> {
    let bad = || Error::domain(format!("grid '{s}': expected lo:hi:n or lo:hi:n:log"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(_) => return Err(bad()),
    };
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo || (log && lo <= 0.0) {
        return Err(bad());
    }
    Ok((lo, hi, n, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = RunConfig::parse("gamma = 2\n# note\ny-max=1e3 # trailing\n").unwrap();
        assert_eq!(c.f64_or("gamma", 0.0).unwrap(), 2.0);
        assert_eq!(c.f64_or("y_max", 0.0).unwrap(), 1e3);
        assert!(RunConfig::parse("colour=red").is_err());
        assert!(RunConfig::parse("gamma").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:2:3:log").is_err());
        assert_eq!(parse_grid("1:4:3:log").unwrap(), (1.0, 4.0, 3, true));
    }
}
