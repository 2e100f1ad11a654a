//! Flat `key=value` config files and the flag > file > default precedence.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Parsed config file. Keys use the flag spelling without the leading
/// dashes, e.g. `sigma-factor=10`. `#` starts a comment line.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key `{key}` = `{raw}`: {e}"),
            },
        }
    }
}

/// Resolves one setting: explicit flag wins, then the config file, then the
/// default.
pub fn resolve<T: FromStr + Clone>(flag: &Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

/// Count-style numbers accept scientific notation (`1e4`).
pub fn parse_count(raw: &str) -> std::result::Result<usize, String> {
    if let Ok(v) = raw.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a count"))?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("`{raw}` is not a nonnegative integer"));
    }
    Ok(v as usize)
}

/// Comma-separated list of reals (`0.9,0.8,0.6`).
pub fn parse_f64_list(raw: &str) -> std::result::Result<Vec<f64>, String> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{tok}` is not a number"))
        })
        .collect()
}
