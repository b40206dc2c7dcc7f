//! Flat `key = value` config files. Keys mirror the long flag names; a flag
//! given on the command line wins over the file.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                anyhow!("config line {}: expected key = value, got {raw:?}", n + 1)
            })?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("config line {}: duplicate key {key:?}", n + 1);
            }
        }
        Ok(Config { values })
    }

    /// Flag value if given, else the file's value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key {key:?}: {e}"))
            })
            .transpose()
    }

    pub fn get_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Comma-separated list, e.g. `16,16,16`.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| anyhow!("bad list item {t:?}: {e}"))
        })
        .collect()
}

/// A J grid: either a list `100,200,400` or a range `start:stop:step`
/// (inclusive of `stop` when it lands on the step).
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [_] => parse_list(s)?,
        [a, b, c] => {
            let (start, stop, step): (usize, usize, usize) =
                (a.trim().parse()?, b.trim().parse()?, c.trim().parse()?);
            if step == 0 {
                bail!("grid step must be positive");
            }
            (start..=stop).step_by(step).collect()
        }
        _ => bail!("grid must be a list or start:stop:step, got {s:?}"),
    };
    if grid.is_empty() {
        bail!("empty J grid {s:?}");
    }
    Ok(grid)
}
