//! Flat `key=value` configuration files. Command-line flags override file
//! values; unknown keys are ignored so a run manifest can be fed back in as
//! the configuration of a reproduction run.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
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
                bail!("{}:{}: expected key=value, got {line:?}", path.display(), lineno + 1);
            };
            values.insert(normalize_key(key), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

/// Resolve one parameter: explicit flag, then config file, then default.
pub fn resolve<T, E>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T>
where
    T: std::str::FromStr<Err = E>,
    E: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match config.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
        None => Ok(default),
    }
}

/// Same as `resolve` but the value stays optional.
pub fn resolve_opt<T, E>(flag: Option<T>, config: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T: std::str::FromStr<Err = E>,
    E: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match config.get(key) {
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
        None => Ok(None),
    }
}

/// Comma-separated list of positive integers, e.g. `20,40,80`.
pub fn parse_n_grid(raw: &str) -> Result<Vec<u32>> {
    let grid: Vec<u32> = raw
        .split(',')
        .map(|s| s.trim().parse::<u32>().with_context(|| format!("bad n value {s:?}")))
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("n grid is empty");
    }
    Ok(grid)
}

/// Comma-separated `a:b` pairs, e.g. `2.1:11,3:20`.
pub fn parse_pairs(raw: &str) -> Result<Vec<(f64, f64)>> {
    raw.split(',')
        .map(|part| {
            let (a, b) = part
                .trim()
                .split_once(':')
                .with_context(|| format!("expected a:b, got {part:?}"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_key_value_lines_and_ignores_comments() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment\nseed=7\nout-dir = results\n\nratio_c=0.5").unwrap();
        let cfg = ConfigFile::load(file.path()).unwrap();
        assert_eq!(cfg.get("seed"), Some("7"));
        assert_eq!(cfg.get("out_dir"), Some("results"));
        assert_eq!(cfg.get("ratio-c"), Some("0.5"));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn flag_beats_config_beats_default() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "seed=7").unwrap();
        let cfg = ConfigFile::load(file.path()).unwrap();
        assert_eq!(resolve(Some(1u64), &cfg, "seed", 42).unwrap(), 1);
        assert_eq!(resolve(None::<u64>, &cfg, "seed", 42).unwrap(), 7);
        assert_eq!(resolve(None::<u64>, &cfg, "other", 42).unwrap(), 42);
    }

    #[test]
    fn grid_and_pair_parsing() {
        assert_eq!(parse_n_grid("20, 40,80").unwrap(), vec![20, 40, 80]);
        assert!(parse_n_grid("20,x").is_err());
        assert_eq!(parse_pairs("2.1:11, 3:20").unwrap(), vec![(2.1, 11.0), (3.0, 20.0)]);
    }
}
