//! Flat key=value configuration files and the merge rules against flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

/// Parsed config file: one `key = value` per line, `#` comments, blank lines
/// ignored. Keys use the long-flag spelling of the matching option.
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Failure::Usage(format!("cannot read config file {}: {e}", p.display()))
            })?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Failure::Usage(format!(
                        "config line {}: expected key=value, got {line:?}",
                        i + 1
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                Failure::Usage(format!("config key {key}: cannot parse {raw:?}: {e}"))
            }),
        }
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, Failure> {
        Ok(match flag {
            Some(v) => v,
            None => self.lookup::<f64>(key)?.unwrap_or(default),
        })
    }

    pub fn u64(&self, key: &str, flag: Option<u64>, default: u64) -> Result<u64, Failure> {
        Ok(match flag {
            Some(v) => v,
            None => self.lookup::<u64>(key)?.unwrap_or(default),
        })
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, Failure> {
        Ok(match flag {
            Some(v) => v,
            None => self.lookup::<usize>(key)?.unwrap_or(default),
        })
    }

    pub fn string(&self, key: &str, flag: Option<&str>, default: &str) -> Result<String, Failure> {
        Ok(match flag {
            Some(v) => v.to_string(),
            None => self.lookup::<String>(key)?.unwrap_or_else(|| default.to_string()),
        })
    }

    /// Optional value with no default: flag, else config, else None.
    pub fn opt_u64(&self, key: &str, flag: Option<u64>) -> Result<Option<u64>, Failure> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup::<u64>(key),
        }
    }

    pub fn opt_string(&self, key: &str, flag: Option<&str>) -> Result<Option<String>, Failure> {
        match flag {
            Some(v) => Ok(Some(v.to_string())),
            None => self.lookup::<String>(key),
        }
    }

    /// Boolean switch: a set flag wins, otherwise the config key, else false.
    pub fn switch(&self, key: &str, set: bool) -> Result<bool, Failure> {
        if set {
            return Ok(true);
        }
        self.lookup::<bool>(key).map(|o| o.unwrap_or(false))
    }
}

pub fn parse_f64_list(raw: &str, what: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|part| {
            let t = part.trim();
            t.parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{what}: bad number {t:?} in {raw:?}")))
        })
        .collect()
}

pub fn parse_u64_list(raw: &str, what: &str) -> Result<Vec<u64>, Failure> {
    raw.split(',')
        .map(|part| {
            let t = part.trim();
            t.parse::<u64>()
                .map_err(|_| Failure::Usage(format!("{what}: bad integer {t:?} in {raw:?}")))
        })
        .collect()
}

/// Semicolon-separated integer vectors, e.g. "1,0;0,1".
pub fn parse_generator_list(raw: &str) -> Result<Vec<Vec<i64>>, Failure> {
    let mut gens = Vec::new();
    for chunk in raw.split(';') {
        let gen: Vec<i64> = chunk
            .split(',')
            .map(|part| {
                let t = part.trim();
                t.parse::<i64>().map_err(|_| {
                    Failure::Usage(format!("generators: bad integer {t:?} in {raw:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        gens.push(gen);
    }
    let dim = gens[0].len();
    if dim == 0 || gens.iter().any(|g| g.len() != dim) {
        return Err(Failure::Usage(format!(
            "generators must be nonempty vectors of equal length, got {raw:?}"
        )));
    }
    Ok(gens)
}
