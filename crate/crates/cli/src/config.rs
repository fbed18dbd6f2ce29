//! Flat `key = value` run configuration files.
//!
//! ```text
//! schema = vorperc-run/1
//! d = 2
//! L = 20,40,80      # side lengths, in units where the intensity is 1
//! p-grid = 0.40:0.60:0.02
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

pub const SCHEMA: &str = "vorperc-run/1";

pub const KEYS: &[&str] = &[
    "d", "L", "p", "p-grid", "trials", "q", "i", "epsilon", "seed", "intensity", "parallel", "out",
    "input", "sweep",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        let mut schema = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "schema" {
                schema = Some(value.to_string());
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key `{key}`", n + 1));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", n + 1));
            }
        }
        match schema.as_deref() {
            Some(SCHEMA) => Ok(Self { values }),
            Some(other) => Err(format!("unsupported schema `{other}`, expected `{SCHEMA}`")),
            None => Err(format!("missing `schema = {SCHEMA}` line")),
        }
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("invalid value `{v}` for `{key}`")),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, String> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| format!("invalid entry `{s}` in `{key}`")))
                .collect::<Result<Vec<T>, String>>()
                .map(Some),
        }
    }

    /// `lo:hi:step` grid, endpoints included; rounded to 12 decimals so
    /// the steps land on the written values.
    pub fn grid(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        parse_grid(v).map(Some)
    }

    pub fn render(&self) -> String {
        let mut s = format!("schema = {SCHEMA}\n");
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

pub fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("invalid grid `{v}`, expected lo:hi:step");
    let parts: Vec<f64> = v
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || hi < lo {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(format!("grid `{v}` has too many points"));
    }
    Ok((0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let s = Settings::parse("schema = vorperc-run/1\n# note\nd = 2\nL = 20,40 # sizes\n").unwrap();
        assert_eq!(s.get::<usize>("d").unwrap(), Some(2));
        assert_eq!(s.list::<f64>("L").unwrap(), Some(vec![20.0, 40.0]));
        assert!(Settings::parse("d = 2\n").is_err());
        assert!(Settings::parse("schema = vorperc-run/1\nwidth = 3\n").is_err());
        assert!(Settings::parse("schema = vorperc-run/1\nd = 2\nd = 3\n").is_err());
        let back = Settings::parse(&s.render()).unwrap();
        assert_eq!(back.raw("L"), Some("20,40"));
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.40:0.60:0.02").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[1], 0.42);
        assert_eq!(g[10], 0.6);
        assert!(parse_grid("0.5:0.4:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
