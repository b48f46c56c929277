//! Flat `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use shq_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Probe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Probe => "probe",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Command> {
        match s {
            "verify" => Ok(Command::Verify),
            "solve" => Ok(Command::Solve),
            "probe" => Ok(Command::Probe),
            other => Err(Error::Configuration(format!("unknown command {other:?}"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Configuration(format!("unknown format {other:?}, expected json or csv"))),
        }
    }
}

const COMMON: &[(&str, &str)] = &[("format", "json"), ("seed", "0")];

const VERIFY: &[(&str, &str)] = &[
    ("n_min", "2"),
    ("n_max", "6"),
    ("identity_n_max", "8"),
    ("alphas", "0,0.5,3"),
    ("samples", "10000"),
    ("directions", "10"),
    ("tolerance", "1e-9"),
    ("identity_tolerance", "1e-10"),
    ("checks", ""),
    ("all_ones", "false"),
];

const SOLVE: &[(&str, &str)] = &[
    ("n", "3"),
    ("k", "2"),
    ("l", "0"),
    ("alpha", "1"),
    ("domain", "ball"),
    ("radius", "1"),
    ("half_width", "1"),
    ("mesh", "17"),
    ("rhs", "constant"),
    ("f", "18"),
    ("c", "0.5"),
    ("poly_a", "1"),
    ("poly_b", "0"),
    ("poly_c", "0"),
    ("poly_d", "0"),
    ("tol", "1e-8"),
    ("max_newton", "40"),
    ("min_dt", "9.5367431640625e-7"),
    ("snapshot", ""),
];

const PROBE: &[(&str, &str)] = &[
    ("input", ""),
    ("probes", "interior,pogorelov"),
    ("betas", "1,1.5,2,3,5"),
    ("a", "1"),
    ("big_a", "1"),
    ("a_cap", ""),
    ("stability_tolerance", "0.05"),
];

fn defaults(cmd: Command) -> BTreeMap<String, String> {
    let tables: &[&[(&str, &str)]] = match cmd {
        Command::Verify => &[COMMON, VERIFY],
        Command::Solve => &[COMMON, SOLVE],
        Command::Probe => &[COMMON, SOLVE, PROBE],
    };
    tables
        .iter()
        .flat_map(|t| t.iter())
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses a `--key=value` override.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    arg.strip_prefix("--")
        .and_then(|s| s.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| Error::Configuration(format!("override {arg:?} is not of the form --key=value")))
}

/// Fully resolved configuration: defaults, then the file, then overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl Config {
    /// `env_seed` is used only when neither the file nor the overrides set
    /// a seed.
    pub fn resolve(
        command: Command,
        file: &[(String, String)],
        overrides: &[(String, String)],
        env_seed: Option<&str>,
    ) -> Result<Config> {
        let mut values = defaults(command);
        let mut seen = BTreeMap::new();
        for (k, v) in file {
            if seen.insert(k.clone(), ()).is_some() {
                return Err(Error::Configuration(format!("key {k:?} repeated in config file")));
            }
            set(&mut values, command, k, v)?;
        }
        for (k, v) in overrides {
            set(&mut values, command, k, v)?;
        }
        let seed_given = file.iter().chain(overrides).any(|(k, _)| k == "seed");
        if let (false, Some(s)) = (seed_given, env_seed) {
            values.insert("seed".into(), s.trim().to_string());
        }
        let cfg = Config { command, values };
        cfg.get::<u64>("seed")?;
        cfg.format()?;
        Ok(cfg)
    }

    pub fn from_pairs(command: Command, pairs: &[(&str, &str)]) -> Result<Config> {
        let pairs: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Config::resolve(command, &[], &pairs, None)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| Error::Configuration(format!("cannot parse {key}={raw:?}")))
    }

    /// Comma-separated list; empty means none.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(vec![]);
        }
        raw.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::Configuration(format!("cannot parse {t:?} in {key}")))
            })
            .collect()
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    pub fn format(&self) -> Result<Format> {
        self.get("format")
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Sorted `key=value` lines, the form embedded in reports and hashed.
    pub fn canonical(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// SHA-256 over the canonical config followed by the given input bytes.
    pub fn input_hash(&self, inputs: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        for bytes in inputs {
            h.update(bytes);
        }
        hex::encode(h.finalize())
    }
}

fn set(values: &mut BTreeMap<String, String>, cmd: Command, key: &str, value: &str) -> Result<()> {
    match values.get_mut(key) {
        Some(slot) => {
            *slot = value.to_string();
            Ok(())
        }
        None => Err(Error::Configuration(format!("unknown key {key:?} for {cmd}"))),
    }
}
