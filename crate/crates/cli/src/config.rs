//! Run configuration: a TOML file, then `--key value` overrides, then
//! deserialization into the command's config type. Dotted keys reach into
//! tables (`--mcem.n_iters 5`), and `-` in a key is read as `_`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ebmc_core::RngMode;
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

/// Command-line arguments after the subcommand name, split into the
/// config path, overrides and flags.
#[derive(Debug, Default)]
pub struct RawArgs {
    pub config: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
    pub show_config: bool,
}

impl RawArgs {
    pub fn parse(args: &[String]) -> Result<Self> {
        let mut out = RawArgs::default();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(flag) = arg.strip_prefix("--") else {
                bail!("unexpected argument `{arg}`; options take the form --key value");
            };
            let (key, inline) = match flag.split_once('=') {
                Some((k, v)) => (k, Some(v.to_string())),
                None => (flag, None),
            };
            if key == "show-config" || key == "show_config" {
                out.show_config = true;
                continue;
            }
            let value = match inline {
                Some(v) => v,
                None => it
                    .next()
                    .cloned()
                    .ok_or_else(|| anyhow!("option --{key} needs a value"))?,
            };
            if key == "config" {
                out.config = Some(PathBuf::from(value));
            } else {
                out.overrides.push((key.replace('-', "_"), value));
            }
        }
        Ok(out)
    }
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| anyhow!("empty key"))?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{part}` in --{key} is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn has_path(table: &Table, key: &str) -> bool {
    let mut cur = table;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        match cur.get(part) {
            None => return false,
            Some(_) if parts.peek().is_none() => return true,
            Some(Value::Table(t)) => cur = t,
            Some(_) => return false,
        }
    }
    true
}

fn leaf_keys(table: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) if !t.is_empty() => leaf_keys(t, &key, out),
            _ => out.push(key),
        }
    }
}

/// Reads the config file (if any), applies overrides and deserializes.
/// Keys that the config type does not know are rejected.
pub fn resolve<T: DeserializeOwned + Serialize>(args: &RawArgs) -> Result<T> {
    let mut table = match &args.config {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?
            .parse::<Table>()
            .with_context(|| format!("parsing config {}", path.display()))?,
        None => Table::new(),
    };
    for (key, raw) in &args.overrides {
        set_path(&mut table, key, parse_value(raw))?;
    }
    let cfg: T = Value::Table(table.clone())
        .try_into()
        .map_err(|e| anyhow!("invalid configuration: {e}"))?;
    let resolved = Table::try_from(&cfg)?;
    let mut given = Vec::new();
    leaf_keys(&table, "", &mut given);
    if let Some(bad) = given.iter().find(|k| !has_path(&resolved, k)) {
        bail!("unknown configuration key `{bad}`");
    }
    Ok(cfg)
}

pub fn to_toml<T: Serialize>(cfg: &T) -> Result<String> {
    Ok(toml::to_string_pretty(cfg)?)
}

/// Writes `config.toml` into `dir`, headed by the command and RNG mode.
pub fn echo<T: Serialize>(dir: &Path, command: &str, cfg: &T, mode: RngMode) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let text = format!(
        "# ebmc {command}\n# rng mode: {} (set by {})\n{}",
        mode.as_str(),
        ebmc_core::RNG_MODE_ENV,
        to_toml(cfg)?
    );
    fs::write(dir.join("config.toml"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Inner {
        n: usize,
        x: f64,
    }

    impl Default for Inner {
        fn default() -> Self {
            Self { n: 3, x: 0.5 }
        }
    }

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Outer {
        name: String,
        list: Vec<f64>,
        inner: Inner,
    }

    impl Default for Outer {
        fn default() -> Self {
            Self { name: "a".into(), list: vec![1.0], inner: Inner::default() }
        }
    }

    fn args(v: &[&str]) -> RawArgs {
        RawArgs::parse(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn overrides_apply_with_types() {
        let cfg: Outer = resolve(&args(&["--name", "b/c", "--inner.x", "-2e-3", "--list=[1, 2.5]"])).unwrap();
        assert_eq!(cfg.name, "b/c");
        assert_eq!(cfg.inner, Inner { n: 3, x: -2e-3 });
        assert_eq!(cfg.list, vec![1.0, 2.5]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(resolve::<Outer>(&args(&["--nmae", "x"])).is_err());
        assert!(resolve::<Outer>(&args(&["--inner.m", "1"])).is_err());
        assert!(RawArgs::parse(&["stray".to_string()]).is_err());
        assert!(RawArgs::parse(&["--name".to_string()]).is_err());
    }

    #[test]
    fn file_then_overrides_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "name = \"file\"\n[inner]\nn = 7\n").unwrap();
        let cfg: Outer = resolve(&args(&["--config", path.to_str().unwrap(), "--inner.n", "9"])).unwrap();
        assert_eq!(cfg.name, "file");
        assert_eq!(cfg.inner.n, 9);
        echo(dir.path(), "test", &cfg, RngMode::Sequential).unwrap();
        let again: Outer = resolve(&args(&["--config", dir.path().join("config.toml").to_str().unwrap()])).unwrap();
        assert_eq!(again, cfg);
    }
}
