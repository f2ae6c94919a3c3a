//! Configuration file handling and table loading.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anonsql_core::table::load_csv;
use anonsql_core::{Engine, EngineConfig, Error, Schema, Table};

pub const SALT_ENV: &str = "ANONSQL_SALT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

/// Settings from the config file, the environment and flags.
#[derive(Clone, Default)]
pub struct CliConfig {
    pub salt: Option<String>,
    pub uid_column: Option<String>,
    pub format: Option<Format>,
    /// Table name to CSV path.
    pub tables: BTreeMap<String, PathBuf>,
}

impl fmt::Debug for CliConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CliConfig")
            .field("salt", &self.salt.as_ref().map(|_| "<redacted>"))
            .field("uid_column", &self.uid_column)
            .field("format", &self.format)
            .field("tables", &self.tables)
            .finish()
    }
}

fn config_error(message: impl Into<String>) -> Error {
    Error::Config {
        message: message.into(),
    }
}

impl CliConfig {
    /// Parse `key = value` lines. Table paths are relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<CliConfig, Error> {
        let mut c = CliConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "salt" => c.salt = Some(value.to_string()),
                "uid_column" => c.uid_column = Some(value.to_string()),
                "format" => {
                    c.format = Some(
                        <Format as clap::ValueEnum>::from_str(value, true)
                            .map_err(|_| config_error(format!("line {}: unknown format `{value}`", n + 1)))?,
                    )
                }
                _ => match key.strip_prefix("table.") {
                    Some(name) if !name.is_empty() => {
                        c.tables.insert(name.to_string(), base.join(value));
                    }
                    _ => return Err(config_error(format!("line {}: unknown key `{key}`", n + 1))),
                },
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<CliConfig, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            message: format!("{}: {e}", path.display()),
        })?;
        CliConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The environment variable wins over the file.
    pub fn apply_env(&mut self) {
        if let Ok(salt) = std::env::var(SALT_ENV) {
            if !salt.is_empty() {
                self.salt = Some(salt);
            }
        }
    }

    pub fn engine_config(&self) -> Result<EngineConfig, Error> {
        let salt = self
            .salt
            .clone()
            .ok_or_else(|| config_error(format!("no salt configured; set {SALT_ENV} or `salt` in the config file")))?;
        let mut config = EngineConfig::new(salt)?;
        if let Some(uid) = &self.uid_column {
            config = config.with_uid_column(uid.clone());
        }
        Ok(config)
    }

    pub fn load_tables(&self) -> Result<Vec<Table>, Error> {
        self.tables
            .iter()
            .map(|(name, path)| load_table(path, None, Some(name), self.uid_column.as_deref()))
            .collect()
    }

    pub fn engine(&self) -> Result<Engine, Error> {
        let mut engine = Engine::new(self.engine_config()?);
        for t in self.load_tables()? {
            engine.add_table(t);
        }
        Ok(engine)
    }
}

/// `data/hr.csv` pairs with `data/hr.schema`.
pub fn default_schema_path(csv: &Path) -> PathBuf {
    csv.with_extension("schema")
}

pub fn load_table(csv: &Path, schema: Option<&Path>, name: Option<&str>, uid: Option<&str>) -> Result<Table, Error> {
    let schema_path = schema.map(Path::to_path_buf).unwrap_or_else(|| default_schema_path(csv));
    let text = std::fs::read_to_string(&schema_path).map_err(|e| Error::Io {
        message: format!("{}: {e}", schema_path.display()),
    })?;
    let schema = Schema::parse(&text)?;
    let uid = uid.unwrap_or(schema.uid_name()).to_string();
    let table = load_csv(csv, &schema, &uid)?;
    Ok(match name {
        Some(n) if n != table.name() => Table::new(n, table.schema().clone(), table.rows().to_vec())?,
        _ => table,
    })
}
