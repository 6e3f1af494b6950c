use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Everything a command runs with after resolution: paths and numeric knobs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub paths: BTreeMap<String, PathBuf>,
    pub knobs: BTreeMap<String, Value>,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("run config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Merges flags over a JSON config file over defaults, recording each
/// resolved value.
pub struct Resolver {
    file: Map<String, Value>,
    base: PathBuf,
    pub run: RunConfig,
}

impl Resolver {
    pub fn new(command: &str, config: Option<&Path>) -> CliResult<Self> {
        let (file, base) = match config {
            None => (Map::new(), PathBuf::from(".")),
            Some(p) => {
                let reader = BufReader::new(
                    File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
                );
                let value: Value = serde_json::from_reader(reader)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let Value::Object(map) = value else {
                    return Err(CliError::Io(format!("{}: config must be a JSON object", p.display())));
                };
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (map, base)
            }
        };
        Ok(Self {
            file,
            base,
            run: RunConfig {
                command: command.to_string(),
                ..RunConfig::default()
            },
        })
    }

    fn from_file<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        match self.file.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key:?}: {e}"))),
        }
    }

    pub fn opt_knob<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.run.knobs.insert(key.to_string(), serde_json::to_value(v).expect("knob serializes"));
        }
        Ok(v)
    }

    pub fn knob<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let v = self.opt_knob(key, flag)?;
        let v = v.unwrap_or(default);
        self.run.knobs.insert(key.to_string(), serde_json::to_value(&v).expect("knob serializes"));
        Ok(v)
    }

    /// Flag paths are taken as given; config paths are relative to the
    /// config file.
    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        let p = match flag {
            Some(p) => Some(p),
            None => self.from_file::<PathBuf>(key)?.map(|p| {
                if p.is_absolute() {
                    p
                } else {
                    self.base.join(p)
                }
            }),
        };
        if let Some(p) = &p {
            self.run.paths.insert(key.to_string(), p.clone());
        }
        Ok(p)
    }

    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        self.path(key, flag)?
            .ok_or_else(|| CliError::usage(format!("missing --{}", key.replace('_', "-"))))
    }
}
