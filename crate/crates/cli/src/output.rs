use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rkcl::report::{to_json, Table, SCHEMA_VERSION};
use serde::Serialize;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Report sink. Without `--out` only the primary JSON goes to stdout.
#[derive(Debug)]
pub struct Output {
    dir: Option<PathBuf>,
    files: Vec<String>,
    stdout_json: Option<String>,
}

impl Output {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| CliError::Data(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Output { dir: dir.map(Path::to_path_buf), files: Vec::new(), stdout_json: None })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        self.write(name, &t.to_csv())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, body)
    }

    /// Writes `name` and makes it the document printed on stdout.
    pub fn json<T: Serialize>(&mut self, name: &str, kind: &str, data: &T) -> Result<(), CliError> {
        let body = to_json(kind, data);
        self.write(name, &body)?;
        self.stdout_json = Some(body);
        Ok(())
    }

    pub fn finish(mut self, manifest: Manifest) -> Result<Option<String>, CliError> {
        let files = std::mem::take(&mut self.files);
        let m = Manifest { files, ..manifest };
        let body = to_json("manifest", &m);
        if let Some(d) = &self.dir {
            let path = d.join(MANIFEST);
            std::fs::write(&path, body).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(self.stdout_json)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub version: String,
    pub schema_version: u32,
    pub threads: usize,
    pub wall_time_s: f64,
    pub finished_unix: u64,
    pub exit_code: i32,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config: BTreeMap<String, String>, seeds: Vec<u64>) -> Self {
        Manifest {
            subcommand: subcommand.to_string(),
            config,
            seeds,
            version: format!("rkcl {}", env!("CARGO_PKG_VERSION")),
            schema_version: SCHEMA_VERSION,
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            finished_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            exit_code: 0,
            files: Vec::new(),
        }
    }
}
