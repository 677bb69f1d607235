//! Provenance record written next to every output.

use std::path::{Path, PathBuf};

use lndimer::Constants;
use lndimer::rovib::ConvergenceReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything that determines the numbers in an output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub format: String,
    pub constants_file: Option<PathBuf>,
    /// Subcommand arguments as given, defaults filled in.
    pub params: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Build {
    pub package: &'static str,
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub debug_assertions: bool,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub build: Build,
    pub config: &'a RunConfig,
    pub config_sha256: String,
    pub constants: &'a Constants,
    pub constants_sha256: String,
    /// Files read besides the constants; bundled tables are not listed.
    pub inputs: Vec<InputFile>,
    pub output: Option<PathBuf>,
    pub output_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<&'a [ConvergenceReport]>,
}

impl<'a> Manifest<'a> {
    pub fn new(
        config: &'a RunConfig,
        constants: &'a Constants,
        inputs: &[PathBuf],
        output: Option<&Path>,
        body: &[u8],
        convergence: Option<&'a [ConvergenceReport]>,
    ) -> Result<Self, Failure> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| Failure::validation(format!("cannot read {}: {e}", p.display())))?;
                Ok(InputFile { path: p.clone(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        Ok(Manifest {
            build: Build {
                package: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                os: std::env::consts::OS,
                arch: std::env::consts::ARCH,
                debug_assertions: cfg!(debug_assertions),
            },
            config,
            config_sha256: sha256_hex(serde_json::to_string(config)?.as_bytes()),
            constants,
            constants_sha256: sha256_hex(serde_json::to_string(constants)?.as_bytes()),
            inputs,
            output: output.map(Path::to_path_buf),
            output_sha256: sha256_hex(body),
            convergence,
        })
    }
}

/// `out.csv` -> `out.csv.manifest.json`.
pub fn sidecar(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
