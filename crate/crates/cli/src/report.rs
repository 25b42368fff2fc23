//! Versioned JSON report envelope and CLI failure kinds.

use std::io::Write;
use std::path::{Path, PathBuf};

use qwalk::Instance;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA: u32 = 1;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("property violation: {0}")]
    Property(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parameter(_) => 2,
            Failure::Property(_) => 3,
            Failure::Io(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<qwalk::Error> for Failure {
    fn from(e: qwalk::Error) -> Self {
        match e {
            qwalk::Error::Parameter(m) => Failure::Parameter(m),
            qwalk::Error::Domain(m) => Failure::Parameter(format!("invalid input: {m}")),
            qwalk::Error::Property(m) => Failure::Property(m),
            qwalk::Error::Io(e) => Failure::Io(e.to_string()),
            qwalk::Error::Json(e) => Failure::Io(format!("malformed JSON: {e}")),
            qwalk::Error::Numeric(m) => Failure::Other(format!("numeric error: {m}")),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Where a report's instance came from.
#[derive(Clone, Debug, Serialize)]
pub struct InputInfo {
    pub path: PathBuf,
    pub sha256: String,
}

/// Every JSON report shares this envelope. It holds no timestamps, so rerunning
/// the embedded configuration reproduces the file byte for byte.
#[derive(Debug, Serialize)]
pub struct Report<P: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub input: Option<InputInfo>,
    pub params: P,
    pub result: R,
}

impl<P: Serialize, R: Serialize> Report<P, R> {
    pub fn new(command: &'static str, seed: u64, input: Option<InputInfo>, params: P, result: R) -> Self {
        Self { schema: SCHEMA, command, version: env!("CARGO_PKG_VERSION"), seed, input, params, result }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and validates an instance file, returning it with its hash.
pub fn load_instance(path: &Path) -> CliResult<(Instance, InputInfo)> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::Io(format!("{}: not UTF-8", path.display())))?;
    let inst = Instance::from_json(&text)?;
    Ok((inst, InputInfo { path: path.to_path_buf(), sha256: sha256_hex(&bytes) }))
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
