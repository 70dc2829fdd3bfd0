use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const OUTPUT_ENV: &str = "DCHAOS_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "dchaos-out";

/// `--out`, then the environment, then the config, then [`DEFAULT_OUTPUT`].
pub fn resolve_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Like [`resolve_dir`] without the fallback.
pub fn explicit_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

/// Artifact sink writing each file to a temporary sibling first and
/// renaming it into place.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn new(root: PathBuf) -> Self {
        OutputDir {
            root,
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_bytes(&mut self, file: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        let path = self.root.join(file);
        let tmp = self.root.join(format!(".{file}.tmp{}", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        if let Err(e) = write() {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&path, e));
        }
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(file, text.as_bytes())
    }

    /// Single-line JSON, for bulk data such as symbol windows.
    pub fn write_json_compact<T: Serialize>(&mut self, file: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string(value)?;
        text.push('\n');
        self.write_bytes(file, text.as_bytes())
    }
}
