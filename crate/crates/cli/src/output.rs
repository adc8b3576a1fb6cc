use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Format;
use crate::Usage;

/// Where results go: files under `--out`, or stdout.
pub struct Output {
    dir: Option<PathBuf>,
    format: Format,
}

impl Output {
    /// Creates the output directory and checks that it is writable.
    pub fn prepare(dir: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(dir) = &dir {
            fs::create_dir_all(dir)
                .map_err(|e| Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
            let probe = dir.join(".bdou-write-check");
            fs::write(&probe, b"")
                .map_err(|e| Usage(format!("output directory {} is not writable: {e}", dir.display())))?;
            fs::remove_file(&probe).ok();
        }
        Ok(Self { dir, format })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// Writes `<name>.csv` or `<name>.json`, or prints the same content.
    pub fn emit<T: Serialize + ?Sized>(&self, name: &str, csv: impl FnOnce() -> String, json: &T) -> Result<()> {
        let text = match self.format {
            Format::Csv => csv(),
            Format::Json => to_json(json),
        };
        match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{name}.{}", self.format.extension()));
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => print(&text),
        }
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

pub fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
