use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliResult;

/// Where reports go: files in a directory, or the primary report on stdout.
pub struct Output {
    dir: Option<PathBuf>,
    stdout: Box<dyn Write>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, stdout: Box<dyn Write>) -> Self {
        Output {
            dir,
            stdout,
        }
    }

    /// Emits the command's main report: written to `name` under the output
    /// directory, or printed.
    pub fn primary(&mut self, name: &str, contents: &str) -> CliResult<()> {
        match &self.dir {
            Some(dir) => {
                write_atomically(dir, name, contents)
            }
            None => {
                self.stdout.write_all(contents.as_bytes())?;
                if !contents.ends_with('\n') {
                    self.stdout.write_all(b"\n")?;
                }
                Ok(())
            }
        }
    }

    /// Emits a supporting report; only written when an output directory is
    /// set.
    pub fn secondary(&mut self, name: &str, contents: &str) -> CliResult<()> {
        if let Some(dir) = &self.dir {
            write_atomically(dir, name, contents)?;
        }
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn write_atomically(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let staging = dir.join(format!(".{name}.{}.partial", std::process::id()));
    {
        let mut file = fs::File::create(&staging)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&staging, &target)?;
    Ok(())
}
