//! Output directory writer and the run summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
    summary: Vec<String>,
    failures: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            summary: Vec::new(),
            failures: Vec::new(),
        })
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.text(name, &text)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    /// Records an asserted property of `anchor`; failures make the run exit
    /// with code 1.
    pub fn check(&mut self, ok: bool, anchor: &str, detail: impl Into<String>) {
        let d = detail.into();
        if ok {
            self.summary.push(format!("ok: {anchor} holds: {d}"));
        } else {
            let m = format!("{anchor} violated: {d}");
            self.summary.push(format!("FAILED: {m}"));
            self.failures.push(m);
        }
    }

    /// Writes `summary.txt`, prints it, and returns the failed assertions.
    pub fn finish(self) -> Result<Vec<String>, CliError> {
        let mut text = self.summary.join("\n");
        text.push('\n');
        fs::write(self.dir.join("summary.txt"), &text)?;
        print!("{text}");
        Ok(self.failures)
    }
}

/// Shortest round-trip formatting, stable across runs.
pub fn num(v: f64) -> String {
    format!("{v}")
}
