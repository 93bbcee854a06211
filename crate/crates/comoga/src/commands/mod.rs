//! Subcommand bodies. Each returns the files it produces so callers decide
//! where (and whether) to write them.

pub mod metrics;
pub mod selftest;
pub mod tabular;
pub mod toy;

use std::path::Path;

use crate::error::Result;
use crate::formats::write_text;

/// Files produced by a command, as paths relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<()> {
        for (name, contents) in &self.files {
            write_text(&dir.join(name), contents)?;
        }
        Ok(())
    }
}
