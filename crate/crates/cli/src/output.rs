//! CSV artifact writing: `#`-prefixed metadata header followed by the body,
//! sent to stdout or to a file resolved against `$CASCADE_OUTPUT_DIR`.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::OUTPUT_DIR_ENV;

/// Accumulates the `# key: value` header lines of one artifact.
pub struct MetaWriter {
    lines: Vec<String>,
}

impl MetaWriter {
    pub fn new(command: &str) -> Self {
        let mut meta = Self { lines: Vec::new() };
        meta.field("command", command);
        meta.field("version", env!("CARGO_PKG_VERSION"));
        meta
    }

    pub fn field(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("# {key}: {value}"));
    }

    fn header(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

/// Writes header + body to `path`, or to stdout when `path` is `None`.
pub fn write_artifact(path: Option<&Path>, meta: &MetaWriter, body: &str) -> std::io::Result<()> {
    let content = format!("{}{}", meta.header(), body);
    match path {
        None => std::io::stdout().write_all(content.as_bytes()),
        Some(p) => {
            let full = resolve(p);
            if let Some(parent) = full.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(full, content)
        }
    }
}
