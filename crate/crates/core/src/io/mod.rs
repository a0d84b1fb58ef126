//! Configuration ingestion, CSV tables and run manifests.

pub mod config;
pub mod table;

use std::path::Path;

use thiserror::Error;

pub use config::{parse_config, parse_config_str, FileConfig, RunConfig, PRESETS};
pub use table::{FileEntry, OutputDir, RunManifest, Table};

/// Problems with a configuration document. All map to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("{}{line}:{column}: {message}", path.as_deref().map(|p| format!("{p}:")).unwrap_or_default())]
    Parse {
        path: Option<String>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown experiment preset `{0}` (expected one of {list})", list = PRESETS.join(", "))]
    UnknownPreset(String),

    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

impl ConfigError {
    fn parse(text: &str, err: &toml::de::Error) -> Self {
        let (line, column) = err.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse {
            path: None,
            line,
            column,
            message: err.message().trim().to_string(),
        }
    }

    fn with_path(self, p: &Path) -> Self {
        match self {
            ConfigError::Parse {
                line,
                column,
                message,
                ..
            } => ConfigError::Parse {
                path: Some(p.display().to_string()),
                line,
                column,
                message,
            },
            other => other,
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Failures while writing outputs. All map to exit code 1.
#[derive(Debug, Error)]
pub enum OutputError {
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("csv error on `{path}`: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("table `{table}` row {row} has {got} fields, header has {expected}")]
    Schema {
        table: String,
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}
