use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;

use crate::Failure;

/// Directory used for outputs when `--out` is not given.
pub const OUT_DIR_ENV: &str = "CAUCHY_LAB_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// `--out` if given, else `$CAUCHY_LAB_OUT_DIR/<command>.<ext>`, else stdout.
pub fn open(
    out: Option<PathBuf>,
    command: &str,
    format: Format,
) -> Result<Box<dyn Write>, Failure> {
    let path = out.or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
    });
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| {
                    Failure::Config(format!("cannot create {}: {e}", dir.display()))
                })?;
            }
            let file = File::create(&p)
                .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}
