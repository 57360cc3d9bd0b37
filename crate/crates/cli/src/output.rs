use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::{CliError, Format, OUTPUT_DIR_ENV};

/// Numbers are written with 12 significant digits.
pub fn num(v: f64) -> String {
    nifrde::stability::format_sig(v)
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, sink: W, format: Format) -> Result<(), CliError> {
        let delimiter = match format {
            Format::Csv => b',',
            Format::Tsv => b'\t',
        };
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

/// Where a command's table goes.
pub enum Destination {
    Stdout,
    File(PathBuf),
}

impl Destination {
    pub fn resolve(explicit: Option<&Path>, command: &str, format: Format) -> Self {
        if let Some(p) = explicit {
            return Destination::File(p.to_path_buf());
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => {
                let ext = match format {
                    Format::Csv => "csv",
                    Format::Tsv => "tsv",
                };
                Destination::File(Path::new(&dir).join(format!("{command}.{ext}")))
            }
            _ => Destination::Stdout,
        }
    }

    pub fn emit(&self, table: &Table, format: Format) -> Result<(), CliError> {
        match self {
            Destination::Stdout => table.write_to(io::stdout().lock(), format),
            Destination::File(p) => {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                table.write_to(File::create(p)?, format)
            }
        }
    }
}
