//! Row-flushed CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// CSV table flushed after every row, so a failed run keeps what it has.
pub struct Table {
    out: BufWriter<File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &str) -> Result<Table, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut t = Table { out: BufWriter::new(File::create(dir.join(name))?) };
        t.row(header)?;
        Ok(t)
    }

    pub fn row(&mut self, line: &str) -> Result<(), CliError> {
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    std::fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

/// Fixed scientific format for every float column.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}
