use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CqedError, Result};

/// CSV file with a leading `#` metadata line followed by a header row.
pub struct CsvFile {
    name: String,
    writer: csv::Writer<BufWriter<File>>,
    rows: usize,
}

fn csv_error(e: csv::Error) -> CqedError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CqedError::Io(io),
        other => CqedError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, metadata: &str, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(dir.join(name))?);
        writeln!(out, "# {metadata}")?;
        let mut writer = csv::WriterBuilder::new().from_writer(out);
        writer.write_record(header).map_err(csv_error)?;
        Ok(Self {
            name: name.to_string(),
            writer,
            rows: 0,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_error)?;
        self.rows += 1;
        Ok(())
    }

    /// Flush and return `(name, data rows)`.
    pub fn finish(mut self) -> Result<(String, usize)> {
        self.writer.flush()?;
        Ok((self.name, self.rows))
    }
}

/// Files written by one run.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<(String, usize)>,
}

impl Manifest {
    pub fn add(&mut self, entry: (String, usize)) {
        self.entries.push(entry);
    }

    pub fn paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.entries.iter().map(|(n, _)| dir.join(n)).collect()
    }
}

/// Shortest round-trip representation, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}
