//! Result files: resumable CSV tables and JSON lines.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

/// Complete rows of an existing CSV table.
///
/// The header must equal `header`. A trailing partial row (from an
/// interrupted run) is dropped, and the file is rewritten without it.
pub fn read_resumable(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(invalid(format!(
            "{}: header does not match this schema; refusing to resume",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    let mut partial = false;
    for rec in reader.records() {
        match rec {
            Ok(r) if r.len() == header.len() => rows.push(r),
            _ => partial = true,
        }
    }
    if partial || !ends_with_newline(path)? {
        let tmp = path.with_extension("tmp");
        {
            let mut w = csv::Writer::from_path(&tmp)?;
            w.write_record(header)?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush().map_err(Error::io(&tmp))?;
        }
        fs::rename(&tmp, path).map_err(Error::io(path))?;
    }
    Ok(rows)
}

fn ends_with_newline(path: &Path) -> Result<bool> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    Ok(bytes.last().is_none_or(|b| *b == b'\n'))
}

/// Appending CSV writer that flushes after every row.
pub struct TableWriter {
    inner: csv::Writer<File>,
    path: PathBuf,
}

impl TableWriter {
    /// Opens `path` for appending when `resume` is set and the file exists,
    /// else truncates it and writes `header`.
    pub fn open(path: &Path, header: &[&str], resume: bool) -> Result<TableWriter> {
        let append = resume && path.exists();
        let file = if append {
            OpenOptions::new().append(true).open(path)
        } else {
            File::create(path)
        }
        .map_err(Error::io(path))?;
        let mut w = TableWriter {
            inner: csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(file),
            path: path.to_path_buf(),
        };
        if !append {
            w.write(header)?;
        }
        Ok(w)
    }

    pub fn write<I, F>(&mut self, row: I) -> Result<()>
    where
        I: IntoIterator<Item = F>,
        F: AsRef<[u8]>,
    {
        self.inner.write_record(row)?;
        self.inner.flush().map_err(Error::io(&self.path))
    }
}

/// Line-delimited JSON writer that flushes after every record.
pub struct JsonLines {
    inner: BufWriter<File>,
    path: PathBuf,
}

impl JsonLines {
    pub fn open(path: &Path, append: bool) -> Result<JsonLines> {
        let file = if append {
            OpenOptions::new().create(true).append(true).open(path)
        } else {
            File::create(path)
        }
        .map_err(Error::io(path))?;
        Ok(JsonLines {
            inner: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n").map_err(Error::io(&self.path))?;
        self.inner.flush().map_err(Error::io(&self.path))
    }
}

/// Writes `text` to `path` in one go.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::io(path))
}

/// Records of an existing JSON-lines file.
///
/// Parsing stops at the first line that does not decode (an interrupted
/// write); the file is truncated to the good prefix.
pub fn read_json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut records = Vec::new();
    let mut good = 0;
    for line in text.split_inclusive('\n') {
        if !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
        good += line.len();
    }
    if good != text.len() {
        fs::write(path, &text[..good]).map_err(Error::io(path))?;
    }
    Ok(records)
}
