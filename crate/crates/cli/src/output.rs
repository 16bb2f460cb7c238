//! Dataset files: CSV with a `#` header block, a JSON manifest per run and
//! optional gnuplot scripts.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "ptt-1";

/// A CSV file being written. The header block is
///
/// ```text
/// # ptt-1 <kind>
/// # config <json>
/// # units <text>
/// ```
///
/// followed by the column row and the records.
pub struct Dataset {
    pub path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    rows: usize,
}

impl Dataset {
    pub fn create(
        path: &Path,
        kind: &str,
        config: &Value,
        units: &str,
        columns: &[&str],
    ) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# {SCHEMA} {kind}")?;
        writeln!(out, "# config {}", serde_json::to_string(config)?)?;
        writeln!(out, "# units {units}")?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(columns)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            rows: 0,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<FileEntry> {
        self.writer.flush()?;
        Ok(FileEntry {
            name: self
                .path
                .file_name()
                .unwrap()
                .to_string_lossy()
                .into_owned(),
            rows: self.rows,
        })
    }
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub generator: String,
    pub command: String,
    pub config: Value,
    pub files: Vec<FileEntry>,
    pub summary: Value,
}

impl Manifest {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            schema: SCHEMA,
            generator: format!("ptt {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config,
            files: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn write_script(dir: &Path, name: &str, body: &str) -> Result<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(FileEntry {
        name: name.to_string(),
        rows: 0,
    })
}

/// A dataset read back from disk.
pub struct Loaded {
    pub kind: String,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Loaded {
    pub fn column(&self, name: &str) -> Result<usize> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => Ok(i),
            None => bail!("missing column {name}"),
        }
    }

    pub fn config_f64(&self, key: &str) -> Result<f64> {
        self.config
            .get(key)
            .and_then(Value::as_f64)
            .with_context(|| format!("config has no number {key}"))
    }
}

pub fn load(path: &Path) -> Result<Loaded> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |tag: &str| -> Result<String> {
        let line = lines.next().context("truncated header")??;
        match line.strip_prefix(&format!("# {tag}")) {
            Some(rest) => Ok(rest.trim().to_string()),
            None => bail!("expected '# {tag}' header line, found {line:?}"),
        }
    };
    let kind = next(SCHEMA)?;
    let config: Value =
        serde_json::from_str(&next("config")?).context("config echo is not JSON")?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let columns = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Loaded {
        kind,
        config,
        columns,
        rows,
    })
}
