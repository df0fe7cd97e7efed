//! Result tables, run reports and their on-disk form.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// One CSV file worth of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the {} header", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Shortest roundtrip representation, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub tag: String,
    /// The configuration as TOML.
    pub config: String,
    pub tables: Vec<Table>,
    /// Failed assertions, one line each.
    pub failures: Vec<String>,
    /// Free-form notes for the summary.
    pub notes: Vec<String>,
    pub timings: Vec<(String, Duration)>,
}

impl RunReport {
    pub fn new(tag: &str, config: String) -> Self {
        RunReport {
            tag: tag.to_string(),
            config,
            tables: Vec::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.tag);
        let _ = writeln!(s, "status: {}", if self.passed() { "PASS" } else { "FAIL" });
        for t in &self.tables {
            let _ = writeln!(s, "table {}.csv: {} rows", t.name, t.rows.len());
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        for f in &self.failures {
            let _ = writeln!(s, "failed: {f}");
        }
        for (what, d) in &self.timings {
            let _ = writeln!(s, "time {what}: {:.3} s", d.as_secs_f64());
        }
        let _ = writeln!(s, "\n[config]\n{}", self.config.trim_end());
        s
    }

    /// Write every table, `config.toml` and `summary.txt` into `dir`.
    /// Each file goes to a temporary sibling first and is renamed into place.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::new();
        let mut stage = |name: String, bytes: &[u8]| -> io::Result<()> {
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, bytes)?;
            staged.push((tmp, dir.join(name)));
            Ok(())
        };
        let result = (|| {
            for t in &self.tables {
                stage(format!("{}.csv", t.name), &t.to_csv()?)?;
            }
            stage("config.toml".into(), self.config.as_bytes())?;
            stage("summary.txt".into(), self.summary().as_bytes())
        })();
        if let Err(e) = result {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
            return Err(e);
        }
        let mut out = Vec::new();
        for (tmp, dest) in staged {
            fs::rename(&tmp, &dest)?;
            out.push(dest);
        }
        Ok(out)
    }
}
