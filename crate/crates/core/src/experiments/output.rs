//! Run directories: `config.toml`, CSV tables, `summary.txt` and gnuplot
//! scripts. Each file starts with a `# ballstab-<kind> 1` header line.

use super::config::ExperimentConfig;
use crate::{Error, Result};
use serde::Serialize;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable naming the directory under which runs are created.
pub const RUN_ROOT_ENV: &str = "BALLSTAB_RUN_ROOT";

/// Format version written in every header line.
pub const FORMAT_VERSION: u32 = 1;

/// Output directory of one CLI invocation.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// `$BALLSTAB_RUN_ROOT/<name>-NNN` (root defaults to `./runs`), with the
    /// first free counter.
    pub fn create(name: &str) -> Result<Self> {
        let root = std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
        Self::create_in(&root, name)
    }

    pub fn create_in(root: &Path, name: &str) -> Result<Self> {
        fs::create_dir_all(root)?;
        for k in 0..10_000 {
            let path = root.join(format!("{name}-{k:03}"));
            match fs::create_dir(&path) {
                Ok(()) => return Ok(RunDir { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(Error::Internal(format!("no free run directory for {name} under {}", root.display())))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_config(&self, cfg: &ExperimentConfig) -> Result<()> {
        let text = format!("# ballstab-config {FORMAT_VERSION}\n{}", cfg.to_toml()?);
        fs::write(self.file("config.toml"), text)?;
        Ok(())
    }

    /// `name.csv` with a header comment line, then a column header row.
    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.file(&format!("{name}.csv"));
        let mut out = format!("# ballstab-csv {FORMAT_VERSION} {name}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        fs::write(&path, out)?;
        Ok(path)
    }

    /// Flat `key = value` record in `summary.txt`.
    pub fn write_summary(&self, summary: &Summary) -> Result<()> {
        fs::write(self.file("summary.txt"), summary.render())?;
        Ok(())
    }

    /// gnuplot script `name.gp` plotting columns of `csv` (1-based).
    pub fn write_plot(&self, name: &str, csv: &str, x: usize, ys: &[usize], logscale: bool) -> Result<()> {
        let mut s = format!("# ballstab-plot {FORMAT_VERSION}\n");
        s += "set datafile separator ','\nset key autotitle columnhead\n";
        if logscale {
            s += "set logscale xy\n";
        }
        s += &format!("set terminal pngcairo size 900,600\nset output '{name}.png'\nplot ");
        let parts: Vec<String> = ys
            .iter()
            .map(|y| format!("'{csv}.csv' using {x}:(abs(${y})) with linespoints"))
            .collect();
        s += &parts.join(", \\\n     ");
        s.push('\n');
        fs::write(self.file(&format!("{name}.gp")), s)?;
        Ok(())
    }
}

/// Ordered key–value summary of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new(kind: &str) -> Self {
        let mut s = Summary::default();
        s.push("experiment", kind);
        s
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = format!("# ballstab-summary {FORMAT_VERSION}\n");
        for (k, v) in &self.entries {
            s += &format!("{k} = {v}\n");
        }
        s
    }

    /// Inverse of [`Summary::render`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == format!("# ballstab-summary {FORMAT_VERSION}") => {}
            other => return Err(Error::Parse(format!("bad summary header {other:?}"))),
        }
        let mut s = Summary::default();
        for l in lines.filter(|l| !l.trim().is_empty()) {
            let (k, v) = l.split_once(" = ").ok_or_else(|| Error::Parse(format!("bad summary line {l:?}")))?;
            s.entries.push((k.to_string(), v.to_string()));
        }
        Ok(s)
    }
}

/// Read a CSV written by [`RunDir::write_csv`] back into rows of strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let body = match text.split_once('\n') {
        Some((h, rest)) if h.starts_with("# ballstab-csv ") => rest,
        _ => return Err(Error::Parse(format!("{} lacks the ballstab-csv header", path.display()))),
    };
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: usize,
        b: f64,
    }

    #[test]
    fn files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create_in(dir.path(), "test").unwrap();
        let run2 = RunDir::create_in(dir.path(), "test").unwrap();
        assert_ne!(run.path, run2.path);
        let p = run.write_csv("t", &[Row { a: 1, b: 0.5 }, Row { a: 2, b: -1e-300 }]).unwrap();
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(rows[1][1].parse::<f64>().unwrap(), -1e-300);
        let mut s = Summary::new("x");
        s.push("slope", 2.5).push("pass", true);
        run.write_summary(&s).unwrap();
        let back = Summary::parse(&fs::read_to_string(run.file("summary.txt")).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get("pass"), Some("true"));
        run.write_plot("t", "t", 1, &[2], true).unwrap();
        assert!(fs::read_to_string(run.file("t.gp")).unwrap().starts_with("# ballstab-plot 1"));
    }
}
