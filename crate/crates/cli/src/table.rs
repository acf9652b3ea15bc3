//! Numeric CSV tables: '.' decimals, LF line endings, header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

/// Header and numeric rows of a CSV file.
#[derive(Debug)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    /// Indices of the columns named `{prefix}0, {prefix}1, ..` in order.
    pub fn prefixed(&self, prefix: &str) -> Vec<usize> {
        (0..)
            .map_while(|i| {
                let name = format!("{prefix}{i}");
                self.header.iter().position(|h| *h == name)
            })
            .collect()
    }

    pub fn columns(&self, row: usize, cols: &[usize]) -> Vec<f64> {
        cols.iter().map(|&c| self.rows[row][c]).collect()
    }
}

pub fn read_numeric(path: &Path) -> anyhow::Result<NumericTable> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .with_context(|| format!("{}: line 1: unreadable header", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => bail!("{}: line {line}: column {} is not a finite number: '{field}'", path.display(), header[c]),
            }
        }
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}

pub fn create(dir: &Path, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(f)))
}

pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> anyhow::Result<PathBuf> {
    let (path, f) = create(dir, name)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(f);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> anyhow::Result<PathBuf> {
    let (path, mut f) = create(dir, name)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Names `{prefix}0..{prefix}{n-1}`.
pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_reports_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(
            dir.path(),
            "t.csv",
            &names("u", 2),
            &[vec!["1".into(), "2.5".into()], vec!["-0.5".into(), "1e-3".into()]],
        )
        .unwrap();
        let t = read_numeric(&p).unwrap();
        assert_eq!(t.prefixed("u"), vec![0, 1]);
        assert_eq!(t.rows[1], vec![-0.5, 1e-3]);

        std::fs::write(&p, "u0,u1\n1,2\n3,nan\n").unwrap();
        let err = read_numeric(&p).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("u1"), "{err}");
    }
}
