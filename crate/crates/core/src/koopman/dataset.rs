//! CSV interchange for clustered samples.
//!
//! Header `cluster_id,x0,..,x{n-1},u0,..,u{m-1},y0,..`; dimensions are read
//! from the header. One row per sample.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::bilinear::{Cluster, ClusteredDataset, Mode, Sample};
use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub m: usize,
    pub out_dim: usize,
    pub rows: Vec<(u64, Sample)>,
}

fn column_count(header: &csv::StringRecord, prefix: char) -> usize {
    header
        .iter()
        .filter(|h| h.starts_with(prefix) && h[1..].parse::<usize>().is_ok())
        .count()
}

impl Dataset {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
            .clone();
        let (n, m, out_dim) = (column_count(&header, 'x'), column_count(&header, 'u'), column_count(&header, 'y'));
        let expected: Vec<String> = std::iter::once("cluster_id".to_string())
            .chain((0..n).map(|i| format!("x{i}")))
            .chain((0..m).map(|i| format!("u{i}")))
            .chain((0..out_dim).map(|i| format!("y{i}")))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header '{}'", expected.join(",")),
            });
        }
        if n == 0 || out_dim == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: "need at least one state and one output column".into(),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let bad = |msg: String| Error::Parse { line, msg };
            let id: u64 = rec[0].parse().map_err(|_| bad(format!("invalid cluster id '{}'", &rec[0])))?;
            let mut vals = Vec::with_capacity(rec.len() - 1);
            for (c, field) in rec.iter().enumerate().skip(1) {
                let v: f64 = field.parse().map_err(|_| bad(format!("column {} is not a number: '{field}'", &header[c])))?;
                if !v.is_finite() {
                    return Err(bad(format!("column {} is not finite", &header[c])));
                }
                vals.push(v);
            }
            rows.push((
                id,
                Sample {
                    x: Vector::from_row_slice(&vals[..n]),
                    u: Vector::from_row_slice(&vals[n..n + m]),
                    y: Vector::from_row_slice(&vals[n + m..]),
                },
            ));
        }
        Ok(Self { n, m, out_dim, rows })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let header: Vec<String> = std::iter::once("cluster_id".to_string())
            .chain((0..self.n).map(|i| format!("x{i}")))
            .chain((0..self.m).map(|i| format!("u{i}")))
            .chain((0..self.out_dim).map(|i| format!("y{i}")))
            .collect();
        w.write_record(&header).map_err(io)?;
        for (id, s) in &self.rows {
            let rec: Vec<String> = std::iter::once(id.to_string())
                .chain(s.x.iter().chain(s.u.iter()).chain(s.y.iter()).map(|v| v.to_string()))
                .collect();
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// Groups rows by cluster id (ascending). Centers default to the mean
    /// sample state of each cluster; `centers` overrides them by position
    /// in id order. Clusters with fewer than `m + 1` samples are reported
    /// as undersampled.
    pub fn into_clustered(self, mode: Mode, centers: Option<&[Vector]>) -> Result<ClusteredDataset> {
        let m = self.m;
        let mut groups: BTreeMap<u64, Vec<Sample>> = BTreeMap::new();
        for (id, s) in self.rows {
            groups.entry(id).or_default().push(s);
        }
        if let Some(c) = centers {
            if c.len() != groups.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} centers for {} clusters",
                    c.len(),
                    groups.len()
                )));
            }
        }
        let mut clusters = Vec::new();
        let mut undersampled = Vec::new();
        for (pos, (_, samples)) in groups.into_iter().enumerate() {
            if samples.len() < m + 1 {
                undersampled.push(pos);
                continue;
            }
            let center = match centers {
                Some(c) => c[pos].clone(),
                None => samples.iter().fold(Vector::zeros(self.n), |acc, s| acc + &s.x) / samples.len() as f64,
            };
            let radius = samples.iter().fold(0.0_f64, |r, s| r.max((&s.x - &center).norm()));
            clusters.push(Cluster {
                center_index: pos,
                center,
                radius,
                samples,
            });
        }
        Ok(ClusteredDataset {
            mode,
            m,
            clusters,
            undersampled,
            unassigned: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "cluster_id,x0,x1,u0,y0,y1\n0,0,0,1,0.5,0\n0,0,0,-1,-0.5,0\n1,1,2,1,1.5,2\n";

    #[test]
    fn parses_dimensions_and_rows() {
        let ds = Dataset::read(CSV.as_bytes()).unwrap();
        assert_eq!((ds.n, ds.m, ds.out_dim), (2, 1, 2));
        assert_eq!(ds.rows.len(), 3);
        assert_eq!(ds.rows[2].0, 1);
        assert_eq!(ds.rows[2].1.y[1], 2.0);
    }

    #[test]
    fn round_trip() {
        let ds = Dataset::read(CSV.as_bytes()).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        assert_eq!(Dataset::read(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "cluster_id,x0,u0,y0\n0,1,2,3\n0,1,abc,3\n";
        match Dataset::read(bad.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("u0"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Dataset::read("id,x0\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn groups_by_id_with_centroids() {
        let data = Dataset::read(CSV.as_bytes()).unwrap().into_clustered(Mode::Operator, None).unwrap();
        assert_eq!(data.clusters.len(), 1);
        assert_eq!(data.undersampled, vec![1]);
        assert_eq!(data.clusters[0].center, Vector::zeros(2));
    }
}
