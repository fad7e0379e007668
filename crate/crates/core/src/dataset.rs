//! CSV dataset files.
//!
//! One functional datum per record. The header row lists the grid
//! abscissae; an optional leading non-numeric header cell (for example `y` or
//! `label`) marks a response column. Lines starting with `#` are comments.
//!
//! ```text
//! # written by metric-entropy-lab 0.1.0 seed=7 config=...
//! y,0,0.5,1
//! 0.31,0,0.2,0.9
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{Grid, SampledFunction};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub grid: Grid,
    pub points: Vec<SampledFunction>,
    /// Name and per-record values of the response column, if present.
    pub response: Option<(String, Vec<f64>)>,
}

impl Dataset {
    pub fn new(grid: Grid, points: Vec<SampledFunction>) -> Self {
        Self {
            grid,
            points,
            response: None,
        }
    }

    pub fn with_response(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                got: values.len(),
            });
        }
        self.response = Some((name.to_string(), values));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn response_values(&self) -> Option<&[f64]> {
        self.response.as_ref().map(|(_, v)| v.as_slice())
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(file)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| Error::EmptyInput("dataset has no header row".into()))??;
        let mut cells: Vec<&str> = header.iter().collect();
        let response_name = match cells.first() {
            Some(first) if first.parse::<f64>().is_err() => {
                let name = first.to_string();
                cells.remove(0);
                Some(name)
            }
            _ => None,
        };
        let abscissae = cells
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad grid abscissa `{c}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let grid = Grid::new(abscissae)?;
        let offset = usize::from(response_name.is_some());

        let mut points = Vec::new();
        let mut response = Vec::new();
        for (row, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != grid.len() + offset {
                return Err(Error::LengthMismatch {
                    expected: grid.len() + offset,
                    got: rec.len(),
                });
            }
            let nums = rec
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Domain(format!("record {row}: bad number `{c}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if offset == 1 {
                response.push(nums[0]);
            }
            points.push(SampledFunction::new(grid.clone(), nums[offset..].to_vec())?);
        }
        Ok(Self {
            grid,
            points,
            response: response_name.map(|n| (n, response)),
        })
    }

    /// Write the dataset, preceded by `comment` lines (each prefixed by `# `).
    pub fn write<W: Write>(&self, mut out: W, comment: &[String]) -> Result<()> {
        for line in comment {
            writeln!(out, "# {line}")?;
        }
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        let mut header = Vec::with_capacity(self.grid.len() + 1);
        if let Some((name, _)) = &self.response {
            header.push(name.clone());
        }
        header.extend(self.grid.abscissae().iter().map(|t| format_float(*t)));
        wtr.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut rec = Vec::with_capacity(header.len());
            if let Some((_, vals)) = &self.response {
                rec.push(format_float(vals[i]));
            }
            rec.extend(p.values().iter().map(|v| format_float(*v)));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips through `str::parse::<f64>`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_plain_and_labelled_files() {
        let plain = "# comment\n0,0.5,1\n1,2,3\n4,5,6\n";
        let ds = Dataset::read(plain.as_bytes()).unwrap();
        assert_eq!(ds.grid.abscissae(), &[0.0, 0.5, 1.0]);
        assert_eq!(ds.points[1].values(), &[4.0, 5.0, 6.0]);
        assert!(ds.response.is_none());

        let labelled = "label,0,1\n1,0.1,0.2\n0,0.3,0.4\n";
        let ds = Dataset::read(labelled.as_bytes()).unwrap();
        assert_eq!(ds.response_values().unwrap(), &[1.0, 0.0]);
        assert_eq!(ds.points[0].values(), &[0.1, 0.2]);
    }

    #[test]
    fn write_then_read_preserves_values() {
        let grid = Grid::uniform(4).unwrap();
        let pts = vec![
            SampledFunction::from_fn(grid.clone(), |t| t * t / 3.0).unwrap(),
            SampledFunction::from_fn(grid.clone(), |t| 0.1 + t).unwrap(),
        ];
        let ds = Dataset::new(grid, pts)
            .with_response("y", vec![0.7, -1e-9])
            .unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf, &["hello".into()]).unwrap();
        let back = Dataset::read(buf.as_slice()).unwrap();
        assert_eq!(back.points, ds.points);
        assert_eq!(back.response, ds.response);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let bad = "0,1\n1,2,3\n";
        assert!(Dataset::read(bad.as_bytes()).is_err());
    }
}
