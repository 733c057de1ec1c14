//! Multivariate time series container and its CSV representation.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// `N` samples of `K` observed variables, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl MultivariateSeries {
    /// Builds a series from per-variable columns. All columns must share a
    /// length of at least one, there must be at least two of them, and every
    /// value must be finite.
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::InvalidValue(format!(
                "need at least 2 variables, got {}",
                columns.len()
            )));
        }
        if labels.len() != columns.len() {
            return Err(Error::InvalidValue(format!(
                "{} labels for {} columns",
                labels.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::EmptyInput("series has no samples".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidValue(format!(
                    "column {} has {} samples, expected {}",
                    labels[j],
                    col.len(),
                    n
                )));
            }
            if let Some(t) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidValue(format!(
                    "non-finite value at row {}, column {}",
                    t + 1,
                    labels[j]
                )));
            }
        }
        Ok(Self { columns, labels })
    }

    /// Same as [`MultivariateSeries::new`] with labels `X1..XK`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let labels = default_labels(columns.len());
        Self::new(columns, labels)
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Applies `f` to every column, keeping labels.
    pub fn map_columns<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| f(j, c))
            .collect();
        Self::new(columns, self.labels.clone())
    }

    /// Reads a CSV with a header row of labels and one row per time step.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut columns = vec![Vec::new(); labels.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            // row 1 is the header
            let line = row + 2;
            if record.len() != labels.len() {
                return Err(Error::InvalidValue(format!(
                    "row {line}: {} fields, expected {}",
                    record.len(),
                    labels.len()
                )));
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidValue(format!(
                        "row {line}, column {}: cannot parse {field:?}",
                        labels[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidValue(format!(
                        "row {line}, column {}: non-finite value {field:?}",
                        labels[j]
                    )));
                }
                columns[j].push(v);
            }
        }
        Self::new(columns, labels)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.labels)?;
        let mut row = Vec::with_capacity(self.num_vars());
        for t in 0..self.len() {
            row.clear();
            row.extend(self.columns.iter().map(|c| format!("{:?}", c[t])));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("X{i}")).collect()
}

/// Rescales a column to zero mean and unit variance. Constant columns are
/// only centered.
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 0.0 {
        x.iter().map(|v| (v - mean) / sd).collect()
    } else {
        x.iter().map(|v| v - mean).collect()
    }
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let s = MultivariateSeries::from_columns(vec![vec![1.0, 2.5, -3.0], vec![0.1, 0.2, 0.3]])
            .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = MultivariateSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn csv_rejects_nan_with_location() {
        let text = "a,b\n1.0,2.0\n3.0,NaN\n";
        let err = MultivariateSeries::read_csv(text.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "{msg}");
        assert!(msg.contains("column b"), "{msg}");
    }

    #[test]
    fn csv_rejects_inf_and_garbage() {
        assert!(MultivariateSeries::read_csv("a,b\ninf,1\n".as_bytes()).is_err());
        assert!(MultivariateSeries::read_csv("a,b\n1,2,3\n".as_bytes()).is_err());
        assert!(MultivariateSeries::read_csv("a,b\n1;5,2\n".as_bytes()).is_err());
    }

    #[test]
    fn needs_two_variables() {
        assert!(MultivariateSeries::from_columns(vec![vec![1.0]]).is_err());
        assert!(MultivariateSeries::from_columns(vec![vec![], vec![]]).is_err());
    }
}
