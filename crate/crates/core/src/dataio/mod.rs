//! CSV input and output, covariance estimation and data transforms.

mod model;
pub mod svg;

pub use model::{
    center_rows, estimate_model, optimal_transform, EstimatedModel, EIGEN_FLOOR_FRACTION,
};

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::simulate::{ExperimentRow, NormRow};

/// Samples in rows, features in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
    column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: Matrix, column_names: Option<Vec<String>>) -> Result<Self> {
        if let Some(names) = &column_names {
            if names.len() != values.cols() {
                return Err(Error::LengthMismatch {
                    what: "column names",
                    got: names.len(),
                    expected: values.cols(),
                });
            }
        }
        if let Some(i) = values.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!(
                "entry ({}, {}) is not finite",
                i / values.cols(),
                i % values.cols()
            )));
        }
        Ok(Self {
            values,
            column_names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, None)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Column names, or `x1, x2, …` when the input had no header.
    pub fn header(&self) -> Vec<String> {
        match &self.column_names {
            Some(names) => names.clone(),
            None => (1..=self.cols()).map(|j| format!("x{j}")).collect(),
        }
    }
}

/// Reads a comma-separated numeric table from a file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    read_csv(File::open(path)?)
}

/// Reads a comma-separated numeric table.
///
/// Lines starting with `#` are skipped. The first row is taken as a header
/// when any of its cells fails to parse as a number.
pub fn read_csv<R: Read>(reader: R) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names = None;
    let mut width = None;
    let mut data = Vec::new();
    let mut nrows = 0;
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if k == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            names = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                line,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            data.push(parse_cell(cell).ok_or_else(|| Error::NonNumeric {
                line,
                column: j + 1,
                value: cell.to_owned(),
            })?);
        }
        nrows += 1;
    }
    if nrows == 0 {
        return Err(Error::Empty("no numeric rows in CSV input".into()));
    }
    DataMatrix::new(Matrix::from_vec(nrows, width.unwrap_or(0), data)?, names)
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a list of numbers stored as a single row or a single column.
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let data = load_csv(path)?;
    if data.rows() == 1 || data.cols() == 1 {
        Ok(data.into_values().as_slice().to_vec())
    } else {
        Err(Error::domain(format!(
            "expected a single row or column of numbers, got {}x{}",
            data.rows(),
            data.cols()
        )))
    }
}

/// Shortest decimal that parses back to the same `f64`. Very small and very
/// large magnitudes use exponent notation.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Writes a header row then one record per row.
pub fn write_table<W, S, I, R>(out: W, header: &[S], rows: I) -> Result<()>
where
    W: Write,
    S: AsRef<str>,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.iter().map(AsRef::as_ref))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a data matrix with its header.
pub fn write_csv<W: Write>(out: W, data: &DataMatrix) -> Result<()> {
    write_table(
        out,
        &data.header(),
        data.values()
            .row_iter()
            .map(|r| r.iter().map(|&x| format_f64(x)).collect::<Vec<_>>()),
    )
}

pub const EXPERIMENT_HEADER: [&str; 9] = [
    "dimension",
    "spectrum_index",
    "repeat",
    "theory_mean",
    "empirical_mean",
    "theory_variance",
    "empirical_variance",
    "num_pairs",
    "seed",
];

pub fn write_experiment_rows<W: Write>(out: W, rows: &[ExperimentRow]) -> Result<()> {
    write_table(
        out,
        &EXPERIMENT_HEADER,
        rows.iter().map(|r| {
            vec![
                r.dimension.to_string(),
                r.spectrum_index.to_string(),
                r.repeat.to_string(),
                format_f64(r.theory_mean),
                format_f64(r.empirical_mean),
                format_f64(r.theory_variance),
                format_f64(r.empirical_variance),
                r.num_pairs.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

pub const NORM_HEADER: [&str; 9] = [
    "dimension",
    "draw",
    "jensen_bound",
    "mean_norm",
    "sd_norm",
    "ratio_to_bound",
    "sd_over_mean",
    "num_vectors",
    "seed",
];

pub fn write_norm_rows<W: Write>(out: W, rows: &[NormRow]) -> Result<()> {
    write_table(
        out,
        &NORM_HEADER,
        rows.iter().map(|r| {
            vec![
                r.dimension.to_string(),
                r.draw.to_string(),
                format_f64(r.jensen_bound),
                format_f64(r.mean_norm),
                format_f64(r.sd_norm),
                format_f64(r.ratio_to_bound),
                format_f64(r.sd_over_mean),
                r.num_vectors.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<DataMatrix> {
        read_csv(s.as_bytes())
    }

    #[test]
    fn plain_numbers() {
        let d = parse("1,2\n3,4\n").unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 2));
        assert_eq!(d.values().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(d.column_names().is_none());
    }

    #[test]
    fn header_and_comments() {
        let d = parse("# note\na,b\n1,2\n").unwrap();
        assert_eq!((d.rows(), d.cols()), (1, 2));
        assert_eq!(d.column_names().unwrap(), ["a", "b"]);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse("1,2\n3\n").unwrap_err();
        assert!(err.to_string().starts_with("ragged row at line 2"), "{err}");
    }

    #[test]
    fn bad_cell_reports_position() {
        match parse("1,2\n3,x\n") {
            Err(Error::NonNumeric {
                line,
                column,
                value,
            }) => {
                assert_eq!((line, column, value.as_str()), (2, 2, "x"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1,nan\n"), Err(Error::NonNumeric { .. })));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse(""), Err(Error::Empty(_))));
        assert!(matches!(parse("# only\n"), Err(Error::Empty(_))));
        assert!(matches!(parse("a,b\n"), Err(Error::Empty(_))));
    }

    #[test]
    fn float_format() {
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(0.001), "0.001");
        assert_eq!(format_f64(-2.5), "-2.5");
        assert_eq!(format_f64(1e-300), "1e-300");
        assert_eq!(format_f64(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_f64(1e20), "1e20");
    }

    #[test]
    fn round_trip() {
        let d =
            DataMatrix::from_rows(&[vec![0.1, -1e-7, 3.0], vec![1e300, 2.0 / 3.0, -0.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &d).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.values(), d.values());
        assert_eq!(back.column_names().unwrap(), ["x1", "x2", "x3"]);
    }
}
