use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};

pub const BOSTON_ROWS: usize = 506;
pub const BOSTON_TRAIN_ROWS: usize = 333;
const COLUMNS: usize = 14;

const DEFAULT_NAMES: [&str; COLUMNS] = [
    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT",
    "MEDV",
];

#[derive(Clone, Debug)]
pub struct BostonDataset {
    /// 506×13 attributes.
    pub features: DenseMatrix,
    /// Median value in thousands of dollars, as stored in the file.
    pub medv: DenseVector,
    pub feature_names: Vec<String>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Reads the 14-column table (13 attributes, then the median value in
/// thousands of dollars). A header row is detected automatically.
pub fn load_boston(path: &Path) -> Result<BostonDataset> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    BostonDataset::from_reader(file, path)
}

impl BostonDataset {
    pub fn from_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut names: Vec<String> = DEFAULT_NAMES.iter().map(|s| s.to_string()).collect();
        let mut values = Vec::with_capacity(BOSTON_ROWS * COLUMNS);
        let mut rows = 0;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if rec.len() != COLUMNS {
                return Err(schema(path, format!("line {} has {} columns, expected {COLUMNS}", line + 1, rec.len())));
            }
            let is_header = line == 0 && rec.iter().any(|f| f.parse::<f64>().is_err());
            if is_header {
                names = rec.iter().map(str::to_string).collect();
                continue;
            }
            for (col, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                    path: path.to_path_buf(),
                    row: line + 1,
                    col: col + 1,
                    detail: format!("`{field}`: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: line + 1,
                        col: col + 1,
                        detail: format!("non-finite value `{field}`"),
                    });
                }
                values.push(v);
            }
            rows += 1;
        }
        if rows != BOSTON_ROWS {
            return Err(schema(path, format!("{rows} data rows, expected {BOSTON_ROWS}")));
        }
        let table = DenseMatrix::new(rows, COLUMNS, values)?;
        let features = DenseMatrix::from_fn(rows, COLUMNS - 1, |i, j| table[(i, j)]);
        let medv = table.column(COLUMNS - 1);
        names.truncate(COLUMNS - 1);
        Ok(Self {
            features,
            medv,
            feature_names: names,
            train_indices: (0..BOSTON_TRAIN_ROWS).collect(),
            test_indices: (BOSTON_TRAIN_ROWS..BOSTON_ROWS).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Prices in dollars.
    pub fn prices(&self) -> DenseVector {
        self.medv.scaled(1000.0)
    }

    /// First `train` rows for training, the rest for testing.
    pub fn with_split(mut self, train: usize) -> Result<Self> {
        if train == 0 || train >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "training rows {train} must lie in 1..{}",
                self.len()
            )));
        }
        self.train_indices = (0..train).collect();
        self.test_indices = (train..self.len()).collect();
        Ok(self)
    }

    /// Explicit training rows; every other row is a test row.
    pub fn with_train_indices(mut self, mut train: Vec<usize>) -> Result<Self> {
        train.sort_unstable();
        train.dedup();
        if train.is_empty() || train.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidParameter("training indices out of range".into()));
        }
        self.test_indices = (0..self.len()).filter(|i| train.binary_search(i).is_err()).collect();
        self.train_indices = train;
        Ok(self)
    }

    /// `(attributes, prices in dollars)` of the training rows.
    pub fn train(&self) -> (DenseMatrix, DenseVector) {
        self.subset(&self.train_indices)
    }

    pub fn test(&self) -> (DenseMatrix, DenseVector) {
        self.subset(&self.test_indices)
    }

    fn subset(&self, idx: &[usize]) -> (DenseMatrix, DenseVector) {
        let prices = self.prices();
        (
            self.features.select_rows(idx),
            DenseVector::from_fn(idx.len(), |k| prices[idx[k]]),
        )
    }

    /// Writes the table back in the same 14-column layout, with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push("MEDV".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.medv[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn schema(path: &Path, detail: String) -> Error {
    Error::SchemaMismatch {
        path: PathBuf::from(path),
        detail,
    }
}
