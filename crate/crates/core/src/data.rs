//! Response/covariate container with an explicit missingness mask, plus CSV
//! ingestion.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::path::Path;

/// Row-major `n × p` boolean matrix; `true` marks a missing covariate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl MissingMask {
    pub fn none(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cells: vec![false; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                cells.push(f(i, j));
            }
        }
        Self { rows, cols, cells }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, missing: bool) {
        self.cells[i * self.cols + j] = missing;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    /// Column indices missing in row `i`, ascending.
    pub fn missing_in_row(&self, i: usize) -> Vec<usize> {
        self.row(i).iter().enumerate().filter_map(|(j, &m)| m.then_some(j)).collect()
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.cells.len() as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&m| m)
    }

    pub fn observed_in_column(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| !self.is_missing(i, j)).count()
    }
}

/// Response vector and covariate matrix. Masked covariate cells hold NaN
/// until an imputation fills them.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    mask: MissingMask,
    names: Vec<String>,
    centered: bool,
}

impl Dataset {
    pub fn new(y: DVector<f64>, mut x: DMatrix<f64>, mask: MissingMask) -> Result<Self> {
        let (n, p) = x.shape();
        if mask.nrows() != n || mask.ncols() != p {
            return Err(Error::Dimension(format!(
                "mask is {}x{} but X is {n}x{p}",
                mask.nrows(),
                mask.ncols()
            )));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!("y has length {} but X has {n} rows", y.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("response is missing or non-finite at row {i}")));
        }
        for i in 0..n {
            for j in 0..p {
                if mask.is_missing(i, j) {
                    x[(i, j)] = f64::NAN;
                } else if !x[(i, j)].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "observed covariate ({i}, {j}) is not finite"
                    )));
                }
            }
        }
        let names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        Ok(Self { y, x, mask, names, centered: false })
    }

    pub fn complete(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let mask = MissingMask::none(x.nrows(), x.ncols());
        Self::new(y, x, mask)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Dimension(format!(
                "{} column names for {} covariates",
                names.len(),
                self.p()
            )));
        }
        self.names = names;
        Ok(self)
    }

    /// Internal constructor for already-validated imputed/standardized data.
    pub(crate) fn from_imputed(
        y: DVector<f64>,
        x: DMatrix<f64>,
        mask: MissingMask,
        names: Vec<String>,
        centered: bool,
    ) -> Self {
        Self { y, x, mask, names, centered }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn mask(&self) -> &MissingMask {
        &self.mask
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Whether `y` has been shifted to mean zero.
    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Observed value of cell `(i, j)`, `None` when masked.
    pub fn observed(&self, i: usize, j: usize) -> Option<f64> {
        (!self.mask.is_missing(i, j)).then(|| self.x[(i, j)])
    }

    /// Loads a CSV file whose header names the columns; `response` selects
    /// the response column and every other column becomes a covariate.
    pub fn from_csv(path: impl AsRef<Path>, response: &str) -> Result<Self> {
        let table = Table::read(path)?;
        table.into_dataset(response)
    }
}

/// Numeric CSV table with optional cells (`""` or `NA` are missing).
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers.is_empty() {
            return Err(Error::InvalidInput("CSV has no header".into()));
        }
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(j, cell)| parse_cell(cell).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "data row {}, column `{}`: cannot parse `{cell}` as a number",
                        line + 1,
                        headers[j]
                    ))
                }))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn into_dataset(self, response: &str) -> Result<Dataset> {
        let r = self
            .column_index(response)
            .ok_or_else(|| Error::Schema(format!("response column `{response}` not found")))?;
        let n = self.rows.len();
        let cov: Vec<usize> = (0..self.headers.len()).filter(|&j| j != r).collect();
        let p = cov.len();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!("need at least one row and one covariate (got {n}x{p})")));
        }
        let mut y = DVector::zeros(n);
        let mut x = DMatrix::from_element(n, p, f64::NAN);
        let mut mask = MissingMask::none(n, p);
        for (i, row) in self.rows.iter().enumerate() {
            y[i] = row[r].ok_or_else(|| Error::InvalidInput(format!("response is missing at data row {}", i + 1)))?;
            for (k, &j) in cov.iter().enumerate() {
                match row[j] {
                    Some(v) => x[(i, k)] = v,
                    None => mask.set(i, k, true),
                }
            }
        }
        let names = cov.iter().map(|&j| self.headers[j].clone()).collect();
        Dataset::new(y, x, mask)?.with_names(names)
    }
}

fn parse_cell(cell: &str) -> Option<Option<f64>> {
    if cell.is_empty() || cell == "NA" {
        return Some(None);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
}
