//! JSON exchange format for complex matrices: `{rows, cols, re, im}` with
//! row-major real and imaginary parts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::InvalidArgument(format!(
                "matrix {}x{} needs {n} entries, got re={} im={}",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| c(r, i)),
        ))
    }
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&MatrixJson::from(m)).expect("matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<CMatrix> {
    serde_json::from_str::<MatrixJson>(s)?.to_matrix()
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMatrix> {
    matrix_from_json(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &CMatrix) -> Result<()> {
    fs::write(path, matrix_to_json(m) + "\n")?;
    Ok(())
}
