//! JSON form of a dilation result, loadable for re-verification.

use lcm_dilation::check::Check;
use lcm_dilation::dilation::{DilationResult, WordMatrix};
use lcm_dilation::linalg::{CMat, C64};
use lcm_dilation::semigroup::Element;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "lcm-dilate/dilation-result/1";

/// Row-major matrix with entries as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl StoredMatrix {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        StoredMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix data has {} entries, expected {}×{}",
                self.data.len(),
                self.rows,
                self.cols
            ));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C64::new(re, im)
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredWord {
    pub word: Element,
    pub matrix: StoredMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredResult {
    pub format: String,
    pub instance_hash: String,
    pub depth: usize,
    pub h: usize,
    pub dim: usize,
    pub spectrum: Vec<f64>,
    pub embedding: StoredMatrix,
    pub representation: Vec<StoredMatrix>,
    pub isometries: Vec<StoredWord>,
    pub interiors: Vec<StoredMatrix>,
    pub residuals: Vec<Check>,
}

impl StoredResult {
    pub fn new(res: &DilationResult, instance_hash: &str) -> Self {
        StoredResult {
            format: FORMAT.to_string(),
            instance_hash: instance_hash.to_string(),
            depth: res.depth,
            h: res.h,
            dim: res.dim,
            spectrum: res.spectrum.clone(),
            embedding: StoredMatrix::from_matrix(&res.embedding),
            representation: res
                .representation
                .iter()
                .map(StoredMatrix::from_matrix)
                .collect(),
            isometries: res
                .isometries
                .iter()
                .map(|w| StoredWord {
                    word: w.word.clone(),
                    matrix: StoredMatrix::from_matrix(&w.matrix),
                })
                .collect(),
            interiors: res
                .interiors
                .iter()
                .map(StoredMatrix::from_matrix)
                .collect(),
            residuals: res.report.clone(),
        }
    }

    pub fn to_result(&self) -> Result<DilationResult, String> {
        if self.format != FORMAT {
            return Err(format!("unknown result format {:?}", self.format));
        }
        let check = |m: &CMat, rows: usize, cols: usize, what: &str| {
            if m.shape() == (rows, cols) {
                Ok(())
            } else {
                Err(format!(
                    "{what} has shape {:?}, expected ({rows}, {cols})",
                    m.shape()
                ))
            }
        };
        let embedding = self.embedding.to_matrix()?;
        check(&embedding, self.dim, self.h, "embedding")?;
        let mut representation = Vec::new();
        for m in &self.representation {
            let m = m.to_matrix()?;
            check(&m, self.dim, self.dim, "representation")?;
            representation.push(m);
        }
        let mut isometries = Vec::new();
        for w in &self.isometries {
            let m = w.matrix.to_matrix()?;
            check(&m, self.dim, self.dim, "isometry")?;
            isometries.push(WordMatrix {
                word: w.word.clone(),
                matrix: m,
            });
        }
        let mut interiors = Vec::new();
        for m in &self.interiors {
            let m = m.to_matrix()?;
            if m.nrows() != self.dim {
                return Err("interior basis has the wrong number of rows".into());
            }
            interiors.push(m);
        }
        if interiors.len() != self.depth + 1 {
            return Err(format!(
                "expected {} interior bases, found {}",
                self.depth + 1,
                interiors.len()
            ));
        }
        Ok(DilationResult {
            depth: self.depth,
            h: self.h,
            dim: self.dim,
            spectrum: self.spectrum.clone(),
            embedding,
            representation,
            isometries,
            interiors,
            report: self.residuals.clone(),
        })
    }
}
