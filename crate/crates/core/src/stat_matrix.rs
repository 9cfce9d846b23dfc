use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major matrix of statistic vectors, one row per simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatMatrix {
    labels: Vec<String>,
    data: Vec<f64>,
}

impl StatMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, data: Vec::new() }
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::new(labels);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cols(&self) -> usize {
        self.labels.len()
    }

    pub fn rows(&self) -> usize {
        if self.labels.is_empty() {
            0
        } else {
            self.data.len() / self.labels.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Appends all rows of `other`, which must share the labels.
    pub fn extend(&mut self, other: &StatMatrix) -> Result<()> {
        if other.labels != self.labels {
            return Err(Error::InvalidConfig("stat matrices have different terms".into()));
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let q = self.cols();
        &self.data[i * q..(i + 1) * q]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let q = self.cols();
        let mut m = vec![0.0; q];
        for r in self.iter_rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let l = self.rows().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= l);
        m
    }

    /// Sample covariance with divisor `L - 1`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let q = self.cols();
        let mean = self.mean();
        let mut c = vec![vec![0.0; q]; q];
        for r in self.iter_rows() {
            for a in 0..q {
                let da = r[a] - mean[a];
                for b in a..q {
                    c[a][b] += da * (r[b] - mean[b]);
                }
            }
        }
        let denom = (self.rows().max(2) - 1) as f64;
        for a in 0..q {
            for b in a..q {
                c[a][b] /= denom;
                c[b][a] = c[a][b];
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let m = StatMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 10.0]],
        )
        .unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.mean(), vec![3.0, 6.0]);
        let c = m.covariance();
        assert_eq!(c[0][0], 4.0);
        assert_eq!(c[0][1], 8.0);
        assert_eq!(c[1][1], 16.0);
        assert_eq!(m.column(1), vec![2.0, 6.0, 10.0]);
        let mut bad = m.clone();
        assert!(bad.push_row(&[1.0]).is_err());
    }
}
