//! Dense symmetric matrix storage and its on-disk formats.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::format::fmt_sig;

/// Dense real symmetric matrix.
///
/// Built from its upper triangle, which is mirrored into the lower one, so
/// `get(i, j) == get(j, i)` holds exactly. Values are never mutated after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Fills the upper triangle row by row (`i ≤ j`, `j` increasing) and
    /// mirrors it.
    pub fn from_upper(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    /// Builds a matrix from per-row upper-triangle segments, `rows[i]` holding
    /// entries `(i, i..n)`.
    pub(crate) fn from_upper_rows(n: usize, rows: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(rows.len(), n);
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            debug_assert_eq!(row.len(), n - i);
            for (k, v) in row.into_iter().enumerate() {
                let j = i + k;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_upper(n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of the full matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self + λ u uᵀ`.
    pub fn add_rank_one(&self, lambda: f64, u: &[f64]) -> Result<SymMatrix> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: u.len(),
            });
        }
        Ok(Self::from_upper(self.n, |i, j| {
            self.get(i, j) + lambda * u[i] * u[j]
        }))
    }

    /// Maps every upper-triangle entry through `f` and mirrors.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        Self::from_upper(self.n, |i, j| f(self.get(i, j)))
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Flat binary export: `n` as a little-endian `u64`, then the
    /// `n(n+1)/2` upper-triangle entries row by row as little-endian `f64`.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for i in 0..self.n {
            for &v in &self.row(i)[i..] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_binary(mut r: impl Read) -> Result<SymMatrix> {
        let mut word = [0u8; 8];
        let eof = |e: std::io::Error| Error::Format(format!("truncated matrix file: {e}"));
        r.read_exact(&mut word).map_err(eof)?;
        let n = usize::try_from(u64::from_le_bytes(word))
            .map_err(|_| Error::Format("matrix dimension overflows usize".into()))?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n - i);
            for _ in i..n {
                r.read_exact(&mut word).map_err(eof)?;
                row.push(f64::from_le_bytes(word));
            }
            rows.push(row);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(eof)? != 0 {
            return Err(Error::Format("trailing bytes after matrix data".into()));
        }
        Ok(Self::from_upper_rows(n, rows))
    }

    /// Full matrix as CSV, one row per line, no header.
    pub fn write_csv(&self, mut w: impl Write, precision: usize) -> std::io::Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|&v| fmt_sig(v, precision)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }

    pub fn read_csv(r: impl BufRead) -> Result<SymMatrix> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("bad matrix entry: {e}")))?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Format("matrix CSV is not square".into()));
        }
        Ok(Self::from_upper(n, |i, j| rows[i][j]))
    }
}
