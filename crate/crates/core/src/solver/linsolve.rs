//! Sparse SPD solves through a supernodal Cholesky factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

use crate::error::{Error, Result};

/// Lower-triangle triplets (`row >= col`) of a symmetric matrix; duplicates
/// are summed.
#[derive(Debug, Clone, Default)]
pub struct LowerTriplets {
    pub n: usize,
    pub entries: Vec<Triplet<usize, usize, f64>>,
}

impl LowerTriplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Add `v` at `(i, j)`; entries above the diagonal are dropped, so a
    /// full symmetric block may be pushed as is.
    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if i >= j && v != 0.0 {
            self.entries.push(Triplet::new(i, j, v));
        }
    }

    pub fn diagonal_mean(&self) -> f64 {
        let mut d = vec![0.0; self.n];
        for t in &self.entries {
            if t.row == t.col {
                d[t.row] += t.val;
            }
        }
        if self.n == 0 {
            return 0.0;
        }
        d.iter().map(|v| v.abs()).sum::<f64>() / self.n as f64
    }
}

fn factor_solve(m: &LowerTriplets, shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let mut entries = m.entries.clone();
    if shift > 0.0 {
        entries.extend((0..m.n).map(|i| Triplet::new(i, i, shift)));
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(m.n, m.n, &entries).ok()?;
    let llt = a.sp_cholesky(Side::Lower).ok()?;
    let b = Col::<f64>::from_fn(m.n, |i| rhs[i]);
    let x = llt.solve(&b);
    let out: Vec<f64> = (0..m.n).map(|i| x[i]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Solve `A x = rhs`. When the factorization fails a diagonal shift
/// starting at `1e-8` times the mean diagonal is added and doubled until it
/// succeeds. Returns the solution and the shift used.
pub fn solve_spd(m: &LowerTriplets, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    if m.n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if let Some(x) = factor_solve(m, 0.0, rhs) {
        return Ok((x, 0.0));
    }
    let mut shift = 1e-8 * m.diagonal_mean().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if let Some(x) = factor_solve(m, shift, rhs) {
            return Ok((x, shift));
        }
        shift *= 2.0;
    }
    Err(Error::LinearSolve(format!(
        "matrix of size {} could not be factored",
        m.n
    )))
}
