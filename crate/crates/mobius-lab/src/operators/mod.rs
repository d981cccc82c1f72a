//! Truncated operators between diagonal-kernel spaces, in the orthonormal
//! bases e_n = zⁿ√b_n of domain and codomain.

mod assemble;
mod norm;
mod toeplitz;

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;

use crate::error::{shape, Result};
use crate::kernels::DiagonalKernel;
use crate::par;

pub use assemble::*;
pub use norm::*;
pub use toeplitz::ToeplitzApply;

/// Sparsity band: entry (m, n) can be nonzero only when m − n ≤ lower and
/// n − m ≤ upper. `None` means unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Band {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
}

impl Band {
    pub const FULL: Band = Band { lower: None, upper: None };
    pub const LOWER_TRIANGULAR: Band = Band { lower: None, upper: Some(0) };

    pub fn is_lower_triangular(&self) -> bool {
        self.upper == Some(0)
    }

    fn transpose(self) -> Band {
        Band { lower: self.upper, upper: self.lower }
    }

    fn then(self, first: Band) -> Band {
        let add = |a: Option<usize>, b: Option<usize>| Some(a? + b?);
        Band { lower: add(self.lower, first.lower), upper: add(self.upper, first.upper) }
    }

    /// Column range of row m that can hold nonzeros, within 0..cols.
    fn row_range(&self, m: usize, cols: usize) -> std::ops::Range<usize> {
        let lo = self.lower.map_or(0, |l| m.saturating_sub(l));
        let hi = self.upper.map_or(cols, |u| (m + u + 1).min(cols));
        lo.min(hi)..hi
    }

    /// Row range of column n that can hold nonzeros, within 0..rows.
    fn col_range(&self, n: usize, rows: usize) -> std::ops::Range<usize> {
        self.transpose().row_range(n, rows)
    }
}

#[derive(Clone, Debug)]
struct FastPath {
    toeplitz: Arc<ToeplitzApply>,
    adjoint: bool,
}

/// A finite section of an operator H(K_dom) → H(K_cod). `exactness` is the
/// number of leading columns whose stored entries coincide with the infinite
/// operator's compression; identity checks should only be asserted on the
/// leading exactness × exactness block.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    matrix: DMatrix<Complex64>,
    domain: DiagonalKernel,
    codomain: DiagonalKernel,
    exactness: usize,
    band: Band,
    fast: Option<FastPath>,
}

impl TruncatedOperator {
    pub fn new(matrix: DMatrix<Complex64>, domain: DiagonalKernel, codomain: DiagonalKernel, exactness: usize, band: Band) -> Self {
        let exactness = exactness.min(matrix.ncols());
        Self { matrix, domain, codomain, exactness, band, fast: None }
    }

    fn with_fast_path(mut self, toeplitz: ToeplitzApply) -> Self {
        self.fast = Some(FastPath { toeplitz: Arc::new(toeplitz), adjoint: false });
        self
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn domain(&self) -> &DiagonalKernel {
        &self.domain
    }

    pub fn codomain(&self) -> &DiagonalKernel {
        &self.codomain
    }

    pub fn n_dom(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_cod(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    /// Conjugate transpose, H(K_cod) → H(K_dom).
    pub fn adjoint(&self) -> TruncatedOperator {
        TruncatedOperator {
            matrix: self.matrix.adjoint(),
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            exactness: self.exactness.min(self.n_cod()),
            band: self.band.transpose(),
            fast: self.fast.as_ref().map(|f| FastPath { toeplitz: f.toeplitz.clone(), adjoint: !f.adjoint }),
        }
    }

    /// Composition self ∘ first. Exactness: min of the factors when the left
    /// factor is lower triangular (no truncated index feeds back), otherwise
    /// reduced by the right factor's lower bandwidth, or halved when that
    /// bandwidth is unbounded.
    pub fn compose(&self, first: &TruncatedOperator) -> Result<TruncatedOperator> {
        if first.n_cod() != self.n_dom() {
            return Err(shape(format!("cannot compose {}×{} after {}×{}", self.n_cod(), self.n_dom(), first.n_cod(), first.n_dom())));
        }
        if first.codomain != self.domain {
            return Err(shape(format!("kernel mismatch in composition: {} vs {}", first.codomain.label(), self.domain.label())));
        }
        let base = self.exactness.min(first.exactness);
        let exactness = if self.band.is_lower_triangular() {
            base
        } else {
            match first.band.lower {
                Some(bw) => base.saturating_sub(bw),
                None => base / 2,
            }
        };
        Ok(TruncatedOperator::new(
            &self.matrix * &first.matrix,
            first.domain.clone(),
            self.codomain.clone(),
            exactness,
            self.band.then(first.band),
        ))
    }

    fn check_same_shape(&self, other: &TruncatedOperator) -> Result<()> {
        if self.matrix.shape() != other.matrix.shape() {
            return Err(shape(format!("shapes differ: {:?} vs {:?}", self.matrix.shape(), other.matrix.shape())));
        }
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(shape("operators act between different spaces"));
        }
        Ok(())
    }

    fn combine(&self, other: &TruncatedOperator, sign: f64) -> Result<TruncatedOperator> {
        self.check_same_shape(other)?;
        let merge = |a: Option<usize>, b: Option<usize>| Some(a?.max(b?));
        Ok(TruncatedOperator::new(
            &self.matrix + &other.matrix * Complex64::new(sign, 0.0),
            self.domain.clone(),
            self.codomain.clone(),
            self.exactness.min(other.exactness),
            Band { lower: merge(self.band.lower, other.band.lower), upper: merge(self.band.upper, other.band.upper) },
        ))
    }

    pub fn add(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> TruncatedOperator {
        let mut out = TruncatedOperator::new(&self.matrix * c, self.domain.clone(), self.codomain.clone(), self.exactness, self.band);
        if c == Complex64::new(1.0, 0.0) {
            out.fast = self.fast.clone();
        }
        out
    }

    /// Leading k×k corner.
    pub fn block(&self, k: usize) -> DMatrix<Complex64> {
        let k_r = k.min(self.n_cod());
        let k_c = k.min(self.n_dom());
        self.matrix.view((0, 0), (k_r, k_c)).into_owned()
    }

    /// T x.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_dom());
        if let Some(f) = &self.fast {
            return if f.adjoint { f.toeplitz.apply_adjoint(x) } else { f.toeplitz.apply(x) };
        }
        self.apply_dense(x)
    }

    /// T* y.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.n_cod());
        if let Some(f) = &self.fast {
            return if f.adjoint { f.toeplitz.apply(y) } else { f.toeplitz.apply_adjoint(y) };
        }
        self.apply_adjoint_dense(y)
    }

    /// Dense T x, exploiting the band; rows are independent and run in parallel.
    pub fn apply_dense(&self, x: &[Complex64]) -> Vec<Complex64> {
        let rows = self.n_cod();
        let cols = self.n_dom();
        let t = self.matrix.transpose();
        par::map_range(rows, |m| {
            let row = t.column(m);
            self.band.row_range(m, cols).fold(Complex64::new(0.0, 0.0), |acc, n| acc + row[n] * x[n])
        })
    }

    /// Dense T* y, exploiting the band.
    pub fn apply_adjoint_dense(&self, y: &[Complex64]) -> Vec<Complex64> {
        let rows = self.n_cod();
        par::map_range(self.n_dom(), |n| {
            let col = self.matrix.column(n);
            self.band.col_range(n, rows).fold(Complex64::new(0.0, 0.0), |acc, m| acc + col[m].conj() * y[m])
        })
    }

    /// Write the matrix as little-endian f64 pairs (re, im) in row-major
    /// order to `path`, and a JSON sidecar to `path` + ".json".
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.n_cod() * self.n_dom() * 16);
        for m in 0..self.n_cod() {
            for n in 0..self.n_dom() {
                let v = self.matrix[(m, n)];
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
        let sidecar = json!({
            "N_dom": self.n_dom(),
            "N_cod": self.n_cod(),
            "domain_spec": self.domain.to_json(),
            "codomain_spec": self.codomain.to_json(),
            "exactness": self.exactness,
        });
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }
}

/// Read back a matrix written by [`TruncatedOperator::write_dump`].
pub fn read_dump(path: &Path, n_cod: usize, n_dom: usize) -> Result<DMatrix<Complex64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != n_cod * n_dom * 16 {
        return Err(shape(format!("dump has {} bytes, expected {}", bytes.len(), n_cod * n_dom * 16)));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("eight bytes"));
    Ok(DMatrix::from_fn(n_cod, n_dom, |m, n| {
        let k = 2 * (m * n_dom + n);
        Complex64::new(f(k), f(k + 1))
    }))
}

/// Spectral norm of a dense matrix by full SVD; used where an exact (not
/// lower-bound) norm of a modest block is wanted.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Residual norm of X·A − B·X on the leading block, and whether it is below tol.
pub fn verify_intertwining(
    x: &TruncatedOperator,
    a: &TruncatedOperator,
    b: &TruncatedOperator,
    block: usize,
    tol: f64,
) -> Result<(bool, f64)> {
    let lhs = x.compose(a)?;
    let rhs = b.compose(x)?;
    let limit = x.n_dom().min(x.n_cod()).min(a.n_dom()).min(b.n_cod());
    if block == 0 || 2 * block > limit {
        return Err(shape(format!("block {block} must be at most half the truncation {limit}")));
    }
    let r = spectral_norm(&(lhs.block(block) - rhs.block(block)));
    Ok((r < tol, r))
}
