//! O(N log N) application of diagonally scaled lower-triangular Toeplitz
//! matrices, the structure of every multiplication operator
//! M_ψ: e_n ↦ Σ_m ψ_{m−n} √(b_n/b_m) e_m.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// y = diag(row_scale) · T_ψ · diag(col_scale) · x, with T_ψ[m][n] = ψ_{m−n}
/// for m ≥ n, of shape rows × cols.
#[derive(Clone)]
pub struct ToeplitzApply {
    rows: usize,
    cols: usize,
    len: usize,
    symbol_hat: Vec<Complex64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ToeplitzApply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ToeplitzApply({}×{}, fft {})", self.rows, self.cols, self.len)
    }
}

impl ToeplitzApply {
    pub fn new(symbol: &[Complex64], row_scale: Vec<f64>, col_scale: Vec<f64>) -> Self {
        let (rows, cols) = (row_scale.len(), col_scale.len());
        let len = (rows + cols).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut symbol_hat = vec![Complex64::new(0.0, 0.0); len];
        for (k, s) in symbol.iter().take(rows).enumerate() {
            symbol_hat[k] = *s;
        }
        forward.process(&mut symbol_hat);
        Self { rows, cols, len, symbol_hat, row_scale, col_scale, forward, inverse }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for n in 0..self.cols {
            buf[n] = x[n] * self.col_scale[n];
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol_hat) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.len as f64;
        (0..self.rows).map(|m| buf[m] * (self.row_scale[m] * norm)).collect()
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for m in 0..self.rows {
            buf[m] = y[m] * self.row_scale[m];
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol_hat) {
            *b *= s.conj();
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.len as f64;
        (0..self.cols).map(|n| buf[n] * (self.col_scale[n] * norm)).collect()
    }
}
