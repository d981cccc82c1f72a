//! Asymptotic trend heuristics. Nothing here produces certificates: callers
//! use these fits only when no closed form is available, and report the fitted
//! numbers as evidence.

use nalgebra::{DMatrix, DVector};

/// Threshold on fitted rates separating growth/decay from boundedness.
pub const TREND_THRESHOLD: f64 = 0.05;
/// Per-window log-slope threshold for the dyadic unboundedness test.
pub const DYADIC_SLOPE_THRESHOLD: f64 = 0.02;
/// Number of trailing dyadic windows that must all exceed the threshold.
pub const DYADIC_MIN_WINDOWS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    ToZero,
    ToInfinity,
    BoundedAway,
    Inconclusive,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::ToZero => "to_zero",
            Trend::ToInfinity => "to_infinity",
            Trend::BoundedAway => "bounded_away",
            Trend::Inconclusive => "inconclusive",
        }
    }

    pub fn dichotomizes(self) -> bool {
        matches!(self, Trend::ToZero | Trend::ToInfinity)
    }
}

/// Fit of ln v ≈ A + e·t + p·ln t over the tail of a boundary approach, where
/// t = ln 1/(1−r²). Pure power behaviour (1−r²)^{−e} shows up in `exponent`,
/// logarithmic factors (log 1/(1−r²))^p in `log_power`. `loglog_slope` is the
/// plain least-squares slope of ln v against t, kept for reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFit {
    pub trend: Trend,
    pub exponent: f64,
    pub log_power: f64,
    pub loglog_slope: f64,
    pub points_used: usize,
}

/// Classify the tail (last half) of `(t, ln v)` samples with t increasing.
pub fn classify_boundary(t: &[f64], ln_v: &[f64]) -> BoundaryFit {
    assert_eq!(t.len(), ln_v.len());
    let start = t.len() / 2;
    let (ts, ys): (Vec<f64>, Vec<f64>) = t[start..].iter().zip(&ln_v[start..]).filter(|(t, _)| **t > 0.0).map(|(t, y)| (*t, *y)).unzip();
    let inconclusive =
        BoundaryFit { trend: Trend::Inconclusive, exponent: f64::NAN, log_power: f64::NAN, loglog_slope: f64::NAN, points_used: ts.len() };
    if ts.len() < 4 || ys.iter().any(|y| !y.is_finite()) {
        return inconclusive;
    }
    let loglog_slope = linear_slope(&ts, &ys);
    let coef = match least_squares(&[&ts, &ts.iter().map(|t| t.ln()).collect::<Vec<_>>()], &ys) {
        Some(c) => c,
        None => return BoundaryFit { loglog_slope, ..inconclusive },
    };
    let (exponent, log_power) = (coef[0], coef[1]);
    // A window whose total variation is below what the weakest detectable
    // log factor would produce is flat, whatever the regression says; the
    // two regressors are nearly collinear over short windows.
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    let ln_t: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let flat = spread(&ys) < TREND_THRESHOLD * spread(&ln_t);
    let trend = if flat {
        Trend::BoundedAway
    } else if exponent > TREND_THRESHOLD {
        Trend::ToInfinity
    } else if exponent < -TREND_THRESHOLD {
        Trend::ToZero
    } else if log_power > TREND_THRESHOLD {
        Trend::ToInfinity
    } else if log_power < -TREND_THRESHOLD {
        Trend::ToZero
    } else {
        Trend::BoundedAway
    };
    BoundaryFit { trend, exponent, log_power, loglog_slope, points_used: ts.len() }
}

/// Least-squares slope of y against x.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    least_squares(&[x], y).map(|c| c[0]).unwrap_or(f64::NAN)
}

/// Least squares for y ≈ c₀ + Σ c_k x_k; returns (c₁, …) without the intercept.
fn least_squares(columns: &[&[f64]], y: &[f64]) -> Option<Vec<f64>> {
    let n = y.len();
    let k = columns.len();
    if n < k + 1 {
        return None;
    }
    // Centre and scale each regressor for conditioning.
    let mut design = DMatrix::<f64>::zeros(n, k + 1);
    let mut scales = vec![1.0; k];
    for i in 0..n {
        design[(i, 0)] = 1.0;
    }
    for (c, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let spread = col.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let s = if spread > 0.0 { spread } else { 1.0 };
        scales[c] = s;
        for i in 0..n {
            design[(i, c + 1)] = (col[i] - mean) / s;
        }
    }
    let rhs = DVector::from_column_slice(y);
    let svd = design.svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    Some((0..k).map(|c| sol[c + 1] / scales[c]).collect())
}

/// Dyadic-window growth report for a positive sequence a₀, a₁, …: the slope
/// of ln a against ln n across each window [2ᵏ, 2ᵏ⁺¹].
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicGrowth {
    pub window_slopes: Vec<f64>,
    /// True when the last [`DYADIC_MIN_WINDOWS`] slopes all exceed the threshold.
    pub unbounded: bool,
}

impl DyadicGrowth {
    pub fn last_slope(&self) -> f64 {
        self.window_slopes.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn dyadic_growth(seq: &[f64]) -> DyadicGrowth {
    let mut window_slopes = Vec::new();
    let mut k = 0;
    while (1usize << (k + 1)) < seq.len() {
        let (lo, hi) = (1usize << k, 1usize << (k + 1));
        window_slopes.push((seq[hi].ln() - seq[lo].ln()) / std::f64::consts::LN_2);
        k += 1;
    }
    let unbounded = window_slopes.len() >= DYADIC_MIN_WINDOWS
        && window_slopes[window_slopes.len() - DYADIC_MIN_WINDOWS..].iter().all(|s| *s > DYADIC_SLOPE_THRESHOLD);
    DyadicGrowth { window_slopes, unbounded }
}
