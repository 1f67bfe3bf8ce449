//! Composite quadrature and finite differences on uniform grids.

use crate::error::{Error, Result};
use crate::linalg::{c, Complex64, ComplexVector};

/// Composite Simpson rule over equally spaced samples.
///
/// An odd number of intervals is handled by averaging the two rules that
/// close with Simpson's 3/8 rule on the first or on the last three
/// intervals, which keeps the result antisymmetric under reversal.
pub fn simpson(values: &[Complex64], spacing: f64) -> Result<Complex64> {
    let intervals = values.len().saturating_sub(1);
    if intervals < 2 {
        return Err(Error::Grid(format!(
            "Simpson quadrature needs at least 2 intervals, got {intervals}"
        )));
    }
    if intervals % 2 == 0 {
        return Ok(simpson_even(values, spacing));
    }
    let n = intervals;
    let head = three_eighths(&values[..4], spacing) + simpson_even(&values[3..], spacing);
    let tail = simpson_even(&values[..n - 2], spacing) + three_eighths(&values[n - 3..], spacing);
    Ok((head + tail) * 0.5)
}

fn simpson_even(values: &[Complex64], spacing: f64) -> Complex64 {
    let n = values.len() - 1;
    if n == 0 {
        return c(0.0, 0.0);
    }
    let mut acc = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        acc += v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (spacing / 3.0)
}

fn three_eighths(v: &[Complex64], spacing: f64) -> Complex64 {
    (v[0] + v[1] * 3.0 + v[2] * 3.0 + v[3]) * (3.0 * spacing / 8.0)
}

/// Derivative of sampled vectors at `index`.
///
/// Five-point stencils (fourth order) when at least five samples exist,
/// three-point stencils (second order) otherwise; one-sided at the ends.
pub fn derivative(samples: &[&ComplexVector], index: usize, spacing: f64) -> Result<ComplexVector> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Grid(format!(
            "finite differences need at least 3 samples, got {n}"
        )));
    }
    if index >= n {
        return Err(Error::Grid(format!("sample index {index} out of range 0..{n}")));
    }
    let combo = |offsets: &[(usize, f64)], denom: f64| -> ComplexVector {
        let mut acc = ComplexVector::zeros(samples[0].len());
        for &(k, w) in offsets {
            acc += samples[k] * c(w, 0.0);
        }
        acc / c(denom * spacing, 0.0)
    };
    let i = index;
    if n >= 5 {
        let base = i.saturating_sub(2).min(n - 5);
        let weights = five_point_weights(i - base);
        let offsets: Vec<_> = (0..5).map(|k| (base + k, weights[k])).collect();
        Ok(combo(&offsets, 12.0))
    } else {
        let d = if i == 0 {
            combo(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0)
        } else if i == n - 1 {
            combo(&[(n - 3, 1.0), (n - 2, -4.0), (n - 1, 3.0)], 2.0)
        } else {
            combo(&[(i - 1, -1.0), (i + 1, 1.0)], 2.0)
        };
        Ok(d)
    }
}

/// Weights (times 12) of the derivative at node `at` of five equally spaced nodes.
fn five_point_weights(at: usize) -> [f64; 5] {
    match at {
        0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
        1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
        2 => [1.0, -8.0, 0.0, 8.0, -1.0],
        3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
        _ => [3.0, -16.0, 36.0, -48.0, 25.0],
    }
}
