//! Uniformly sampled time series and their finite-difference derivatives.
//!
//! Derivatives use fourth-order accurate stencils by default: centred in the
//! interior, shifted (one-sided at the very ends) near the boundaries. Stencil
//! weights come from Fornberg's recursion, so any derivative/accuracy pair can
//! be requested.

use crate::error::{Error, Result};

/// Values sampled at `t_start + i * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub t_start: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(t_start: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Series {
            t_start,
            dt,
            values,
        })
    }

    pub fn from_fn(t_start: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| f(t_start + i as f64 * dt)).collect();
        Series::new(t_start, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// `order`-th derivative with fourth-order accurate stencils.
    pub fn derivative(&self, order: usize) -> Result<Series> {
        self.derivative_with(order, 4)
    }

    /// `order`-th derivative with stencils of the given (even) accuracy.
    pub fn derivative_with(&self, order: usize, accuracy: usize) -> Result<Series> {
        if order == 0 {
            return Ok(self.clone());
        }
        if accuracy == 0 || !accuracy.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "stencil accuracy must be even and positive, got {accuracy}"
            )));
        }
        // A centred stencil of 2r+1 points has accuracy 2r + 2 - 2*ceil(order/2);
        // a shifted one of n points has accuracy n - order.
        let half = order.div_ceil(2) - 1 + accuracy / 2;
        let edge = order + accuracy;
        let n = self.len();
        if n < edge.max(2 * half + 1) {
            return Err(Error::Domain(format!(
                "need at least {} samples for derivative order {order}, got {n}",
                edge.max(2 * half + 1)
            )));
        }
        let scale = self.dt.powi(order as i32);
        let centred: Vec<f64> = {
            let offsets: Vec<f64> = (-(half as i64)..=half as i64).map(|k| k as f64).collect();
            fornberg(0.0, &offsets, order)
        };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i >= half && i + half < n {
                let window = &self.values[i - half..=i + half];
                window.iter().zip(&centred).map(|(f, w)| f * w).sum::<f64>()
            } else {
                let start = i.saturating_sub(edge / 2).min(n - edge);
                let offsets: Vec<f64> = (start..start + edge)
                    .map(|j| j as f64 - i as f64)
                    .collect();
                let w = fornberg(0.0, &offsets, order);
                self.values[start..start + edge]
                    .iter()
                    .zip(&w)
                    .map(|(f, w)| f * w)
                    .sum::<f64>()
            };
            out.push(v / scale);
        }
        Series::new(self.t_start, self.dt, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` from values
/// at `nodes` (Fornberg 1988).
pub fn fornberg(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}
