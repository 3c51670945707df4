//! Independent ground-truth references: closed-form Gaussian evidence,
//! conjugate linear-model evidence, and low-dimensional tensor quadrature.

use nalgebra::{DMatrix, DVector};

use crate::error::{LogzError, Result};
use crate::potential::{PotentialSpec, RegressionDataset};

/// `log Z` of `exp(-x'Qx/2)`: `(d/2) log(2 pi) - (1/2) log det Q`.
pub fn gaussian_log_evidence(q: &DMatrix<f64>) -> Result<f64> {
    let d = q.nrows();
    if q.ncols() != d {
        return Err(LogzError::Validation("Q must be square".into()));
    }
    let chol = q
        .clone()
        .cholesky()
        .ok_or_else(|| LogzError::Validation("Q is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    Ok(0.5 * d as f64 * std::f64::consts::TAU.ln() - 0.5 * log_det)
}

/// Exact log marginal likelihood of the conjugate Gaussian linear model
/// `y ~ N(X theta, I/noise_precision)`, `theta ~ N(prior_mean, prior_precision^-1)`.
pub fn conjugate_linear_log_evidence(
    data: &RegressionDataset,
    prior_mean: &DVector<f64>,
    prior_precision: &DMatrix<f64>,
    noise_precision: f64,
) -> Result<f64> {
    let x = &data.covariates;
    let y = &data.responses;
    let d = x.ncols();
    let p = x.nrows();
    if prior_mean.len() != d || prior_precision.nrows() != d || prior_precision.ncols() != d {
        return Err(LogzError::Validation(
            "prior dimensions do not match the design".into(),
        ));
    }
    let a = noise_precision * (x.transpose() * x) + prior_precision;
    let chol_a = a
        .cholesky()
        .ok_or_else(|| LogzError::Validation("combined precision is singular".into()))?;
    let chol_p0 = prior_precision
        .clone()
        .cholesky()
        .ok_or_else(|| LogzError::Validation("prior precision is not SPD".into()))?;
    let log_det_a: f64 = chol_a.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let log_det_p0: f64 = chol_p0.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let b = noise_precision * (x.transpose() * y) + prior_precision * prior_mean;
    let theta = chol_a.solve(&b);
    let quad = noise_precision * y.dot(y) + (prior_precision * prior_mean).dot(prior_mean)
        - b.dot(&theta);
    let two_pi = std::f64::consts::TAU;
    Ok(-0.5 * p as f64 * (two_pi / noise_precision).ln() + 0.5 * log_det_p0 - 0.5 * log_det_a
        - 0.5 * quad)
}

fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
    fn push(&mut self, e: f64) {
        if e > self.max {
            self.scaled = self.scaled * (self.max - e).exp() + 1.0;
            self.max = e;
        } else {
            self.scaled += (e - self.max).exp();
        }
    }
    fn value(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

/// Tensor-grid Simpson quadrature of `exp(-U)` over `[-radius, radius]^d`,
/// in log-space, for d <= 3.
///
/// The radius is validated after the fact against the declared envelope
/// (`exp(-m ||x||^2/2)` when m > 0, the linear-growth envelope otherwise):
/// the estimated mass outside the box must be below 1e-12 of the integral.
pub fn quadrature_log_z(p: &PotentialSpec, radius: f64, points_per_dim: usize) -> Result<f64> {
    let d = p.dim;
    if d > 3 {
        return Err(LogzError::UnsupportedDimension(d));
    }
    if points_per_dim < 3 || points_per_dim % 2 == 0 {
        return Err(LogzError::Validation(
            "Simpson quadrature needs an odd number of points >= 3".into(),
        ));
    }
    if radius <= 0.0 {
        return Err(LogzError::Validation("radius must be positive".into()));
    }
    let n = points_per_dim;
    let h = 2.0 * radius / (n - 1) as f64;
    let log_h3 = (h / 3.0).ln();
    let grid: Vec<f64> = (0..n).map(|i| -radius + h * i as f64).collect();
    let logw: Vec<f64> = (0..n).map(|i| simpson_weight(i, n).ln()).collect();
    let mut acc = LogSum::new();
    match d {
        1 => {
            let mut x = [0.0];
            for i in 0..n {
                x[0] = grid[i];
                acc.push(logw[i] + log_h3 - p.energy(&x));
            }
        }
        2 => {
            let mut x = [0.0; 2];
            for i in 0..n {
                x[0] = grid[i];
                for j in 0..n {
                    x[1] = grid[j];
                    acc.push(logw[i] + logw[j] + 2.0 * log_h3 - p.energy(&x));
                }
            }
        }
        _ => {
            let mut x = [0.0; 3];
            for i in 0..n {
                x[0] = grid[i];
                for j in 0..n {
                    x[1] = grid[j];
                    for k in 0..n {
                        x[2] = grid[k];
                        acc.push(logw[i] + logw[j] + logw[k] + 3.0 * log_h3 - p.energy(&x));
                    }
                }
            }
        }
    }
    let log_z = acc.value();

    // Envelope bound on the mass outside the box.
    let df = d as f64;
    let two_pi = std::f64::consts::TAU;
    let log_tail = if p.m > 0.0 {
        let m = p.m;
        // d * (2 pi/m)^{(d-1)/2} * 2 exp(-m R^2/2)/(m R), Mills-ratio bound
        // applied to one coordinate exceeding R.
        df.ln() + 0.5 * (df - 1.0) * (two_pi / m).ln() + (2.0 / (m * radius)).ln()
            - m * radius * radius / 2.0
    } else {
        let (rho1, rho2) = p.growth.ok_or_else(|| {
            LogzError::Validation(
                "quadrature with m = 0 requires growth constants for the tail check".into(),
            )
        })?;
        // exp(rho2) * integral of exp(-rho1 ||x||) over ||x|| > R.
        let r = radius;
        let poly = match d {
            1 => 2.0 / rho1,
            2 => two_pi * (r / rho1 + 1.0 / (rho1 * rho1)),
            _ => 2.0 * two_pi
                * (r * r / rho1 + 2.0 * r / (rho1 * rho1) + 2.0 / rho1.powi(3)),
        };
        rho2 + poly.ln() - rho1 * r
    };
    if log_tail > log_z + (1e-12f64).ln() {
        return Err(LogzError::Validation(format!(
            "radius {radius} too small: envelope tail estimate {:.3e} exceeds 1e-12 of the integral",
            (log_tail - log_z).exp()
        )));
    }
    Ok(log_z)
}
