//! Target potentials: the centered potential interface, regularity metadata,
//! mode finding, and the built-in regression and Gaussian models.
//!
//! A potential is the convex function `U` of the unnormalized density
//! `exp(-U)`. Everything downstream assumes `U(0) = 0` and `∇U(0) = 0`; the
//! builders in this module either construct `U` already centered or shift an
//! arbitrary convex objective to its minimizer with [`center_at_mode`].

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{LogzError, Result};

type EnergyFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type HessianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A centered potential together with its declared regularity constants.
///
/// Values are immutable after construction; energy and gradient evaluation is
/// pure, so a `PotentialSpec` can be shared freely across threads.
#[derive(Clone)]
pub struct PotentialSpec {
    pub dim: usize,
    /// Strong-convexity constant; 0 in the merely convex case.
    pub m: f64,
    /// Gradient-Lipschitz constant.
    pub l: f64,
    /// Hessian-Lipschitz constant, present iff the third-derivative
    /// assumption is claimed for this model.
    pub hessian_lipschitz: Option<f64>,
    /// Linear-growth constants `(rho1, rho2)` with
    /// `U(x) >= rho1 ||x|| - rho2`; required to run the convex regime.
    pub growth: Option<(f64, f64)>,
    pub name: String,
    /// Minimizer of the raw (uncentered) objective, for reporting.
    pub mode: Vec<f64>,
    /// Raw objective value at the mode. For posterior potentials the log
    /// evidence is `log Z - log_offset`.
    pub log_offset: f64,
    energy: EnergyFn,
    gradient: GradientFn,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("m", &self.m)
            .field("l", &self.l)
            .field("hessian_lipschitz", &self.hessian_lipschitz)
            .field("growth", &self.growth)
            .finish()
    }
}

impl PotentialSpec {
    pub fn new(
        dim: usize,
        m: f64,
        l: f64,
        energy: EnergyFn,
        gradient: GradientFn,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LogzError::Validation("dimension must be positive".into()));
        }
        if !(m >= 0.0) || !(l > 0.0) || m > l * (1.0 + 1e-12) {
            return Err(LogzError::Validation(format!(
                "regularity constants must satisfy 0 <= m <= L, got m={m}, L={l}"
            )));
        }
        let spec = Self {
            dim,
            m,
            l,
            hessian_lipschitz: None,
            growth: None,
            name: String::new(),
            mode: vec![0.0; dim],
            log_offset: 0.0,
            energy,
            gradient,
        };
        spec.check_centered(1e-6)?;
        Ok(spec)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_hessian_lipschitz(mut self, l_tilde: f64) -> Self {
        self.hessian_lipschitz = Some(l_tilde);
        self
    }

    pub fn with_growth(mut self, rho1: f64, rho2: f64) -> Self {
        self.growth = Some((rho1, rho2));
        self
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    fn check_centered(&self, tol: f64) -> Result<()> {
        let origin = vec![0.0; self.dim];
        let u0 = self.energy(&origin);
        let g0 = self.gradient(&origin);
        let gnorm = norm(&g0);
        if u0.abs() > tol || gnorm > tol {
            return Err(LogzError::Validation(format!(
                "potential is not centered: U(0)={u0:.3e}, |grad U(0)|={gnorm:.3e}"
            )));
        }
        Ok(())
    }

    /// Advisory spot check of the declared secant bounds on random pairs.
    ///
    /// Draws `pairs` pairs in the ball of radius `radius` from a simple
    /// deterministic stream and verifies
    /// `m||x-y||^2 <= <grad U(x)-grad U(y), x-y>` and
    /// `||grad U(x)-grad U(y)|| <= L||x-y||` with relative slack `slack`.
    pub fn spot_check_regularity(
        &self,
        radius: f64,
        pairs: usize,
        seed: u64,
        slack: f64,
    ) -> Result<()> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut unit = || {
            // splitmix64 to a float in [-1, 1)
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
        };
        for _ in 0..pairs {
            let x: Vec<f64> = (0..self.dim).map(|_| radius * unit()).collect();
            let y: Vec<f64> = (0..self.dim).map(|_| radius * unit()).collect();
            let gx = self.gradient(&x);
            let gy = self.gradient(&y);
            let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
            let d2 = dot(&dxy, &dxy);
            let inner = dot(&dg, &dxy);
            let dgn = norm(&dg);
            if inner < self.m * d2 * (1.0 - slack) - slack {
                return Err(LogzError::Validation(format!(
                    "strong-convexity secant bound violated: <dg,dx>={inner:.6e} < m|dx|^2={:.6e}",
                    self.m * d2
                )));
            }
            if dgn > self.l * d2.sqrt() * (1.0 + slack) + slack {
                return Err(LogzError::Validation(format!(
                    "gradient-Lipschitz bound violated: |dg|={dgn:.6e} > L|dx|={:.6e}",
                    self.l * d2.sqrt()
                )));
            }
            if self.m == 0.0 {
                if let Some((rho1, rho2)) = self.growth {
                    let ux = self.energy(&x);
                    if ux < rho1 * norm(&x) - rho2 - slack {
                        return Err(LogzError::Validation(format!(
                            "linear-growth bound violated: U(x)={ux:.6e} < rho1|x|-rho2"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// An uncentered convex objective with an arbitrary minimizer.
#[derive(Clone)]
pub struct RawPotential {
    pub dim: usize,
    pub m: f64,
    pub l: f64,
    pub hessian_lipschitz: Option<f64>,
    pub growth: Option<(f64, f64)>,
    pub name: String,
    pub energy: EnergyFn,
    pub gradient: GradientFn,
    pub hessian: Option<HessianFn>,
}

/// Mode-search settings; defaults follow the library policy of
/// `|grad U| <= 1e-8` within 1e5 iterations.
#[derive(Clone, Copy, Debug)]
pub struct ModeSearch {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ModeSearch {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100_000,
        }
    }
}

/// Shifts `raw` to its minimizer so the returned potential satisfies
/// `U(0) = 0` and `|grad U(0)| <= opts.tol`.
///
/// Uses gradient descent with backtracking line search, switching to Newton
/// steps when a Hessian is available and the iterate is near the mode.
pub fn center_at_mode(raw: &RawPotential, opts: ModeSearch) -> Result<PotentialSpec> {
    if opts.tol <= 0.0 {
        return Err(LogzError::Validation("tolerance must be positive".into()));
    }
    let d = raw.dim;
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    (raw.gradient)(&x, &mut g);
    let mut gnorm = norm(&g);
    let mut fx = (raw.energy)(&x);
    let mut step = 1.0 / raw.l.max(1e-12);
    let mut iters = 0usize;
    while gnorm > opts.tol {
        if iters >= opts.max_iters {
            return Err(LogzError::Optimization {
                grad_norm: gnorm,
                iterations: iters,
                best: x,
            });
        }
        let mut advanced = false;
        if let Some(hess) = &raw.hessian {
            // Newton step once the basin is plausibly quadratic.
            if gnorm < 1e-2 * raw.l.max(1.0) {
                let h = hess(&x);
                if let Some(chol) = h.cholesky() {
                    let delta = chol.solve(&DVector::from_column_slice(&g));
                    let cand: Vec<f64> =
                        x.iter().zip(delta.iter()).map(|(xi, di)| xi - di).collect();
                    let fc = (raw.energy)(&cand);
                    if fc <= fx + 1e-12 * fx.abs().max(1.0) {
                        x = cand;
                        fx = fc;
                        (raw.gradient)(&x, &mut g);
                        gnorm = norm(&g);
                        iters += 1;
                        advanced = true;
                    }
                }
            }
        }
        if !advanced {
            // Backtracking Armijo line search along -g.
            let mut t = step;
            loop {
                let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
                let fc = (raw.energy)(&cand);
                if fc <= fx - 0.5 * t * gnorm * gnorm || t < 1e-18 {
                    x = cand;
                    fx = fc;
                    step = t * 2.0;
                    break;
                }
                t *= 0.5;
            }
            (raw.gradient)(&x, &mut g);
            gnorm = norm(&g);
            iters += 1;
        }
    }

    let mode = x;
    let offset = fx;
    let energy_raw = raw.energy.clone();
    let grad_raw = raw.gradient.clone();
    let mode_e = mode.clone();
    let mode_g = mode.clone();
    let energy: EnergyFn = Arc::new(move |y: &[f64]| {
        let shifted: Vec<f64> = y.iter().zip(&mode_e).map(|(a, b)| a + b).collect();
        energy_raw(&shifted) - offset
    });
    let gradient: GradientFn = Arc::new(move |y: &[f64], out: &mut [f64]| {
        // Reusable buffer: this closure sits in the chain's hot loop.
        thread_local! {
            static SHIFT: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
        }
        SHIFT.with(|buf| match buf.try_borrow_mut() {
            Ok(mut shifted) => {
                shifted.clear();
                shifted.extend(y.iter().zip(&mode_g).map(|(a, b)| a + b));
                grad_raw(&shifted, out)
            }
            // Nested centering re-enters this closure; allocate locally then.
            Err(_) => {
                let shifted: Vec<f64> =
                    y.iter().zip(&mode_g).map(|(a, b)| a + b).collect();
                grad_raw(&shifted, out)
            }
        })
    });
    let spec = PotentialSpec {
        dim: d,
        m: raw.m,
        l: raw.l,
        hessian_lipschitz: raw.hessian_lipschitz,
        growth: raw.growth,
        name: raw.name.clone(),
        mode,
        log_offset: offset,
        energy,
        gradient,
    };
    // The shifted value at the origin is 0 by construction; only the gradient
    // tolerance needs re-checking.
    spec.check_centered(opts.tol.max(1e-6) * 10.0)?;
    if spec.m > spec.l {
        return Err(LogzError::Validation(format!(
            "m={} exceeds L={}",
            spec.m, spec.l
        )));
    }
    Ok(spec)
}

/// Gaussian potential `U(x) = x' Q x / 2` for symmetric positive-definite `Q`.
pub fn gaussian_potential(q: &DMatrix<f64>) -> Result<PotentialSpec> {
    let d = q.nrows();
    if q.ncols() != d {
        return Err(LogzError::Validation("Q must be square".into()));
    }
    for i in 0..d {
        for j in 0..i {
            if (q[(i, j)] - q[(j, i)]).abs() > 1e-10 * q[(i, i)].abs().max(1.0) {
                return Err(LogzError::Validation("Q must be symmetric".into()));
            }
        }
    }
    let eig = q.clone().symmetric_eigen();
    let lam_min = eig.eigenvalues.min();
    let lam_max = eig.eigenvalues.max();
    if lam_min <= 0.0 {
        return Err(LogzError::Validation(format!(
            "Q is not positive definite (min eigenvalue {lam_min:.3e})"
        )));
    }
    // Flat row-major copy keeps chain steps allocation-free.
    let qe: Vec<f64> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| q[(i, j)]).collect();
    let qg = qe.clone();
    let energy: EnergyFn = Arc::new(move |x: &[f64]| {
        let n = x.len();
        let mut v = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += qe[i * n + j] * x[j];
            }
            v += row * x[i];
        }
        0.5 * v
    });
    let gradient: GradientFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let n = x.len();
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += qg[i * n + j] * x[j];
            }
            out[i] = row;
        }
    });
    Ok(PotentialSpec::new(d, lam_min, lam_max, energy, gradient)?
        .with_name(format!("gaussian-d{d}"))
        .with_hessian_lipschitz(0.0)
        .with_growth(lam_min.sqrt(), 0.5))
}

/// A regression dataset: responses, a design matrix, and column names.
#[derive(Clone, Debug)]
pub struct RegressionDataset {
    pub responses: DVector<f64>,
    pub covariates: DMatrix<f64>,
    pub column_names: Vec<String>,
}

impl RegressionDataset {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.len() == 0
    }

    pub fn column(&self, name: &str) -> Result<DVector<f64>> {
        let idx = self
            .column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| LogzError::Validation(format!("missing column '{name}'")))?;
        Ok(self.covariates.column(idx).into_owned())
    }
}

/// How covariate columns are transformed after parsing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnTransform {
    Raw,
    /// Subtract the column mean.
    Center,
    /// Subtract the mean and divide by the (population) standard deviation.
    Standardize,
}

/// CSV descriptor: which column is the response, and the covariate recipe.
#[derive(Clone, Debug)]
pub struct CsvFormat {
    pub response: String,
    pub transform: ColumnTransform,
}

/// Parses a headered CSV into a dataset, applying the covariate transform.
pub fn load_dataset(path: &Path, format: &CsvFormat) -> Result<RegressionDataset> {
    dataset_from_reader(std::fs::File::open(path)?, format)
}

/// Parses a CSV dataset from any reader.
pub fn dataset_from_reader(
    source: impl std::io::Read,
    format: &CsvFormat,
) -> Result<RegressionDataset> {
    let mut reader = csv::Reader::from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| LogzError::Parse {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let resp_idx = headers
        .iter()
        .position(|h| h == &format.response)
        .ok_or_else(|| LogzError::Parse {
            row: 0,
            column: format.response.clone(),
            message: "missing response column".into(),
        })?;
    let mut responses = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LogzError::Parse {
            row: r + 1,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| LogzError::Parse {
                row: r + 1,
                column: headers.get(c).cloned().unwrap_or_default(),
                message: format!("non-numeric cell '{}'", field.trim()),
            })?;
            if c == resp_idx {
                responses.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    let p = rows.len();
    let q = headers.len() - 1;
    let mut covariates = DMatrix::zeros(p, q);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            covariates[(i, j)] = *v;
        }
    }
    match format.transform {
        ColumnTransform::Raw => {}
        ColumnTransform::Center => {
            for mut col in covariates.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
        }
        ColumnTransform::Standardize => {
            for mut col in covariates.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
                let sd = (col.dot(&col) / p as f64).sqrt();
                if sd > 0.0 {
                    col /= sd;
                }
            }
        }
    }
    let column_names = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != resp_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(RegressionDataset {
        responses: DVector::from_vec(responses),
        covariates,
        column_names,
    })
}

/// Negative log posterior of the Gaussian linear model
/// `y ~ N(X theta, 1/noise_precision)`, `theta ~ N(prior_mean, prior_precision^-1)`,
/// centered at the posterior mean. The dataset's covariate matrix is used as
/// the design verbatim.
pub fn linear_regression_potential(
    data: &RegressionDataset,
    prior_mean: &DVector<f64>,
    prior_precision: &DMatrix<f64>,
    noise_precision: f64,
) -> Result<PotentialSpec> {
    let x = data.covariates.clone();
    let y = data.responses.clone();
    let d = x.ncols();
    let p = x.nrows();
    if prior_mean.len() != d || prior_precision.nrows() != d || prior_precision.ncols() != d {
        return Err(LogzError::Validation(
            "prior dimensions do not match the design".into(),
        ));
    }
    if noise_precision <= 0.0 {
        return Err(LogzError::Validation(
            "noise precision must be positive".into(),
        ));
    }
    let a = noise_precision * (x.transpose() * &x) + prior_precision;
    let eig = a.clone().symmetric_eigen();
    let m = eig.eigenvalues.min();
    let l = eig.eigenvalues.max();
    if m <= 0.0 {
        return Err(LogzError::Validation(format!(
            "singular design: combined precision has min eigenvalue {m:.3e}"
        )));
    }
    // Constant terms so that exp(-ell) is the exact joint density p(y, theta).
    let prior_chol = prior_precision
        .clone()
        .cholesky()
        .ok_or_else(|| LogzError::Validation("prior precision is not SPD".into()))?;
    let log_det_prior: f64 = prior_chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let two_pi = std::f64::consts::TAU;
    let const_term = 0.5 * p as f64 * (two_pi / noise_precision).ln()
        + 0.5 * d as f64 * two_pi.ln()
        - 0.5 * log_det_prior;

    // ell(theta) = theta'A theta/2 - b'theta + c, so both closures run in
    // O(d^2) with no allocation regardless of the number of observations.
    let b = noise_precision * (x.transpose() * &y) + prior_precision * prior_mean;
    let c0 = 0.5 * noise_precision * y.dot(&y)
        + 0.5 * (prior_precision * prior_mean).dot(prior_mean)
        + const_term;
    let a_flat: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .collect();
    let b_flat: Vec<f64> = b.iter().copied().collect();
    let (ae, be) = (a_flat.clone(), b_flat.clone());
    let energy: EnergyFn = Arc::new(move |t: &[f64]| {
        let n = t.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += ae[i * n + j] * t[j];
            }
            quad += row * t[i];
            lin += be[i] * t[i];
        }
        0.5 * quad - lin + c0
    });
    let gradient: GradientFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        let n = t.len();
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += a_flat[i * n + j] * t[j];
            }
            out[i] = row - b_flat[i];
        }
    });
    let ah = a.clone();
    let hessian: HessianFn = Arc::new(move |_t: &[f64]| ah.clone());
    let raw = RawPotential {
        dim: d,
        m,
        l,
        hessian_lipschitz: Some(0.0),
        growth: Some((m.sqrt(), 0.5)),
        name: "linear-regression".into(),
        energy,
        gradient,
        hessian: Some(hessian),
    };
    center_at_mode(&raw, ModeSearch::default())
}

/// Negative log posterior of Bayesian logistic regression with a
/// `N(0, tau^-1 I)` prior, centered at the posterior mode.
///
/// `L = lambda_max(X'X)/4 + tau`; the Hessian-Lipschitz constant is taken as
/// `max_i ||X_i||^3 / (6 sqrt(3))`, the global bound on the third derivative
/// of the log-sigmoid times the cubed row norm.
pub fn logistic_regression_potential(
    data: &RegressionDataset,
    prior_precision_scalar: f64,
) -> Result<PotentialSpec> {
    let tau = prior_precision_scalar;
    if tau <= 0.0 {
        return Err(LogzError::Validation(
            "prior precision must be positive".into(),
        ));
    }
    let x = data.covariates.clone();
    let y = data.responses.clone();
    let d = x.ncols();
    let p = x.nrows();
    for (i, yi) in y.iter().enumerate() {
        if *yi != 0.0 && *yi != 1.0 {
            return Err(LogzError::Validation(format!(
                "response {i} is {yi}, expected 0 or 1"
            )));
        }
    }
    let (m, l, l_tilde) = if p == 0 {
        (tau, tau, 0.0)
    } else {
        let xtx = x.transpose() * &x;
        let lam_max = xtx.symmetric_eigen().eigenvalues.max();
        let max_row_norm = (0..p)
            .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0_f64, f64::max);
        (
            tau,
            lam_max / 4.0 + tau,
            max_row_norm.powi(3) / (6.0 * 3.0_f64.sqrt()),
        )
    };
    let two_pi = std::f64::consts::TAU;
    // Prior normalization so exp(-ell) is the joint density.
    let const_term = 0.5 * d as f64 * (two_pi / tau).ln();

    let (xe, ye) = (x.clone(), y.clone());
    let energy: EnergyFn = Arc::new(move |t: &[f64]| {
        let th = DVector::from_column_slice(t);
        let eta = &xe * &th;
        let mut v = 0.0;
        for i in 0..eta.len() {
            v += softplus(eta[i]) - ye[i] * eta[i];
        }
        v + 0.5 * tau * th.dot(&th) + const_term
    });
    let (xg, yg) = (x.clone(), y.clone());
    let gradient: GradientFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        let th = DVector::from_column_slice(t);
        let eta = &xg * &th;
        let resid = DVector::from_fn(eta.len(), |i, _| sigmoid(eta[i]) - yg[i]);
        let g = xg.transpose() * resid + tau * th;
        out.copy_from_slice(g.as_slice());
    });
    let xh = x.clone();
    let hessian: HessianFn = Arc::new(move |t: &[f64]| {
        let th = DVector::from_column_slice(t);
        let eta = &xh * &th;
        let mut h = DMatrix::from_diagonal_element(th.len(), th.len(), tau);
        for i in 0..eta.len() {
            let s = sigmoid(eta[i]);
            let w = s * (1.0 - s);
            let row = xh.row(i);
            for a in 0..th.len() {
                for b in 0..th.len() {
                    h[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        h
    });
    let raw = RawPotential {
        dim: d,
        m,
        l,
        hessian_lipschitz: Some(l_tilde),
        growth: Some((m.sqrt(), 0.5)),
        name: "logistic-regression".into(),
        energy,
        gradient,
        hessian: Some(hessian),
    };
    center_at_mode(&raw, ModeSearch::default())
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Built-in models: the benchmark targets wired into the CLI.
pub mod builtin {
    use super::*;

    const RADIATA_CSV: &str = include_str!("../data/radiata.csv");
    const PIMA_CSV: &str = include_str!("../data/pima.csv");

    fn dataset_from_str(contents: &str, format: &CsvFormat) -> Result<RegressionDataset> {
        dataset_from_reader(contents.as_bytes(), format)
    }

    /// The standard Gaussian benchmark: `Q = diag(2, 1, ..., 1)`.
    pub fn gaussian_benchmark(dim: usize) -> Result<PotentialSpec> {
        let mut diag = vec![1.0; dim];
        diag[0] = 2.0;
        gaussian_diag(&diag)
    }

    pub fn gaussian_diag(diag: &[f64]) -> Result<PotentialSpec> {
        let q = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        gaussian_potential(&q)
    }

    /// Radiata-pine linear model: intercept plus one centered covariate
    /// (density for model 1, resin-adjusted density for model 2).
    pub fn radiata_design(
        data: &RegressionDataset,
        which: u8,
    ) -> Result<RegressionDataset> {
        let col = match which {
            1 => data.column("density")?,
            2 => data.column("adjusted_density")?,
            _ => return Err(LogzError::Config(format!("radiata model must be 1 or 2, got {which}"))),
        };
        let p = data.len();
        let mut design = DMatrix::zeros(p, 2);
        for i in 0..p {
            design[(i, 0)] = 1.0;
            design[(i, 1)] = col[i];
        }
        Ok(RegressionDataset {
            responses: data.responses.clone(),
            covariates: design,
            column_names: vec!["intercept".into(), format!("covariate_m{which}")],
        })
    }

    pub fn radiata_prior() -> (DVector<f64>, DMatrix<f64>, f64) {
        let noise_precision = 1e-5;
        let prior_mean = DVector::from_vec(vec![3000.0, 185.0]);
        let prior_precision =
            noise_precision * DMatrix::from_diagonal(&DVector::from_vec(vec![0.06, 6.0]));
        (prior_mean, prior_precision, noise_precision)
    }

    pub fn radiata_dataset(path: Option<&Path>) -> Result<RegressionDataset> {
        let format = CsvFormat {
            response: "strength".into(),
            transform: ColumnTransform::Center,
        };
        match path {
            Some(p) => load_dataset(p, &format),
            None => dataset_from_str(RADIATA_CSV, &format),
        }
    }

    pub fn radiata_model(which: u8, path: Option<&Path>) -> Result<PotentialSpec> {
        let data = radiata_dataset(path)?;
        let design = radiata_design(&data, which)?;
        let (mu0, p0, lam) = radiata_prior();
        Ok(linear_regression_potential(&design, &mu0, &p0, lam)?
            .with_name(format!("radiata-m{which}")))
    }

    /// Pima-style logistic model over standardized predictors.
    ///
    /// Model 1 uses (intercept, npreg, glu, bmi, ped); model 2 adds age. The
    /// intercept column is excluded from standardization. When no path is
    /// given a bundled synthetic dataset with the same schema is used.
    pub fn pima_design(data: &RegressionDataset, which: u8) -> Result<RegressionDataset> {
        let mut names: Vec<&str> = vec!["npreg", "glu", "bmi", "ped"];
        match which {
            1 => {}
            2 => names.push("age"),
            _ => return Err(LogzError::Config(format!("pima model must be 1 or 2, got {which}"))),
        }
        let p = data.len();
        let mut design = DMatrix::zeros(p, names.len() + 1);
        let mut column_names = vec!["intercept".to_string()];
        for i in 0..p {
            design[(i, 0)] = 1.0;
        }
        for (j, name) in names.iter().enumerate() {
            let col = data.column(name)?;
            for i in 0..p {
                design[(i, j + 1)] = col[i];
            }
            column_names.push((*name).to_string());
        }
        Ok(RegressionDataset {
            responses: data.responses.clone(),
            covariates: design,
            column_names,
        })
    }

    pub fn pima_dataset(path: Option<&Path>) -> Result<RegressionDataset> {
        let format = CsvFormat {
            response: "type".into(),
            transform: ColumnTransform::Standardize,
        };
        match path {
            Some(p) => load_dataset(p, &format),
            None => dataset_from_str(PIMA_CSV, &format),
        }
    }

    pub const PIMA_PRIOR_PRECISION: f64 = 0.01;

    pub fn pima_model(which: u8, path: Option<&Path>) -> Result<PotentialSpec> {
        let data = pima_dataset(path)?;
        let design = pima_design(&data, which)?;
        Ok(logistic_regression_potential(&design, PIMA_PRIOR_PRECISION)?
            .with_name(format!("pima-m{which}")))
    }

    /// One-dimensional `U(x) = x^2/2 + log cosh x`: m = 1, L = 2, and the
    /// third derivative of log cosh is bounded by 4/(3 sqrt 3).
    pub fn log_cosh_1d() -> Result<PotentialSpec> {
        let energy: EnergyFn = Arc::new(|x: &[f64]| {
            let t = x[0];
            0.5 * t * t + log_cosh(t)
        });
        let gradient: GradientFn = Arc::new(|x: &[f64], out: &mut [f64]| {
            out[0] = x[0] + x[0].tanh();
        });
        Ok(PotentialSpec::new(1, 1.0, 2.0, energy, gradient)?
            .with_name("log-cosh-1d")
            .with_hessian_lipschitz(4.0 / (3.0 * 3.0_f64.sqrt()))
            .with_growth(1.0, 0.5))
    }

    fn log_cosh(t: f64) -> f64 {
        // log cosh t = |t| + log(1 + e^{-2|t|}) - log 2, overflow-safe
        let a = t.abs();
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }
}
