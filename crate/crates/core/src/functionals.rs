//! Estimators and exact oracles for the correlation functionals: the
//! second-order constant `Lambda`, the thin-shell parameter `sigma4^2`, the
//! directional moments `M_2` and `M_4`, the squared-coordinate functional
//! `V`, and the sub-exponential scale `beta`, together with the checker for
//! the moment inequalities relating them.
//!
//! `Lambda` is the top eigenvalue of the covariance operator of the matrix
//! variable `X X^T` acting on symmetric matrices. The estimator applies the
//! empirical operator implicitly — one `O(m n^2)` pass per iteration — so
//! the `n^2 x n^2` covariance is never materialized. The exact oracle
//! (finite supports only) builds the operator densely on an orthonormal
//! basis of symmetric matrices and calls a dense symmetric eigensolver.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::FiniteSupport;
use crate::rng::{derive_seed, stream_rng};
use crate::sphere::DirectionSet;
use crate::zoo::{ExactMoments, SampleBatch};

/// Number of sub-batches used for split-based standard errors.
const SPLIT_FOLDS: usize = 8;

/// A point estimate with a standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Thin-shell parameter estimate: unbiased sample variance of `|X_k|^2`
/// divided by `n`; the standard error comes from the delta method through
/// the fourth central moment of `|X|^2`.
pub fn sigma4sq(batch: &SampleBatch) -> Result<Estimate> {
    if batch.rows() < 2 {
        return Err(Error::invalid("sigma4sq needs at least two rows"));
    }
    let m = batch.rows() as f64;
    let n = batch.dim() as f64;
    let sq: Vec<f64> = batch
        .iter_rows()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let mean = sq.iter().sum::<f64>() / m;
    let var = sq.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (m - 1.0);
    let mu4 = sq.iter().map(|s| (s - mean).powi(4)).sum::<f64>() / m;
    let var_of_var = ((mu4 - var * var).max(0.0)) / m;
    Ok(Estimate {
        value: var / n,
        stderr: var_of_var.sqrt() / n,
    })
}

/// Result of the implicit power iteration for `Lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Rayleigh quotient after each application of the operator
    /// (nondecreasing for a positive semi-definite operator).
    pub rayleigh_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Achieving direction: symmetric `n x n` matrix of unit HS norm,
    /// row-major.
    pub top_matrix: Vec<f64>,
    /// Whether the eigengap stall detector triggered a restart.
    pub restarted: bool,
    /// Estimated upward small-sample bias of the top eigenvalue, read off
    /// the sub-batch estimates: at an (almost) degenerate top eigenspace the
    /// bias scales like `m^{-1/2}`, so the eighth-size sub-batches overshoot
    /// by `sqrt(8)` times as much as the full batch.
    pub bias_hint: f64,
}

/// Random symmetric start matrix of unit HS norm.
fn start_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 0);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let mut a = (&g + g.transpose()) * 0.5;
    let norm = a.norm();
    a /= norm;
    a
}

struct PowerRun {
    value: f64,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
    stalled: bool,
    top: Vec<f64>,
}

/// One power-iteration run. The covariance operator of `X X^T` is applied
/// implicitly through two dense products per iteration:
/// `C(A) = (X^T diag(q - q_bar) X - (sum dq) W_bar) / (m - 1)` with
/// `q_k = <A x_k, x_k>` read off `Y = X A`.
fn power_run(rows: &[f64], m: usize, n: usize, max_iters: usize, tol: f64, seed: u64) -> Result<PowerRun> {
    let x = DMatrix::from_row_slice(m, n, rows);
    let xt = x.transpose();
    let w_bar = (&xt * &x) / m as f64;
    let mut a = start_matrix(n, seed);
    let mut z = DMatrix::<f64>::zeros(m, n);
    let mut q = vec![0.0f64; m];

    let mut history = Vec::with_capacity(32);
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let y = &x * &a;
        let xs = x.as_slice();
        let ys = y.as_slice();
        q.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            let xc = &xs[j * m..(j + 1) * m];
            let yc = &ys[j * m..(j + 1) * m];
            for (qk, (xv, yv)) in q.iter_mut().zip(xc.iter().zip(yc)) {
                *qk += xv * yv;
            }
        }
        let q_bar = q.iter().sum::<f64>() / m as f64;
        let mut dq_sum = 0.0;
        let zs = z.as_mut_slice();
        for j in 0..n {
            let xc = &xs[j * m..(j + 1) * m];
            let zc = &mut zs[j * m..(j + 1) * m];
            for k in 0..m {
                zc[k] = xc[k] * (q[k] - q_bar);
            }
        }
        for &qk in &q {
            dq_sum += qk - q_bar;
        }
        let mut b = &xt * &z;
        b -= &w_bar * dq_sum;
        b /= m as f64 - 1.0;

        let ray = b.dot(&a);
        if !ray.is_finite() {
            return Err(Error::NumericFailure("Rayleigh quotient is not finite".into()));
        }
        history.push(ray);
        let norm = b.norm();
        if !norm.is_finite() {
            return Err(Error::NumericFailure("iterate norm is not finite".into()));
        }
        if norm == 0.0 {
            // Zero operator (e.g. a deterministic |X| with a point support).
            return Ok(PowerRun {
                value: 0.0,
                history,
                iterations,
                converged: true,
                stalled: false,
                top: a.as_slice().to_vec(),
            });
        }
        b /= norm;
        if let Some(p) = prev {
            if (ray - p).abs() <= tol * ray.abs().max(f64::MIN_POSITIVE) {
                let drift = (&b - &a).norm();
                // Rayleigh has settled; a still-moving iterate signals a
                // (near-)degenerate top eigenspace.
                stalled = drift > tol.sqrt().max(1e-6) * 10.0;
                a = b;
                converged = true;
                break;
            }
        }
        prev = Some(ray);
        a = b;
    }
    let value = *history.last().expect("at least one iteration");
    Ok(PowerRun {
        value,
        history,
        iterations,
        converged,
        stalled,
        // Symmetric matrix: storage order does not matter.
        top: a.as_slice().to_vec(),
    })
}

/// Estimates `Lambda` by implicit power iteration on the empirical
/// covariance operator restricted to symmetric matrices. The standard error
/// comes from recomputing the estimate on eight disjoint sub-batches.
pub fn lambda_power(batch: &SampleBatch, max_iters: usize, tol: f64, seed: u64) -> Result<LambdaEstimate> {
    let (m, n) = (batch.rows(), batch.dim());
    if m < n + 2 {
        return Err(Error::invalid(format!("lambda_power needs m >= n + 2, got m={m}, n={n}")));
    }
    if max_iters == 0 || !(tol > 0.0) {
        return Err(Error::invalid("max_iters >= 1 and tol > 0 required"));
    }
    let rows = batch.data();
    let mut run = power_run(rows, m, n, max_iters, tol, derive_seed(seed, 1))?;
    let mut restarted = false;
    if run.stalled {
        // Top eigenspace may be degenerate; one fresh start, keep the max.
        let rerun = power_run(rows, m, n, max_iters, tol, derive_seed(seed, 2))?;
        restarted = true;
        if rerun.value > run.value {
            run = rerun;
        }
    }

    // Sub-batch estimates for the standard error and the bias hint.
    let fold = m / SPLIT_FOLDS;
    let (stderr, bias_hint) = if fold >= n + 2 {
        let vals: Vec<f64> = (0..SPLIT_FOLDS)
            .map(|j| {
                let sub = &rows[j * fold * n..(j + 1) * fold * n];
                power_run(sub, fold, n, max_iters, tol, derive_seed(seed, 3 + j as u64))
                    .map(|r| r.value)
            })
            .collect::<Result<_>>()?;
        let mean = vals.iter().sum::<f64>() / SPLIT_FOLDS as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (SPLIT_FOLDS as f64 - 1.0);
        let bias = ((mean - run.value) / ((SPLIT_FOLDS as f64).sqrt() - 1.0)).max(0.0);
        ((var / SPLIT_FOLDS as f64).sqrt(), bias)
    } else {
        (0.0, 0.0)
    };

    Ok(LambdaEstimate {
        value: run.value,
        stderr,
        rayleigh_history: run.history,
        iterations: run.iterations,
        converged: run.converged,
        top_matrix: run.top,
        restarted,
        bias_hint,
    })
}

/// Exact `Lambda` of a finite-support law: dense covariance operator on the
/// HS-orthonormal basis of symmetric matrices (`e_i e_i^T` on the diagonal,
/// `(e_i e_j^T + e_j e_i^T)/sqrt(2)` off it), top eigenvalue by a dense
/// symmetric eigensolver.
pub fn lambda_exact_discrete(support: &FiniteSupport) -> Result<f64> {
    if support.len() > 1 << 20 {
        return Err(Error::ResourceLimit(format!(
            "exact Lambda limited to 2^20 atoms, got {}",
            support.len()
        )));
    }
    let n = support.dim();
    let d = n * (n + 1) / 2;
    let sqrt2 = std::f64::consts::SQRT_2;

    // Coordinates of x x^T in the orthonormal basis.
    let coords = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for &xi in x {
            out.push(xi * xi);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(sqrt2 * x[i] * x[j]);
            }
        }
    };

    let mut y_bar = vec![0.0f64; d];
    let mut y = Vec::with_capacity(d);
    for (x, p) in support.iter() {
        coords(x, &mut y);
        for (b, v) in y_bar.iter_mut().zip(&y) {
            *b += p * v;
        }
    }

    let atoms: Vec<(usize, f64)> = support.probs().iter().copied().enumerate().collect();
    let partials: Vec<Vec<f64>> = atoms
        .par_chunks(1024)
        .map(|chunk| {
            let mut acc = vec![0.0f64; d * d];
            let mut y = Vec::with_capacity(d);
            for &(k, p) in chunk {
                coords(support.point(k), &mut y);
                for i in 0..d {
                    let w = p * (y[i] - y_bar[i]);
                    let base = i * d;
                    for j in 0..d {
                        acc[base + j] += w * (y[j] - y_bar[j]);
                    }
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![0.0f64; d * d];
    for p in partials {
        for (c, v) in cov.iter_mut().zip(p) {
            *c += v;
        }
    }

    let mat = DMatrix::from_row_slice(d, d, &cov);
    let eig = mat.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Top eigenvalue of the sample covariance matrix of a derived coordinate
/// map (columns centered, Gram product).
fn top_cov_eigenvalue(batch: &SampleBatch, map: impl Fn(&[f64], &mut [f64]) + Sync) -> f64 {
    let n = batch.dim();
    let m = batch.rows();
    let mut buf = vec![0.0f64; n];
    let mut centered = DMatrix::<f64>::zeros(m, n);
    {
        let cs = centered.as_mut_slice();
        for (k, row) in batch.iter_rows().enumerate() {
            map(row, &mut buf);
            for j in 0..n {
                cs[j * m + k] = buf[j];
            }
        }
        for j in 0..n {
            let col = &mut cs[j * m..(j + 1) * m];
            let mean = col.iter().sum::<f64>() / m as f64;
            col.iter_mut().for_each(|v| *v -= mean);
        }
    }
    let cov = centered.transpose() * &centered / (m as f64 - 1.0);
    cov.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `V(X)`: top eigenvalue of the sample covariance of the squared
/// coordinates.
pub fn v_functional(batch: &SampleBatch) -> Result<f64> {
    if batch.rows() < batch.dim() + 2 {
        return Err(Error::invalid("v_functional needs m >= n + 2"));
    }
    Ok(top_cov_eigenvalue(batch, |row, dst| {
        for (d, x) in dst.iter_mut().zip(row) {
            *d = x * x;
        }
    }))
}

/// `M_2`: square root of the top eigenvalue of the sample covariance.
pub fn m2(batch: &SampleBatch) -> Result<f64> {
    if batch.rows() < batch.dim() + 2 {
        return Err(Error::invalid("m2 needs m >= n + 2"));
    }
    Ok(top_cov_eigenvalue(batch, |row, dst| dst.copy_from_slice(row)).sqrt())
}

/// Two-sided bracket for `M_4`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct M4Estimate {
    /// Best directional fourth moment found by multi-start projected ascent
    /// (a certified lower bound up to sampling error).
    pub lower: f64,
    /// `(M_2^4 + Lambda)^(1/4)` from the moment inequality.
    pub upper: f64,
    /// Standard error of `lower^4` at the achieving direction.
    pub lower_fourth_stderr: f64,
}

/// Estimates `M_4 = sup_theta (E S_theta^4)^{1/4}` from below by projected
/// gradient ascent started at the given directions, and from above through
/// `M_4^4 <= M_2^4 + Lambda`.
pub fn m4(
    batch: &SampleBatch,
    dirs: &DirectionSet,
    ascent_steps: usize,
    lambda_hat: f64,
) -> Result<M4Estimate> {
    let (m, n) = (batch.rows(), batch.dim());
    if m < n + 2 {
        return Err(Error::invalid("m4 needs m >= n + 2"));
    }
    if dirs.is_empty() {
        return Err(Error::invalid("m4 needs at least one start direction"));
    }
    if dirs.directions()[0].dim() != n {
        return Err(Error::invalid("direction dimension mismatch"));
    }
    let k = dirs.len();
    let inv_m = 1.0 / m as f64;
    let step = 0.1 / (n as f64).sqrt();

    // All starts march in lockstep: the projections P = X Theta and the
    // gradients G = (4/m) X^T P^3 are dense products.
    let x = DMatrix::from_row_slice(m, n, batch.data());
    let xt = x.transpose();
    let mut theta = DMatrix::<f64>::zeros(n, k);
    for (c, d) in dirs.iter().enumerate() {
        for (r, v) in d.coords().iter().enumerate() {
            theta[(r, c)] = *v;
        }
    }
    let mut cubes = DMatrix::<f64>::zeros(m, k);
    let mut best = f64::NEG_INFINITY;
    let mut best_theta = vec![0.0f64; n];

    let eval = |theta: &DMatrix<f64>, cubes: &mut DMatrix<f64>, best: &mut f64, best_theta: &mut [f64]| {
        let p = &x * theta;
        let ps = p.as_slice();
        let cs = cubes.as_mut_slice();
        for c in 0..k {
            let col = &ps[c * m..(c + 1) * m];
            let ccol = &mut cs[c * m..(c + 1) * m];
            let mut obj = 0.0;
            for (src, dst) in col.iter().zip(ccol.iter_mut()) {
                let s2 = src * src;
                obj += s2 * s2;
                *dst = s2 * src;
            }
            obj *= inv_m;
            if obj > *best {
                *best = obj;
                for (bt, tv) in best_theta.iter_mut().zip(theta.column(c).iter()) {
                    *bt = *tv;
                }
            }
        }
    };

    eval(&theta, &mut cubes, &mut best, &mut best_theta);
    for _ in 0..ascent_steps {
        let grad = &xt * &cubes * (4.0 * inv_m);
        theta += grad * step;
        for mut col in theta.column_iter_mut() {
            let norm = col.norm();
            col /= norm;
        }
        eval(&theta, &mut cubes, &mut best, &mut best_theta);
    }

    // Sampling noise of the fourth moment at the achieving direction.
    let lower_fourth_stderr = {
        let vals: Vec<f64> = batch
            .iter_rows()
            .map(|row| {
                let mut s = 0.0;
                for i in 0..n {
                    s += row[i] * best_theta[i];
                }
                let s2 = s * s;
                s2 * s2
            })
            .collect();
        let mean = vals.iter().sum::<f64>() * inv_m;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        (var / m as f64).sqrt()
    };

    let m2_val = m2(batch)?;
    Ok(M4Estimate {
        lower: best.powf(0.25),
        upper: (m2_val.powi(4) + lambda_hat).powf(0.25),
        lower_fourth_stderr,
    })
}

/// Smallest `beta > 0` with `mean exp(|s|/beta) <= 2`, by bisection on the
/// bracket `[max|s|/50, 50 max|s|]` to relative tolerance 1e-6.
pub fn psi1_beta(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("psi1_beta needs a non-empty sample"));
    }
    let max_abs = samples.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    if max_abs == 0.0 {
        return Err(Error::DegenerateInput("all samples are zero".into()));
    }
    let h = |beta: f64| -> f64 {
        samples.iter().map(|s| (s.abs() / beta).exp()).sum::<f64>() / samples.len() as f64
    };
    let mut lo = max_abs / 50.0;
    let mut hi = 50.0 * max_abs;
    if h(lo) <= 2.0 {
        return Ok(lo);
    }
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Point estimates for all functionals of one batch.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalEstimates {
    pub lambda_hat: f64,
    pub lambda_stderr: f64,
    /// Upward-bias allowance for `lambda_hat` (see [`LambdaEstimate`]).
    pub lambda_bias_hint: f64,
    pub sigma4sq_hat: f64,
    pub sigma4sq_stderr: f64,
    pub m2_hat: f64,
    pub m4_hat: f64,
    pub m4_fourth_stderr: f64,
    pub m4_upper: f64,
    pub v_hat: f64,
    pub v_stderr: f64,
    pub beta_hat: Option<f64>,
    pub bar_beta4_hat: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

/// Options for [`estimate_functionals`].
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub m4_starts: usize,
    pub m4_steps: usize,
    /// Directions probed for the `psi_1` scale (0 skips `beta`).
    pub beta_dirs: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            max_iters: 500,
            tol: 1e-6,
            m4_starts: 64,
            m4_steps: 50,
            beta_dirs: 16,
        }
    }
}

/// Runs every estimator on a batch.
pub fn estimate_functionals(batch: &SampleBatch, seed: u64, opts: EstimateOptions) -> Result<FunctionalEstimates> {
    let n = batch.dim();
    let m_rows = batch.rows();
    let lambda = lambda_power(batch, opts.max_iters, opts.tol, derive_seed(seed, 11))?;
    let s4 = sigma4sq(batch)?;
    let m2_val = m2(batch)?;
    let dirs = crate::sphere::sample_directions(n, opts.m4_starts, derive_seed(seed, 12), false)?;
    let m4_est = m4(batch, &dirs, opts.m4_steps, lambda.value)?;
    let v = v_functional(batch)?;
    let v_stderr = {
        let fold = m_rows / SPLIT_FOLDS;
        if fold >= n + 2 {
            let vals: Vec<f64> = (0..SPLIT_FOLDS)
                .map(|j| {
                    let sub = SampleBatch::from_raw(
                        batch.data()[j * fold * n..(j + 1) * fold * n].to_vec(),
                        batch.model().clone(),
                        batch.seed(),
                        fold,
                        n,
                    )?;
                    v_functional(&sub)
                })
                .collect::<Result<_>>()?;
            let mean = vals.iter().sum::<f64>() / SPLIT_FOLDS as f64;
            let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (SPLIT_FOLDS as f64 - 1.0);
            (var / SPLIT_FOLDS as f64).sqrt()
        } else {
            0.0
        }
    };
    let beta_hat = if opts.beta_dirs > 0 {
        let beta_dirs = crate::sphere::sample_directions(n, opts.beta_dirs, derive_seed(seed, 13), false)?;
        let mut best: f64 = 0.0;
        for theta in beta_dirs.iter() {
            let proj: Vec<f64> = batch.iter_rows().map(|r| theta.dot(r)).collect();
            best = best.max(psi1_beta(&proj)?);
        }
        Some(best)
    } else {
        None
    };
    let m = batch.rows() as f64;
    let bar_beta4 = batch
        .iter_rows()
        .map(|r| r.iter().map(|x| x.powi(4)).sum::<f64>())
        .sum::<f64>()
        / (m * n as f64);
    Ok(FunctionalEstimates {
        lambda_hat: lambda.value,
        lambda_stderr: lambda.stderr,
        lambda_bias_hint: lambda.bias_hint,
        sigma4sq_hat: s4.value,
        sigma4sq_stderr: s4.stderr,
        m2_hat: m2_val,
        m4_hat: m4_est.lower,
        m4_fourth_stderr: m4_est.lower_fourth_stderr,
        m4_upper: m4_est.upper,
        v_hat: v,
        v_stderr,
        beta_hat,
        bar_beta4_hat: bar_beta4,
        n,
        m: batch.rows(),
        seed,
    })
}

/// One inequality comparison: `lhs <= rhs + slack` expected.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub margin: f64,
    pub applicable: bool,
    pub pass: bool,
}

impl BoundCheck {
    fn applicable(name: &'static str, lhs: f64, rhs: f64, slack: f64) -> Self {
        BoundCheck {
            name,
            lhs,
            rhs,
            slack,
            margin: rhs + slack - lhs,
            applicable: true,
            pass: lhs <= rhs + slack,
        }
    }

    fn inapplicable(name: &'static str) -> Self {
        BoundCheck {
            name,
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: 0.0,
            margin: f64::NAN,
            applicable: false,
            pass: true,
        }
    }
}

/// Per-inequality outcomes of the moment-bound checks.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
    pub all_pass: bool,
}

/// Evaluates every moment inequality applicable to a model class (gated by
/// the structural flags of `meta`) with three-standard-error slack. Checks
/// with `lambda_hat` on the small side additionally carry its upward-bias
/// allowance: several inequalities (e.g. `Lambda <= 2 E X^4` for signs) are
/// exactly tight, and the top-eigenvalue estimator overshoots at degenerate
/// top eigenspaces.
pub fn check_bounds(est: &FunctionalEstimates, meta: &ExactMoments, n: usize) -> BoundReport {
    let nf = n as f64;
    let se_l = est.lambda_stderr;
    let lambda_up = 3.0 * se_l + est.lambda_bias_hint;
    let mut checks = vec![
        BoundCheck::applicable(
            "prop21a_m4_le_m2_lambda",
            est.m4_hat.powi(4),
            est.m2_hat.powi(4) + est.lambda_hat,
            3.0 * (se_l + est.m4_fourth_stderr),
        ),
        BoundCheck::applicable(
            "prop21b_sigma4_le_lambda",
            est.sigma4sq_hat,
            est.lambda_hat,
            3.0 * (est.sigma4sq_stderr + se_l),
        ),
        BoundCheck::applicable(
            "prop22_lambda_lower",
            (nf - 1.0) / nf,
            est.lambda_hat,
            3.0 * se_l,
        ),
        match meta.e_x4 {
            Some(e4) if meta.iid => BoundCheck::applicable(
                "prop31_lambda_le_2_ex4",
                est.lambda_hat,
                2.0 * e4,
                lambda_up,
            ),
            _ => BoundCheck::inapplicable("prop31_lambda_le_2_ex4"),
        },
    ];
    if meta.coordinate_symmetric {
        checks.push(BoundCheck::applicable(
            "prop32_v_le_lambda",
            est.v_hat,
            est.lambda_hat,
            3.0 * (se_l + est.v_stderr),
        ));
        checks.push(match meta.e_x4 {
            Some(e4) => BoundCheck::applicable(
                "prop32_lambda_le_2_ex4_plus_v",
                est.lambda_hat,
                2.0 * e4 + est.v_hat,
                lambda_up + 3.0 * est.v_stderr,
            ),
            None => BoundCheck::inapplicable("prop32_lambda_le_2_ex4_plus_v"),
        });
    } else {
        checks.push(BoundCheck::inapplicable("prop32_v_le_lambda"));
        checks.push(BoundCheck::inapplicable("prop32_lambda_le_2_ex4_plus_v"));
    }
    checks.push(match meta.lambda1 {
        Some(l1) if l1 > 0.0 => BoundCheck::applicable(
            "prop34_lambda_le_4_over_lambda1",
            est.lambda_hat,
            4.0 / l1,
            lambda_up,
        ),
        _ => BoundCheck::inapplicable("prop34_lambda_le_4_over_lambda1"),
    });

    let all_pass = checks.iter().all(|c| c.pass);
    BoundReport { checks, all_pass }
}
