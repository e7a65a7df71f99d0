//! Concentration of the characteristic functions `f_theta(t) = E e^{itS_theta}`
//! over the sphere: per-direction empirical (or exact) values, the
//! direction-variance profile against the first-order bound `t^2/(n-1)` and
//! the second-order shape `Lambda t^4 / n^2`, the Hessian deviation checks,
//! and the Berry-Esseen-type smoothing bound evaluator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::FiniteSupport;
use crate::rng::derive_seed;
use crate::sphere::{sample_directions, UnitVector};
use crate::zoo::{sample_batch, DistributionModel, SampleBatch};

/// Empirical characteristic function of `S_theta` at `t`:
/// `(1/m) sum_k exp(i t <x_k, theta>)`.
pub fn empirical_cf(batch: &SampleBatch, theta: &UnitVector, t: f64) -> Result<Complex64> {
    if batch.dim() != theta.dim() {
        return Err(Error::invalid("batch and direction dimensions differ"));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for row in batch.iter_rows() {
        let p = theta.dot(row);
        let (s, c) = (t * p).sin_cos();
        re += c;
        im += s;
    }
    let m = batch.rows() as f64;
    Ok(Complex64::new(re / m, im / m))
}

/// Exact characteristic function of `S_theta` for a finite-support law.
pub fn exact_cf_support(support: &FiniteSupport, theta: &UnitVector, t: f64) -> Result<Complex64> {
    if support.dim() != theta.dim() {
        return Err(Error::invalid("support and direction dimensions differ"));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, p) in support.iter() {
        let (s, c) = (t * theta.dot(x)).sin_cos();
        re += p * c;
        im += p * s;
    }
    Ok(Complex64::new(re, im))
}

/// One grid point of a concentration profile.
#[derive(Debug, Clone, Serialize)]
pub struct CfRow {
    pub t: f64,
    /// Bias-corrected estimate of `E_theta |f_theta(t) - f(t)|^2` (may dip
    /// slightly below zero).
    pub variance_hat: f64,
    pub stderr: f64,
    /// `E_theta |f_theta(t) - f(t)|` (needed by the smoothing bound).
    pub first_abs_moment: f64,
    /// First-order bound `t^2/(n-1)`.
    pub bound_first_order: f64,
    /// Second-order shape `Lambda t^4 / n^2` (absolute constant unknown).
    pub bound_second_shape: f64,
    /// Whether `|t| <= n^{1/6}`, the validity range of the second-order
    /// bound.
    pub inside_t_range: bool,
}

/// Direction-concentration profile of the characteristic functions on a
/// `t`-grid.
#[derive(Debug, Clone, Serialize)]
pub struct CfProfile {
    pub rows: Vec<CfRow>,
    pub n: usize,
    pub n_theta: usize,
    /// Sample count per direction; 0 marks the exact path.
    pub m: usize,
    pub seed: u64,
    /// `Lambda` used for the second-order shape.
    pub lambda_hat: f64,
    /// Per-direction values, `rows`-major: `per_direction[ti][d]`.
    #[serde(skip)]
    pub per_direction: Vec<Vec<Complex64>>,
}

impl CfProfile {
    /// Writes the documented CSV layout.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "t,variance_hat,stderr,first_abs_moment,bound_first,bound_second_shape,inside_t_range"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                r.variance_hat,
                r.stderr,
                r.first_abs_moment,
                r.bound_first_order,
                r.bound_second_shape,
                r.inside_t_range as u8
            )?;
        }
        Ok(())
    }
}

/// Default profile grid: 64 geometric points from 0.05 to `n^{1/6}` plus the
/// smoothing-bound endpoint `T0 = 5 sqrt(log n)`.
pub fn default_t_grid(n: usize) -> Vec<f64> {
    let lo: f64 = 0.05;
    let hi = (n as f64).powf(1.0 / 6.0);
    let count = 64i32;
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let t0 = 5.0 * (n as f64).ln().sqrt();
    let mut grid: Vec<f64> = (0..count)
        .map(|i| lo * ratio.powi(i))
        .chain(std::iter::once(t0))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// How per-direction characteristic functions are evaluated.
enum CfValues {
    /// Exact values (product law or full enumeration): no sampling noise.
    Exact,
    /// Shared empirical batch of `m` rows.
    Shared(Box<SampleBatch>),
}

/// Builds the concentration profile over `n_theta` directions. `m = 0`
/// selects the exact path (product families or enumerable supports); a
/// positive `m` draws one shared batch reused by every direction, with the
/// per-direction Monte Carlo noise `~(1-|f|^2)/m` subtracted from the raw
/// direction variance.
pub fn cf_profile(
    model: &DistributionModel,
    n: usize,
    t_grid: &[f64],
    n_theta: usize,
    m: usize,
    seed: u64,
) -> Result<CfProfile> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid("t grid must be non-empty and strictly positive"));
    }
    if n_theta < 30 {
        return Err(Error::invalid("cf_profile needs at least 30 directions"));
    }
    let dirs = sample_directions(n, n_theta, derive_seed(seed, 21), false)?;

    let source = if m == 0 {
        if model.coordinate_cf(0.0).is_none() && !model.has_finite_support() {
            return Err(Error::Unsupported(format!(
                "exact characteristic functions are not available for {}",
                model.name()
            )));
        }
        CfValues::Exact
    } else {
        CfValues::Shared(Box::new(sample_batch(model, n, m, derive_seed(seed, 22))?))
    };
    let support = if m == 0 && model.coordinate_cf(0.0).is_none() {
        Some(crate::zoo::enumerate_support(model, n, 1 << 20)?)
    } else {
        None
    };

    // values[ti][d]
    let cells: Vec<Vec<Complex64>> = t_grid
        .par_iter()
        .map(|&t| {
            dirs.iter()
                .map(|theta| match &source {
                    CfValues::Exact => match model.exact_cf(theta.coords(), t) {
                        Some(v) => Complex64::new(v, 0.0),
                        None => exact_cf_support(support.as_ref().expect("support built"), theta, t)
                            .expect("dimensions agree"),
                    },
                    CfValues::Shared(batch) => {
                        empirical_cf(batch, theta, t).expect("dimensions agree")
                    }
                })
                .collect()
        })
        .collect();

    let meta = model.exact_metadata(n);
    let lambda_hat = match meta.lambda {
        Some(l) => l,
        None => match &source {
            CfValues::Shared(batch) => {
                crate::functionals::lambda_power(batch, 200, 1e-5, derive_seed(seed, 23))?.value
            }
            CfValues::Exact => f64::NAN,
        },
    };

    let nf = n as f64;
    let n_range = nf.powf(1.0 / 6.0);
    let rows: Vec<CfRow> = t_grid
        .iter()
        .zip(&cells)
        .map(|(&t, vals)| {
            let nd = vals.len() as f64;
            let mean = vals.iter().sum::<Complex64>() / nd;
            let corr = |f: &Complex64| -> f64 {
                if m == 0 {
                    0.0
                } else {
                    (1.0 - f.norm_sqr()).max(0.0) / m as f64
                }
            };
            let z: Vec<f64> = vals
                .iter()
                .map(|f| (f - mean).norm_sqr() * nd / (nd - 1.0) - corr(f))
                .collect();
            let variance_hat = z.iter().sum::<f64>() / nd;
            let var_z = z.iter().map(|v| (v - variance_hat) * (v - variance_hat)).sum::<f64>() / (nd - 1.0);
            let stderr = (var_z / nd).sqrt();
            let first_abs = vals.iter().map(|f| (f - mean).norm()).sum::<f64>() / nd;
            CfRow {
                t,
                variance_hat,
                stderr,
                first_abs_moment: first_abs,
                bound_first_order: t * t / (nf - 1.0),
                bound_second_shape: lambda_hat * t.powi(4) / (nf * nf),
                inside_t_range: t <= n_range,
            }
        })
        .collect();

    Ok(CfProfile {
        rows,
        n,
        n_theta,
        m,
        seed,
        lambda_hat,
        per_direction: cells,
    })
}

/// Hessian deviation of `u_t` at one direction: `H_jk = -t^2 E X_j X_k
/// e^{itS_theta}` against the centering `a(theta) = -t^2 f_theta(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct HessianCheck {
    /// `||H - a(theta) I||_HS^2`, expected `<= Lambda t^4`.
    pub hs_norm_sq: f64,
    /// `||H - a(theta) I||` (operator norm), expected `<= 2 t^2`.
    pub op_norm: f64,
    /// `a(theta) = -t^2 f_theta(t)`.
    pub a_theta: Complex64,
    pub t: f64,
    pub hs_bound: f64,
    pub op_bound: f64,
    pub stderr_hs: f64,
    pub stderr_op: f64,
    pub pass_hs: bool,
    pub pass_op: bool,
}

/// Accumulates the complex Hessian (as `-t^2` times the empirical second
/// moment matrix under the oscillation) for a row block.
fn hessian_from_rows(rows: &[f64], n: usize, theta: &[f64], t: f64) -> (Vec<Complex64>, Complex64) {
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    let mut f = Complex64::new(0.0, 0.0);
    for row in rows.chunks_exact(n) {
        let mut p = 0.0;
        for i in 0..n {
            p += row[i] * theta[i];
        }
        let (s, c) = (t * p).sin_cos();
        f += Complex64::new(c, s);
        for i in 0..n {
            let base = i * n;
            let xi = row[i];
            for j in 0..n {
                let w = xi * row[j];
                h[base + j] += Complex64::new(w * c, w * s);
            }
        }
    }
    (h, f)
}

fn hessian_stats(h: &[Complex64], f: Complex64, count: f64, n: usize, t: f64) -> (f64, f64, Complex64) {
    let t2 = t * t;
    let a = Complex64::new(-t2, 0.0) * (f / count);
    let mut dev: Vec<Complex64> = h
        .iter()
        .map(|v| Complex64::new(-t2, 0.0) * (v / count))
        .collect();
    for i in 0..n {
        dev[i * n + i] -= a;
    }
    let hs: f64 = dev.iter().map(|v| v.norm_sqr()).sum();
    (hs, op_norm_complex(&dev, n), a)
}

/// Largest singular value of a complex matrix via the real embedding
/// `[[Re, -Im], [Im, Re]]`.
fn op_norm_complex(m: &[Complex64], n: usize) -> f64 {
    let d = 2 * n;
    let mut b = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            let v = m[i * n + j];
            b[(i, j)] = v.re;
            b[(i, j + n)] = -v.im;
            b[(i + n, j)] = v.im;
            b[(i + n, j + n)] = v.re;
        }
    }
    let g = b.transpose() * &b;
    let top = g
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    top.max(0.0).sqrt()
}

fn assemble_check(
    hs: f64,
    op: f64,
    a: Complex64,
    t: f64,
    lambda_hat: f64,
    stderr_hs: f64,
    stderr_op: f64,
) -> HessianCheck {
    let hs_bound = lambda_hat * t.powi(4);
    let op_bound = 2.0 * t * t;
    // Slack scales with the split-based standard errors; exact paths carry
    // only a floating-point allowance.
    let hs_tol = 5.0 * stderr_hs + 1e-9 * hs_bound.max(1.0);
    let op_tol = 5.0 * stderr_op + 1e-9 * op_bound.max(1.0);
    HessianCheck {
        hs_norm_sq: hs,
        op_norm: op,
        a_theta: a,
        t,
        hs_bound,
        op_bound,
        stderr_hs,
        stderr_op,
        pass_hs: hs <= hs_bound + hs_tol,
        pass_op: op <= op_bound + op_tol,
    }
}

/// Empirical Hessian deviation check with split-based standard errors.
pub fn hessian_deviation(
    batch: &SampleBatch,
    theta: &UnitVector,
    t: f64,
    lambda_hat: f64,
) -> Result<HessianCheck> {
    let (m, n) = (batch.rows(), batch.dim());
    if m < n + 2 {
        return Err(Error::invalid("hessian_deviation needs m >= n + 2"));
    }
    if theta.dim() != n {
        return Err(Error::invalid("direction dimension mismatch"));
    }
    let th = theta.coords();
    let (h, f) = hessian_from_rows(batch.data(), n, th, t);
    let (hs, op, a) = hessian_stats(&h, f, m as f64, n, t);

    let folds = 8usize;
    let fold = m / folds;
    let (stderr_hs, stderr_op) = if fold >= n + 2 {
        let stats: Vec<(f64, f64)> = (0..folds)
            .into_par_iter()
            .map(|j| {
                let rows = &batch.data()[j * fold * n..(j + 1) * fold * n];
                let (h, f) = hessian_from_rows(rows, n, th, t);
                let (hs, op, _) = hessian_stats(&h, f, fold as f64, n, t);
                (hs, op)
            })
            .collect();
        let sd = |vals: Vec<f64>| -> f64 {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() as f64 - 1.0);
            (var / vals.len() as f64).sqrt()
        };
        (
            sd(stats.iter().map(|s| s.0).collect()),
            sd(stats.iter().map(|s| s.1).collect()),
        )
    } else {
        (0.0, 0.0)
    };
    Ok(assemble_check(hs, op, a, t, lambda_hat, stderr_hs, stderr_op))
}

/// Exact Hessian deviation check over a finite support.
pub fn hessian_deviation_exact(
    support: &FiniteSupport,
    theta: &UnitVector,
    t: f64,
    lambda_hat: f64,
) -> Result<HessianCheck> {
    let n = support.dim();
    if theta.dim() != n {
        return Err(Error::invalid("direction dimension mismatch"));
    }
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    let mut f = Complex64::new(0.0, 0.0);
    for (x, p) in support.iter() {
        let (s, c) = (t * theta.dot(x)).sin_cos();
        let e = Complex64::new(p * c, p * s);
        f += e;
        for i in 0..n {
            let base = i * n;
            for j in 0..n {
                h[base + j] += x[i] * x[j] * e;
            }
        }
    }
    let (hs, op, a) = hessian_stats(&h, f, 1.0, n, t);
    Ok(assemble_check(hs, op, a, t, lambda_hat, 0.0, 0.0))
}

/// Evaluates the smoothing-inequality bracket
/// `int_0^{T0} E_theta |f_theta - f| dt/t + ((M4^4 + sigma4^2)/n)(1 +
/// log(T/T0)) + 1/T + exp(-T0^2/16)`; the absolute constant in front of the
/// distance is unknown, so the value is a shape, not a certified bound.
pub fn lemma61_bound(
    profile: &CfProfile,
    m4: f64,
    sigma4sq: f64,
    n: usize,
    t0: f64,
    t_cap: f64,
) -> Result<f64> {
    if !(t0 > 0.0) || t_cap < t0 {
        return Err(Error::invalid("need T >= T0 > 0"));
    }
    let max_t = profile.rows.last().map(|r| r.t).unwrap_or(0.0);
    if max_t < t0 * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "profile grid tops out at {max_t}, below T0 = {t0}"
        )));
    }

    // g(t) = E_theta|f_theta - f| / t, linearly extended toward zero by the
    // Lipschitz bound |f_theta(t) - f(t)| <= 2|t|.
    let pts: Vec<(f64, f64)> = profile
        .rows
        .iter()
        .filter(|r| r.t <= t0 * (1.0 + 1e-12))
        .map(|r| (r.t, (r.first_abs_moment / r.t).min(2.0)))
        .collect();
    let mut integral = 0.0;
    if let Some(&(t1, g1)) = pts.first() {
        integral += t1 * g1;
    }
    for w in pts.windows(2) {
        integral += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    // Partial segment up to t0 when the grid passes beyond it.
    if let Some(&(tl, gl)) = pts.last() {
        if tl < t0 {
            if let Some(next) = profile.rows.iter().find(|r| r.t > t0 * (1.0 + 1e-12)) {
                let gn = (next.first_abs_moment / next.t).min(2.0);
                let g_at = gl + (gn - gl) * (t0 - tl) / (next.t - tl);
                integral += 0.5 * (gl + g_at) * (t0 - tl);
            }
        }
    }

    let moment_term = (m4.powi(4) + sigma4sq) / n as f64 * (1.0 + (t_cap / t0).ln());
    Ok(integral + moment_term + 1.0 / t_cap + (-t0 * t0 / 16.0).exp())
}

/// The natural endpoint choices for the smoothing bound.
pub fn lemma61_defaults(n: usize) -> (f64, f64) {
    (5.0 * (n as f64).ln().sqrt(), 5.0 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::enumerate_support;

    #[test]
    fn cf_at_zero_is_one() {
        let b = sample_batch(&DistributionModel::LaplaceIid, 4, 500, 1).unwrap();
        let theta = UnitVector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let f = empirical_cf(&b, &theta, 0.0).unwrap();
        assert_eq!(f, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cf_gaussian_value() {
        let b = sample_batch(&DistributionModel::GaussianStd, 6, 1_000_000, 2).unwrap();
        let dirs = sample_directions(6, 2, 3, false).unwrap();
        let f = empirical_cf(&b, &dirs.directions()[0], 1.0).unwrap();
        let expect = (-0.5f64).exp();
        assert!((f.re - expect).abs() < 3e-3, "{}", f.re);
        assert!(f.im.abs() < 3e-3);
        assert!(f.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn cf_conjugate_symmetry() {
        let b = sample_batch(&DistributionModel::BallUniform, 5, 2_000, 4).unwrap();
        let dirs = sample_directions(5, 3, 5, false).unwrap();
        for theta in dirs.iter() {
            for &t in &[0.3, 1.0, 2.7] {
                let f = empirical_cf(&b, theta, t).unwrap();
                let g = empirical_cf(&b, theta, -t).unwrap();
                assert_eq!(f.re, g.re);
                assert_eq!(f.im, -g.im);
            }
        }
    }

    #[test]
    fn exact_cf_rademacher_axis() {
        let sup = enumerate_support(&DistributionModel::Rademacher, 5, 1 << 20).unwrap();
        let theta = UnitVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        for &t in &[0.3, 1.0, 2.0] {
            let f = exact_cf_support(&sup, &theta, t).unwrap();
            assert!((f.re - t.cos()).abs() < 1e-12);
            assert!(f.im.abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_directions_agree_exactly() {
        // Symmetric law: f_{-theta} = f_theta on the exact path.
        let sup = enumerate_support(&DistributionModel::Rademacher, 6, 1 << 20).unwrap();
        let dirs = sample_directions(6, 4, 9, true).unwrap();
        for pair in dirs.directions().chunks(2) {
            let f = exact_cf_support(&sup, &pair[0], 0.8).unwrap();
            let g = exact_cf_support(&sup, &pair[1], 0.8).unwrap();
            assert!((f - g).norm() < 1e-14);
        }
    }

    #[test]
    fn profile_gaussian_consistent_with_zero() {
        // All directions share f(t) = e^{-t^2/2}; the corrected variance
        // sits at zero within noise.
        let p = cf_profile(&DistributionModel::GaussianStd, 16, &[0.5, 1.0], 64, 20_000, 6).unwrap();
        for row in &p.rows {
            assert!(
                row.variance_hat.abs() <= 3.0 * row.stderr.max(1e-12),
                "t={}: {} +- {}",
                row.t,
                row.variance_hat,
                row.stderr
            );
        }
    }

    #[test]
    fn profile_first_order_bound() {
        for model in [DistributionModel::Rademacher, DistributionModel::LaplaceIid] {
            let p = cf_profile(&model, 16, &[0.5, 1.0, 2.0], 256, 0, 7).unwrap();
            for row in &p.rows {
                assert!(
                    row.variance_hat <= row.bound_first_order + 3.0 * row.stderr,
                    "{} t={}: {} vs {}",
                    model.name(),
                    row.t,
                    row.variance_hat,
                    row.bound_first_order
                );
            }
        }
    }

    #[test]
    fn profile_second_order_ratio_rademacher() {
        // Exact-path oracle: the measured n=16 to n=32 variance ratio at
        // t=1 is ~6.0x (the naive 1/n^2 shape predicts 4x; the next-order
        // spherical moment corrections push it higher).
        let grid = [1.0];
        let p16 = cf_profile(&DistributionModel::Rademacher, 16, &grid, 1 << 15, 0, 8).unwrap();
        let p32 = cf_profile(&DistributionModel::Rademacher, 32, &grid, 1 << 15, 0, 8).unwrap();
        let ratio = p16.rows[0].variance_hat / p32.rows[0].variance_hat;
        assert!((5.4..=6.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn profile_rejects_bad_grid() {
        assert!(cf_profile(&DistributionModel::GaussianStd, 8, &[], 64, 100, 0).is_err());
        assert!(cf_profile(&DistributionModel::GaussianStd, 8, &[0.0], 64, 100, 0).is_err());
        assert!(cf_profile(&DistributionModel::GaussianStd, 8, &[1.0], 8, 100, 0).is_err());
    }

    #[test]
    fn hessian_gaussian_closed_form() {
        // H - a(theta) I = t^4 e^{-t^2/2} theta theta^T exactly, so
        // ||.||_HS^2 = t^8 e^{-t^2}.
        let b = sample_batch(&DistributionModel::GaussianStd, 8, 200_000, 9).unwrap();
        let dirs = sample_directions(8, 2, 10, false).unwrap();
        let t = 1.0;
        let check = hessian_deviation(&b, &dirs.directions()[0], t, 2.0).unwrap();
        let expect = t.powi(8) * (-t * t).exp();
        assert!(
            (check.hs_norm_sq - expect).abs() < 0.02,
            "{} vs {expect}",
            check.hs_norm_sq
        );
        assert!(check.pass_hs && check.pass_op);
    }

    #[test]
    fn hessian_exact_rademacher() {
        let sup = enumerate_support(&DistributionModel::Rademacher, 8, 1 << 20).unwrap();
        let dirs = sample_directions(8, 4, 11, false).unwrap();
        for theta in dirs.iter() {
            for &t in &[0.5, 1.0, 2.0] {
                let check = hessian_deviation_exact(&sup, theta, t, 2.0).unwrap();
                assert!(check.pass_hs, "t={t}: hs {} vs {}", check.hs_norm_sq, check.hs_bound);
                assert!(check.pass_op, "t={t}: op {} vs {}", check.op_norm, check.op_bound);
            }
        }
    }

    #[test]
    fn hessian_vanishes_at_zero() {
        let b = sample_batch(&DistributionModel::UniformCube, 5, 2_000, 12).unwrap();
        let dirs = sample_directions(5, 1, 13, false).unwrap();
        let check = hessian_deviation(&b, &dirs.directions()[0], 0.0, 2.0).unwrap();
        assert_eq!(check.hs_norm_sq, 0.0);
        assert_eq!(check.op_norm, 0.0);
    }

    #[test]
    fn lemma61_log_term() {
        // T = T0 removes the log contribution entirely.
        let p = cf_profile(&DistributionModel::GaussianStd, 16, &default_t_grid(16), 64, 5_000, 14).unwrap();
        let (t0, _) = lemma61_defaults(16);
        let m4 = 3.0f64.powf(0.25);
        let s4 = 2.0;
        let at_t0 = lemma61_bound(&p, m4, s4, 16, t0, t0).unwrap();
        let at_2t0 = lemma61_bound(&p, m4, s4, 16, t0, 2.0 * t0).unwrap();
        let expect_delta = (m4.powi(4) + s4) / 16.0 * 2.0f64.ln() + (1.0 / (2.0 * t0) - 1.0 / t0);
        assert!(((at_2t0 - at_t0) - expect_delta).abs() < 1e-12);
    }

    #[test]
    fn lemma61_gaussian_dominated_by_moment_term() {
        let (t0, t) = lemma61_defaults(16);
        let p = cf_profile(&DistributionModel::GaussianStd, 16, &default_t_grid(16), 64, 20_000, 15).unwrap();
        let m4 = 3.0f64.powf(0.25);
        let bound = lemma61_bound(&p, m4, 2.0, 16, t0, t).unwrap();
        let moment = (3.0 + 2.0) / 16.0 * (1.0 + (t / t0).ln());
        // The integral term is pure Monte Carlo noise here.
        assert!(bound >= moment && bound <= moment + 0.6, "bound {bound} moment {moment}");
    }

    #[test]
    fn lemma61_requires_coverage() {
        let p = cf_profile(&DistributionModel::GaussianStd, 16, &[0.5, 1.0], 64, 2_000, 16).unwrap();
        assert!(lemma61_bound(&p, 1.3, 2.0, 16, 8.0, 80.0).is_err());
    }

    #[test]
    fn lemma61_monotonicity_in_t_matches_sign_rule() {
        let p = cf_profile(&DistributionModel::Rademacher, 16, &default_t_grid(16), 64, 0, 17).unwrap();
        let (t0, _) = lemma61_defaults(16);
        let m4 = 3.0f64.powf(0.25);
        let s4 = 0.0;
        let c = (m4.powi(4) + s4) / 16.0;
        let mut t = t0;
        while t < 200.0 {
            let t_next = t * 1.3;
            let b0 = lemma61_bound(&p, m4, s4, 16, t0, t).unwrap();
            let b1 = lemma61_bound(&p, m4, s4, 16, t0, t_next).unwrap();
            // Difference sign follows c/T - 1/T^2 between the endpoints.
            let sign = c / t - 1.0 / (t * t);
            if sign > 0.0 {
                assert!(b1 >= b0 - 1e-12, "t={t}");
            }
            let sign_next = c / t_next - 1.0 / (t_next * t_next);
            if sign_next < 0.0 && sign < 0.0 {
                assert!(b1 <= b0 + 1e-12, "t={t}");
            }
            t = t_next;
        }
    }
}
