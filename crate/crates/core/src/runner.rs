//! Experiment orchestration: average Kolmogorov distances over random
//! directions, rate sweeps across the dimension, exponent fits, and
//! serialization of results (JSON with embedded config, CSV rows in a
//! stable column order).
//!
//! All parallel sections write into index-addressed slots and reduce in a
//! fixed order, so a `(config, seed)` pair fully determines every output
//! byte regardless of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{self, cf_profile, lemma61_bound, lemma61_defaults};
use crate::distance::{
    kolmogorov_discrete, kolmogorov_empirical, rho_f_phi_avg, std_normal_cdf, weighted_sum_law,
    AverageCdf, EmpiricalSample, DEFAULT_MERGE_TOL,
};
use crate::error::{Error, Result};
use crate::functionals::sigma4sq;
use crate::law::FiniteSupport;
use crate::rng::derive_seed;
use crate::sphere::sample_directions;
use crate::zoo::{enumerate_support, sample_batch, DistributionModel};

/// Whether weighted-sum laws are enumerated exactly or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Empirical,
}

/// Which target distributions the per-direction distance is measured
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Phi,
    AvgF,
    Both,
}

/// Geometric `t`-grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl TGrid {
    pub fn to_points(self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi >= self.lo) || self.count < 2 {
            return Err(Error::invalid("t grid needs 0 < lo <= hi and count >= 2"));
        }
        let ratio = (self.hi / self.lo).powf(1.0 / (self.count - 1) as f64);
        Ok((0..self.count)
            .map(|i| self.lo * ratio.powi(i as i32))
            .collect())
    }
}

fn default_antithetic() -> bool {
    true
}

fn default_radius_subsample() -> usize {
    1024
}

fn default_budget() -> u64 {
    1 << 24
}

fn default_rho_grid() -> usize {
    4096
}

/// Full experiment description; serializes losslessly, unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: DistributionModel,
    /// Single dimension (average-distance runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Ascending dimension grid (rate sweeps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    pub n_theta: usize,
    /// Samples per batch; 0 selects the exact path.
    pub m: usize,
    pub seed: u64,
    pub mode: Mode,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Pair directions as (theta, -theta).
    #[serde(default = "default_antithetic")]
    pub antithetic: bool,
    /// Radius samples retained for the average-law mixture on empirical
    /// paths.
    #[serde(default = "default_radius_subsample")]
    pub radius_subsample: usize,
    /// Atom budget for exact enumeration.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Grid size for `rho(F, Phi)`.
    #[serde(default = "default_rho_grid")]
    pub rho_grid: usize,
}

impl ExperimentConfig {
    /// Baseline configuration for a model at one dimension.
    pub fn new(model: DistributionModel, n: usize, mode: Mode, seed: u64) -> Self {
        ExperimentConfig {
            model,
            n: Some(n),
            n_grid: None,
            n_theta: 300,
            m: match mode {
                Mode::Exact => 0,
                Mode::Empirical => 10_000,
            },
            seed,
            mode,
            target: Target::Both,
            t_grid: None,
            output: None,
            antithetic: true,
            radius_subsample: default_radius_subsample(),
            budget: default_budget(),
            rho_grid: default_rho_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_none() && self.n_grid.is_none() {
            return Err(Error::invalid("config needs n or n_grid"));
        }
        if let Some(grid) = &self.n_grid {
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("n_grid must be strictly ascending"));
            }
        }
        if self.n_theta == 0 {
            return Err(Error::invalid("n_theta must be positive"));
        }
        if self.antithetic && !self.n_theta.is_multiple_of(2) {
            return Err(Error::invalid("antithetic direction sets need an even n_theta"));
        }
        match self.mode {
            Mode::Exact => {
                if !self.model.has_finite_support() {
                    return Err(Error::Unsupported(format!(
                        "exact mode needs a finite-support model, got {}",
                        self.model.name()
                    )));
                }
            }
            Mode::Empirical => {
                if self.m == 0 {
                    return Err(Error::invalid("empirical mode needs m >= 1"));
                }
            }
        }
        if let DistributionModel::ScaleMixture { r1, r2, w } = self.model {
            DistributionModel::scale_mixture(r1, r2, w)?;
        }
        Ok(())
    }
}

/// Per-direction Kolmogorov distances plus their direction-averaged
/// summary.
#[derive(Debug, Clone, Serialize)]
pub struct AvgKolmogorov {
    pub n: usize,
    /// `rho(F_theta, Phi)` per direction (empty when target = avg_f).
    pub per_direction_phi: Vec<f64>,
    /// `rho(F_theta, F)` per direction (empty when target = phi).
    pub per_direction_f: Vec<f64>,
    pub mean_phi: Option<f64>,
    pub stderr_phi: Option<f64>,
    pub mean_f: Option<f64>,
    pub stderr_f: Option<f64>,
    /// Monte Carlo error of the average-law mixture itself (zero on exact
    /// radius laws); already folded into `stderr_f`.
    pub f_mc_stderr: f64,
}

/// Direction-mean and standard error; antithetic pairs are collapsed first
/// so duplicated values (distances are even in theta for symmetric laws) do
/// not understate the error.
fn mean_stderr(values: &[f64], antithetic: bool) -> (f64, f64) {
    let collapsed: Vec<f64> = if antithetic && values.len().is_multiple_of(2) {
        values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    } else {
        values.to_vec()
    };
    let k = collapsed.len() as f64;
    let mean = collapsed.iter().sum::<f64>() / k;
    if collapsed.len() < 2 {
        return (mean, 0.0);
    }
    let var = collapsed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Piecewise-linear interpolant of a monotone CDF on a uniform grid (the
/// empirical-path stand-in for the average law; the grid modulus is the
/// documented bias of this path).
struct GridCdf {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridCdf {
    fn build(avg: &AverageCdf, lo: f64, hi: f64, count: usize) -> Self {
        let step = (hi - lo) / (count - 1) as f64;
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| avg.eval(lo + step * i as f64))
            .collect();
        GridCdf { lo, step, values }
    }

    fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = (self.values.len() - 1) as f64;
        if pos >= last {
            return 1.0;
        }
        let idx = pos.floor() as usize;
        let frac = pos - idx as f64;
        self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac
    }
}

fn want_phi(target: Target) -> bool {
    matches!(target, Target::Phi | Target::Both)
}

fn want_f(target: Target) -> bool {
    matches!(target, Target::AvgF | Target::Both)
}

/// Average Kolmogorov distance over sampled directions. The exact path
/// enumerates the law of `S_theta` per direction and uses the exact radius
/// law for `F`; the empirical path projects one shared batch and compares
/// against an interpolated radius-mixture `F` (bias note: empirical
/// distances carry an `O(1/sqrt(m))` upward offset).
pub fn avg_kolmogorov(config: &ExperimentConfig) -> Result<AvgKolmogorov> {
    config.validate()?;
    let n = config
        .n
        .ok_or_else(|| Error::invalid("avg_kolmogorov needs a single n"))?;
    let dirs = sample_directions(n, config.n_theta, derive_seed(config.seed, 31), config.antithetic)?;

    let mut per_phi = Vec::new();
    let mut per_f = Vec::new();
    let mut f_mc_stderr = 0.0;

    match config.mode {
        Mode::Exact => {
            let support = enumerate_support(&config.model, n, config.budget)?;
            let avg = exact_average_cdf(&support, n)?;
            let pairs: Vec<(f64, f64)> = dirs
                .directions()
                .par_iter()
                .map(|theta| {
                    let law = weighted_sum_law(&support, theta, DEFAULT_MERGE_TOL, config.budget)
                        .expect("within budget");
                    let rho_phi = if want_phi(config.target) {
                        kolmogorov_discrete(&law, std_normal_cdf).rho
                    } else {
                        f64::NAN
                    };
                    let rho_f = if want_f(config.target) {
                        kolmogorov_discrete(&law, |x| avg.eval(x)).rho
                    } else {
                        f64::NAN
                    };
                    (rho_phi, rho_f)
                })
                .collect();
            if want_phi(config.target) {
                per_phi = pairs.iter().map(|p| p.0).collect();
            }
            if want_f(config.target) {
                per_f = pairs.iter().map(|p| p.1).collect();
            }
        }
        Mode::Empirical => {
            let batch = sample_batch(&config.model, n, config.m, derive_seed(config.seed, 32))?;
            let grid_f = if want_f(config.target) {
                let radii = subsampled_radii(&batch.radii(), config.radius_subsample);
                let avg = AverageCdf::from_samples(&radii, n)?;
                // Representative mixture error scale.
                f_mc_stderr = [0.0, 1.0, 2.0]
                    .iter()
                    .map(|x| avg.mc_stderr(*x))
                    .fold(0.0f64, f64::max);
                let max_r = radii.iter().fold(0.0f64, |a, r| a.max(*r));
                Some(GridCdf::build(&avg, -max_r - 1.0, max_r + 1.0, 16_384))
            } else {
                None
            };
            let pairs: Vec<(f64, f64)> = dirs
                .directions()
                .par_iter()
                .map(|theta| {
                    let mut proj: Vec<f64> =
                        batch.iter_rows().map(|row| theta.dot(row)).collect();
                    proj.sort_by(f64::total_cmp);
                    let sample = EmpiricalSample::new(proj).expect("finite projections");
                    let rho_phi = if want_phi(config.target) {
                        kolmogorov_empirical(&sample, std_normal_cdf).rho
                    } else {
                        f64::NAN
                    };
                    let rho_f = match &grid_f {
                        Some(g) => kolmogorov_empirical(&sample, |x| g.eval(x)).rho,
                        None => f64::NAN,
                    };
                    (rho_phi, rho_f)
                })
                .collect();
            if want_phi(config.target) {
                per_phi = pairs.iter().map(|p| p.0).collect();
            }
            if want_f(config.target) {
                per_f = pairs.iter().map(|p| p.1).collect();
            }
        }
    }

    let (mean_phi, stderr_phi) = if per_phi.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_stderr(&per_phi, config.antithetic);
        (Some(m), Some(s))
    };
    let (mean_f, stderr_f) = if per_f.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_stderr(&per_f, config.antithetic);
        (Some(m), Some(s + f_mc_stderr))
    };

    Ok(AvgKolmogorov {
        n,
        per_direction_phi: per_phi,
        per_direction_f: per_f,
        mean_phi,
        stderr_phi,
        mean_f,
        stderr_f,
        f_mc_stderr,
    })
}

/// Exact average law of a finite support (weighted radius mixture).
fn exact_average_cdf(support: &FiniteSupport, n: usize) -> Result<AverageCdf> {
    let radius_law = support.radius_law();
    let radii: Vec<(f64, f64)> = radius_law
        .atoms()
        .iter()
        .zip(radius_law.probs())
        .map(|(&r, &p)| (r, p))
        .collect();
    AverageCdf::from_weighted(radii, n)
}

/// Deterministic stride subsample of the radius list.
fn subsampled_radii(radii: &[f64], keep: usize) -> Vec<f64> {
    if radii.len() <= keep {
        return radii.to_vec();
    }
    (0..keep)
        .map(|i| radii[i * radii.len() / keep])
        .collect()
}

/// One dimension of a rate sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub mean_rho_phi: f64,
    pub stderr_phi: f64,
    pub mean_rho_f: f64,
    pub stderr_f: f64,
    pub lambda_hat: f64,
    pub sigma4sq_hat: f64,
    pub lemma61_value: f64,
    pub rho_f_phi: f64,
}

/// Fit family for the decay of the mean distance in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitForm {
    /// `mean = C n^alpha`
    Power,
    /// `mean = C (log n) n^alpha`
    PowerTimesLog,
}

/// Least-squares fit of the decay exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub c: f64,
    pub r_squared: f64,
    pub form: FitForm,
    /// Whether the smallest dimension was dropped (pre-asymptotic bending).
    pub excluded_smallest: bool,
}

/// Sweep result: rows sorted by `n` plus the fitted exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub fitted: Option<FitResult>,
}

const CSV_HEADER: &str =
    "n,mean_rho_phi,stderr_phi,mean_rho_F,stderr_F,lambda_hat,sigma4sq_hat,lemma61_value,rho_F_phi";

impl RateTable {
    /// Writes the documented CSV column order.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.mean_rho_phi,
                r.stderr_phi,
                r.mean_rho_f,
                r.stderr_f,
                r.lambda_hat,
                r.sigma4sq_hat,
                r.lemma61_value,
                r.rho_f_phi
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the CSV layout written by [`RateTable::write_csv`].
    pub fn read_csv(text: &str) -> Result<RateTable> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty CSV input"))?;
        if header.trim() != CSV_HEADER {
            return Err(Error::invalid(format!(
                "unexpected CSV header: {header:?}"
            )));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::invalid(format!(
                    "line {}: expected 9 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!("line {}: bad {what}: {s:?}", lineno + 2))
                })
            };
            rows.push(RateRow {
                n: fields[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("line {}: bad n", lineno + 2)))?,
                mean_rho_phi: parse(fields[1], "mean_rho_phi")?,
                stderr_phi: parse(fields[2], "stderr_phi")?,
                mean_rho_f: parse(fields[3], "mean_rho_F")?,
                stderr_f: parse(fields[4], "stderr_F")?,
                lambda_hat: parse(fields[5], "lambda_hat")?,
                sigma4sq_hat: parse(fields[6], "sigma4sq_hat")?,
                lemma61_value: parse(fields[7], "lemma61_value")?,
                rho_f_phi: parse(fields[8], "rho_F_phi")?,
            });
        }
        Ok(RateTable { rows, fitted: None })
    }
}

/// Serializable envelope for full experiment results.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult<'a> {
    pub tool_version: &'static str,
    pub config: &'a ExperimentConfig,
    pub table: &'a RateTable,
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Least squares of `log mean` (or `log(mean / log n)`) against `log n`.
pub fn fit_exponent(points: &[(usize, f64)], form: FitForm) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::invalid("exponent fit needs at least 3 rows"));
    }
    if points.iter().any(|(_, y)| !(*y > 0.0)) {
        return Err(Error::invalid("exponent fit needs strictly positive means"));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, y)| {
            let x = (n as f64).ln();
            let yv = match form {
                FitForm::Power => y.ln(),
                FitForm::PowerTimesLog => (y / (n as f64).ln()).ln(),
            };
            (x, yv)
        })
        .collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("exponent fit needs at least two distinct n"));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let ss_res: f64 = xy
        .iter()
        .map(|p| {
            let r = p.1 - (alpha * p.0 + intercept);
            r * r
        })
        .sum();
    let ss_tot: f64 = xy.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-18 {
        1.0
    } else {
        0.0
    };
    Ok(FitResult {
        alpha,
        c: intercept.exp(),
        r_squared,
        form,
        excluded_smallest: false,
    })
}

/// Fits a table's `mean_rho_phi` column, dropping the smallest dimension
/// when the full fit explains less than `r^2 = 0.9` (pre-asymptotic
/// bending), and says so in the result.
pub fn fit_table(rows: &[RateRow], form: FitForm) -> Result<FitResult> {
    let pts: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.mean_rho_phi)).collect();
    let full = fit_exponent(&pts, form)?;
    if full.r_squared >= 0.9 || pts.len() < 4 {
        return Ok(full);
    }
    let mut trimmed = fit_exponent(&pts[1..], form)?;
    trimmed.excluded_smallest = true;
    Ok(trimmed)
}

/// Runs the per-dimension experiment over `n_grid`, attaching functional
/// estimates, the smoothing-bound value and `rho(F, Phi)` to every row.
pub fn rate_sweep(config: &ExperimentConfig) -> Result<RateTable> {
    config.validate()?;
    let grid = config
        .n_grid
        .clone()
        .ok_or_else(|| Error::invalid("rate_sweep needs n_grid"))?;
    if grid.len() < 3 {
        return Err(Error::invalid("rate sweep needs at least 3 dimensions"));
    }

    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let mut sub = config.clone();
        sub.n = Some(n);
        sub.n_grid = None;
        sub.target = Target::Both;
        let avg = avg_kolmogorov(&sub)?;

        let meta = config.model.exact_metadata(n);
        let (lambda_hat, sigma4sq_hat) = match (meta.lambda, meta.sigma4sq) {
            (Some(l), Some(s)) => (l, s),
            _ => {
                let batch = sample_batch(
                    &config.model,
                    n,
                    config.m.max(20_000),
                    derive_seed(config.seed, 33),
                )?;
                let l = match meta.lambda {
                    Some(l) => l,
                    None => crate::functionals::lambda_power(&batch, 200, 1e-5, derive_seed(config.seed, 34))?.value,
                };
                let s = match meta.sigma4sq {
                    Some(s) => s,
                    None => sigma4sq(&batch)?.value,
                };
                (l, s)
            }
        };

        // Profile for the smoothing bound: exact characteristic functions
        // for product families, a shared batch otherwise.
        let m_cf = if config.mode == Mode::Exact && config.model.coordinate_cf(0.0).is_some() {
            0
        } else {
            config.m.clamp(1, 20_000).max(512)
        };
        let grid_t = match config.t_grid {
            Some(g) => {
                let mut pts = g.to_points()?;
                let (t0, _) = lemma61_defaults(n);
                pts.push(t0);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts
            }
            None => charfn::default_t_grid(n),
        };
        let profile = cf_profile(
            &config.model,
            n,
            &grid_t,
            config.n_theta.clamp(30, 128).max(30),
            m_cf,
            derive_seed(config.seed, 35),
        )?;
        let (t0, t_cap) = lemma61_defaults(n);
        let m4_fourth = match config.model.exact_m4_fourth(n) {
            Some(v) => v,
            None => {
                // Moment-inequality upper end as the fallback shape input.
                1.0 + lambda_hat
            }
        };
        let lemma61_value = lemma61_bound(&profile, m4_fourth.powf(0.25), sigma4sq_hat, n, t0, t_cap)?;

        let rho_f_phi_val = match config.mode {
            Mode::Exact => {
                let support = enumerate_support(&config.model, n, config.budget)?;
                rho_f_phi_avg(&exact_average_cdf(&support, n)?, config.rho_grid)?
            }
            Mode::Empirical => {
                let batch = sample_batch(&config.model, n, config.m, derive_seed(config.seed, 32))?;
                let radii = subsampled_radii(&batch.radii(), config.radius_subsample);
                rho_f_phi_avg(&AverageCdf::from_samples(&radii, n)?, config.rho_grid)?
            }
        };

        rows.push(RateRow {
            n,
            mean_rho_phi: avg.mean_phi.unwrap_or(f64::NAN),
            stderr_phi: avg.stderr_phi.unwrap_or(f64::NAN),
            mean_rho_f: avg.mean_f.unwrap_or(f64::NAN),
            stderr_f: avg.stderr_f.unwrap_or(f64::NAN),
            lambda_hat,
            sigma4sq_hat,
            lemma61_value,
            rho_f_phi: rho_f_phi_val,
        });
    }

    let fitted = fit_table(&rows, FitForm::Power).ok();
    Ok(RateTable { rows, fitted })
}
