//! One-dimensional distribution machinery: the standard normal CDF, exact
//! Kolmogorov distances for empirical and discrete laws, exact laws of
//! weighted sums over finite supports, and the spherical average law `F`
//! (the law of `|X| theta_1`) together with its fourth-moment identity.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{DiscreteLaw, FiniteSupport};
use crate::sphere::{theta1_cdf, theta1_quantile, UnitVector};
use crate::special;

pub use crate::special::std_normal_cdf;

/// Default relative tolerance for merging enumerated atoms.
pub const DEFAULT_MERGE_TOL: f64 = 1e-12;

/// Which side of a jump attains the Kolmogorov supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JumpSide {
    Left,
    Right,
}

/// A Kolmogorov distance together with a maximizing point.
#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovResult {
    pub rho: f64,
    pub arg_x: f64,
    pub side: JumpSide,
}

/// A sorted sample of real values.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    /// Accepts already-sorted values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical sample must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical sample must be finite"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("empirical sample must be sorted ascending"));
        }
        Ok(EmpiricalSample { values })
    }

    /// Sorts and wraps.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(f64::total_cmp);
        EmpiricalSample::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact Kolmogorov distance between the empirical step function of a sorted
/// sample and a continuous CDF: the supremum is attained at a sample point
/// from one side or the other.
pub fn kolmogorov_empirical(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> KolmogorovResult {
    let m = sample.len() as f64;
    let mut best = KolmogorovResult {
        rho: 0.0,
        arg_x: sample.values()[0],
        side: JumpSide::Right,
    };
    for (i, &x) in sample.values().iter().enumerate() {
        let target = cdf(x);
        let upper = (i + 1) as f64 / m - target;
        let lower = target - i as f64 / m;
        if upper > best.rho {
            best = KolmogorovResult { rho: upper, arg_x: x, side: JumpSide::Right };
        }
        if lower > best.rho {
            best = KolmogorovResult { rho: lower, arg_x: x, side: JumpSide::Left };
        }
    }
    best
}

/// Exact Kolmogorov distance between a discrete law and a continuous CDF,
/// evaluated from both sides of every atom.
pub fn kolmogorov_discrete(law: &DiscreteLaw, cdf: impl Fn(f64) -> f64) -> KolmogorovResult {
    let mut best = KolmogorovResult {
        rho: 0.0,
        arg_x: law.atoms()[0],
        side: JumpSide::Right,
    };
    let mut cum = 0.0;
    for (&a, &p) in law.atoms().iter().zip(law.probs()) {
        let target = cdf(a);
        let below = (target - cum).abs();
        cum += p;
        let above = (cum - target).abs();
        if below > best.rho {
            best = KolmogorovResult { rho: below, arg_x: a, side: JumpSide::Left };
        }
        if above > best.rho {
            best = KolmogorovResult { rho: above, arg_x: a, side: JumpSide::Right };
        }
    }
    best
}

/// Exact law of `S_theta = <X, theta>` for a finite-support `X`: enumerates
/// the inner products, sorts, and merges collisions.
pub fn weighted_sum_law(
    support: &FiniteSupport,
    theta: &UnitVector,
    merge_tol: f64,
    budget: u64,
) -> Result<DiscreteLaw> {
    if support.dim() != theta.dim() {
        return Err(Error::invalid("support and direction dimensions differ"));
    }
    if support.len() as u64 > budget {
        return Err(Error::ResourceLimit(format!(
            "support holds {} atoms, budget {budget}",
            support.len()
        )));
    }
    let th = theta.coords();
    let n = support.dim();
    let mut pairs: Vec<(f64, f64)> = vec![(0.0, 0.0); support.len()];
    let points = support.probs();
    pairs
        .par_iter_mut()
        .enumerate()
        .for_each(|(k, slot)| {
            let row = support.point(k);
            let mut dot = 0.0;
            for i in 0..n {
                dot += row[i] * th[i];
            }
            *slot = (dot, points[k]);
        });
    DiscreteLaw::from_weighted_values(pairs, merge_tol)
}

/// The average distribution `F` as a radius mixture: `F(x) = E_r G_n(x/r)`
/// where `G_n` is the CDF of the first coordinate of a uniform point of
/// `S^{n-1}` and `r` runs over the (weighted) radius values.
#[derive(Debug, Clone)]
pub struct AverageCdf {
    radii: Vec<(f64, f64)>,
    n: usize,
}

impl AverageCdf {
    /// Uniformly weighted radius samples.
    pub fn from_samples(radius_samples: &[f64], n: usize) -> Result<Self> {
        if radius_samples.is_empty() {
            return Err(Error::invalid("radius sample list must be non-empty"));
        }
        if radius_samples.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::invalid("radius samples must be finite and nonnegative"));
        }
        let w = 1.0 / radius_samples.len() as f64;
        Ok(AverageCdf {
            radii: radius_samples.iter().map(|&r| (r, w)).collect(),
            n,
        })
    }

    /// Exactly weighted radii (e.g. from a finite-support law).
    pub fn from_weighted(radii: Vec<(f64, f64)>, n: usize) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radius list must be non-empty"));
        }
        if radii.iter().any(|(r, w)| !r.is_finite() || *r < 0.0 || *w < 0.0) {
            return Err(Error::invalid("radii must be nonnegative with nonnegative weights"));
        }
        Ok(AverageCdf { radii, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of distinct radius values in the mixture.
    pub fn radius_count(&self) -> usize {
        self.radii.len()
    }

    /// `F(x)`; the zero-radius atom contributes the step `1{x >= 0}`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut total = 0.0;
        for &(r, w) in &self.radii {
            total += w;
            if r == 0.0 {
                if x >= 0.0 {
                    acc += w;
                }
            } else {
                acc += w * theta1_cdf(self.n, x / r);
            }
        }
        acc / total
    }

    /// Mixture standard error at `x`: the spread of the per-radius CDF
    /// values scaled by the number of radius samples (zero for a single
    /// exact radius).
    pub fn mc_stderr(&self, x: f64) -> f64 {
        if self.radii.len() < 2 {
            return 0.0;
        }
        let mean = self.eval(x);
        let mut var = 0.0;
        let mut total = 0.0;
        for &(r, w) in &self.radii {
            let v = if r == 0.0 {
                if x >= 0.0 { 1.0 } else { 0.0 }
            } else {
                theta1_cdf(self.n, x / r)
            };
            var += w * (v - mean) * (v - mean);
            total += w;
        }
        (var / total / self.radii.len() as f64).sqrt()
    }
}

/// Monte Carlo mixture value of the average distribution function.
pub fn average_cdf(radius_samples: &[f64], n: usize, x: f64) -> Result<f64> {
    Ok(AverageCdf::from_samples(radius_samples, n)?.eval(x))
}

/// Outcome of the fourth-moment identity comparison
/// `int x^4 dF - 3 = 3 (sigma4^2 - 2) / (n + 2)`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Checks the fourth-moment identity of the average law: the left side uses
/// the factorization `int x^4 dF = E|X|^4 * E theta_1^4` with
/// `E theta_1^4 = 3/(n(n+2))`, the right side the thin-shell parameter.
pub fn fourth_moment_identity(radius_samples: &[f64], n: usize, sigma4sq: f64) -> Result<IdentityReport> {
    if n < 2 {
        return Err(Error::invalid("fourth_moment_identity requires n >= 2"));
    }
    if radius_samples.is_empty() {
        return Err(Error::invalid("radius sample list must be non-empty"));
    }
    if radius_samples.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::invalid("radius samples must be finite and nonnegative"));
    }
    let nf = n as f64;
    let m = radius_samples.len() as f64;
    let coeff = 3.0 / (nf * (nf + 2.0));
    let fourth: Vec<f64> = radius_samples.iter().map(|r| r.powi(4)).collect();
    let mean4 = fourth.iter().sum::<f64>() / m;
    let lhs = mean4 * coeff - 3.0;
    let rhs = 3.0 * (sigma4sq - 2.0) / (nf + 2.0);
    let stderr = if radius_samples.len() > 1 {
        let var = fourth.iter().map(|v| (v - mean4) * (v - mean4)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt() * coeff
    } else {
        0.0
    };
    Ok(IdentityReport {
        lhs,
        rhs,
        stderr,
        pass: (lhs - rhs).abs() <= 3.0 * stderr.max(1e-12),
    })
}

/// Evaluation grid for `sup_x |F(x) - Phi(x)|`: normal quantiles of a
/// uniform grid plus radius-driven breakpoints (coordinate-CDF quantiles
/// scaled by radius quantiles), refined toward the tails.
fn rho_grid(avg: &AverageCdf, grid_size: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(grid_size + 300);
    for i in 0..grid_size {
        let p = (i as f64 + 0.5) / grid_size as f64;
        grid.push(special::std_normal_quantile(p).expect("p in (0,1)"));
    }
    // Radius-driven breakpoints: quantiles of the coordinate law scaled by a
    // spread of radius values.
    let mut radii: Vec<f64> = avg.radii.iter().map(|(r, _)| *r).filter(|r| *r > 0.0).collect();
    radii.sort_by(f64::total_cmp);
    if !radii.is_empty() {
        let picks = 16.min(radii.len());
        for i in 0..picks {
            let r = radii[i * (radii.len() - 1) / picks.max(1)];
            for j in 1..16 {
                let t = theta1_quantile(avg.dim(), j as f64 / 16.0).expect("valid level");
                grid.push(r * t);
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `sup_x |F(x) - Phi(x)|` over an adaptive grid.
pub fn rho_f_phi(radius_samples: &[f64], n: usize, grid_size: usize) -> Result<f64> {
    if grid_size < 100 {
        return Err(Error::invalid("rho_f_phi needs a grid of at least 10^2 points"));
    }
    let avg = AverageCdf::from_samples(radius_samples, n)?;
    rho_f_phi_avg(&avg, grid_size)
}

/// Same supremum for an already-built average law (allows exact radius
/// weights).
pub fn rho_f_phi_avg(avg: &AverageCdf, grid_size: usize) -> Result<f64> {
    if grid_size < 100 {
        return Err(Error::invalid("rho_f_phi needs a grid of at least 10^2 points"));
    }
    let grid = rho_grid(avg, grid_size);
    let sup = grid
        .par_iter()
        .map(|&x| (avg.eval(x) - std_normal_cdf(x)).abs())
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_centered_quantiles() {
        // Sample at Phi^{-1}((i-1/2)/m) gives rho = 1/(2m).
        let m = 64;
        let values: Vec<f64> = (1..=m)
            .map(|i| special::std_normal_quantile((i as f64 - 0.5) / m as f64).unwrap())
            .collect();
        let s = EmpiricalSample::new(values).unwrap();
        let r = kolmogorov_empirical(&s, std_normal_cdf);
        assert!((r.rho - 1.0 / (2.0 * m as f64)).abs() < 1e-9);
    }

    #[test]
    fn empirical_single_point() {
        let s = EmpiricalSample::new(vec![0.0]).unwrap();
        let r = kolmogorov_empirical(&s, std_normal_cdf);
        assert!((r.rho - 0.5).abs() < 1e-15);
        assert_eq!(r.arg_x, 0.0);
    }

    #[test]
    fn empirical_rejects_unsorted() {
        assert!(EmpiricalSample::new(vec![1.0, 0.0]).is_err());
        assert!(EmpiricalSample::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn discrete_point_mass() {
        let law = DiscreteLaw::new(vec![0.0], vec![1.0]).unwrap();
        let r = kolmogorov_discrete(&law, std_normal_cdf);
        assert!((r.rho - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_two_point() {
        let law = DiscreteLaw::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let r = kolmogorov_discrete(&law, std_normal_cdf);
        let expect = 0.5 - std_normal_cdf(-1.0);
        assert!((r.rho - expect).abs() < 1e-12);
        assert!((r.rho - 0.341344746).abs() < 1e-6);
    }

    #[test]
    fn discrete_three_point() {
        let s = std::f64::consts::SQRT_2;
        let law = DiscreteLaw::new(vec![-s, 0.0, s], vec![0.25, 0.5, 0.25]).unwrap();
        let r = kolmogorov_discrete(&law, std_normal_cdf);
        assert!((r.rho - 0.25).abs() < 1e-12);
        assert_eq!(r.arg_x, 0.0);
    }

    #[test]
    fn weighted_sum_basis_direction() {
        let sup = crate::zoo::enumerate_support(&crate::zoo::DistributionModel::Rademacher, 2, 16).unwrap();
        let theta = UnitVector::new(vec![1.0, 0.0]).unwrap();
        let law = weighted_sum_law(&sup, &theta, DEFAULT_MERGE_TOL, 1 << 20).unwrap();
        assert_eq!(law.atoms(), &[-1.0, 1.0]);
        assert_eq!(law.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn weighted_sum_diagonal_direction() {
        let sup = crate::zoo::enumerate_support(&crate::zoo::DistributionModel::Rademacher, 2, 16).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let theta = UnitVector::new(vec![c, c]).unwrap();
        let law = weighted_sum_law(&sup, &theta, DEFAULT_MERGE_TOL, 1 << 20).unwrap();
        assert_eq!(law.len(), 3);
        assert!((law.atoms()[0] + std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(law.atoms()[1], 0.0);
        assert_eq!(law.probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn weighted_sum_budget() {
        let sup = crate::zoo::enumerate_support(&crate::zoo::DistributionModel::Rademacher, 10, 1 << 24).unwrap();
        let theta = UnitVector::from_unnormalized(vec![1.0; 10]).unwrap();
        assert!(matches!(
            weighted_sum_law(&sup, &theta, DEFAULT_MERGE_TOL, 512),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn average_cdf_constant_radius() {
        let n = 8;
        let r = (n as f64).sqrt();
        let avg = AverageCdf::from_samples(&[r], n).unwrap();
        for &x in &[-2.0, -0.5, 0.0, 0.3, 1.9] {
            assert!((avg.eval(x) - theta1_cdf(n, x / r)).abs() < 1e-15);
        }
        assert_eq!(avg.eval(0.0), 0.5);
        assert_eq!(avg.mc_stderr(0.7), 0.0);
    }

    #[test]
    fn average_cdf_zero_radius_atom() {
        let avg = AverageCdf::from_samples(&[0.0, 2.0], 4).unwrap();
        assert!(avg.eval(-1e-9) < 0.5);
        assert!(avg.eval(0.0) >= 0.5);
        assert!((avg.eval(50.0) - 1.0).abs() < 1e-12);
        assert!(average_cdf(&[-1.0], 4, 0.0).is_err());
    }

    #[test]
    fn fourth_moment_identity_constant_radius() {
        for n in [4usize, 10, 16] {
            let r = (n as f64).sqrt();
            let report = fourth_moment_identity(&[r], n, 0.0).unwrap();
            assert!((report.lhs - report.rhs).abs() < 1e-12, "n={n}");
            assert!(report.pass);
            assert!((report.rhs + 6.0 / (n as f64 + 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn average_cdf_monotone_with_saturating_tails() {
        let radii = [0.0, 1.3, 2.0, 5.5];
        let avg = AverageCdf::from_samples(&radii, 6).unwrap();
        let mut prev = avg.eval(-1e6);
        assert_eq!(prev, 0.0);
        let mut x = -8.0;
        while x <= 8.0 {
            let v = avg.eval(x);
            assert!(v >= prev - 1e-15, "not monotone at {x}");
            prev = v;
            x += 0.05;
        }
        assert_eq!(avg.eval(1e6), 1.0);
    }

    #[test]
    fn rho_f_phi_gaussian_small() {
        // F = Phi for the gaussian radius law; MC mixture keeps the sup at
        // the noise level.
        let b = crate::zoo::sample_batch(&crate::zoo::DistributionModel::GaussianStd, 16, 4_000, 5).unwrap();
        let radii = b.radii();
        let rho = rho_f_phi(&radii, 16, 512).unwrap();
        assert!(rho < 0.02, "rho = {rho}");
    }

    #[test]
    fn rho_f_phi_sphere_scales_inversely() {
        let r16 = rho_f_phi(&[16f64.sqrt()], 16, 4096).unwrap();
        let r32 = rho_f_phi(&[32f64.sqrt()], 32, 4096).unwrap();
        let ratio = r16 / r32;
        assert!((1.6..=2.4).contains(&ratio), "ratio = {ratio}");
    }
}
