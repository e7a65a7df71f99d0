//! Uniform directions on the unit sphere `S^{n-1}`, the exact marginal law
//! of a single coordinate, exact even moments, and the spherical Poincare
//! checks (first order and second order).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::special::inc_beta_reg;

/// Tolerance on `| |theta|^2 - 1 |` for a valid unit vector.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point of `S^{n-1}`, kept normalized by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Wraps coordinates that must already satisfy the unit-norm invariant.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("unit vector needs dimension >= 2"));
        }
        let sq: f64 = coords.iter().map(|c| c * c).sum();
        if !sq.is_finite() || (sq - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::invalid(format!(
                "coordinates are not unit norm: |theta|^2 = {sq}"
            )));
        }
        Ok(UnitVector { coords })
    }

    /// Normalizes an arbitrary non-null vector onto the sphere.
    pub fn from_unnormalized(v: Vec<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::invalid("unit vector needs dimension >= 2"));
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-150 {
            return Err(Error::DegenerateInput("cannot normalize a null vector".into()));
        }
        let coords = v.into_iter().map(|c| c / norm).collect();
        Ok(UnitVector { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The antipodal point `-theta`.
    pub fn negated(&self) -> Self {
        UnitVector {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coords.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// An ordered, reproducible set of directions on `S^{n-1}`.
///
/// Direction `i` is generated from the ChaCha stream `(seed, i)` (or stream
/// `(seed, pair)` for antithetic pairs), so regeneration with the same
/// arguments is bit-for-bit identical and generation order does not matter.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    directions: Vec<UnitVector>,
    seed: u64,
    antithetic: bool,
}

impl DirectionSet {
    pub fn directions(&self) -> &[UnitVector] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UnitVector> {
        self.directions.iter()
    }
}

fn gaussian_direction(n: usize, seed: u64, stream: u64) -> UnitVector {
    let mut rng = stream_rng(seed, stream);
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if let Ok(u) = UnitVector::from_unnormalized(v) {
            return u;
        }
        // Astronomically unlikely null draw; the stream continues
        // deterministically.
    }
}

/// Samples `count` uniform directions by normalizing standard Gaussian
/// vectors. With `antithetic`, directions come in consecutive pairs
/// `(theta, -theta)` and `count` must be even.
pub fn sample_directions(n: usize, count: usize, seed: u64, antithetic: bool) -> Result<DirectionSet> {
    if n < 2 {
        return Err(Error::invalid("sample_directions requires n >= 2"));
    }
    if count < 1 {
        return Err(Error::invalid("sample_directions requires count >= 1"));
    }
    if antithetic && !count.is_multiple_of(2) {
        return Err(Error::invalid("antithetic direction sets need an even count"));
    }
    let directions: Vec<UnitVector> = if antithetic {
        (0..count / 2)
            .into_par_iter()
            .flat_map_iter(|p| {
                let base = gaussian_direction(n, seed, p as u64);
                let neg = base.negated();
                [base, neg]
            })
            .collect()
    } else {
        (0..count)
            .into_par_iter()
            .map(|i| gaussian_direction(n, seed, i as u64))
            .collect()
    };
    Ok(DirectionSet {
        directions,
        seed,
        antithetic,
    })
}

/// Distribution function of the first coordinate `theta_1` of a uniform
/// point on `S^{n-1}`: the density is proportional to `(1-t^2)^{(n-3)/2}`,
/// so `(1+theta_1)/2 ~ Beta((n-1)/2, (n-1)/2)`.
pub fn theta1_cdf(n: usize, t: f64) -> f64 {
    assert!(n >= 2, "theta1_cdf requires n >= 2");
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    if t == 0.0 {
        // Symmetric density.
        return 0.5;
    }
    let a = (n as f64 - 1.0) / 2.0;
    inc_beta_reg(a, a, 0.5 * (1.0 + t))
}

/// Numerical inverse of [`theta1_cdf`] by bisection.
pub fn theta1_quantile(n: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::invalid(format!("quantile level must be in [0,1], got {p}")));
    }
    if p == 0.0 {
        return Ok(-1.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if theta1_cdf(n, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact moment `E theta_1^p` of the first coordinate: zero for odd `p`,
/// `(p-1)!! / (n (n+2) ... (n+p-2))` for even `p`.
pub fn theta1_moment(n: usize, p: u32) -> f64 {
    assert!(n >= 2, "theta1_moment requires n >= 2");
    if !p.is_multiple_of(2) {
        return 0.0;
    }
    let k = p / 2;
    let mut value = 1.0;
    for j in 0..k {
        value *= (2 * j + 1) as f64 / (n as f64 + 2.0 * j as f64);
    }
    value
}

/// Quadratic test functions orthogonal to all affine functions in
/// `L^2(sigma_{n-1})`; their Euclidean Hessians are constant matrices, so
/// the right-hand sides of the Poincare inequalities are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereTestFunction {
    /// `theta_i * theta_j` with `i != j`.
    OffdiagProduct { i: usize, j: usize },
    /// `theta_i^2 - 1/n`.
    DiagCentered { i: usize },
}

impl SphereTestFunction {
    pub fn offdiag_product(i: usize, j: usize) -> Result<Self> {
        if i == j {
            // theta_i^2 is not orthogonal to constants; only the centered
            // diagonal variant qualifies.
            return Err(Error::invalid(
                "offdiag_product needs distinct indices; equal indices are not orthogonal to affine functions",
            ));
        }
        Ok(SphereTestFunction::OffdiagProduct { i, j })
    }

    pub fn diag_centered(i: usize) -> Self {
        SphereTestFunction::DiagCentered { i }
    }

    fn max_index(&self) -> usize {
        match *self {
            SphereTestFunction::OffdiagProduct { i, j } => i.max(j),
            SphereTestFunction::DiagCentered { i } => i,
        }
    }

    /// Evaluates the test function at a point of `S^{n-1}`.
    pub fn eval(&self, theta: &UnitVector) -> f64 {
        let c = theta.coords();
        match *self {
            SphereTestFunction::OffdiagProduct { i, j } => c[i] * c[j],
            SphereTestFunction::DiagCentered { i } => c[i] * c[i] - 1.0 / c.len() as f64,
        }
    }

    /// `min_a (5/(n-1)^2) ||H - a I||_HS^2` for the constant Hessian `H` of
    /// the test function; the minimum is at `a = tr(H)/n`.
    pub fn second_order_rhs(&self, n: usize) -> f64 {
        let nf = n as f64;
        let scale = 5.0 / ((nf - 1.0) * (nf - 1.0));
        match *self {
            // H = e_i e_j^T + e_j e_i^T, trace 0, ||H||^2 = 2.
            SphereTestFunction::OffdiagProduct { .. } => scale * 2.0,
            // H = 2 e_i e_i^T, optimal a = 2/n, ||H - aI||^2 = 4(n-1)/n.
            SphereTestFunction::DiagCentered { .. } => scale * 4.0 * (nf - 1.0) / nf,
        }
    }

    /// `1/(n-1) * E |grad u|^2` for the first-order Poincare inequality.
    pub fn first_order_rhs(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            // |grad|^2 = theta_j^2 + theta_i^2, mean 2/n.
            SphereTestFunction::OffdiagProduct { .. } => 2.0 / (nf * (nf - 1.0)),
            // |grad|^2 = 4 theta_i^2, mean 4/n.
            SphereTestFunction::DiagCentered { .. } => 4.0 / (nf * (nf - 1.0)),
        }
    }

    /// Exact `int u^2 d sigma_{n-1}` from the sphere moments.
    pub fn exact_second_moment(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            // E theta_i^2 theta_j^2 = 1/(n(n+2)).
            SphereTestFunction::OffdiagProduct { .. } => 1.0 / (nf * (nf + 2.0)),
            // Var(theta_i^2) = 2(n-1)/(n^2 (n+2)).
            SphereTestFunction::DiagCentered { .. } => 2.0 * (nf - 1.0) / (nf * nf * (nf + 2.0)),
        }
    }
}

/// Outcome of a Poincare-type comparison: `lhs <= rhs` expected, with the
/// left side a Monte Carlo mean.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Monte Carlo check of the second-order spherical Poincare inequality for a
/// quadratic test function: the right side is exact, all sampling error sits
/// on the left side.
pub fn second_order_poincare_check(
    f: SphereTestFunction,
    n: usize,
    mc_size: usize,
    seed: u64,
) -> Result<CheckReport> {
    if n < 3 {
        return Err(Error::invalid("second-order Poincare check needs n >= 3"));
    }
    if mc_size < 1_000 {
        return Err(Error::invalid("mc_size must be at least 10^3"));
    }
    if f.max_index() >= n {
        return Err(Error::invalid("test function index exceeds dimension"));
    }
    let dirs = sample_directions(n, mc_size, seed, false)?;
    let values: Vec<f64> = dirs.iter().map(|theta| {
        let u = f.eval(theta);
        u * u
    }).collect();
    let mean = values.iter().sum::<f64>() / mc_size as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mc_size as f64 - 1.0);
    let stderr = (var / mc_size as f64).sqrt();
    let rhs = f.second_order_rhs(n);
    Ok(CheckReport {
        lhs: mean,
        rhs,
        margin: rhs - mean,
        stderr,
        pass: mean <= rhs + 3.0 * stderr,
    })
}
