//! Catalogue of isotropic test laws on `R^n`.
//!
//! Every family is isotropic by construction (scalings are fixed so that
//! `E X_i = 0`, `E X_i X_j = delta_ij`) and symmetric about the origin. The
//! catalogue spans the hypothesis classes of the moment inequalities checked
//! elsewhere: i.i.d. coordinates, coordinate-wise symmetric dependence,
//! log-concave bodies, laws with a known spectral gap, and a scale mixture
//! whose second-order correlation constant grows linearly in `n` (the
//! negative control for the rate experiments).

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::FiniteSupport;
use crate::rng::stream_rng;

/// Descriptor of a sampleable law, serialized as `{family, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DistributionModel {
    /// Standard Gaussian coordinates.
    GaussianStd,
    /// Independent +-1 signs.
    Rademacher,
    /// Independent Uniform[-sqrt(3), sqrt(3)] coordinates.
    UniformCube,
    /// Independent Laplace coordinates with unit variance.
    LaplaceIid,
    /// Uniform on the sphere of radius sqrt(n).
    SphereSurface,
    /// Uniform on the ball of radius sqrt(n+2).
    BallUniform,
    /// Gaussian vector scaled by a two-point random radius factor `R` with
    /// `R^2 in {r1^2, r2^2}`, `P(R = r1) = w`, constrained to `E R^2 = 1`.
    ScaleMixture { r1: f64, r2: f64, w: f64 },
}

/// Closed-form moment metadata and structural class flags for a model at a
/// given dimension. `None` marks quantities without a closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoments {
    /// `E X_i^4` (same for every coordinate in this catalogue).
    pub e_x4: Option<f64>,
    /// `cov(X_i^2, X_j^2)` for `i != j`.
    pub cov_squares: Option<f64>,
    /// `Var(|X|^2)/n`.
    pub sigma4sq: Option<f64>,
    /// Second-order correlation constant.
    pub lambda: Option<f64>,
    /// Poincare constant, when a closed value is known.
    pub lambda1: Option<f64>,
    /// `(1/n) sum_k E X_k^4`.
    pub bar_beta4: Option<f64>,
    /// Independent coordinates.
    pub iid: bool,
    /// Invariant under independent coordinate sign flips.
    pub coordinate_symmetric: bool,
    /// Invariant under coordinate permutations.
    pub exchangeable: bool,
}

impl DistributionModel {
    /// Validated scale-mixture constructor; the isotropy constraint is
    /// `w r1^2 + (1-w) r2^2 = 1`.
    pub fn scale_mixture(r1: f64, r2: f64, w: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0 && w > 0.0 && w < 1.0) {
            return Err(Error::invalid("scale_mixture needs r1, r2 > 0 and w in (0,1)"));
        }
        let second = w * r1 * r1 + (1.0 - w) * r2 * r2;
        if (second - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "scale_mixture is not isotropic: w r1^2 + (1-w) r2^2 = {second}"
            )));
        }
        Ok(DistributionModel::ScaleMixture { r1, r2, w })
    }

    /// Two-point radius mixture with `E R^2 = 1` and prescribed fourth
    /// moment `E R^4 = q > 1`, using weight `w` on the large radius.
    pub fn scale_mixture_with_r4(q: f64, w: f64) -> Result<Self> {
        if q <= 1.0 {
            return Err(Error::invalid("scale_mixture_with_r4 needs E R^4 > 1"));
        }
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid("weight must lie in (0,1)"));
        }
        let v = q - 1.0;
        let hi = 1.0 + (v * (1.0 - w) / w).sqrt();
        let lo = 1.0 - (v * w / (1.0 - w)).sqrt();
        if lo <= 0.0 {
            return Err(Error::invalid("weight too large for this fourth moment"));
        }
        DistributionModel::scale_mixture(hi.sqrt(), lo.sqrt(), w)
    }

    /// Default negative control: `E R^4 = 4` with weight 0.1.
    pub fn scale_mixture_default() -> Self {
        DistributionModel::scale_mixture_with_r4(4.0, 0.1).expect("default mixture is valid")
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistributionModel::GaussianStd => "gaussian_std",
            DistributionModel::Rademacher => "rademacher",
            DistributionModel::UniformCube => "uniform_cube",
            DistributionModel::LaplaceIid => "laplace_iid",
            DistributionModel::SphereSurface => "sphere_surface",
            DistributionModel::BallUniform => "ball_uniform",
            DistributionModel::ScaleMixture { .. } => "scale_mixture",
        }
    }

    /// All catalogue families, with default parameters where needed.
    pub fn all() -> Vec<DistributionModel> {
        vec![
            DistributionModel::GaussianStd,
            DistributionModel::Rademacher,
            DistributionModel::UniformCube,
            DistributionModel::LaplaceIid,
            DistributionModel::SphereSurface,
            DistributionModel::BallUniform,
            DistributionModel::scale_mixture_default(),
        ]
    }

    pub fn from_name(name: &str, params: Option<(f64, f64, f64)>) -> Result<Self> {
        match name {
            "gaussian_std" => Ok(DistributionModel::GaussianStd),
            "rademacher" => Ok(DistributionModel::Rademacher),
            "uniform_cube" => Ok(DistributionModel::UniformCube),
            "laplace_iid" => Ok(DistributionModel::LaplaceIid),
            "sphere_surface" => Ok(DistributionModel::SphereSurface),
            "ball_uniform" => Ok(DistributionModel::BallUniform),
            "scale_mixture" => match params {
                Some((r1, r2, w)) => DistributionModel::scale_mixture(r1, r2, w),
                None => Ok(DistributionModel::scale_mixture_default()),
            },
            other => Err(Error::invalid(format!("unknown model family: {other}"))),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn has_finite_support(&self) -> bool {
        matches!(self, DistributionModel::Rademacher)
    }

    /// `E R^4` of the radius factor for the scale mixture.
    fn mixture_r4(&self) -> Option<f64> {
        match self {
            DistributionModel::ScaleMixture { r1, r2, w } => {
                Some(w * r1.powi(4) + (1.0 - w) * r2.powi(4))
            }
            _ => None,
        }
    }

    /// Closed-form moment metadata at dimension `n`.
    pub fn exact_metadata(&self, n: usize) -> ExactMoments {
        let nf = n as f64;
        match self {
            DistributionModel::GaussianStd => ExactMoments {
                e_x4: Some(3.0),
                cov_squares: Some(0.0),
                sigma4sq: Some(2.0),
                lambda: Some(2.0),
                lambda1: Some(1.0),
                bar_beta4: Some(3.0),
                iid: true,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::Rademacher => ExactMoments {
                e_x4: Some(1.0),
                cov_squares: Some(0.0),
                sigma4sq: Some(0.0),
                lambda: Some(2.0),
                lambda1: None,
                bar_beta4: Some(1.0),
                iid: true,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::UniformCube => ExactMoments {
                e_x4: Some(1.8),
                cov_squares: Some(0.0),
                sigma4sq: Some(0.8),
                // For iid symmetric unit-variance coordinates the covariance
                // operator of X X^T diagonalizes over matrix entries:
                // eigenvalue 2 E X_1^2 X_2^2 = 2 on off-diagonal pairs,
                // Var(X_1^2) on the diagonal: Lambda = max(2, Var X_1^2).
                lambda: Some(2.0),
                // Neumann eigenvalue of the interval of length 2 sqrt(3).
                lambda1: Some(std::f64::consts::PI.powi(2) / 12.0),
                bar_beta4: Some(1.8),
                iid: true,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::LaplaceIid => ExactMoments {
                e_x4: Some(6.0),
                cov_squares: Some(0.0),
                sigma4sq: Some(5.0),
                lambda: Some(5.0),
                // Optimal 1-d constant 1/(4 b^2) with b^2 = 1/2.
                lambda1: Some(0.5),
                bar_beta4: Some(6.0),
                iid: true,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::SphereSurface => ExactMoments {
                e_x4: Some(3.0 * nf / (nf + 2.0)),
                cov_squares: Some(-2.0 / (nf + 2.0)),
                sigma4sq: Some(0.0),
                // Var<AX,X> = 2(n Sum l^2 - (Sum l)^2)/(n+2) over the
                // eigenvalues l of A, maximal on trace-free A.
                lambda: Some(2.0 * nf / (nf + 2.0)),
                lambda1: Some((nf - 1.0) / nf),
                bar_beta4: Some(3.0 * nf / (nf + 2.0)),
                iid: false,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::BallUniform => ExactMoments {
                e_x4: Some(3.0 * (nf + 2.0) / (nf + 4.0)),
                cov_squares: Some(-2.0 / (nf + 4.0)),
                sigma4sq: Some(4.0 / (nf + 4.0)),
                // Same eigenvalue computation as the sphere with the Beta
                // radius moments folded in.
                lambda: Some(2.0 * (nf + 2.0) / (nf + 4.0)),
                lambda1: None,
                bar_beta4: Some(3.0 * (nf + 2.0) / (nf + 4.0)),
                iid: false,
                coordinate_symmetric: true,
                exchangeable: true,
            },
            DistributionModel::ScaleMixture { .. } => {
                let q = self.mixture_r4().unwrap();
                ExactMoments {
                    e_x4: Some(3.0 * q),
                    cov_squares: Some(q - 1.0),
                    sigma4sq: Some(nf * (q - 1.0) + 2.0 * q),
                    // Var<AX,X> = q(2||A||^2 + tr(A)^2) - tr(A)^2, maximal at
                    // A = I/sqrt(n).
                    lambda: Some(nf * (q - 1.0) + 2.0 * q),
                    lambda1: None,
                    bar_beta4: Some(3.0 * q),
                    iid: false,
                    coordinate_symmetric: true,
                    exchangeable: true,
                }
            }
        }
    }

    /// Closed-form `M_4^4 = sup_theta E S_theta^4` where available. For
    /// i.i.d. unit-variance symmetric coordinates `E S_theta^4 = 3 +
    /// (E X^4 - 3) sum theta_j^4`, so the supremum sits at a basis vector
    /// (excess kurtosis positive) or the uniform direction (negative). The
    /// rotationally driven families have direction-free fourth moments.
    pub fn exact_m4_fourth(&self, n: usize) -> Option<f64> {
        let nf = n as f64;
        let meta = self.exact_metadata(n);
        match self {
            DistributionModel::GaussianStd
            | DistributionModel::Rademacher
            | DistributionModel::UniformCube
            | DistributionModel::LaplaceIid => {
                let e4 = meta.e_x4?;
                Some(if e4 >= 3.0 { e4 } else { 3.0 + (e4 - 3.0) / nf })
            }
            DistributionModel::SphereSurface | DistributionModel::BallUniform => meta.e_x4,
            DistributionModel::ScaleMixture { .. } => meta.e_x4,
        }
    }

    /// Characteristic function of a single coordinate at argument `s`, for
    /// families with independent coordinates (real-valued by symmetry).
    pub fn coordinate_cf(&self, s: f64) -> Option<f64> {
        match self {
            DistributionModel::GaussianStd => Some((-0.5 * s * s).exp()),
            DistributionModel::Rademacher => Some(s.cos()),
            DistributionModel::UniformCube => {
                let a = 3.0f64.sqrt() * s;
                Some(if a.abs() < 1e-8 { 1.0 - a * a / 6.0 } else { a.sin() / a })
            }
            DistributionModel::LaplaceIid => Some(1.0 / (1.0 + 0.5 * s * s)),
            _ => None,
        }
    }

    /// Exact characteristic function of `S_theta` for product families:
    /// `f_theta(t) = prod_j cf(t theta_j)`.
    pub fn exact_cf(&self, theta: &[f64], t: f64) -> Option<f64> {
        self.coordinate_cf(0.0)?;
        let mut prod = 1.0;
        for &c in theta {
            prod *= self.coordinate_cf(t * c).unwrap();
        }
        Some(prod)
    }
}

/// An `m x n` batch of i.i.d. draws, row-major, with provenance.
///
/// Row `k` is generated from the ChaCha stream `(seed, k)`, so the entries
/// depend only on `(seed, k, i)` — never on the batch size or thread count.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    data: Vec<f64>,
    model: DistributionModel,
    seed: u64,
    m: usize,
    n: usize,
}

impl SampleBatch {
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn model(&self) -> &DistributionModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n)
    }

    /// Euclidean norms of the rows.
    pub fn radii(&self) -> Vec<f64> {
        self.iter_rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    /// Wraps externally built data (used by tests that need deliberately
    /// corrupted batches).
    pub fn from_raw(data: Vec<f64>, model: DistributionModel, seed: u64, m: usize, n: usize) -> Result<Self> {
        if data.len() != m * n {
            return Err(Error::invalid("data length must be m*n"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("batch entries must be finite"));
        }
        Ok(SampleBatch { data, model, seed, m, n })
    }
}

fn fill_row(model: &DistributionModel, n: usize, seed: u64, k: usize, out: &mut [f64]) {
    let mut rng = stream_rng(seed, k as u64);
    match model {
        DistributionModel::GaussianStd => {
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        DistributionModel::Rademacher => {
            for x in out.iter_mut() {
                *x = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            }
        }
        DistributionModel::UniformCube => {
            let a = 3.0f64.sqrt();
            for x in out.iter_mut() {
                *x = rng.gen_range(-a..a);
            }
        }
        DistributionModel::LaplaceIid => {
            // sign * Exp(1) * b with b = 1/sqrt(2) gives unit variance.
            let b = std::f64::consts::FRAC_1_SQRT_2;
            for x in out.iter_mut() {
                let e: f64 = rng.sample(Exp1);
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                *x = s * b * e;
            }
        }
        DistributionModel::SphereSurface => {
            let radius = (n as f64).sqrt();
            loop {
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-150 {
                    for x in out.iter_mut() {
                        *x *= radius / norm;
                    }
                    break;
                }
            }
        }
        DistributionModel::BallUniform => {
            let scale = (n as f64 + 2.0).sqrt();
            loop {
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-150 {
                    let u: f64 = rng.gen();
                    let radius = scale * u.powf(1.0 / n as f64);
                    for x in out.iter_mut() {
                        *x *= radius / norm;
                    }
                    break;
                }
            }
        }
        DistributionModel::ScaleMixture { r1, r2, w } => {
            let u: f64 = rng.gen();
            let r = if u < *w { *r1 } else { *r2 };
            for x in out.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *x = r * g;
            }
        }
    }
}

/// Draws an `m x n` batch of i.i.d. rows from the model.
pub fn sample_batch(model: &DistributionModel, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    if n < 2 {
        return Err(Error::invalid("sample_batch requires n >= 2"));
    }
    if m < 1 {
        return Err(Error::invalid("sample_batch requires m >= 1"));
    }
    let mut data = vec![0.0f64; m * n];
    data.par_chunks_exact_mut(n).enumerate().for_each(|(k, row)| {
        fill_row(model, n, seed, k, row);
    });
    Ok(SampleBatch {
        data,
        model: model.clone(),
        seed,
        m,
        n,
    })
}

/// Enumerates the complete support of a finite-support family.
pub fn enumerate_support(model: &DistributionModel, n: usize, budget: u64) -> Result<FiniteSupport> {
    match model {
        DistributionModel::Rademacher => {
            if n >= 63 || (1u64 << n) > budget {
                return Err(Error::ResourceLimit(format!(
                    "rademacher support has 2^{n} atoms, budget {budget}"
                )));
            }
            let count = 1usize << n;
            let prob = 1.0 / count as f64;
            let mut points = Vec::with_capacity(count * n);
            for mask in 0..count {
                for bit in 0..n {
                    points.push(if mask >> bit & 1 == 1 { 1.0 } else { -1.0 });
                }
            }
            FiniteSupport::new(points, vec![prob; count], n)
        }
        other => Err(Error::Unsupported(format!(
            "{} has infinite support; exact enumeration is not defined",
            other.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_entries_are_signs() {
        let b = sample_batch(&DistributionModel::Rademacher, 6, 500, 1).unwrap();
        assert!(b.data().iter().all(|x| *x == 1.0 || *x == -1.0));
    }

    #[test]
    fn sphere_rows_have_constant_radius() {
        let n = 9;
        let b = sample_batch(&DistributionModel::SphereSurface, n, 300, 2).unwrap();
        let r = (n as f64).sqrt();
        for k in 0..b.rows() {
            let norm = b.row(k).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - r).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_coordinate_means_small() {
        // Monte Carlo oracle: 5 sigma = 5/sqrt(m).
        let b = sample_batch(&DistributionModel::GaussianStd, 8, 1_000_000, 3).unwrap();
        for i in 0..8 {
            let mean: f64 = b.iter_rows().map(|r| r[i]).sum::<f64>() / b.rows() as f64;
            assert!(mean.abs() < 0.005, "coordinate {i}: {mean}");
        }
    }

    #[test]
    fn batches_are_reproducible_and_extendable() {
        let a = sample_batch(&DistributionModel::LaplaceIid, 5, 64, 9).unwrap();
        let b = sample_batch(&DistributionModel::LaplaceIid, 5, 64, 9).unwrap();
        assert_eq!(a.data(), b.data());
        // Entry (k, i) must not depend on m.
        let longer = sample_batch(&DistributionModel::LaplaceIid, 5, 128, 9).unwrap();
        assert_eq!(a.data(), &longer.data()[..a.data().len()]);
    }

    #[test]
    fn ball_rows_inside_radius() {
        let n = 7;
        let b = sample_batch(&DistributionModel::BallUniform, n, 2_000, 4).unwrap();
        let r = (n as f64 + 2.0).sqrt();
        for k in 0..b.rows() {
            let norm = b.row(k).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm <= r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn enumerate_rademacher_small() {
        let sup = enumerate_support(&DistributionModel::Rademacher, 3, 1 << 24).unwrap();
        assert_eq!(sup.len(), 8);
        assert!(sup.probs().iter().all(|p| (*p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn enumerate_budget_and_support_errors() {
        match enumerate_support(&DistributionModel::Rademacher, 25, 1 << 24) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
        match enumerate_support(&DistributionModel::GaussianStd, 4, 1 << 24) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn scale_mixture_constraint_enforced() {
        assert!(DistributionModel::scale_mixture(1.5, 1.0, 0.2).is_err());
        let m = DistributionModel::scale_mixture_with_r4(4.0, 0.1).unwrap();
        if let DistributionModel::ScaleMixture { r1, r2, w } = m {
            assert!((w * r1 * r1 + (1.0 - w) * r2 * r2 - 1.0).abs() < 1e-12);
            let q = w * r1.powi(4) + (1.0 - w) * r2.powi(4);
            assert!((q - 4.0).abs() < 1e-9);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn model_json_round_trip() {
        for m in DistributionModel::all() {
            let s = serde_json::to_string(&m).unwrap();
            let back: DistributionModel = serde_json::from_str(&s).unwrap();
            assert_eq!(m, back);
        }
        let s = serde_json::to_string(&DistributionModel::GaussianStd).unwrap();
        assert_eq!(s, r#"{"family":"gaussian_std"}"#);
    }

    #[test]
    fn metadata_lambda_lower_bound() {
        // Isotropic laws must have lambda >= (n-1)/n.
        for m in DistributionModel::all() {
            for n in [2usize, 4, 16] {
                let meta = m.exact_metadata(n);
                if let Some(l) = meta.lambda {
                    assert!(l >= (n as f64 - 1.0) / n as f64, "{} n={n}", m.name());
                }
            }
        }
    }

    #[test]
    fn coordinate_cf_values() {
        let m = DistributionModel::Rademacher;
        assert!((m.coordinate_cf(1.0).unwrap() - 1.0f64.cos()).abs() < 1e-15);
        assert!(DistributionModel::SphereSurface.coordinate_cf(1.0).is_none());
        // exact_cf on the first basis vector is the coordinate cf
        let theta = vec![1.0, 0.0, 0.0];
        let f = m.exact_cf(&theta, 0.7).unwrap();
        assert!((f - 0.7f64.cos()).abs() < 1e-15);
    }
}
