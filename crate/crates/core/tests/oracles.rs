//! Independent-oracle checks: every closed-form or estimator path is judged
//! against a second computation route (quadrature, enumeration, brute-force
//! maximization, Monte Carlo with explicit error bars).

use cltlab::distance::{kolmogorov_empirical, std_normal_cdf, EmpiricalSample};
use cltlab::functionals::{lambda_exact_discrete, sigma4sq};
use cltlab::law::FiniteSupport;
use cltlab::runner::{avg_kolmogorov, ExperimentConfig, Mode, Target};
use cltlab::special::ln_gamma;
use cltlab::sphere::{sample_directions, theta1_cdf, theta1_moment};
use cltlab::zoo::{enumerate_support, sample_batch, DistributionModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Simpson quadrature of the theta_1 density `c_n (1-t^2)^{(n-3)/2}`.
fn theta1_cdf_quadrature(n: usize, t: f64) -> f64 {
    let expo = (n as f64 - 3.0) / 2.0;
    let c = (ln_gamma(n as f64 / 2.0)
        - ln_gamma((n as f64 - 1.0) / 2.0)
        - 0.5 * std::f64::consts::PI.ln())
    .exp();
    let steps = 40_000;
    let h = (t + 1.0) / steps as f64;
    let f = |u: f64| {
        let w = 1.0 - u * u;
        if w <= 0.0 {
            0.0
        } else {
            c * w.powf(expo)
        }
    };
    let mut acc = 0.0;
    for i in 0..steps {
        let a = -1.0 + i as f64 * h;
        let b = a + h;
        acc += h / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    acc
}

#[test]
fn theta1_cdf_against_quadrature() {
    for n in [5usize, 8, 12, 21] {
        let mut t = -0.95;
        while t < 1.0 {
            let cdf = theta1_cdf(n, t);
            let quad = theta1_cdf_quadrature(n, t);
            assert!(
                (cdf - quad).abs() < 1e-9,
                "n={n} t={t}: cdf={cdf} quad={quad}"
            );
            t += 0.3;
        }
    }
}

#[test]
fn theta1_moments_against_monte_carlo() {
    // Spec tolerance: 4 standard errors at 10^6 directions.
    let count = 1_000_000;
    for n in [4usize, 16] {
        let dirs = sample_directions(n, count, 2024, false).unwrap();
        for p in [2u32, 4, 6] {
            let vals: Vec<f64> = dirs
                .iter()
                .map(|d| d.coords()[0].powi(p as i32))
                .collect();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let var = vals
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / (count as f64 - 1.0);
            let se = (var / count as f64).sqrt();
            let exact = theta1_moment(n, p);
            assert!(
                (mean - exact).abs() <= 4.0 * se,
                "n={n} p={p}: mc={mean} exact={exact} se={se}"
            );
        }
    }
}

/// Brute-force Rayleigh quotients of the quadratic-form variance over
/// random unit-HS symmetric matrices never exceed the dense-eigensolver
/// value.
#[test]
fn lambda_oracle_dominates_brute_force() {
    let sup = enumerate_support(&DistributionModel::Rademacher, 4, 1 << 20).unwrap();
    let oracle = lambda_exact_discrete(&sup).unwrap();
    assert!((oracle - 2.0).abs() < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let mut best: f64 = 0.0;
    for _ in 0..10_000 {
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i..n {
                let g: f64 = rng.sample(StandardNormal);
                a[i * n + j] = g;
                a[j * n + i] = g;
            }
        }
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.iter_mut().for_each(|v| *v /= norm);
        // Var(<A X, X>) by exhaustive expectation.
        let mut mean = 0.0;
        let mut mean_sq = 0.0;
        for (x, p) in sup.iter() {
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += a[i * n + j] * x[i] * x[j];
                }
            }
            mean += p * q;
            mean_sq += p * q * q;
        }
        let var = mean_sq - mean * mean;
        assert!(var <= oracle * (1.0 + 1e-6), "sampled {var} beats oracle {oracle}");
        best = best.max(var);
    }
    // The sampled maximum should come close to the oracle from below.
    assert!(best > 0.5 * oracle, "best sampled quotient only reached {best}");
}

#[test]
fn lambda_exact_rademacher_all_small_dims() {
    for n in 2..=6 {
        let sup = enumerate_support(&DistributionModel::Rademacher, n, 1 << 20).unwrap();
        let val = lambda_exact_discrete(&sup).unwrap();
        assert!((val - 2.0).abs() < 1e-9, "n={n}: {val}");
    }
}

#[test]
fn lambda_exact_agrees_with_closed_form_on_sphere_like_support() {
    // Uniform on the 2n signed scaled basis vectors {+-sqrt(n) e_i}; the
    // eigensolver value must dominate the directly enumerated quadratic-form
    // variance at a hand-picked trace-free diagonal matrix.
    let n = 3usize;
    let scale = (n as f64).sqrt();
    let mut points = Vec::new();
    for i in 0..n {
        for s in [1.0f64, -1.0] {
            let mut p = vec![0.0; n];
            p[i] = s * scale;
            points.extend_from_slice(&p);
        }
    }
    let sup = FiniteSupport::new(points, vec![1.0 / (2 * n) as f64; 2 * n], n).unwrap();
    let oracle = lambda_exact_discrete(&sup).unwrap();
    // Diagonal trace-adjusted matrix diag(2,-1,-1)/sqrt(6):
    // Var = sum_i d_i^2 E X_i^4-ish; direct enumeration:
    let mut best: f64 = 0.0;
    let d = [2.0, -1.0, -1.0];
    let dn: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for (x, p) in sup.iter() {
        let q: f64 = (0..n).map(|i| d[i] / dn * x[i] * x[i]).sum();
        mean += p * q;
        mean_sq += p * q * q;
    }
    best = best.max(mean_sq - mean * mean);
    assert!(oracle >= best - 1e-12, "oracle {oracle} vs diag quotient {best}");
}

#[test]
fn kolmogorov_statistic_quantile() {
    // Kolmogorov distribution oracle: P(sqrt(m) D > 1.63) ~ 0.01.
    let m = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut values: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    values.sort_by(f64::total_cmp);
    let sample = EmpiricalSample::new(values).unwrap();
    let rho = kolmogorov_empirical(&sample, std_normal_cdf).rho;
    assert!(rho <= 1.63 / (m as f64).sqrt(), "rho = {rho}");
}

#[test]
fn isotropy_of_every_family() {
    // Sample covariance within 0.02 of the identity entrywise (5 sigma at
    // 10^6 rows).
    for model in DistributionModel::all() {
        for n in [4usize, 8, 16] {
            let m = 1_000_000;
            let batch = sample_batch(&model, n, m, 31).unwrap();
            let mut cov = vec![0.0f64; n * n];
            for row in batch.iter_rows() {
                for i in 0..n {
                    for j in i..n {
                        cov[i * n + j] += row[i] * row[j];
                    }
                }
            }
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in i..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((cov[i * n + j] / m as f64 - target).abs());
                }
            }
            assert!(worst <= 0.02, "{} n={n}: max dev {worst}", model.name());
        }
    }
}

#[test]
fn scale_mixture_sigma4_grows_linearly() {
    // sigma4^2 = n (E R^4 - 1) + 2 E R^4 under a common random radius.
    let model = DistributionModel::scale_mixture_default();
    for n in [8usize, 16, 32] {
        let expect = n as f64 * 3.0 + 8.0;
        let meta = model.exact_metadata(n);
        assert!((meta.sigma4sq.unwrap() - expect).abs() < 1e-9);
        let batch = sample_batch(&model, n, 400_000, 12).unwrap();
        let est = sigma4sq(&batch).unwrap();
        assert!(
            (est.value - expect).abs() <= 4.0 * est.stderr,
            "n={n}: {} vs {expect} (se {})",
            est.value,
            est.stderr
        );
    }
}

#[test]
fn average_cdf_gaussian_is_phi() {
    // Rotational invariance: S_theta ~ N(0,1), so F = Phi.
    let n = 16;
    let batch = sample_batch(&DistributionModel::GaussianStd, n, 20_000, 9).unwrap();
    let radii = batch.radii();
    let avg = cltlab::distance::AverageCdf::from_samples(&radii, n).unwrap();
    for &x in &[-2.0, -1.0, -0.3, 0.0, 0.4, 1.1, 2.3] {
        let f = avg.eval(x);
        let se = avg.mc_stderr(x).max(1e-6);
        assert!(
            (f - std_normal_cdf(x)).abs() <= 3.0 * se,
            "x={x}: F={f} Phi={} se={se}",
            std_normal_cdf(x)
        );
    }
}

#[test]
fn rho_f_phi_orders_models_by_thin_shell() {
    // The scale mixture has a linearly growing sigma4^2, so its average law
    // sits farther from Phi than the constant-radius sphere at the same n.
    let n = 16;
    let mix = sample_batch(&DistributionModel::scale_mixture_default(), n, 4_000, 21).unwrap();
    let rho_mix = cltlab::distance::rho_f_phi(&mix.radii(), n, 1024).unwrap();
    let rho_sphere = cltlab::distance::rho_f_phi(&[(n as f64).sqrt()], n, 1024).unwrap();
    assert!(
        rho_mix > rho_sphere,
        "mixture {rho_mix} should exceed sphere {rho_sphere}"
    );
}

#[test]
fn exact_and_empirical_paths_agree() {
    // Same directions on both paths; the empirical Kolmogorov estimate is
    // biased upward by O(1/sqrt(m)).
    let n = 10;
    let mut exact_cfg = ExperimentConfig::new(DistributionModel::Rademacher, n, Mode::Exact, 14);
    exact_cfg.n_theta = 60;
    exact_cfg.target = Target::Phi;
    let exact = avg_kolmogorov(&exact_cfg).unwrap();

    let mut emp_cfg = exact_cfg.clone();
    emp_cfg.mode = Mode::Empirical;
    emp_cfg.m = 1_000_000;
    let emp = avg_kolmogorov(&emp_cfg).unwrap();

    let delta = (exact.mean_phi.unwrap() - emp.mean_phi.unwrap()).abs();
    let allow = 5.0 / (emp_cfg.m as f64).sqrt()
        + 3.0 * (exact.stderr_phi.unwrap() + emp.stderr_phi.unwrap());
    assert!(
        delta <= allow,
        "exact {} vs empirical {} (allow {allow})",
        exact.mean_phi.unwrap(),
        emp.mean_phi.unwrap()
    );
}

#[test]
fn sweep_rows_satisfy_triangle_relation() {
    // mean rho(F_theta, Phi) <= mean rho(F_theta, F) + rho(F, Phi) + slack.
    let mut cfg = ExperimentConfig::new(DistributionModel::Rademacher, 8, Mode::Exact, 15);
    cfg.n = None;
    cfg.n_grid = Some(vec![6, 8, 10]);
    cfg.n_theta = 100;
    let table = cltlab::runner::rate_sweep(&cfg).unwrap();
    for row in &table.rows {
        assert!(
            row.mean_rho_phi <= row.mean_rho_f + row.rho_f_phi + 3.0 * (row.stderr_phi + row.stderr_f) + 1e-9,
            "n={}: {} vs {} + {}",
            row.n,
            row.mean_rho_phi,
            row.mean_rho_f,
            row.rho_f_phi
        );
    }
}
