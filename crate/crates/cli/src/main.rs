//! `cltlab` — experiments on the normal approximation of weighted sums.
//!
//! Every run is driven by an explicit `--seed` (no wall-clock seeding), so
//! published numbers are reproducible byte-for-byte, regardless of
//! `--threads`.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cltlab::charfn::{cf_profile, default_t_grid};
use cltlab::functionals::{check_bounds, estimate_functionals, EstimateOptions};
use cltlab::runner::{
    avg_kolmogorov, fit_table, rate_sweep, ExperimentConfig, ExperimentResult, FitForm, Mode,
    RateTable, Target, TGrid, TOOL_VERSION,
};
use cltlab::suite::{invariant_suite, CheckStatus};
use cltlab::zoo::{sample_batch, DistributionModel};
use cltlab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cltlab",
    version,
    about = "Numerical experiments on the normal approximation of weighted sums",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate Lambda, sigma4^2, M2, M4, V, beta on one batch and check
    /// the moment inequalities
    Functionals(ExperimentArgs),
    /// Average Kolmogorov distance of S_theta over random directions
    CltAvg(ExperimentArgs),
    /// Rate sweep across dimensions with exponent fit
    RateSweep(ExperimentArgs),
    /// Characteristic-function concentration profile over a t-grid
    CfProfile(ExperimentArgs),
    /// Run the cross-module invariant suite (exit 1 on any failed check)
    Validate(ValidateArgs),
    /// Fit and plot a previously written sweep CSV
    Report(ReportArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Model family: gaussian_std | rademacher | uniform_cube | laplace_iid
    /// | sphere_surface | ball_uniform | scale_mixture [default: from --config]
    #[arg(long)]
    model: Option<String>,
    /// Model parameters as comma-separated k=v pairs (scale_mixture: r1=..,r2=..,w=..)
    #[arg(long)]
    params: Option<String>,
    /// Dimension n, or comma-separated ascending grid for rate-sweep
    #[arg(long)]
    n: Option<String>,
    /// Samples per batch; 0 selects the exact path [default: 10000 empirical, 0 exact]
    #[arg(long)]
    m: Option<usize>,
    /// Number of directions [default: 300]
    #[arg(long)]
    dirs: Option<usize>,
    /// RNG seed; required here or in --config (no wall-clock seeding)
    #[arg(long)]
    seed: Option<u64>,
    /// Law of S_theta: exact | empirical [default: empirical]
    #[arg(long)]
    mode: Option<String>,
    /// Distance target: phi | avg-f | both [default: both]
    #[arg(long)]
    target: Option<String>,
    /// Geometric t-grid as LO:HI:COUNT [default: 0.05:n^(1/6):64 plus T0]
    #[arg(long, value_name = "LO:HI:COUNT")]
    t_grid: Option<String>,
    /// Antithetic direction pairing [default: true]
    #[arg(long)]
    antithetic: Option<bool>,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json [default: csv for rate-sweep/cf-profile, json otherwise]
    #[arg(long)]
    format: Option<String>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// JSON config file; explicit flags take precedence over its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Comma-separated model names or "all" [default: all]
    #[arg(long, default_value = "all")]
    models: String,
    /// Comma-separated dimensions [default: 4,8,16]
    #[arg(long, default_value = "4,8,16")]
    n: String,
    /// RNG seed (no wall-clock seeding)
    #[arg(long)]
    seed: u64,
    /// Batch size per (model, n) cell [default: 40000]
    #[arg(long, default_value_t = 40_000)]
    m: usize,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep CSV produced by rate-sweep
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// SVG plot destination
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Fit form: power | power_times_log [default: power]
    #[arg(long, default_value = "power")]
    fit: String,
}

fn parse_params(s: &str) -> Result<(f64, f64, f64)> {
    let (mut r1, mut r2, mut w) = (None, None, None);
    for pair in s.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("bad parameter {pair:?}, expected k=v")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numeric value in {pair:?}")))?;
        match k.trim() {
            "r1" => r1 = Some(value),
            "r2" => r2 = Some(value),
            "w" => w = Some(value),
            other => return Err(Error::invalid(format!("unknown parameter {other:?}"))),
        }
    }
    match (r1, r2, w) {
        (Some(r1), Some(r2), Some(w)) => Ok((r1, r2, w)),
        _ => Err(Error::invalid("scale_mixture needs r1=, r2=, w=")),
    }
}

fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad dimension {part:?}")))
        })
        .collect()
}

fn parse_t_grid(s: &str) -> Result<TGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid("t-grid must be LO:HI:COUNT"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::invalid("bad t-grid lower endpoint"))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::invalid("bad t-grid upper endpoint"))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::invalid("bad t-grid count"))?;
    Ok(TGrid { lo, hi, count })
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "exact" => Ok(Mode::Exact),
        "empirical" => Ok(Mode::Empirical),
        other => Err(Error::invalid(format!("mode must be exact|empirical, got {other:?}"))),
    }
}

fn parse_target(s: &str) -> Result<Target> {
    match s {
        "phi" => Ok(Target::Phi),
        "avg-f" | "avg_f" => Ok(Target::AvgF),
        "both" => Ok(Target::Both),
        other => Err(Error::invalid(format!("target must be phi|avg-f|both, got {other:?}"))),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}

impl ExperimentArgs {
    /// Resolves the effective configuration: `--config` as the base, each
    /// explicitly-passed flag on top.
    fn resolve(&self, want_grid: bool) -> Result<ExperimentConfig> {
        let cfg = self.resolve_unvalidated(want_grid)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same resolution without the distance-experiment validation
    /// (cf-profile accepts `--m 0` as "exact characteristic functions" for
    /// any product-law or enumerable model).
    fn resolve_unvalidated(&self, want_grid: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => {
                let model = self.resolve_model()?.ok_or_else(|| {
                    Error::invalid("--model is required without --config")
                })?;
                let seed = self
                    .seed
                    .ok_or_else(|| Error::invalid("--seed is required (no wall-clock seeding)"))?;
                let mode = match &self.mode {
                    Some(s) => parse_mode(s)?,
                    None => Mode::Empirical,
                };
                ExperimentConfig::new(model, 8, mode, seed)
            }
        };
        if self.config.is_some() {
            if let Some(model) = self.resolve_model()? {
                cfg.model = model;
            }
            if let Some(seed) = self.seed {
                cfg.seed = seed;
            }
            if let Some(mode) = &self.mode {
                cfg.mode = parse_mode(mode)?;
                if cfg.mode == Mode::Exact {
                    cfg.m = 0;
                }
            }
        }
        if let Some(n) = &self.n {
            let list = parse_n_list(n)?;
            if want_grid {
                cfg.n = None;
                cfg.n_grid = Some(list);
            } else if list.len() == 1 {
                cfg.n = Some(list[0]);
                cfg.n_grid = None;
            } else {
                return Err(Error::invalid("this subcommand takes a single --n"));
            }
        }
        if let Some(m) = self.m {
            if cfg.mode == Mode::Exact && m > 0 {
                return Err(Error::invalid("--m conflicts with --mode exact (use m = 0)"));
            }
            cfg.m = m;
        } else if cfg.mode == Mode::Exact {
            cfg.m = 0;
        }
        if let Some(d) = self.dirs {
            cfg.n_theta = d;
        }
        if let Some(t) = &self.target {
            cfg.target = parse_target(t)?;
        }
        if let Some(g) = &self.t_grid {
            cfg.t_grid = Some(parse_t_grid(g)?);
        }
        if let Some(a) = self.antithetic {
            cfg.antithetic = a;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.display().to_string());
        }
        Ok(cfg)
    }

    fn resolve_model(&self) -> Result<Option<DistributionModel>> {
        match &self.model {
            None => Ok(None),
            Some(name) => {
                let params = match &self.params {
                    Some(p) => Some(parse_params(p)?),
                    None => None,
                };
                if params.is_some() && name != "scale_mixture" {
                    return Err(Error::invalid("--params only applies to scale_mixture"));
                }
                Ok(Some(DistributionModel::from_name(name, params)?))
            }
        }
    }

    fn wants_json(&self, default_json: bool) -> Result<bool> {
        match self.format.as_deref() {
            None => Ok(default_json),
            Some("json") => Ok(true),
            Some("csv") => Ok(false),
            Some(other) => Err(Error::invalid(format!("format must be csv|json, got {other:?}"))),
        }
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(f),
    }
}

fn cmd_functionals(args: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = args.resolve(false)?;
    let n = cfg.n.ok_or_else(|| Error::invalid("functionals needs a single --n"))?;
    let m = if cfg.m == 0 { 100_000 } else { cfg.m };
    let json = args.wants_json(true)?;
    let out = with_threads(args.threads, || -> Result<String> {
        let batch = sample_batch(&cfg.model, n, m, cfg.seed)?;
        let est = estimate_functionals(&batch, cfg.seed, EstimateOptions::default())?;
        let meta = cfg.model.exact_metadata(n);
        let bounds = check_bounds(&est, &meta, n);
        if json {
            let payload = serde_json::json!({
                "tool_version": TOOL_VERSION,
                "config": &cfg,
                "estimates": est,
                "bounds": bounds,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&payload).expect("serializable")))
        } else {
            let mut s = String::from("functional,value,stderr\n");
            s.push_str(&format!("lambda,{},{}\n", est.lambda_hat, est.lambda_stderr));
            s.push_str(&format!("sigma4sq,{},{}\n", est.sigma4sq_hat, est.sigma4sq_stderr));
            s.push_str(&format!("m2,{},\n", est.m2_hat));
            s.push_str(&format!("m4_lower,{},\n", est.m4_hat));
            s.push_str(&format!("m4_upper,{},\n", est.m4_upper));
            s.push_str(&format!("v,{},\n", est.v_hat));
            if let Some(b) = est.beta_hat {
                s.push_str(&format!("beta,{b},\n"));
            }
            s.push_str(&format!("bar_beta4,{},\n", est.bar_beta4_hat));
            Ok(s)
        }
    })?;
    write_output(&cfg.output.as_ref().map(PathBuf::from), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_clt_avg(args: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = args.resolve(false)?;
    let json = args.wants_json(true)?;
    let out = with_threads(args.threads, || -> Result<String> {
        let avg = avg_kolmogorov(&cfg)?;
        if json {
            let payload = serde_json::json!({
                "tool_version": TOOL_VERSION,
                "config": &cfg,
                "result": avg,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&payload).expect("serializable")))
        } else {
            let mut s = String::from("direction,rho_phi,rho_F\n");
            let count = avg.per_direction_phi.len().max(avg.per_direction_f.len());
            for i in 0..count {
                let phi = avg.per_direction_phi.get(i).map(|v| v.to_string()).unwrap_or_default();
                let f = avg.per_direction_f.get(i).map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!("{i},{phi},{f}\n"));
            }
            Ok(s)
        }
    })?;
    write_output(&cfg.output.as_ref().map(PathBuf::from), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_rate_sweep(args: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = args.resolve(true)?;
    let json = args.wants_json(false)?;
    let (table, out) = with_threads(args.threads, || -> Result<(RateTable, String)> {
        let table = rate_sweep(&cfg)?;
        let rendered = if json {
            let payload = ExperimentResult {
                tool_version: TOOL_VERSION,
                config: &cfg,
                table: &table,
            };
            format!("{}\n", serde_json::to_string_pretty(&payload).expect("serializable"))
        } else {
            table.to_csv_string()
        };
        Ok((table, rendered))
    })?;
    write_output(&cfg.output.as_ref().map(PathBuf::from), &out)?;
    if let Some(fit) = &table.fitted {
        eprintln!(
            "fit: alpha = {:.4}, C = {:.4}, r^2 = {:.4}{}",
            fit.alpha,
            fit.c,
            fit.r_squared,
            if fit.excluded_smallest { " (smallest n excluded)" } else { "" }
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_cf_profile(args: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = args.resolve_unvalidated(false)?;
    let n = cfg.n.ok_or_else(|| Error::invalid("cf-profile needs a single --n"))?;
    let grid = match cfg.t_grid {
        Some(g) => g.to_points()?,
        None => default_t_grid(n),
    };
    let n_theta = if cfg.n_theta == 300 { 128 } else { cfg.n_theta };
    let out = with_threads(args.threads, || -> Result<String> {
        let profile = cf_profile(&cfg.model, n, &grid, n_theta, cfg.m, cfg.seed)?;
        let mut buf = Vec::new();
        profile.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    })?;
    write_output(&cfg.output.as_ref().map(PathBuf::from), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let models = if args.models == "all" {
        DistributionModel::all()
    } else {
        args.models
            .split(',')
            .map(|name| DistributionModel::from_name(name.trim(), None))
            .collect::<Result<Vec<_>>>()?
    };
    let n_list = parse_n_list(&args.n)?;
    let report = with_threads(args.threads, || invariant_suite(&models, &n_list, args.seed, args.m))?;
    for check in &report.checks {
        let status = match check.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Inapplicable => "n/a ",
        };
        println!(
            "{status}  {:<34} {:<14} n={:<3} lhs={:<12.6} rhs={:<12.6} margin={:+.6}",
            check.name, check.model, check.n, check.lhs, check.rhs, check.margin
        );
    }
    let failures = report.failures().count();
    println!(
        "{} checks, {failures} failed, seed {}",
        report.checks.len(),
        args.seed
    );
    Ok(if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.input)?;
    let mut table = RateTable::read_csv(&text)?;
    let form = match args.fit.as_str() {
        "power" => FitForm::Power,
        "power_times_log" => FitForm::PowerTimesLog,
        other => return Err(Error::invalid(format!("fit must be power|power_times_log, got {other:?}"))),
    };
    let fit = fit_table(&table.rows, form)?;
    println!(
        "alpha = {:.6}\nC = {:.6}\nr_squared = {:.6}{}",
        fit.alpha,
        fit.c,
        fit.r_squared,
        if fit.excluded_smallest { "\n(smallest n excluded)" } else { "" }
    );
    table.fitted = Some(fit);
    if let Some(plot) = &args.plot {
        svg::emit_svg(&table, plot)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::InvalidArgument(_) | Error::Unsupported(_) | Error::ConfigParse(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Functionals(args) => cmd_functionals(args),
        Command::CltAvg(args) => cmd_clt_avg(args),
        Command::RateSweep(args) => cmd_rate_sweep(args),
        Command::CfProfile(args) => cmd_cf_profile(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
