//! Command-line front end: scenario loading, the seven pipelines, atomic
//! artifact output, run manifests and golden-file comparison.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::asymptotics::{annihilate, candidate_exponents, fit_psi_expansion, log_split_of};
use crate::blowup::{blowup_report, report_csv};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::integrator::{integral_series, pseudo_abelian_with, stokes_oracle_with, IntegralSeries};
use crate::ode::{displacement_profile, limit_cycle_match, revolution};
use crate::oval::{find_center, trace_oval_with};
use crate::zeros::{scan_zeros_for, uniformity_csv, uniformity_row, uniformity_study};
use crate::ordered_map;

/// Default output root when neither `--out` nor `output.dir` is given.
pub const OUT_ENV: &str = "PSEUDO_ABELIAN_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "pseudo-abelian", version, about = "Pseudo-Abelian integrals near an unfolded triple point")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 runs the sequential reference mode.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory of pinned artifacts to compare against.
    #[arg(long, global = true)]
    pub golden: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Target {
    /// Scenario file, as an alternative to `--config`.
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace ovals on the trace grid.
    Trace(Target),
    /// Integral series, and the Stokes oracle on the oracle grid.
    Integrate(Target),
    /// Zeros of the series at the scenario λ.
    Zeros(Target),
    /// Chart identities and saddle linearizations.
    BlowupCheck(Target),
    /// Power-log model and the (1, log λ) split.
    MonodromyFit {
        #[command(flatten)]
        target: Target,
        /// Read `series_lambda_NN.csv` files from this directory instead of integrating.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Displacement sign changes against zeros of the integral.
    ValidateOde(Target),
    /// Zero counts over the λ list.
    Uniformity(Target),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace(_) => "trace",
            Command::Integrate(_) => "integrate",
            Command::Zeros(_) => "zeros",
            Command::BlowupCheck(_) => "blowup-check",
            Command::MonodromyFit { .. } => "monodromy-fit",
            Command::ValidateOde(_) => "validate-ode",
            Command::Uniformity(_) => "uniformity",
        }
    }

    fn module(&self) -> &'static str {
        match self {
            Command::Trace(_) => "oval_tracer",
            Command::Integrate(_) => "integrator",
            Command::Zeros(_) | Command::Uniformity(_) => "zero_counter",
            Command::BlowupCheck(_) => "blowup",
            Command::MonodromyFit { .. } => "asymptotics",
            Command::ValidateOde(_) => "ode_validator",
        }
    }

    fn target(&self) -> &Target {
        match self {
            Command::Trace(t)
            | Command::Integrate(t)
            | Command::Zeros(t)
            | Command::BlowupCheck(t)
            | Command::ValidateOde(t)
            | Command::Uniformity(t) => t,
            Command::MonodromyFit { target, .. } => target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
struct Outcome {
    artifacts: Vec<(String, String)>,
    checks: Vec<Check>,
    stages: BTreeMap<String, f64>,
    error: Option<Error>,
}

impl Outcome {
    fn artifact(&mut self, name: impl Into<String>, body: String) {
        self.artifacts.push((name.into(), body));
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        *self.stages.entry(stage.into()).or_default() += start.elapsed().as_secs_f64();
        r
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    subcommand: String,
    scenario: String,
    config_path: String,
    config_sha256: String,
    status: String,
    exit_code: i32,
    threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    failing_module: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    artifacts: Vec<String>,
    versions: BTreeMap<String, String>,
    timings: BTreeMap<String, f64>,
    checks: Vec<Check>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> i32 {
    let Some(path) = cli.config.clone().or_else(|| cli.command.target().scenario.clone()) else {
        eprintln!("error: a scenario file is required (--config PATH)");
        return EXIT_USAGE;
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let out_dir = output_dir(cli, &cfg);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_NUMERICAL;
    }

    let start = Instant::now();
    let parallel = cli.threads > 0;
    let mut outcome = if parallel {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &cfg, parallel)),
            Err(e) => {
                eprintln!("error: cannot start {} threads: {e}", cli.threads);
                return EXIT_USAGE;
            }
        }
    } else {
        execute(&cli.command, &cfg, parallel)
    };
    outcome.stages.insert("total".into(), start.elapsed().as_secs_f64());

    let mut written = Vec::new();
    for (name, body) in &outcome.artifacts {
        if let Err(e) = write_atomic(&out_dir.join(name), body) {
            eprintln!("error: cannot write {name}: {e}");
            return EXIT_NUMERICAL;
        }
        written.push(name.clone());
    }
    if let Some(golden) = &cli.golden {
        let report = golden_checks(&outcome.artifacts, golden, cfg.tolerances.golden_rel, &mut outcome.checks);
        if write_atomic(&out_dir.join("golden_report.csv"), &report).is_ok() {
            written.push("golden_report.csv".into());
        }
    }

    let (code, status) = match &outcome.error {
        Some(Error::Config { .. }) => (EXIT_CONFIG, "config-error"),
        Some(_) => (EXIT_NUMERICAL, "numerical-failure"),
        None if outcome.checks.iter().any(|c| !c.passed) => (EXIT_VALIDATION, "validation-failure"),
        None => (EXIT_OK, "ok"),
    };
    let mut versions = BTreeMap::new();
    versions.insert("pseudo-abelian".into(), env!("CARGO_PKG_VERSION").into());
    versions.insert("manifest-format".into(), "1".into());
    let manifest = Manifest {
        subcommand: cli.command.name().into(),
        scenario: cfg.name.clone(),
        config_path: path.display().to_string(),
        config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        status: status.into(),
        exit_code: code,
        threads: cli.threads,
        failing_module: outcome.error.as_ref().map(|_| cli.command.module().into()),
        error: outcome.error.as_ref().map(|e| e.to_string()),
        artifacts: written,
        versions,
        timings: outcome.stages.clone(),
        checks: outcome.checks.clone(),
    };
    let body = toml::to_string(&manifest).expect("manifest serializes");
    if let Err(e) = write_atomic(&out_dir.join("manifest.toml"), &body) {
        eprintln!("error: cannot write the manifest: {e}");
        return EXIT_NUMERICAL;
    }
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    if let Some(e) = &outcome.error {
        eprintln!("{} failed in {}: {e}", cli.command.name(), cli.command.module());
    }
    code
}

fn output_dir(cli: &Cli, cfg: &ScenarioConfig) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    if let Some(o) = &cfg.output {
        return PathBuf::from(&o.dir);
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    root.join(&cfg.name)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn execute(command: &Command, cfg: &ScenarioConfig, parallel: bool) -> Outcome {
    let mut out = Outcome::default();
    let result = match command {
        Command::Trace(_) => trace(cfg, parallel, &mut out),
        Command::Integrate(_) => integrate(cfg, parallel, &mut out),
        Command::Zeros(_) => zeros(cfg, parallel, &mut out),
        Command::BlowupCheck(_) => blowup_check(cfg, &mut out),
        Command::MonodromyFit { series, .. } => monodromy_fit(cfg, series.as_deref(), parallel, &mut out),
        Command::ValidateOde(_) => validate_ode(cfg, parallel, &mut out),
        Command::Uniformity(_) => uniformity(cfg, parallel, &mut out),
    };
    if let Err(e) = result {
        out.error = Some(e);
    }
    out
}

fn trace(cfg: &ScenarioConfig, parallel: bool, out: &mut Outcome) -> Result<()> {
    let lambda = cfg.darboux.lambda;
    let sys = cfg.system(lambda)?;
    let range = out.timed("center", || find_center(&sys))?;
    out.artifact(
        "center.csv",
        format!(
            "lambda,center_x,center_y,n\n{lambda:e},{:.17e},{:.17e},{:.17e}\n",
            range.center[0], range.center[1], range.h_max
        ),
    );
    let levels = cfg.grids.trace.as_ref().unwrap_or(&cfg.grids.h).levels(range.h_max);
    let opts = cfg.trace_options();
    let ovals = out.timed("trace", || {
        ordered_map(&levels, parallel, |&h| trace_oval_with(&sys, &range, h, &opts))
    });
    let mut table = String::from("index,h,points,length,closure_defect,level_defect,area\n");
    let mut worst_closure: f64 = 0.0;
    let mut worst_level: f64 = 0.0;
    for (k, oval) in ovals.into_iter().enumerate() {
        let oval = oval.map_err(|e| e.at_grid_point(k, levels[k]))?;
        let _ = writeln!(
            table,
            "{k},{:.17e},{},{:.17e},{:.6e},{:.6e},{:.17e}",
            oval.h,
            oval.points.len(),
            oval.length,
            oval.closure_defect,
            oval.level_defect,
            oval.enclosed_area()
        );
        worst_closure = worst_closure.max(oval.closure_defect / oval.length);
        worst_level = worst_level.max(oval.level_defect);
        out.artifact(format!("oval_{k:03}.csv"), oval.to_csv());
    }
    out.artifact("ovals.csv", table);
    out.check("closure", worst_closure < 1e-8, format!("max closure_defect/length = {worst_closure:e}"));
    out.check("level", worst_level < 1e-8, format!("max level_defect = {worst_level:e}"));
    Ok(())
}

fn integrate(cfg: &ScenarioConfig, parallel: bool, out: &mut Outcome) -> Result<()> {
    let sys = cfg.system(cfg.darboux.lambda)?;
    let eta = cfg.perturbation();
    let range = find_center(&sys)?;
    let grid = cfg.grids.h.levels(range.h_max);
    let opts = cfg.series_options(parallel);
    let series = out.timed("series", || integral_series(&sys, &eta, &grid, &opts))?;
    out.artifact("series.csv", series.to_csv());
    if let Some(spec) = &cfg.grids.oracle {
        let levels = spec.levels(range.h_max);
        let rows = out.timed("oracle", || {
            ordered_map(&levels, parallel, |&h| -> Result<(f64, f64)> {
                let oval = trace_oval_with(&sys, &range, h, &opts.trace)?;
                let i = pseudo_abelian_with(&sys, &eta, &oval, &opts.quadrature)?;
                Ok((i.value, stokes_oracle_with(&sys, &range, &eta, h, 1e-11)?))
            })
        });
        let mut table = String::from("h,I,oracle,gap\n");
        let mut worst: f64 = 0.0;
        for (k, r) in rows.into_iter().enumerate() {
            let (i, o) = r.map_err(|e| e.at_grid_point(k, levels[k]))?;
            let gap = (i - o).abs() / (1.0 + i.abs());
            worst = worst.max(gap);
            let _ = writeln!(table, "{:.17e},{i:.17e},{o:.17e},{gap:.3e}", levels[k]);
        }
        out.artifact("oracle.csv", table);
        out.check("oracle", worst < 1e-6, format!("max |I − oracle|/(1+|I|) = {worst:e}"));
    }
    Ok(())
}

fn zeros(cfg: &ScenarioConfig, parallel: bool, out: &mut Outcome) -> Result<()> {
    let lambda = cfg.darboux.lambda;
    let sys = cfg.system(lambda)?;
    let eta = cfg.perturbation();
    let opts = cfg.uniformity_options(parallel);
    let row = out.timed("zeros", || uniformity_row(&sys, &eta, lambda, &opts));
    if let Some(series) = &row.series {
        out.artifact("series.csv", series.to_csv());
    }
    out.artifact("zeros.csv", uniformity_csv(std::slice::from_ref(&row)));
    if let Some(report) = &row.report {
        out.artifact("zeros_detail.csv", report.to_csv());
    }
    if let Some(model) = &row.model {
        out.artifact("model.csv", model.to_csv());
    }
    bound_check(out, &row);
    row_error(&row)
}

fn bound_check(out: &mut Outcome, row: &crate::zeros::UniformityRow) {
    if let (Some(bound), Some(count)) = (row.bound, row.window_count) {
        out.check(
            format!("bound lambda={:e}", row.lambda),
            bound + 1e-6 >= count as f64,
            format!("argument bound {bound:.6} vs {count} zeros in the model window"),
        );
    }
}

fn row_error(row: &crate::zeros::UniformityRow) -> Result<()> {
    match row.flags.iter().find_map(|f| f.strip_prefix("error: ")) {
        Some(msg) => Err(Error::InvalidParameter(format!("lambda = {:e}: {msg}", row.lambda))),
        None => Ok(()),
    }
}

fn uniformity(cfg: &ScenarioConfig, parallel: bool, out: &mut Outcome) -> Result<()> {
    let sys = cfg.system(cfg.darboux.lambda)?;
    let eta = cfg.perturbation();
    let lambdas = cfg.study_lambdas();
    let opts = cfg.uniformity_options(parallel);
    let rows = out.timed("uniformity", || uniformity_study(&sys, &eta, &lambdas, &opts));
    out.artifact("uniformity.csv", uniformity_csv(&rows));
    for (k, row) in rows.iter().enumerate() {
        if let Some(report) = &row.report {
            out.artifact(format!("zeros_lambda_{k:02}.csv"), report.to_csv());
        }
        if let Some(model) = &row.model {
            out.artifact(format!("model_lambda_{k:02}.csv"), model.to_csv());
        }
        bound_check(out, row);
    }
    for row in &rows {
        row_error(row)?;
    }
    let counts: Vec<Option<usize>> = rows.iter().map(|r| r.count).collect();
    let constant = counts.windows(2).all(|w| w[0] == w[1]);
    out.check("count-constant", constant, format!("counts {counts:?}"));
    Ok(())
}

fn blowup_check(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let exps = cfg.normal_exponents()?;
    let mut lambdas = vec![cfg.darboux.lambda];
    lambdas.extend(cfg.darboux.lambdas.iter().copied());
    lambdas.retain(|l| *l > 0.0);
    let rows = out.timed("blowup", || blowup_report(&exps, &lambdas, 1000, cfg.seed))?;
    out.artifact("blowup.csv", report_csv(&rows));
    let worst = |check: &str| {
        rows.iter()
            .filter(|r| r.check == check)
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    };
    for (check, tol) in [
        ("g-identity", 1e-12),
        ("qh-total-transform", 1e-12),
        ("t-at-nest-top", 1e-10),
        ("saddle-location", 1e-12),
        ("eigen-proof", 1e-8),
    ] {
        let r = worst(check);
        out.check(check, r <= tol, format!("max residual {r:e} (tolerance {tol:e})"));
    }
    let gaps: Vec<String> = rows
        .iter()
        .filter(|r| r.check == "eigen-printed-discrepancy")
        .map(|r| format!("{} numerical {} printed {}", r.label, r.value, r.reference))
        .collect();
    if !gaps.is_empty() {
        // reported, not a failure: the proof's linearization is the reference
        out.check("printed-eigenvalues", true, gaps.join("; "));
    }
    Ok(())
}

fn monodromy_fit(cfg: &ScenarioConfig, input: Option<&Path>, parallel: bool, out: &mut Outcome) -> Result<()> {
    let lambda = cfg.darboux.lambda;
    let sys = cfg.system(lambda)?;
    let eta = cfg.perturbation();
    let opts = cfg.series_options(parallel);
    let a = sys.a();

    // power-log model on the window near the polycycle
    let range = find_center(&sys)?;
    let [w_lo, w_hi] = cfg.grids.model_window;
    let window: Vec<f64> = cfg
        .scan_grid()
        .raw()
        .into_iter()
        .filter(|r| *r >= w_lo * (1.0 - 1e-12) && *r <= w_hi * (1.0 + 1e-12))
        .map(|r| r * range.h_max)
        .collect();
    let series = out.timed("window-series", || integral_series(&sys, &eta, &window, &opts))?;
    out.artifact("window_series.csv", series.to_csv());
    let exps: Vec<f64> = sys.factors().iter().map(|f| f.exponent).collect();
    let candidates = candidate_exponents(&exps, cfg.tolerances.candidate_depth, cfg.fit_options().window);
    let model = out.timed("psi-fit", || fit_psi_expansion(&series, a, &candidates, &cfg.fit_options()))?;
    out.artifact("expansion.csv", model.to_csv());
    let killed = annihilate(&model.expansion).is_zero();
    out.check("annihilation", killed, format!("{} terms", model.expansion.len()));

    // (1, log λ) split at fixed t
    if cfg.grids.lambda.is_empty() {
        return Ok(());
    }
    let mut all = Vec::with_capacity(cfg.grids.lambda.len());
    for (k, &l) in cfg.grids.lambda.iter().enumerate() {
        let name = format!("series_lambda_{k:02}.csv");
        let s = match input {
            Some(dir) => {
                let path = dir.join(&name);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                IntegralSeries::from_csv(&text)?
            }
            None => {
                let sys_l = sys.with_lambda(l)?;
                let grid: Vec<f64> = cfg.grids.t.iter().map(|t| l.powf(a) / t).collect();
                out.timed("lambda-series", || integral_series(&sys_l, &eta, &grid, &opts))?
            }
        };
        out.artifact(name, s.to_csv());
        all.push(s);
    }
    let split = log_split_of(&all, a)?;
    out.artifact("logsplit.csv", split.to_csv());
    let threshold = 0.01 * split.scale;
    out.check(
        "logsplit-stable",
        split.is_stable(),
        format!("J2 halves {:?} vs {:?}", split.j2_halves.0, split.j2_halves.1),
    );
    if split.residual > threshold {
        return Err(Error::ModelMismatch {
            residual: split.residual,
            threshold,
        });
    }
    Ok(())
}

fn validate_ode(cfg: &ScenarioConfig, parallel: bool, out: &mut Outcome) -> Result<()> {
    let lambda = cfg.darboux.lambda;
    let sys = cfg.system(lambda)?;
    let eta = cfg.perturbation();
    let range = find_center(&sys)?;
    let n = range.h_max;
    let opts = cfg.series_options(parallel);
    let grid = cfg.scan_grid().levels(n);
    let series = out.timed("series", || integral_series(&sys, &eta, &grid, &opts))?;
    out.artifact("series.csv", series.to_csv());
    let report = out.timed("zeros", || scan_zeros_for(&sys, &eta, &series, &cfg.scan_options(), &opts))?;
    out.artifact("zeros_detail.csv", report.to_csv());

    let spec = cfg.grids.ode.as_ref().ok_or_else(|| Error::Config {
        field: "grids.ode".into(),
        message: "validate-ode needs an ODE grid".into(),
    })?;
    let levels = spec.levels(n);
    let ode = cfg.ode_options();
    let mut kappas = cfg.perturbation.kappas.clone();
    kappas.sort_by(|a, b| b.total_cmp(a));
    let mut profiles = String::from("h,D,kappa\n");
    let mut table = String::from("kappa,kind,zero,change,distance_over_n\n");
    let mut distances: Vec<Vec<f64>> = Vec::new();
    for &kappa in &kappas {
        let profile = out.timed("displacement", || displacement_profile(&sys, &eta, kappa, &levels, &ode, parallel))?;
        profiles.push_str(profile.to_csv().split_once('\n').map(|x| x.1).unwrap_or(""));
        let m = limit_cycle_match(&profile, &report);
        for &(z, c, d) in &m.pairs {
            let _ = writeln!(table, "{kappa:e},pair,{z:.17e},{c:.17e},{:.6e}", d / n);
        }
        for z in &m.unmatched_zeros {
            let _ = writeln!(table, "{kappa:e},unmatched-zero,{z:.17e},,");
        }
        for c in &m.unmatched_changes {
            let _ = writeln!(table, "{kappa:e},unmatched-change,,{c:.17e},");
        }
        let worst = m.max_distance() / n;
        out.check(
            format!("pairing kappa={kappa:e}"),
            m.is_perfect() && worst < 1e-2,
            format!("{} pairs, max distance {worst:e}·n", m.pairs.len()),
        );
        distances.push(m.pairs.iter().map(|p| p.2).collect());
    }
    out.artifact("displacement.csv", profiles);
    out.artifact("match.csv", table);
    if distances.len() > 1 {
        let shrinking = distances.windows(2).all(|w| {
            w[0].len() == w[1].len() && w[0].iter().zip(&w[1]).all(|(a, b)| b < a)
        });
        out.check("convergence", shrinking, format!("distances {distances:?}"));
    }

    // κ = 0 drift on every tenth ODE level
    let probes: Vec<f64> = levels.iter().step_by(10).copied().collect();
    let drift = out.timed("drift", || {
        ordered_map(&probes, parallel, |&h| {
            revolution(&sys, &range, &eta, 0.0, h, &ode).map(|r| r.displacement / h)
        })
    });
    let mut table = String::from("h,drift_over_h\n");
    let mut worst: f64 = 0.0;
    for (k, d) in drift.into_iter().enumerate() {
        let d = d.map_err(|e| e.at_grid_point(k, probes[k]))?;
        worst = worst.max(d.abs());
        let _ = writeln!(table, "{:.17e},{d:.6e}", probes[k]);
    }
    out.artifact("drift.csv", table);
    out.check("energy-drift", worst < 1e-10, format!("max |D|/h at kappa = 0: {worst:e}"));
    Ok(())
}

/// One cell outside the golden tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub column: String,
    pub artifact: String,
    pub golden: String,
    pub rel_diff: f64,
}

/// Non-comment lines of a CSV document.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .fold(String::new(), |mut s, l| {
            s.push_str(l);
            s.push('\n');
            s
        })
}

/// Per-cell comparison of two CSV documents with the same header and shape.
/// Numeric cells compare by `|a − g| ≤ rel_tol·max(|a|, |g|)`, others by equality.
pub fn compare_csv(artifact: &str, golden: &str, rel_tol: f64) -> Result<Vec<Violation>> {
    let rows = |text: &str| -> Vec<Vec<String>> {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
            .collect()
    };
    let (a, g) = (rows(artifact), rows(golden));
    if a.is_empty() || g.is_empty() {
        return Err(Error::Schema("missing header".into()));
    }
    if a[0] != g[0] {
        return Err(Error::Schema(format!("headers differ: {:?} vs {:?}", a[0], g[0])));
    }
    if a.len() != g.len() {
        return Err(Error::Schema(format!("{} rows vs {} golden rows", a.len() - 1, g.len() - 1)));
    }
    let header = &a[0];
    let mut out = Vec::new();
    for (r, (ra, rg)) in a.iter().zip(&g).enumerate().skip(1) {
        if ra.len() != header.len() || rg.len() != header.len() {
            return Err(Error::Schema(format!("row {r} does not have {} cells", header.len())));
        }
        for (c, (x, y)) in ra.iter().zip(rg).enumerate() {
            let rel = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => {
                    let scale = u.abs().max(v.abs());
                    if u == v {
                        0.0
                    } else if scale > 0.0 {
                        (u - v).abs() / scale
                    } else {
                        f64::INFINITY
                    }
                }
                _ if x == y => 0.0,
                _ => f64::INFINITY,
            };
            if !(rel <= rel_tol) {
                out.push(Violation {
                    row: r,
                    column: header[c].clone(),
                    artifact: x.clone(),
                    golden: y.clone(),
                    rel_diff: rel,
                });
            }
        }
    }
    Ok(out)
}

/// [`compare_csv`] on two files.
pub fn compare_golden(artifact: &Path, golden: &Path, rel_tol: f64) -> Result<Vec<Violation>> {
    let a = std::fs::read_to_string(artifact)?;
    let g = std::fs::read_to_string(golden)?;
    compare_csv(&a, &g, rel_tol)
}

fn golden_checks(artifacts: &[(String, String)], dir: &Path, rel_tol: f64, checks: &mut Vec<Check>) -> String {
    let mut check = |name: String, passed: bool, detail: String| checks.push(Check { name, passed, detail });
    let mut report = String::from("file,row,column,artifact,golden,rel_diff\n");
    let mut compared = 0;
    for (name, body) in artifacts {
        let path = dir.join(name);
        let Ok(golden) = std::fs::read_to_string(&path) else {
            continue;
        };
        compared += 1;
        match compare_csv(body, &golden, rel_tol) {
            Ok(v) => {
                for x in &v {
                    let _ = writeln!(
                        report,
                        "{name},{},{},{},{},{:e}",
                        x.row, x.column, x.artifact, x.golden, x.rel_diff
                    );
                }
                check(format!("golden {name}"), v.is_empty(), format!("{} violations", v.len()));
            }
            Err(e) => check(format!("golden {name}"), false, e.to_string()),
        }
    }
    if compared == 0 {
        check("golden".into(), false, format!("no golden file in {} matches an artifact", dir.display()));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const SERIES: &str = "# lambda=1e0, points=2\nh,I,err\n1.0e-1,2.5e0,1e-12\n5.0e-2,-3.0e0,1e-12\n";

    #[test]
    fn identical_files_have_no_violations() {
        assert!(compare_csv(SERIES, SERIES, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn one_perturbed_cell_is_one_violation() {
        let bumped = SERIES.replace("2.5e0", &format!("{:e}", 2.5 * (1.0 + 1e-5)));
        let v = compare_csv(&bumped, SERIES, 1e-6).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].row, v[0].column.as_str()), (1, "I"));
    }

    #[test]
    fn schema_mismatch_is_structural() {
        let other = SERIES.replace("h,I,err", "h,J,err");
        assert!(matches!(compare_csv(&other, SERIES, 1e-6), Err(Error::Schema(_))));
        let short = SERIES.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(matches!(compare_csv(&short, SERIES, 1e-6), Err(Error::Schema(_))));
    }

    #[test]
    fn body_drops_comments() {
        assert_eq!(csv_body(SERIES).lines().next(), Some("h,I,err"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["pseudo-abelian", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["pseudo-abelian", "zeros"]), EXIT_USAGE);
        assert_eq!(run(["pseudo-abelian", "--help"]), EXIT_OK);
    }
}
