//! Command-line pipeline driver: phantom → simulate → reconstruct → report.
//!
//! All stages share one JSON run configuration and one run directory. Each
//! stage writes a manifest echoing the configuration and tool version, so a
//! run can be reproduced bit-exactly from its directory alone.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver/data failure,
//! 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mrept::error::MreptError;
use mrept::forward::{synthesize_data, SimulateConfig};
use mrept::grid::{ComplexField, Grid3D, RealField};
use mrept::io::{
    read_complex_field, read_real_field, write_complex_field, write_real_field,
};
use mrept::linsolve::SolverConfig;
use mrept::metrics::{
    anomaly_accuracy, anomaly_region, export_slice_csv, export_slice_pgm, relative_l2_error,
    write_convergence_csv, SlicePlane,
};
use mrept::phantom::{build_model1, build_model2, sample, Admittivity, Material, Model1Config, Model2Config, Phantom};
use mrept::recon_direct::{direct_reconstruct, DirectConfig};
use mrept::recon_init::{initial_guess, InitConfig};
use mrept::recon_newton::{run_newton, NewtonConfig};
use mrept::OMEGA_DEFAULT;

#[derive(Parser)]
#[command(
    name = "mrept",
    version,
    about = "Admittivity reconstruction from the positive rotating RF field component",
    long_about = "Reconstructs conductivity and permittivity on a 3D grid from H+ data.\n\
        Stages: phantom (sample a synthetic scene), simulate (generate data),\n\
        reconstruct (direct / init / newton / full), report (images and curves).\n\
        The MREPT_THREADS environment variable reserves a thread-count override;\n\
        the current solvers are single-threaded and log a note if it is set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured scene to ground-truth admittivity dumps.
    Phantom {
        /// Run configuration (JSON).
        #[arg(short, long)]
        config: PathBuf,
        /// Run directory for outputs.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate synthetic H+ data for the configured scene.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reconstruct admittivity from data in the run directory.
    Reconstruct {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(short, long, value_enum)]
        method: Method,
        /// Measured-data dump; defaults to <out>/h_meas.raw.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Initial guess for `newton`: 'auto' uses the init-stage output in
        /// the run directory, otherwise a dump path prefix.
        #[arg(long)]
        init: Option<String>,
    },
    /// Produce report artifacts (slice images, error maps, curves) from a
    /// completed run directory.
    Report {
        /// Run directory holding the pipeline outputs.
        #[arg(short, long)]
        run: PathBuf,
        /// Output directory for the report; defaults to <run>/report.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Init,
    Newton,
    /// init followed by newton seeded with its output.
    Full,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Init => "init",
            Method::Newton => "newton",
            Method::Full => "full",
        }
    }
}

// ---------------------------------------------------------------------------
// Run configuration schema (version 1)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    n: [usize; 3],
    /// Domain extent in meters per axis, centered on the origin.
    extent: [f64; 3],
}

impl GridConfig {
    fn build(&self) -> Result<Grid3D, MreptError> {
        Grid3D::centered(self.n, self.extent)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum SceneConfig {
    /// z-invariant cylindrical scene.
    Model1(Model1Config),
    /// Two stacked z-invariant scenes split at z = 0.
    Model2(Model2Config),
}

impl SceneConfig {
    fn build(&self) -> Result<Phantom, MreptError> {
        match self {
            SceneConfig::Model1(c) => build_model1(c),
            SceneConfig::Model2(c) => build_model2(c),
        }
    }

    fn background(&self) -> Material {
        match self {
            SceneConfig::Model1(c) => c.background,
            SceneConfig::Model2(c) => c.lower.background,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverSettings {
    tol: f64,
    max_iter: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolverSettings {
    fn build(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Optional overrides for the initial-guess stage; anything absent keeps the
/// stock value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InitSettings {
    tau_d: Option<f64>,
    rho_fraction: Option<f64>,
    k_pick: Option<usize>,
    collar_depth: Option<usize>,
    sigma_floor: Option<f64>,
    weps_floor: Option<f64>,
    /// Gaussian presmoothing (std per axis, meters) of the data used for the
    /// degenerate-set direct fill; keeps noisy data from leaking into the
    /// Dirichlet pinning.
    fill_presmooth: Option<[f64; 3]>,
}

impl InitSettings {
    fn build(&self, background: Material) -> InitConfig {
        let mut c = InitConfig::new(background);
        if let Some(v) = self.tau_d {
            c.tau_d = v;
        }
        if let Some(v) = self.rho_fraction {
            c.rho_fraction = v;
        }
        if let Some(v) = self.k_pick {
            c.k_pick = v;
        }
        if let Some(v) = self.collar_depth {
            c.collar_depth = v;
        }
        if let Some(v) = self.sigma_floor {
            c.sigma_floor = v;
        }
        if let Some(v) = self.weps_floor {
            c.weps_floor = v;
        }
        if let Some(v) = self.fill_presmooth {
            c.direct.presmooth = v;
        }
        c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    /// Schema version; must be 1.
    version: u32,
    /// Angular frequency in rad/s; defaults to 2π × 128 MHz.
    #[serde(default)]
    omega: Option<f64>,
    grid: GridConfig,
    scene: SceneConfig,
    #[serde(default)]
    simulate: SimulateConfig,
    #[serde(default)]
    solver: SolverSettings,
    #[serde(default)]
    direct: DirectConfig,
    #[serde(default)]
    init: InitSettings,
    #[serde(default)]
    newton: NewtonConfig,
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("{}: {e}", path.display()))
        })?;
        if cfg.version != 1 {
            return Err(CliError::config(format!(
                "unsupported config version {} (expected 1)",
                cfg.version
            )));
        }
        cfg.grid.build().map_err(CliError::from)?;
        cfg.scene.build().map_err(CliError::from)?;
        Ok(cfg)
    }

    fn omega(&self) -> f64 {
        self.omega.unwrap_or(OMEGA_DEFAULT)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool_version: &'static str,
    stage: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<&'a str>,
    config: &'a RunConfig,
}

fn write_manifest(
    dir: &Path,
    stage: &str,
    method: Option<&str>,
    config: &RunConfig,
) -> Result<(), CliError> {
    let manifest = Manifest {
        schema_version: 1,
        tool_version: env!("CARGO_PKG_VERSION"),
        stage,
        method,
        config,
    };
    let path = dir.join(format!("{stage}_manifest.json"));
    let f = std::fs::File::create(&path)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &manifest)
        .map_err(|e| CliError::io(format!("cannot write manifest: {e}")))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Error-to-exit-code mapping
// ---------------------------------------------------------------------------

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<MreptError> for CliError {
    fn from(e: MreptError) -> Self {
        let code = match &e {
            MreptError::InvalidGrid(_)
            | MreptError::InvalidConfig(_)
            | MreptError::FieldMismatch(_)
            | MreptError::Json(_) => 2,
            MreptError::Inadmissible(_)
            | MreptError::Assembly { .. }
            | MreptError::NonConvergence { .. }
            | MreptError::DegenerateData(_)
            | MreptError::StationaryPoint { .. } => 3,
            MreptError::Io(_) => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(threads) = std::env::var("MREPT_THREADS") {
        log::info!("MREPT_THREADS={threads} noted; current solvers are single-threaded");
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phantom { config, out } => cmd_phantom(&config, &out),
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Reconstruct {
            config,
            out,
            method,
            data,
            init,
        } => cmd_reconstruct(&config, &out, method, data.as_deref(), init.as_deref()),
        Command::Report { run, out } => cmd_report(&run, out.as_deref()),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn write_truth(dir: &Path, truth: &Admittivity) -> Result<(), CliError> {
    write_real_field(&dir.join("sigma_true.raw"), &truth.sigma, "sigma_true")?;
    write_real_field(&dir.join("eps_true.raw"), &truth.eps, "eps_true")?;
    Ok(())
}

fn load_truth(dir: &Path, omega: f64) -> Option<Admittivity> {
    let sigma = read_real_field(&dir.join("sigma_true.raw")).ok()?;
    let eps = read_real_field(&dir.join("eps_true.raw")).ok()?;
    Some(Admittivity { sigma, eps, omega })
}

fn cmd_phantom(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.grid.build()?;
    let phantom = cfg.scene.build()?;
    let truth = sample(&phantom, &grid, cfg.omega())?;
    ensure_dir(out)?;
    write_truth(out, &truth)?;
    let echo = out.join("phantom.json");
    let f = std::fs::File::create(&echo)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", echo.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &phantom)
        .map_err(|e| CliError::io(e.to_string()))?;
    write_manifest(out, "phantom", None, &cfg)?;
    log::info!(
        "phantom: wrote ground truth on {}x{}x{} grid to {}",
        grid.nx,
        grid.ny,
        grid.nz,
        out.display()
    );
    Ok(())
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.grid.build()?;
    let phantom = cfg.scene.build()?;
    let solver = cfg.solver.build();
    let data = synthesize_data(&phantom, grid, cfg.omega(), &cfg.simulate, &solver)?;
    ensure_dir(out)?;
    write_complex_field(&out.join("h_meas.raw"), &data.h, "h_meas")?;
    write_truth(out, &data.truth)?;
    write_manifest(out, "simulate", None, &cfg)?;
    log::info!(
        "simulate: refine={} noise={} seed={} -> {} ({} solver iterations)",
        cfg.simulate.refine,
        cfg.simulate.noise_rel,
        cfg.simulate.seed,
        out.display(),
        data.report.iterations
    );
    Ok(())
}

fn write_admittivity(dir: &Path, tag: &str, adm: &Admittivity) -> Result<(), CliError> {
    write_real_field(
        &dir.join(format!("sigma_{tag}.raw")),
        &adm.sigma,
        &format!("sigma_{tag}"),
    )?;
    write_real_field(
        &dir.join(format!("eps_{tag}.raw")),
        &adm.eps,
        &format!("eps_{tag}"),
    )?;
    Ok(())
}

fn load_admittivity(dir: &Path, tag: &str, omega: f64) -> Result<Admittivity, CliError> {
    let sigma = read_real_field(&dir.join(format!("sigma_{tag}.raw")))?;
    let eps = read_real_field(&dir.join(format!("eps_{tag}.raw")))?;
    Ok(Admittivity { sigma, eps, omega })
}

fn cmd_reconstruct(
    config: &Path,
    out: &Path,
    method: Method,
    data: Option<&Path>,
    init_arg: Option<&str>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let omega = cfg.omega();
    let data_path = data
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join("h_meas.raw"));
    let h = read_complex_field(&data_path).map_err(|e| {
        CliError::io(format!(
            "cannot load measured data {}: {e} (run `mrept simulate` first)",
            data_path.display()
        ))
    })?;
    ensure_dir(out)?;
    let solver = cfg.solver.build();
    let truth = load_truth(out, omega);

    if matches!(method, Method::Direct) {
        let res = direct_reconstruct(&h, omega, &cfg.direct)?;
        let adm = res.admittivity(omega);
        write_admittivity(out, "direct", &adm)?;
        log::info!(
            "reconstruct[direct]: {} of {} nodes masked",
            res.num_masked(),
            h.grid().num_nodes()
        );
    }

    let mut init_result = None;
    if matches!(method, Method::Init | Method::Full) {
        let init_cfg = cfg.init.build(cfg.scene.background());
        let res = initial_guess(&h, omega, &init_cfg, &solver, truth.as_ref())?;
        write_admittivity(out, "init", &res.admittivity)?;
        write_init_log(&out.join("init_log.csv"), &res.increments, res.truth_errors.as_deref())?;
        log::info!(
            "reconstruct[init]: k={} increments={:?} degenerate fraction {:.1}%",
            init_cfg.k_pick,
            res.increments,
            res.degenerate_fraction * 100.0
        );
        init_result = Some(res.admittivity);
    }

    if matches!(method, Method::Newton | Method::Full) {
        let start = match (init_result, method) {
            (Some(adm), _) => adm,
            (None, Method::Newton) => match init_arg {
                Some("auto") | None => load_admittivity(out, "init", omega).map_err(|_| {
                    CliError::config(
                        "no initial guess found: run `mrept reconstruct --method init` first \
                         or pass --init <path prefix>",
                    )
                })?,
                Some(prefix) => {
                    let dir = Path::new(prefix);
                    let (dir, tag) = match (dir.parent(), dir.file_name()) {
                        (Some(d), Some(t)) => (d, t.to_string_lossy().into_owned()),
                        _ => return Err(CliError::config("invalid --init path prefix")),
                    };
                    let sigma = read_real_field(&dir.join(format!("{tag}_sigma.raw")))
                        .or_else(|_| read_real_field(&dir.join(format!("sigma_{tag}.raw"))))?;
                    let eps = read_real_field(&dir.join(format!("{tag}_eps.raw")))
                        .or_else(|_| read_real_field(&dir.join(format!("eps_{tag}.raw"))))?;
                    Admittivity { sigma, eps, omega }
                }
            },
            _ => unreachable!(),
        };
        let res = run_newton(&h, &start, &cfg.newton, &solver, truth.as_ref())?;
        write_admittivity(out, "newton", &res.admittivity)?;
        write_convergence_csv(&out.join("newton_log.csv"), &res.history)?;
        log::info!(
            "reconstruct[newton]: best misfit {:.6e} after {} iterations ({:?})",
            res.best_misfit,
            res.history.len(),
            res.reason
        );
    }

    write_manifest(out, "reconstruct", Some(method.name()), &cfg)?;
    Ok(())
}

fn write_init_log(
    path: &Path,
    increments: &[f64],
    truth_errors: Option<&[f64]>,
) -> Result<(), CliError> {
    use std::io::Write as _;
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?,
    );
    writeln!(w, "k,increment,truth_error").map_err(|e| CliError::io(e.to_string()))?;
    for (k, inc) in increments.iter().enumerate() {
        let t = truth_errors
            .and_then(|te| te.get(k))
            .map(|v| format!("{v:.17e}"))
            .unwrap_or_default();
        writeln!(w, "{},{inc:.17e},{t}", k + 1).map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_report(run: &Path, out: Option<&Path>) -> Result<(), CliError> {
    // required inputs; everything else is reported if present
    let mut missing = Vec::new();
    for required in ["h_meas.raw", "sigma_true.raw", "eps_true.raw"] {
        if !run.join(required).exists() {
            missing.push(required.to_string());
        }
    }
    let methods: Vec<&str> = ["direct", "init", "newton"]
        .into_iter()
        .filter(|m| run.join(format!("sigma_{m}.raw")).exists())
        .collect();
    if methods.is_empty() {
        missing.push("sigma_{direct|init|newton}.raw".to_string());
    }
    if !missing.is_empty() {
        return Err(CliError::config(format!(
            "run directory {} is incomplete; missing: {}",
            run.display(),
            missing.join(", ")
        )));
    }

    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run.join("report"));
    ensure_dir(&out_dir)?;

    let sigma_true = read_real_field(&run.join("sigma_true.raw"))?;
    let eps_true = read_real_field(&run.join("eps_true.raw"))?;
    let grid = *sigma_true.grid();
    let mid = SlicePlane::Z(grid.nz / 2);
    let mut written: Vec<String> = Vec::new();

    let mut export = |name: String, field: &RealField| -> Result<(), CliError> {
        export_slice_pgm(field, mid, &out_dir.join(format!("{name}.pgm")))?;
        export_slice_csv(field, mid, &out_dir.join(format!("{name}.csv")))?;
        written.push(format!("{name}.pgm"));
        written.push(format!("{name}.csv"));
        Ok(())
    };

    export("sigma_true".into(), &sigma_true)?;
    export("eps_true".into(), &eps_true)?;
    let h = read_complex_field(&run.join("h_meas.raw"))?;
    export("h_meas_re".into(), &h.real_part())?;
    export("h_meas_im".into(), &h.imag_part())?;

    for m in &methods {
        let sigma = read_real_field(&run.join(format!("sigma_{m}.raw")))?;
        let eps = read_real_field(&run.join(format!("eps_{m}.raw")))?;
        export(format!("sigma_{m}"), &sigma)?;
        export(format!("eps_{m}"), &eps)?;
        // absolute error maps against the truth (NaN-safe for masked nodes)
        let err_sigma = sigma.zip_map(&sigma_true, |a, b| {
            let d = (a - b).abs();
            if d.is_finite() {
                d
            } else {
                0.0
            }
        });
        let err_eps = eps.zip_map(&eps_true, |a, b| {
            let d = (a - b).abs();
            if d.is_finite() {
                d
            } else {
                0.0
            }
        });
        export(format!("error_sigma_{m}"), &err_sigma)?;
        export(format!("error_eps_{m}"), &err_eps)?;
    }

    // copy convergence curves into the report for one-stop plotting
    for log_name in ["init_log.csv", "newton_log.csv"] {
        let src = run.join(log_name);
        if src.exists() {
            std::fs::copy(&src, out_dir.join(log_name))
                .map_err(|e| CliError::io(e.to_string()))?;
            written.push(log_name.to_string());
        }
    }

    // summary metrics for each method present
    let summary = summarize(run, &methods, &sigma_true, &eps_true)?;
    let summary_path = out_dir.join("summary.json");
    let f = std::fs::File::create(&summary_path)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", summary_path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &summary)
        .map_err(|e| CliError::io(e.to_string()))?;
    written.push("summary.json".into());

    written.sort();
    let manifest_path = out_dir.join("report_manifest.json");
    let f = std::fs::File::create(&manifest_path)
        .map_err(|e| CliError::io(e.to_string()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &written)
        .map_err(|e| CliError::io(e.to_string()))?;
    log::info!("report: {} artifacts in {}", written.len(), out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct MethodSummary {
    method: String,
    relative_l2_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    anomaly_metric: Option<f64>,
}

fn summarize(
    run: &Path,
    methods: &[&str],
    sigma_true: &RealField,
    eps_true: &RealField,
) -> Result<Vec<MethodSummary>, CliError> {
    // the anomaly region needs the background material from the manifest;
    // fall back to L2-only summaries when no manifest is found
    let background = ["simulate_manifest.json", "phantom_manifest.json"]
        .iter()
        .find_map(|name| {
            let text = std::fs::read_to_string(run.join(name)).ok()?;
            let v: serde_json::Value = serde_json::from_str(&text).ok()?;
            let scene = v.get("config")?.get("scene")?;
            let bg = scene
                .get("background")
                .or_else(|| scene.get("lower")?.get("background"))?;
            serde_json::from_value::<Material>(bg.clone()).ok()
        });
    // omega cancels in relative metrics of gamma when shared; use the default
    // purely to form complex fields consistently
    let omega = OMEGA_DEFAULT;
    let truth = Admittivity {
        sigma: sigma_true.clone(),
        eps: eps_true.clone(),
        omega,
    };
    let truth_gamma = truth.gamma();
    let region = background.map(|bg| anomaly_region(&truth, bg, 0.05));
    let mut out = Vec::new();
    for m in methods {
        let adm = Admittivity {
            sigma: read_real_field(&run.join(format!("sigma_{m}.raw")))?,
            eps: read_real_field(&run.join(format!("eps_{m}.raw")))?,
            omega,
        };
        // masked nodes (NaN) are excluded from comparisons
        let valid: Vec<bool> = adm
            .sigma
            .values()
            .iter()
            .zip(adm.eps.values())
            .map(|(s, e)| s.is_finite() && e.is_finite())
            .collect();
        let gamma = ComplexField::from_parts(
            &adm.sigma.map(|v| if v.is_finite() { v } else { 0.0 }),
            &adm.eps.map(|v| if v.is_finite() { v * omega } else { 0.0 }),
        );
        let rel = relative_l2_error(&gamma, &truth_gamma, Some(&valid));
        let anomaly = region.as_ref().and_then(|r| {
            let masked: Vec<bool> = r
                .iter()
                .zip(&valid)
                .map(|(&a, &b)| a && b)
                .collect();
            anomaly_accuracy(&gamma, &truth_gamma, &masked).ok()
        });
        out.push(MethodSummary {
            method: m.to_string(),
            relative_l2_error: rel,
            anomaly_metric: anomaly,
        });
    }
    Ok(out)
}
