//! Batch driver for the LLL experiments. Every subcommand writes one or more
//! tables plus `manifest.json` into the output directory.

mod output;

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use lll_core::dynamics::{
    best_fit_frequency, cell_rows, integrate_cell, integrate_strip, stationary_closed_form, stationary_residual,
    strip_rows, CellState, CellSystem, Control, DriftRecord, Trajectory,
};
use lll_core::fock::{BasisConvention, CoeffState, SupSearch};
use lll_core::lattice::{
    cell_lp, hexagonal_gamma, lambda0, lambda0_hexagonal, lambda0_rectangular, phi_k, phi_norm_sq, phi_quartic,
    CellQuadrature, LatticeParams,
};
use lll_core::linstab::{
    build_symbol, det_scan, evolve_pair, gamma_threshold_scan, growth_experiment, hexagonal_symbol, instability_rate,
    linf_decay_experiment, moment_trace, mu_expansion_constant, mu_profile, mu_second_derivative_zeros, spectrum_rows,
    FourierPair, Symbol, SymbolKind,
};
use lll_core::specfun::{poisson_residual, theta, theta_quasi_period, TruncationPolicy};
use lll_core::Error;

pub use output::Format;
use output::Sink;

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Numeric(other),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lll-lab", version, about = "Lowest Landau Level numerical experiments")]
struct Cli {
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "lll-out")]
    out: PathBuf,
    /// Table format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Theta quasi-periodicity, oddness and Poisson residuals.
    ///
    /// Columns: z_re, z_im, theta_re, theta_im, quasi_defect, odd_defect.
    ThetaCheck(ThetaArgs),
    /// Stationary constant and cell norms of the basis functions.
    ///
    /// Columns: k, l2_quadrature, l2_closed_form, l4_quadrature, l4_closed_form.
    LatticeInfo(LatticeArgs),
    /// Residuals of the stationary equation on the strip.
    ///
    /// Columns: case, frequency, residual.
    Stationary(StationaryArgs),
    /// Nonlinear coefficient flow on the strip or on a cell.
    ///
    /// trajectory columns: t, k, re, im, M, H, P (conserved values at t).
    /// drift columns: t, mass, hamiltonian, momentum (relative drifts).
    Simulate(SimulateArgs),
    /// Symbol table of the linearization.
    ///
    /// Columns: xi, a, b, mu_re, mu_im, det.
    Spectrum(SymbolArgs),
    /// Bisection for the rectangular stability threshold.
    ///
    /// Columns: gamma0, lo, hi.
    ScanGamma(ScanArgs),
    /// Sup-norm decay of admissible hexagonal data.
    ///
    /// Columns: t, sup_norm, fitted_slope_so_far.
    Decay(DecayArgs),
    /// L2 growth of dyadic hexagonal data.
    ///
    /// Columns: t, norm, ratio.
    Growth(GrowthArgs),
    /// Predicted and measured exponential growth rates.
    ///
    /// Columns: predicted, measured, t_max.
    Instability(InstabilityArgs),
    /// Moments K_j along the linearized hexagonal flow.
    ///
    /// Columns: t, re_0..re_4, im_0..im_4, rate_residual_0..rate_residual_4.
    Moments(MomentArgs),
    /// mu and its first three derivatives on (0, 1).
    ///
    /// Columns: xi, mu, d1, d2, d3.
    MuProfile(ProfileArgs),
}

#[derive(Debug, Args, Serialize)]
struct Lattice {
    /// Hexagonal lattice
    #[arg(long, conflicts_with = "gamma")]
    hexa: bool,
    /// Rectangular lattice or strip period
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct ThetaArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau_re: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_im: f64,
    /// Number of sample points
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Debug, Args, Serialize)]
struct LatticeArgs {
    #[command(flatten)]
    lattice: Lattice,
    /// Real part of tau for a rectangular-family cell
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau_re: f64,
    /// Flux quanta per cell
    #[arg(long = "N", default_value_t = 1)]
    n: u32,
}

#[derive(Debug, Args, Serialize)]
struct StationaryArgs {
    #[command(flatten)]
    lattice: Lattice,
    /// Mode index of the single-mode state
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    k: i64,
    /// Amplitude, as RE or RE:IM
    #[arg(long, default_value = "1", value_parser = parse_complex, allow_hyphen_values = true)]
    c: C64,
    /// Window half-width
    #[arg(long, default_value_t = 8)]
    window: i64,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    lattice: Lattice,
    /// Evolve cell amplitudes instead of strip coefficients
    #[arg(long)]
    cell: bool,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau_re: f64,
    #[arg(long = "N", default_value_t = 1)]
    n: u32,
    /// Amplitudes (repeatable), as RE or RE:IM; on the strip they fill k0, k0+1, ...
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    c: Vec<C64>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    k0: i64,
    /// Strip window half-width
    #[arg(long, default_value_t = 24)]
    window: i64,
    /// Final time
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
}

#[derive(Debug, Args, Serialize)]
struct SymbolArgs {
    #[command(flatten)]
    lattice: Lattice,
    /// Points on the closed grid [0, 1]
    #[arg(long, default_value_t = 4096)]
    points: usize,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    #[arg(long, default_value_t = 2.0)]
    from: f64,
    #[arg(long, default_value_t = 3.0)]
    to: f64,
    #[arg(long, default_value_t = 1e-4)]
    resolution: f64,
}

#[derive(Debug, Args, Serialize)]
struct DecayArgs {
    /// log10 of the first time
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    t_from: f64,
    /// log10 of the last time
    #[arg(long, default_value_t = 5.0)]
    t_to: f64,
    #[arg(long, default_value_t = 16)]
    count: usize,
    /// Coefficients (repeatable) placed at k0, k0+1, ...; must be admissible
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    c: Vec<C64>,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    k0: i64,
}

#[derive(Debug, Args, Serialize)]
struct GrowthArgs {
    #[arg(long, default_value_t = 0.6)]
    theta: f64,
    #[arg(long, default_value_t = 2)]
    k0: u32,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    t_from: f64,
    #[arg(long, default_value_t = 6.0)]
    t_to: f64,
    #[arg(long, default_value_t = 17)]
    count: usize,
}

#[derive(Debug, Args, Serialize)]
struct InstabilityArgs {
    #[command(flatten)]
    lattice: Lattice,
    /// Final time; defaults to 200 e-folds of the predicted rate
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
}

#[derive(Debug, Args, Serialize)]
struct MomentArgs {
    #[arg(long, default_value_t = 128)]
    grid: usize,
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Centred-difference step for the rate residuals
    #[arg(long, default_value_t = 1e-2)]
    h: f64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    c: Vec<C64>,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    k0: i64,
}

#[derive(Debug, Args, Serialize)]
struct ProfileArgs {
    #[arg(long, default_value_t = 512)]
    points: usize,
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    match s.split_once(':') {
        Some((re, im)) => Ok(C64::new(num(re)?, num(im)?)),
        None => Ok(C64::new(num(s)?, 0.0)),
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Res<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn positive(x: f64, name: &str) -> Res<()> {
    check(x > 0.0 && x.is_finite(), format!("--{name} must be positive and finite, got {x}"))
}

fn log_times(from: f64, to: f64, count: usize) -> Res<Vec<f64>> {
    check(count >= 2 && to > from, "time range needs --count >= 2 and --t-to > --t-from")?;
    Ok((0..count).map(|i| 10f64.powf(from + (to - from) * i as f64 / (count - 1) as f64)).collect())
}

impl Lattice {
    fn symbol(&self) -> Res<Symbol> {
        match (self.hexa, self.gamma) {
            (true, _) => Ok(hexagonal_symbol()),
            (false, Some(g)) => {
                positive(g, "gamma")?;
                Ok(build_symbol(SymbolKind::Rect, g)?)
            }
            (false, None) => Err(CliError::Config("choose --hexa or --gamma".into())),
        }
    }

    fn convention(&self) -> Res<BasisConvention> {
        match (self.hexa, self.gamma) {
            (true, _) => Ok(BasisConvention::hexa()),
            (false, Some(g)) => {
                positive(g, "gamma")?;
                Ok(BasisConvention::rect(g))
            }
            (false, None) => Err(CliError::Config("choose --hexa or --gamma".into())),
        }
    }

    fn cell(&self, tau_re: f64, n: u32) -> Res<LatticeParams> {
        check(n >= 1, "--N must be at least 1")?;
        match (self.hexa, self.gamma) {
            (true, _) if n == 1 => Ok(LatticeParams::hexagonal()),
            (true, _) => Ok(LatticeParams::with_flux(hexagonal_gamma() * (n as f64).sqrt(), -0.5, n)?),
            (false, Some(g)) => {
                positive(g, "gamma")?;
                Ok(LatticeParams::with_flux(g, tau_re, n)?)
            }
            (false, None) => Err(CliError::Config("choose --hexa or --gamma".into())),
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status. Diagnostics go to stderr, one-line results to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        return report(e);
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    match e {
        CliError::Config(msg) => {
            eprintln!("ConfigError: {msg}");
            EXIT_CONFIG
        }
        CliError::Numeric(err) => {
            // the message already starts with the variant name
            eprintln!("{err}");
            EXIT_NUMERIC
        }
        CliError::Io(msg) => {
            eprintln!("IoError: {msg}");
            EXIT_NUMERIC
        }
    }
}

fn configure_threads() -> Res<()> {
    let Ok(v) = std::env::var("LLL_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("LLL_LAB_THREADS={v:?} is not a count")))?;
    check(n >= 1, "LLL_LAB_THREADS must be at least 1")?;
    // a pool installed earlier in the same process (tests) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Res<()> {
    let mut sink = Sink::new(&cli.out, cli.format)?;
    let (name, summary) = match &cli.command {
        Command::ThetaCheck(a) => ("theta-check", theta_check(a, &mut sink)?),
        Command::LatticeInfo(a) => ("lattice-info", lattice_info(a, &mut sink)?),
        Command::Stationary(a) => ("stationary", stationary(a, &mut sink)?),
        Command::Simulate(a) => ("simulate", simulate(a, &mut sink)?),
        Command::Spectrum(a) => ("spectrum", spectrum(a, &mut sink)?),
        Command::ScanGamma(a) => ("scan-gamma", scan_gamma(a, &mut sink)?),
        Command::Decay(a) => ("decay", decay(a, &mut sink)?),
        Command::Growth(a) => ("growth", growth(a, &mut sink)?),
        Command::Instability(a) => ("instability", instability(a, &mut sink)?),
        Command::Moments(a) => ("moments", moments(a, &mut sink)?),
        Command::MuProfile(a) => ("mu-profile", profile(a, &mut sink)?),
    };
    let config = json!({ "out": cli.out, "format": cli.format, "command": &cli.command });
    sink.finish(name, config, summary)
}

#[derive(Serialize)]
struct ThetaRow {
    z_re: f64,
    z_im: f64,
    theta_re: f64,
    theta_im: f64,
    quasi_defect: f64,
    odd_defect: f64,
}

fn theta_check(a: &ThetaArgs, sink: &mut Sink) -> Res<Value> {
    positive(a.tau_im, "tau-im")?;
    check(a.samples >= 1, "--samples must be at least 1")?;
    let tau = C64::new(a.tau_re, a.tau_im);
    let pol = TruncationPolicy::default();
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut rows = Vec::with_capacity(a.samples);
    for j in 0..a.samples {
        let x = -1.0 + 2.0 * (j as f64 + 0.5) / a.samples as f64;
        let y = -0.8 + 1.6 * (j as f64 * golden).fract();
        let z = C64::new(x, y);
        let th = theta(z, tau, &pol)?;
        let shifted = theta(z + tau, tau, &pol)?;
        let quasi = (shifted - theta_quasi_period(z, tau) * th).norm() / (1.0 + shifted.norm());
        let odd = (th + theta(-z, tau, &pol)?).norm();
        rows.push(ThetaRow { z_re: x, z_im: y, theta_re: th.re, theta_im: th.im, quasi_defect: quasi, odd_defect: odd });
    }
    let mut poisson: f64 = 0.0;
    for alpha in [1.0, 2.0, PI, 5.0] {
        for x in [0.0, 0.25, 0.5] {
            poisson = poisson.max(poisson_residual(alpha, C64::new(x, 0.0), &pol)?);
        }
    }
    sink.table("theta_check", &rows)?;
    let quasi = rows.iter().map(|r| r.quasi_defect).fold(0.0, f64::max);
    let odd = rows.iter().map(|r| r.odd_defect).fold(0.0, f64::max);
    println!("max quasi-periodicity defect {quasi:.3e}, max oddness defect {odd:.3e}, max Poisson residual {poisson:.3e}");
    Ok(json!({ "max_quasi_defect": quasi, "max_odd_defect": odd, "max_poisson_residual": poisson }))
}

#[derive(Serialize)]
struct NormRow {
    k: u32,
    l2_quadrature: f64,
    l2_closed_form: f64,
    l4_quadrature: f64,
    l4_closed_form: f64,
}

fn lattice_info(a: &LatticeArgs, sink: &mut Sink) -> Res<Value> {
    let p = a.lattice.cell(a.tau_re, a.n)?;
    let pol = TruncationPolicy::default();
    let q = CellQuadrature::standard(&p);
    let l2c = phi_norm_sq(&p).sqrt();
    let l4c = phi_quartic(&p, &pol)?.powf(0.25);
    let mut rows = Vec::new();
    for k in 0..p.n {
        let phi = phi_k(&p, k)?;
        rows.push(NormRow {
            k,
            l2_quadrature: cell_lp(&phi, 2.0, &q),
            l2_closed_form: l2c,
            l4_quadrature: cell_lp(&phi, 4.0, &q),
            l4_closed_form: l4c,
        });
    }
    let l0 = lambda0(&p, &pol)?;
    let special = if a.lattice.hexa && p.n == 1 {
        Some(lambda0_hexagonal(&pol)?)
    } else if p.n == 1 && p.tau.re == 0.0 {
        Some(lambda0_rectangular(p.gamma, &pol)?)
    } else {
        None
    };
    let ratio = rows[0].l4_quadrature.powi(4) / rows[0].l2_quadrature.powi(2);
    sink.table("lattice_info", &rows)?;
    println!("lambda0 = {l0:.15}, quadrature ratio {ratio:.15}");
    Ok(json!({
        "gamma": p.gamma, "tau_re": p.tau.re, "tau_im": p.tau.im, "n": p.n,
        "lambda0": l0, "lambda0_specialized": special, "quadrature_ratio": ratio,
    }))
}

#[derive(Serialize)]
struct ResidualRow {
    case: &'static str,
    frequency: f64,
    residual: f64,
}

fn stationary(a: &StationaryArgs, sink: &mut Sink) -> Res<Value> {
    let conv = a.lattice.convention()?;
    check(a.window >= 1 && a.k.abs() < a.window, "--k must lie inside the window")?;
    let single = CoeffState::unit(conv, a.window, a.k, a.c);
    let freq = a.c.norm_sqr() / (conv.gamma * PI.sqrt());
    let mut two = CoeffState::zeros(conv, -a.window, a.window);
    two.set(0, C64::new(1.0, 0.0));
    two.set(1, C64::new(1.0, 0.0));
    let best = best_fit_frequency(&two);
    let rows = [
        ResidualRow { case: "single_mode", frequency: freq, residual: stationary_residual(&single, freq) },
        ResidualRow { case: "two_mode_best_fit", frequency: best, residual: stationary_residual(&two, best) },
    ];
    sink.table("stationary", &rows)?;
    println!("single mode residual {:.3e}; two-mode residual {:.3e} at a = {best:.6}", rows[0].residual, rows[1].residual);
    Ok(json!({ "single_mode_residual": rows[0].residual, "two_mode_residual": rows[1].residual }))
}

#[derive(Serialize)]
struct DriftRow {
    t: f64,
    mass: f64,
    hamiltonian: f64,
    momentum: Option<f64>,
}

fn drift_rows(drift: &[DriftRecord]) -> Vec<DriftRow> {
    drift.iter().map(|d| DriftRow { t: d.t, mass: d.mass, hamiltonian: d.hamiltonian, momentum: d.momentum }).collect()
}

fn drift_summary<S>(traj: &Trajectory<S>) -> Value {
    let d = traj.max_drift();
    json!({
        "steps": traj.drift.len(),
        "max_mass_drift": d.mass,
        "max_hamiltonian_drift": d.hamiltonian,
        "max_momentum_drift": d.momentum,
        "truncation_flagged": traj.truncation_flagged(),
        "max_edge_ratio": traj.max_edge_ratio,
    })
}

fn simulate(a: &SimulateArgs, sink: &mut Sink) -> Res<Value> {
    positive(a.t_end, "T")?;
    positive(a.rtol, "rtol")?;
    positive(a.atol, "atol")?;
    let control = Control { rtol: a.rtol, atol: a.atol, dt0: None };
    let amps = if a.c.is_empty() { vec![C64::new(1.0, 0.0)] } else { a.c.clone() };
    if a.cell {
        let p = a.lattice.cell(a.tau_re, a.n)?;
        check(amps.len() == p.n as usize, format!("--cell with N = {} needs {} amplitudes, got {}", p.n, p.n, amps.len()))?;
        let sys = CellSystem::new(&p, &CellQuadrature::standard(&p))?;
        let traj = integrate_cell(&CellState::new(p, amps.clone())?, &sys, a.t_end, &control)?;
        sink.table("trajectory", &cell_rows(&traj))?;
        sink.table("drift", &drift_rows(&traj.drift))?;
        let mut summary = drift_summary(&traj);
        if p.n == 1 {
            let l0 = lambda0(&p, &TruncationPolicy::default())?;
            let c = amps[0];
            let exact = c * C64::from_polar(1.0, -l0 * c.norm_sqr() * a.t_end);
            let dev = (traj.last().amps[0] - exact).norm();
            println!("final-state max deviation from closed form {dev:.3e}");
            summary["closed_form_deviation"] = json!(dev);
        }
        print_drift(&summary);
        Ok(summary)
    } else {
        let conv = a.lattice.convention()?;
        check(a.window >= 1, "--window must be at least 1")?;
        let kmax = a.k0 + amps.len() as i64 - 1;
        check(a.k0 >= -a.window && kmax <= a.window, "amplitudes must fit inside the window")?;
        let mut s = CoeffState::zeros(conv, -a.window, a.window);
        for (i, c) in amps.iter().enumerate() {
            s.set(a.k0 + i as i64, *c);
        }
        let traj = integrate_strip(&s, a.t_end, &control)?;
        sink.table("trajectory", &strip_rows(&traj))?;
        sink.table("drift", &drift_rows(&traj.drift))?;
        let mut summary = drift_summary(&traj);
        if amps.len() == 1 {
            let exact = stationary_closed_form(amps[0], conv.gamma, a.t_end);
            let last = traj.last();
            let dev = last
                .indices()
                .map(|k| (last.get(k) - if k == a.k0 { exact } else { C64::new(0.0, 0.0) }).norm())
                .fold(0.0, f64::max);
            println!("final-state max deviation from closed form {dev:.3e}");
            summary["closed_form_deviation"] = json!(dev);
        }
        print_drift(&summary);
        Ok(summary)
    }
}

fn print_drift(summary: &Value) {
    println!(
        "max relative drift: mass {}, hamiltonian {}, momentum {}",
        summary["max_mass_drift"], summary["max_hamiltonian_drift"], summary["max_momentum_drift"]
    );
    if summary["truncation_flagged"] == json!(true) {
        eprintln!("warning: coefficient mass reached the window edge");
    }
}

fn spectrum(a: &SymbolArgs, sink: &mut Sink) -> Res<Value> {
    check(a.points >= 64, "--points must be at least 64")?;
    let sym = a.lattice.symbol()?;
    let rows = spectrum_rows(&sym, a.points)?;
    let rep = det_scan(&sym, a.points)?;
    sink.table("spectrum", &rows)?;
    println!("verdict {:?}: det in [{:.6e}, {:.6e}], max growth rate {:.6}", rep.verdict, rep.det_min, rep.det_max, rep.max_growth_rate);
    serde_json::to_value(rep).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct ScanRow {
    gamma0: f64,
    lo: f64,
    hi: f64,
}

fn scan_gamma(a: &ScanArgs, sink: &mut Sink) -> Res<Value> {
    positive(a.from, "from")?;
    positive(a.resolution, "resolution")?;
    check(a.to > a.from, "--to must exceed --from")?;
    let g0 = gamma_threshold_scan(a.from, a.to, a.resolution)?;
    sink.table("scan_gamma", &[ScanRow { gamma0: g0, lo: a.from, hi: a.to }])?;
    println!("gamma_0 = {g0:.6}");
    Ok(json!({ "gamma0": g0 }))
}

fn state_from(conv: BasisConvention, k0: i64, c: &[C64]) -> CoeffState {
    let mut s = CoeffState::zeros(conv, k0, k0 + c.len() as i64 - 1);
    for (i, v) in c.iter().enumerate() {
        s.set(k0 + i as i64, *v);
    }
    s
}

fn decay(a: &DecayArgs, sink: &mut Sink) -> Res<Value> {
    let times = log_times(a.t_from, a.t_to, a.count)?;
    let c = if a.c.is_empty() {
        vec![C64::new(0.5, 0.0), C64::new(-1.0, 1.0), C64::new(0.5, 0.0)]
    } else {
        a.c.clone()
    };
    let state = state_from(BasisConvention::hexa(), a.k0, &c);
    let table = linf_decay_experiment(&state, &times, &hexagonal_symbol(), SupSearch::default())?;
    sink.table("decay", &table.rows)?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!("fitted slope {} (last decade {}), grid {}", show(table.slope), show(table.slope_last_decade), table.grid_size);
    Ok(json!({ "slope": table.slope, "slope_last_decade": table.slope_last_decade, "grid_size": table.grid_size }))
}

fn growth(a: &GrowthArgs, sink: &mut Sink) -> Res<Value> {
    check(a.theta > 0.5, "--theta must exceed 1/2")?;
    check(a.k0 >= 1, "--k0 must be at least 1")?;
    check(a.grid >= 64, "--grid must be at least 64")?;
    let times = log_times(a.t_from, a.t_to, a.count)?;
    let grid = hexagonal_symbol().sample(a.grid)?;
    let table = growth_experiment(a.theta, a.k0, &times, &grid)?;
    sink.table("growth", &table.rows)?;
    println!("growth exponent {:.4}, max ratio {:.4}, bound constant {:.4}", table.exponent, table.max_ratio, table.bound_constant);
    Ok(json!({ "exponent": table.exponent, "max_ratio": table.max_ratio, "bound_constant": table.bound_constant }))
}

fn instability(a: &InstabilityArgs, sink: &mut Sink) -> Res<Value> {
    check(a.grid >= 64, "--grid must be at least 64")?;
    if let Some(t) = a.t_max {
        positive(t, "t-max")?;
    }
    let sym = a.lattice.symbol()?;
    let r = instability_rate(&sym, a.t_max, a.grid)?;
    sink.table("instability", &[r])?;
    println!("predicted rate {:.6}, measured {:.6}", r.predicted, r.measured);
    serde_json::to_value(r).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct MomentOut {
    t: f64,
    re_0: f64,
    re_1: f64,
    re_2: f64,
    re_3: f64,
    re_4: f64,
    im_0: f64,
    im_1: f64,
    im_2: f64,
    im_3: f64,
    im_4: f64,
    rate_residual_0: f64,
    rate_residual_1: f64,
    rate_residual_2: f64,
    rate_residual_3: f64,
    rate_residual_4: f64,
}

fn moments(a: &MomentArgs, sink: &mut Sink) -> Res<Value> {
    check(a.grid >= 16, "--grid must be at least 16")?;
    check(a.steps >= 1, "--steps must be at least 1")?;
    positive(a.t_max, "t-max")?;
    positive(a.h, "h")?;
    let c = if a.c.is_empty() {
        vec![C64::new(0.2, -0.3), C64::new(0.4, 1.0), C64::new(-0.1, 0.2), C64::new(0.05, 0.1)]
    } else {
        a.c.clone()
    };
    let pair = FourierPair::from_coeffs(a.k0, &c, a.grid)?;
    let grid = hexagonal_symbol().sample(a.grid)?;
    let times: Vec<f64> = (0..=a.steps).map(|i| a.t_max * i as f64 / a.steps as f64).collect();
    let trace = moment_trace(&pair, &grid, &times, a.h)?;
    let rows: Vec<MomentOut> = trace
        .rows
        .iter()
        .map(|r| MomentOut {
            t: r.t,
            re_0: r.re[0],
            re_1: r.re[1],
            re_2: r.re[2],
            re_3: r.re[3],
            re_4: r.re[4],
            im_0: r.im[0],
            im_1: r.im[1],
            im_2: r.im[2],
            im_3: r.im[3],
            im_4: r.im[4],
            rate_residual_0: r.rate_residual[0],
            rate_residual_1: r.rate_residual[1],
            rate_residual_2: r.rate_residual[2],
            rate_residual_3: r.rate_residual[3],
            rate_residual_4: r.rate_residual[4],
        })
        .collect();
    sink.table("moments", &rows)?;
    let r0 = trace.rows[0].re;
    let drift: Vec<f64> = (0..5).map(|j| trace.rows.iter().map(|r| (r.re[j] - r0[j]).abs()).fold(0.0, f64::max)).collect();
    // rate of Re K_4 at t = 0 against the closed prediction
    let dh = 1e-4;
    let r4 = |t: f64| -> Res<f64> { Ok(lll_core::linstab::moments(&evolve_pair(&pair, &grid, t)?)[4].re) };
    let rate = (r4(dh)? - r4(-dh)?) / (2.0 * dh);
    let predicted = -trace.constants.l3 * trace.rows[0].im[0];
    let drift_text: Vec<String> = drift.iter().map(|d| format!("{d:.3e}")).collect();
    println!("max drift of Re K_j: [{}]; dR4/dt(0) = {rate:.6} vs -L3 I0 = {predicted:.6}", drift_text.join(", "));
    Ok(json!({ "constants": trace.constants, "max_re_drift": drift, "r4_rate": rate, "r4_rate_predicted": predicted }))
}

fn profile(a: &ProfileArgs, sink: &mut Sink) -> Res<Value> {
    check(a.points >= 8, "--points must be at least 8")?;
    let sym = hexagonal_symbol();
    let rows = mu_profile(&sym, a.points)?;
    let zeros = mu_second_derivative_zeros(&sym)?;
    let cst = mu_expansion_constant(&sym)?;
    sink.table("mu_profile", &rows)?;
    println!("mu'' vanishes at {zeros:.6?}; mu ~ {cst:.8} xi^2");
    Ok(json!({ "mu_second_derivative_zeros": zeros, "expansion_constant": cst }))
}
