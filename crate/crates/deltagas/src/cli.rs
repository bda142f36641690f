//! Command-line front end.

use crate::correlators::{correlators_closed, correlators_from_series, correlators_generic_fd, Regime, H_PHI, H_X};
use crate::error::Error;
use crate::format::num;
use crate::fredholm::SeriesResult;
use crate::genfun::{
    genfun_free, genfun_generic, genfun_impenetrable, generic_t1_at_phi_zero, limit_grid, Evaluation, FreeMethod,
    GenericEngine, GenericOptions, ImpenetrableMethod,
};
use crate::grids::ContourSpec;
use crate::identities::{run_suite, Thresholds};
use crate::thermo::{default_tba_grid, solve_dressed_energy, logistic_neg, DressedEnergy, GasParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "deltagas", version, about = "Generating function and correlators of the 1D delta Bose gas")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Key-value file (key = value per line); flags on the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for data-parallel loops; output does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the dressed-energy equation and tabulate it.
    Tba(TbaArgs),
    /// Evaluate the generating function.
    Genfun(GenfunArgs),
    /// Density and density-density correlators on an x grid.
    Correlate(CorrelateArgs),
    /// Run the identity checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TbaArgs {
    /// Coupling: a positive real, 0 for the free limit or inf.
    #[arg(long)]
    pub c: String,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Generic,
    Impenetrable,
    Free,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Generic => Regime::Generic,
            RegimeArg::Impenetrable => Regime::Impenetrable,
            RegimeArg::Free => Regime::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nystrom,
    Series,
    PermSeries,
    Resolvent,
    Residue,
    Contour,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenfunArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    /// Series order (default 8 for the limit series, 2 at generic coupling).
    #[arg(long)]
    pub nmax: Option<usize>,
    /// nystrom|series (impenetrable), perm_series|resolvent (free), residue|contour (generic).
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Contour shift at generic coupling (default min(c/2, 1/(1+x))).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
    #[arg(long, default_value_t = GenericOptions::default().coarse)]
    pub coarse: usize,
    #[arg(long, default_value_t = GenericOptions::default().coarse3)]
    pub coarse3: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Closed,
    Series,
    Both,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CorrelateArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    /// Coupling, generic regime only.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long)]
    pub xmax: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Route::Closed)]
    pub route: Route,
    #[arg(long, default_value_t = 2)]
    pub nmax: usize,
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
    #[arg(long, default_value_t = GenericOptions::default().coarse)]
    pub coarse: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 25)]
    pub seeds: u64,
    /// Tighter tolerances for the algebraic identities.
    #[arg(long)]
    pub strict: bool,
    /// Multiplies every tolerance; used to exercise the failure path.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub threshold_scale: f64,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Param(_) | Error::Size(_) => EXIT_USAGE,
            Error::Domain(_) | Error::Contour(_) | Error::Divergence { .. } | Error::Unsupported(_) | Error::Pole(_) => {
                EXIT_DATA
            }
            Error::Precondition(_) => EXIT_NOT_CONVERGED,
            Error::Numerical(_) => EXIT_FAIL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_FAIL, message: format!("i/o error: {e}") }
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parse a key-value config file into flag arguments.
pub fn config_args(text: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = k.trim().trim_start_matches("--");
        let val = v.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        match val {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(val.to_string());
            }
        }
    }
    Ok(out)
}

const SUBCOMMANDS: [&str; 4] = ["tba", "genfun", "correlate", "verify"];

/// Splice config-file flags in right after the subcommand so that later
/// command-line flags override them.
fn expand_config(args: Vec<String>) -> std::result::Result<Vec<String>, Failure> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next();
            if path.is_none() {
                return Err(Failure { code: EXIT_USAGE, message: "--config needs a path".into() });
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure { code: EXIT_USAGE, message: format!("cannot read config {path}: {e}") })?;
    let extra = config_args(&text).map_err(|m| Failure { code: EXIT_USAGE, message: format!("config {path}: {m}") })?;
    let at = rest.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())).map(|i| i + 1).unwrap_or(rest.len());
    rest.splice(at..at, extra);
    Ok(rest)
}

/// Entry point: returns the process exit code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{shown}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{shown}");
                    EXIT_USAGE
                }
            };
        }
    };
    if cli.threads == 0 {
        let _ = writeln!(err, "error: --threads must be at least 1");
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return EXIT_FAIL;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let res = pool.install(|| match &cli.command {
        Command::Tba(a) => cmd_tba(a, &mut buf),
        Command::Genfun(a) => cmd_genfun(a, &mut buf),
        Command::Correlate(a) => cmd_correlate(a, &mut buf),
        Command::Verify(a) => cmd_verify(a, &mut buf),
    });
    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_FAIL;
    }
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

fn emit(text: &str, path: &Option<PathBuf>, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

enum TbaCoupling {
    Finite(f64),
    Infinite,
    Zero,
}

fn parse_coupling(s: &str) -> std::result::Result<TbaCoupling, Failure> {
    match s.trim() {
        "inf" | "infinity" | "Inf" => Ok(TbaCoupling::Infinite),
        v => {
            let c: f64 = v.parse().map_err(|_| usage(format!("--c expects a real number or inf, got {v}")))?;
            if c == 0.0 {
                Ok(TbaCoupling::Zero)
            } else if c > 0.0 && c.is_finite() {
                Ok(TbaCoupling::Finite(c))
            } else if c == f64::INFINITY {
                Ok(TbaCoupling::Infinite)
            } else {
                Err(usage(format!("--c must be non-negative, got {v}")))
            }
        }
    }
}

fn cmd_tba(a: &TbaArgs, out: &mut dyn Write) -> CliResult {
    let coupling = parse_coupling(&a.c)?;
    if !(a.t > 0.0 && a.t.is_finite()) || !a.mu.is_finite() {
        return Err(usage(format!("need T > 0 and finite mu, got T = {} mu = {}", a.t, a.mu)));
    }
    let grid = default_tba_grid(a.t, a.mu, a.nodes)?;
    let (eps, residual, converged): (Vec<f64>, f64, bool) = match coupling {
        TbaCoupling::Infinite => (grid.nodes.iter().map(|p| p * p - a.mu).collect(), 0.0, true),
        TbaCoupling::Zero => {
            GasParams::new(crate::thermo::Coupling::Free, a.t, a.mu)?.require_bose_range()?;
            let e = grid.nodes.iter().map(|p| a.t * ((p * p - a.mu) / a.t).exp_m1().ln()).collect();
            (e, 0.0, true)
        }
        TbaCoupling::Finite(c) => {
            let params = GasParams::finite(c, a.t, a.mu)?;
            let d = solve_dressed_energy(&params, &grid, a.tol, a.max_iter)?;
            (d.values, d.residual, d.converged)
        }
    };
    let mut s = String::from("p,epsilon,fermi_weight\n");
    for (p, e) in grid.nodes.iter().zip(&eps) {
        let w = logistic_neg(e / a.t);
        s.push_str(&format!("{},{},{}\n", num(*p), num(*e), num(w)));
    }
    s.push_str(&format!("# converged={converged} residual={}\n", num(residual)));
    emit(&s, &a.out, out)?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Serialize)]
struct GenfunParams {
    c: Option<f64>,
    #[serde(rename = "T")]
    t: f64,
    mu: f64,
    x: f64,
    phi: f64,
    n_max: Option<usize>,
    method: String,
}

#[derive(Serialize)]
struct GenfunReport {
    regime: &'static str,
    params: GenfunParams,
    #[serde(serialize_with = "crate::format::ser_complex_vec")]
    terms: Vec<C64>,
    #[serde(serialize_with = "crate::format::ser_complex")]
    total: C64,
    tail_estimate: f64,
    diagnostics: Vec<(String, f64)>,
}

fn solve_generic_energy(c: f64, t: f64, mu: f64, nodes: usize) -> std::result::Result<(GasParams, DressedEnergy), Failure> {
    let params = GasParams::finite(c, t, mu)?;
    let grid = default_tba_grid(t, mu, nodes)?;
    let eps = solve_dressed_energy(&params, &grid, 1e-12, 100_000)?;
    if !eps.converged {
        return Err(Failure {
            code: EXIT_NOT_CONVERGED,
            message: format!("dressed energy did not converge (residual {})", num(eps.residual)),
        });
    }
    Ok((params, eps))
}

fn cmd_genfun(a: &GenfunArgs, out: &mut dyn Write) -> CliResult {
    let phi = C64::new(a.phi, 0.0);
    let regime = Regime::from(a.regime);
    if a.c.is_some() && regime != Regime::Generic {
        return Err(usage("--c applies to the generic regime only"));
    }
    let mut diagnostics = Vec::new();
    let (eval, method, n_max): (Evaluation, MethodArg, Option<usize>) = match regime {
        Regime::Impenetrable => {
            let grid = limit_grid(a.t, a.mu, a.nodes)?;
            let m = a.method.unwrap_or(MethodArg::Nystrom);
            let (method, n) = match m {
                MethodArg::Nystrom => (ImpenetrableMethod::Nystrom, None),
                MethodArg::Series => (ImpenetrableMethod::Series(a.nmax.unwrap_or(8)), Some(a.nmax.unwrap_or(8))),
                other => return Err(usage(format!("method {other:?} does not apply to the impenetrable regime"))),
            };
            (genfun_impenetrable(a.t, a.mu, a.x, phi, method, &grid)?, m, n)
        }
        Regime::Free => {
            let grid = limit_grid(a.t, a.mu, a.nodes)?;
            let m = a.method.unwrap_or(MethodArg::PermSeries);
            let (method, n) = match m {
                MethodArg::PermSeries => (FreeMethod::PermSeries(a.nmax.unwrap_or(8)), Some(a.nmax.unwrap_or(8))),
                MethodArg::Resolvent => (FreeMethod::Resolvent, None),
                other => return Err(usage(format!("method {other:?} does not apply to the free regime"))),
            };
            (genfun_free(a.t, a.mu, a.x, phi, method, &grid)?, m, n)
        }
        Regime::Generic => {
            let c = a.c.ok_or_else(|| usage("the generic regime needs --c"))?;
            let m = a.method.unwrap_or(MethodArg::Residue);
            let engine = match m {
                MethodArg::Residue => GenericEngine::Residue,
                MethodArg::Contour => GenericEngine::Contour,
                other => return Err(usage(format!("method {other:?} does not apply to the generic regime"))),
            };
            let n = a.nmax.unwrap_or(if engine == GenericEngine::Contour { 1 } else { 2 });
            let spec = match a.delta {
                Some(d) => ContourSpec::new(d, crate::grids::DEFAULT_CONTOUR_WINDOW, crate::grids::DEFAULT_CONTOUR_NODES)?,
                None => ContourSpec::default_for(c, a.x)?,
            };
            spec.check_coupling(c)?;
            let (params, eps) = solve_generic_energy(c, a.t, a.mu, a.nodes)?;
            let opts = GenericOptions { engine, coarse: a.coarse, coarse3: a.coarse3 };
            let s: SeriesResult = genfun_generic(&params, &eps, a.x, phi, n, &spec, &eps.grid, &opts)?;
            if n >= 1 {
                let d = generic_t1_at_phi_zero(&params, &eps, a.x, &eps.grid, &opts)?;
                diagnostics.push(("t1_phi0_re".to_string(), d.re));
                diagnostics.push(("t1_phi0_im".to_string(), d.im));
            }
            diagnostics.push(("contour_shift".to_string(), spec.shift));
            let ev = Evaluation {
                method: format!("{engine:?}").to_lowercase(),
                terms: s.terms,
                total: s.total,
                tail_estimate: s.tail_estimate,
            };
            (ev, m, Some(n))
        }
    };
    let method_name = method.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    if a.json {
        let report = GenfunReport {
            regime: regime.name(),
            params: GenfunParams { c: a.c, t: a.t, mu: a.mu, x: a.x, phi: a.phi, n_max, method: method_name },
            terms: eval.terms,
            total: eval.total,
            tail_estimate: eval.tail_estimate,
            diagnostics,
        };
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
        writeln!(out, "{text}")?;
        return Ok(EXIT_OK);
    }
    let mut s = String::from("n,re,im\n");
    for (n, t) in eval.terms.iter().enumerate() {
        s.push_str(&format!("{n},{},{}\n", num(t.re), num(t.im)));
    }
    s.push_str(&format!("# regime={} method={method_name}\n", regime.name()));
    s.push_str(&format!("# total_re={} total_im={}\n", num(eval.total.re), num(eval.total.im)));
    s.push_str(&format!("# tail_estimate={}\n", num(eval.tail_estimate)));
    for (k, v) in &diagnostics {
        s.push_str(&format!("# {k}={}\n", num(*v)));
    }
    out.write_all(s.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_correlate(a: &CorrelateArgs, out: &mut dyn Write) -> CliResult {
    if !(a.xmax.is_finite() && a.xmax >= 0.0) {
        return Err(usage(format!("--xmax must be non-negative, got {}", a.xmax)));
    }
    if a.steps == 0 {
        return Err(usage("--steps must be positive"));
    }
    let regime = Regime::from(a.regime);
    let xs: Vec<f64> = (0..=a.steps).map(|i| a.xmax * i as f64 / a.steps as f64).collect();
    let mut s = String::new();
    match regime {
        Regime::Generic => {
            if a.route != Route::Closed {
                return Err(usage("the generic regime has only the finite-difference route"));
            }
            let c = a.c.ok_or_else(|| usage("the generic regime needs --c"))?;
            let (params, eps) = solve_generic_energy(c, a.t, a.mu, a.nodes)?;
            let opts = GenericOptions { coarse: a.coarse, ..Default::default() };
            let rows: Vec<_> = xs
                .iter()
                .filter(|x| **x >= H_X)
                .map(|x| correlators_generic_fd(&params, &eps, *x, a.nmax, &eps.grid, &opts))
                .collect::<crate::Result<Vec<_>>>()?;
            s.push_str("x,density,g2,connected\n");
            for r in rows {
                s.push_str(&format!("{},{},{},{}\n", num(r.x), num(r.density), num(r.g2), num(r.connected)));
            }
            s.push_str(&format!("# approximate: finite differences of the n_max={} series, h_phi={} (complex step) h_x={} (central)\n", a.nmax, num(H_PHI), num(H_X)));
        }
        _ => {
            if a.c.is_some() {
                return Err(usage("--c applies to the generic regime only"));
            }
            let rows: Vec<(f64, f64, f64, f64, Option<f64>)> = xs
                .par_iter()
                .map(|x| -> crate::Result<_> {
                    let (d, g2, conn) = match a.route {
                        Route::Series => {
                            let r = correlators_from_series(regime, a.t, a.mu, *x)?;
                            (r.density, r.g2, r.connected)
                        }
                        _ => {
                            let r = correlators_closed(regime, a.t, a.mu, *x)?;
                            (r.density, r.g2, r.connected)
                        }
                    };
                    let series = if a.route == Route::Both { Some(correlators_from_series(regime, a.t, a.mu, *x)?.g2) } else { None };
                    Ok((*x, d, g2, conn, series))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            if a.route == Route::Both {
                s.push_str("x,density,g2,connected,series_g2,abs_diff\n");
            } else {
                s.push_str("x,density,g2,connected\n");
            }
            let mut worst = 0.0f64;
            for (x, d, g2, conn, series) in rows {
                s.push_str(&format!("{},{},{},{}", num(x), num(d), num(g2), num(conn)));
                if let Some(sg) = series {
                    let diff = (g2 - sg).abs();
                    worst = worst.max(diff);
                    s.push_str(&format!(",{},{}", num(sg), num(diff)));
                }
                s.push('\n');
            }
            s.push_str(&format!("# regime={} route={:?}\n", regime.name(), a.route).to_lowercase());
            if a.route == Route::Both {
                s.push_str(&format!("# max_abs_diff={}\n", num(worst)));
            }
        }
    }
    emit(&s, &a.out, out)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult {
    if a.seeds == 0 {
        return Err(usage("--seeds must be positive"));
    }
    let base = if a.strict { Thresholds::strict() } else { Thresholds::standard() };
    let results = run_suite(a.seeds, &base.scaled(a.threshold_scale))?;
    let mut ok = true;
    for r in &results {
        ok &= r.pass;
        writeln!(
            out,
            "{},{},residual={},tolerance={},{}",
            r.name,
            r.params,
            num(r.residual),
            num(r.tolerance),
            if r.pass { "pass" } else { "fail" }
        )?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}
