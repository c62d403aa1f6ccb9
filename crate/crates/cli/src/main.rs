mod args;
mod config;

use std::fs;
use std::ops::Index;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::json;

use kahler_core::dombrowski::{self, Chart, TangentState};
use kahler_core::jacobi::{self, Generator, JacobiElement};
use kahler_core::kahler_functions::{self as kf, family_member, BundleMap};
use kahler_core::manifold::{self, NaturalPoint};
use kahler_core::report::{self, Settings, Status, Suite, Verdict};
use kahler_core::schrodinger::{self as sch, ConventionFlags, SchrodingerParams, XiSource};
use kahler_core::{Error, QuadratureSpec};

use args::{ChartArg, Cli, Command, Common, CurveArgs, FlagsArg, StateArg};

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Domain(String),
    Io(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Domain(_) => 3,
            AppError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Domain(m) => write!(f, "{m}"),
            AppError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => AppError::Config(m),
            other => AppError::Domain(other.to_string()),
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> AppError {
    AppError::Io(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, AppError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

/// Config echo: everything that determines the output, but not where it goes.
#[derive(Serialize)]
struct Echo<'a> {
    settings: &'a Settings,
    options: serde_json::Value,
}

fn state_from(arg: &StateArg, default: [f64; 4]) -> Result<TangentState, AppError> {
    let v = arg.state.clone().unwrap_or_else(|| default.to_vec());
    Ok(TangentState::new(v[0], v[1], v[2], v[3])?)
}

/// `[[a, b], [c, d]]` for an `n x n` matrix.
fn fmt_matrix<M: Index<(usize, usize), Output = f64>>(m: &M, n: usize) -> String {
    let rows: Vec<String> = (0..n)
        .map(|r| (0..n).map(|c| m[(r, c)] + 0.0).collect::<Vec<_>>())
        .map(|r| {
            format!(
                "[{}]",
                r.iter()
                    .map(|v| format!("{v}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        println!(
            "{:<9} {:<26} residual={:.3e} tol={:.1e}",
            format!("{:?}", v.status).to_uppercase(),
            v.claim,
            v.residual,
            v.tolerance
        );
    }
}

fn finish(
    suite: Suite,
    cfg: &config::Resolved,
    options: serde_json::Value,
) -> Result<bool, AppError> {
    let verdicts = report::run_suite(suite, &cfg.settings)?;
    let echo = Echo {
        settings: &cfg.settings,
        options,
    };
    let doc = report::emit_verdicts(suite.name(), cfg.settings.seed, &echo, &verdicts)?;
    let path = write_file(
        &cfg.out_dir,
        &format!("{}.verdicts.json", suite.name()),
        doc.as_bytes(),
    )?;
    print_verdicts(&verdicts);
    println!("verdicts written to {}", path.display());
    Ok(verdicts.iter().all(|v| v.status != Status::Fail))
}

fn metric(theta: Option<Vec<f64>>, cfg: &config::Resolved) -> Result<bool, AppError> {
    let t = theta.unwrap_or_else(|| vec![0.0, -0.5]);
    let p = NaturalPoint::new(t[0], t[1])?;
    let h = manifold::fisher_metric(&p);
    let oracle =
        manifold::fisher_metric_oracle(&p, QuadratureSpec::new(cfg.settings.quadrature_order)?)?;
    let eta = manifold::dual_coordinates(&p);
    println!("theta         = ({}, {})", t[0], t[1]);
    println!("metric        = {}", fmt_matrix(&h, 2));
    println!(
        "inverse       = {}",
        fmt_matrix(&manifold::inverse_metric(&p), 2)
    );
    println!("dual coords   = ({}, {})", eta.eta1(), eta.eta2());
    println!("potential     = {}", manifold::potential(&p));
    println!("oracle dev    = {:.3e}", (oracle - h).amax());
    finish(Suite::Metric, cfg, json!({ "theta": t }))
}

fn kahler_check(
    state: &StateArg,
    chart: ChartArg,
    cfg: &config::Resolved,
) -> Result<bool, AppError> {
    let s = state_from(state, [1.0, -1.0, 0.5, -0.5])?;
    let chart = match chart {
        ChartArg::Natural => Chart::Natural,
        ChartArg::Mixed => Chart::Mixed,
    };
    let k = dombrowski::kahler(&s, chart);
    let rep = dombrowski::verify_structure(
        &k,
        cfg.settings
            .tol(&format!("pro2.{}", chart_name(chart)), 1e-10),
    );
    println!("state   = {:?}", s.as_array());
    println!("g       = {}", fmt_matrix(&k.g, 4));
    println!("J       = {}", fmt_matrix(&k.j, 4));
    println!("omega   = {}", fmt_matrix(&k.omega, 4));
    for (name, v) in rep.named() {
        println!("{name:<18} {v:.3e}");
    }
    println!(
        "d omega            {:.3e}",
        dombrowski::closedness_residual(&s, cfg.settings.closedness_step, chart)?
    );
    finish(
        Suite::KahlerCheck,
        cfg,
        json!({ "state": s.as_array(), "chart": chart_name(chart) }),
    )
}

fn chart_name(c: Chart) -> &'static str {
    match c {
        Chart::Natural => "natural",
        Chart::Mixed => "mixed",
    }
}

fn pde_check(
    alpha: Option<Vec<f64>>,
    state: &StateArg,
    cfg: &config::Resolved,
) -> Result<bool, AppError> {
    let s = state_from(state, [0.5, -1.5, 0.2, -0.8])?;
    let a = alpha.unwrap_or_else(|| vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let f = family_member(std::array::from_fn(|i| a[i]));
    let r = kf::kahler_pde_residual(&|x: &[f64; 4]| f.eval(x), &s, cfg.settings.pde_step)?;
    println!("alpha     = {a:?}");
    println!("state     = {:?}", s.as_array());
    println!("residuals = {r:?}");
    finish(
        Suite::PdeCheck,
        cfg,
        json!({ "alpha": a, "state": s.as_array() }),
    )
}

fn isometry_check(
    translate: Option<Vec<f64>>,
    state: &StateArg,
    cfg: &config::Resolved,
) -> Result<bool, AppError> {
    let s = state_from(state, [0.0, -1.0, 0.0, 0.0])?;
    let k = translate.unwrap_or_else(|| vec![1.0, 0.0, 0.0, 0.0]);
    let map = BundleMap::translation(std::array::from_fn(|i| k[i]));
    println!("translation = {k:?}");
    println!("state       = {:?}", s.as_array());
    println!(
        "holomorphy  = {:.3e}",
        kf::holomorphy_residual(&map, &s, kf::JACOBIAN_STEP)?
    );
    match kf::isometry_residual(&map, &s, kf::JACOBIAN_STEP) {
        Ok(r) => println!("isometry    = {r:.3e}"),
        Err(e) => println!("isometry    = n/a ({e})"),
    }
    finish(
        Suite::IsometryCheck,
        cfg,
        json!({ "translate": k, "state": s.as_array() }),
    )
}

fn fields(state: &StateArg, cfg: &config::Resolved) -> Result<bool, AppError> {
    let s = state_from(state, [1.0, -1.0, 0.0, 1.0])?;
    println!("state = {:?}", s.as_array());
    for g in Generator::ALL {
        let l = JacobiElement::basis(g);
        let a = jacobi::hamiltonian_field(&jacobi::psi(l), &s);
        let b = jacobi::closed_form_field(&l, &s);
        println!("{g}: gradient {a:?}  tabulated {b:?}");
    }
    finish(Suite::Fields, cfg, json!({ "state": s.as_array() }))
}

fn curve_from(c: &CurveArgs) -> Result<(JacobiElement, jacobi::SpectralCurve), AppError> {
    let gen: JacobiElement = c.generator.parse()?;
    let start = TangentState::new(c.start[0], c.start[1], c.start[2], c.start[3])?;
    let curve = jacobi::integrate_flow(gen, start, c.s_end, c.step)?;
    Ok((gen, curve))
}

fn curve_options(c: &CurveArgs, gen: &JacobiElement) -> serde_json::Value {
    json!({ "gen": gen.to_string(), "start": c.start, "s_end": c.s_end, "step": c.step })
}

fn flow(c: &CurveArgs, cfg: &config::Resolved) -> Result<bool, AppError> {
    let (gen, curve) = curve_from(c)?;
    let mut csv = Vec::new();
    curve
        .write_csv(&mut csv)
        .map_err(|e| AppError::Io(e.to_string()))?;
    let path = write_file(&cfg.out_dir, "flow.csv", &csv)?;
    let end = curve.last().expect("curve has a start").as_array();
    println!("generator = {gen}");
    println!("end state = {end:?}");
    println!("drift     = {:.3e}", jacobi::conservation_report(&curve)?);
    println!("curve written to {}", path.display());
    finish(Suite::Flow, cfg, curve_options(c, &gen))
}

fn schrodinger(
    c: &CurveArgs,
    flags: FlagsArg,
    xi: &str,
    beta: Option<Vec<f64>>,
    cfg: &config::Resolved,
) -> Result<bool, AppError> {
    let (gen, curve) = curve_from(c)?;
    let mut params = SchrodingerParams::from_element(&gen).with_flags(match flags {
        FlagsArg::Calibrated => ConventionFlags::calibrated(),
        FlagsArg::AsPrinted => ConventionFlags::as_printed(),
    });
    match xi {
        "const" => {}
        "primary" => params = params.with_xi(XiSource::Primary),
        "alternate" => params = params.with_xi(XiSource::Alternate),
        v => {
            let g: f64 = v.parse().map_err(|_| {
                AppError::Config(format!(
                    "--xi expects primary, alternate, const or a number, got {v:?}"
                ))
            })?;
            params = params.with_xi(XiSource::Constant(g));
        }
    }
    if let Some(b) = &beta {
        params = params.with_beta(std::array::from_fn(|i| b[i]));
    }
    let grid = cfg.settings.grid()?;
    let field = sch::schrodinger_residual(&curve, &grid, &params)?;
    let mut csv = Vec::new();
    field
        .write_csv(&mut csv)
        .map_err(|e| AppError::Io(e.to_string()))?;
    let csv_path = write_file(&cfg.out_dir, "schrodinger.csv", &csv)?;
    let summary = json!({ "params": params, "summary": field.summary() });
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| AppError::Io(e.to_string()))? + "\n";
    let json_path = write_file(&cfg.out_dir, "schrodinger.summary.json", text.as_bytes())?;
    let s = field.summary();
    println!(
        "flags       = {}",
        serde_json::to_string(&params.flags).unwrap_or_default()
    );
    println!(
        "reduced     max {:.3e} mean {:.3e}",
        s.max_reduced, s.mean_reduced
    );
    println!(
        "full        max {:.3e} mean {:.3e}",
        s.max_full, s.mean_full
    );
    println!(
        "fields written to {} and {}",
        csv_path.display(),
        json_path.display()
    );
    let mut options = curve_options(c, &gen);
    options["flags"] = json!(params.flags);
    options["xi"] = json!(params.xi);
    options["beta"] = json!(params.beta);
    finish(Suite::Schrodinger, cfg, options)
}

fn run(cli: Cli) -> Result<bool, AppError> {
    let cfg = config::resolve(&cli.common)?;
    match cli.command {
        Command::Metric { theta } => metric(theta, &cfg),
        Command::KahlerCheck { state, chart } => kahler_check(&state, chart, &cfg),
        Command::PdeCheck { alpha, state } => pde_check(alpha, &state, &cfg),
        Command::IsometryCheck { translate, state } => isometry_check(translate, &state, &cfg),
        Command::Fields { state } => fields(&state, &cfg),
        Command::Flow { curve } => flow(&curve, &cfg),
        Command::Schrodinger {
            curve,
            flags,
            xi,
            beta,
        } => schrodinger(&curve, flags, &xi, beta, &cfg),
        Command::ReportAll => finish(Suite::ReportAll, &cfg, json!({})),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kahler: {e}");
            ExitCode::from(e.code())
        }
    }
}
