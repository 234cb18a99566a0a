//! The `infspec` command line.

mod args;

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use args::{BetaArgs, BuiltinName, Cli, Command, DomainArgs, DomainOp, GeomOp, InftyOp, PlapArgs, PlapOp, Sweep, TargetArg};

use crate::domain::{load_domain, make_builtin_domain, save_domain, Builtin, Domain, DomainError};
use crate::geometry::{
    distance_to_boundary, euclidean_diameter, geodesic_diameter, inradius, ArcLabel, BoundaryPartition,
    DistanceQuery, DistanceTarget, GeometryError, TOL_GEOM_REL,
};
use crate::infty_spectrum::{
    build_minmax_path, first_eigenfunction_profile, lambda1_infty, mixed_lambda_infty, path_functional_sup, r2,
    regime_report, s_omega, viscosity_spot_check, Candidate, InftyError, SpotCheckOptions,
};
use crate::plap_fem::{
    cone_span_upper_bound, convergence_study, dlg_lower_bound, triangulate, EigenResult, FemError, SecondOptions,
    SolverOptions, Workspace,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("infty_spectrum: {0}")]
    Infty(#[from] InftyError),
    #[error("plap_fem: {0}")]
    Fem(#[from] FemError),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration, 3 for domain input, 4 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) | CliError::Csv(_) => 2,
            CliError::Domain(_) | CliError::Geometry(_) => 3,
            CliError::Infty(InftyError::InvalidBeta(_)) => 2,
            CliError::Infty(InftyError::Geometry(_)) => 3,
            CliError::Fem(FemError::InvalidBeta(_) | FemError::InvalidExponent(_)) => 2,
            CliError::Fem(FemError::Infty(InftyError::Geometry(_))) => 3,
            CliError::Infty(_) | CliError::Fem(_) => 4,
        }
    }
}

/// Rows of one CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Output(e.into_error()))
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// One line: quantity, value and error bar.
    pub summary: String,
    pub table: Table,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn load(a: &DomainArgs) -> Result<Domain, CliError> {
    Ok(load_domain(&a.domain)?)
}

fn betas(a: &BetaArgs) -> Result<Vec<f64>, CliError> {
    match (a.beta, a.beta_sweep) {
        (_, Some(s)) => Ok(s.values()),
        (Some(b), None) if b > 0.0 && b.is_finite() => Ok(vec![b]),
        (Some(b), None) => Err(CliError::Config(format!("beta must be positive, got {b}"))),
        (None, None) => Err(CliError::Config("one of --beta or --beta-sweep is required".into())),
    }
}

/// Evaluates `f` at every beta in parallel, keeping input order.
fn sweep<T: Send>(bs: &[f64], f: impl Fn(f64) -> Result<T, CliError> + Sync) -> Result<Vec<T>, CliError> {
    bs.par_iter().map(|&b| f(b)).collect()
}

fn sweep_summary(name: &str, bs: &[f64], values: &[f64], bar: f64) -> String {
    if let [v] = values {
        format!("{name} = {v:.7} ± {bar:.1e} (beta = {})", bs[0])
    } else {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!("{name}: {} points on beta in [{}, {}], range [{lo:.7}, {hi:.7}] ± {bar:.1e}", bs.len(), bs[0], bs[bs.len() - 1])
    }
}

/// Runs a parsed command and writes its table to `--out` when given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (outcome, out) = match &cli.command {
        Command::Geom { op } => geom(op)?,
        Command::Infty { op } => infty(op)?,
        Command::Plap { op } => return plap(op),
        Command::Domain { op } => return domain(op),
    };
    if let Some(path) = out {
        std::fs::write(path, outcome.table.to_csv()?)?;
    }
    Ok(outcome)
}

fn geom(op: &GeomOp) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match op {
        GeomOp::Inradius(a) => {
            let d = load(a)?;
            let ir = inradius(&d.polygon);
            let bar = TOL_GEOM_REL * euclidean_diameter(&d.polygon).length;
            let mut t = Table::new(&["r", "cx", "cy"]);
            t.rows.push(vec![num(ir.r), num(ir.center.x), num(ir.center.y)]);
            let summary = format!("inradius = {:.9} ± {bar:.1e} at ({}, {})", ir.r, ir.center.x, ir.center.y);
            Ok((Outcome { summary, table: t }, a.out.clone()))
        }
        GeomOp::Diameter(a) => {
            let d = load(a)?;
            let de = euclidean_diameter(&d.polygon);
            let dg = geodesic_diameter(&d.polygon);
            let mut t = Table::new(&["kind", "length", "ax", "ay", "bx", "by"]);
            for (k, v) in [("euclidean", de), ("geodesic", dg)] {
                t.rows.push(vec![k.into(), num(v.length), num(v.pair.0.x), num(v.pair.0.y), num(v.pair.1.x), num(v.pair.1.y)]);
            }
            let bar = TOL_GEOM_REL * de.length;
            let summary = format!("diameter = {:.9} (euclidean), {:.9} (geodesic) ± {bar:.1e}", de.length, dg.length);
            Ok((Outcome { summary, table: t }, a.out.clone()))
        }
        GeomOp::Distance { domain: a, point, target } => {
            let d = load(a)?;
            let target = match target {
                TargetArg::Full => DistanceTarget::FullBoundary,
                TargetArg::Gamma1 => DistanceTarget::Gamma1,
                TargetArg::Gamma2 => DistanceTarget::Gamma2,
            };
            let query = DistanceQuery { target, partition: d.partition.clone(), infinite_when_empty: true };
            let dist = distance_to_boundary(&d.polygon, (*point).into(), &query)?;
            let mut t = Table::new(&["x", "y", "distance", "outside"]);
            t.rows.push(vec![num(point[0]), num(point[1]), num(dist.value), dist.outside.to_string()]);
            let summary = format!("distance = {} ± 0{}", dist.value, if dist.outside { " (point outside)" } else { "" });
            Ok((Outcome { summary, table: t }, a.out.clone()))
        }
    }
}

fn infty(op: &InftyOp) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match op {
        InftyOp::Lambda1(a) => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let ir = inradius(&d.polygon);
            let vals = sweep(&bs, |b| Ok(lambda1_infty(&d.polygon, b)?))?;
            let mut t = Table::new(&["beta", "lambda1", "inradius"]);
            for (b, l) in bs.iter().zip(&vals) {
                t.rows.push(vec![num(*b), num(*l), num(ir.r)]);
            }
            let bar = TOL_GEOM_REL * euclidean_diameter(&d.polygon).length * vals.iter().fold(0.0f64, |m, l| m.max(l * l));
            Ok((Outcome { summary: sweep_summary("lambda1", &bs, &vals, bar), table: t }, a.domain.out.clone()))
        }
        InftyOp::Lambda2(a) | InftyOp::S(a) => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let res = sweep(&bs, |b| Ok(s_omega(&d.polygon, b)?))?;
            let mut t = Table::new(&["beta", "s", "lambda2", "x1x", "x1y", "x2x", "x2y", "active_constraints"]);
            for (b, r) in bs.iter().zip(&res) {
                let active: Vec<&str> = r.active.iter().map(|c| c.name()).collect();
                t.rows.push(vec![
                    num(*b),
                    num(r.s),
                    num(1.0 / r.s),
                    num(r.x1.x),
                    num(r.x1.y),
                    num(r.x2.x),
                    num(r.x2.y),
                    active.join("+"),
                ]);
            }
            let summary = if matches!(op, InftyOp::S(_)) {
                let vals: Vec<f64> = res.iter().map(|r| r.s).collect();
                let bar = res.iter().fold(0.0f64, |m, r| m.max(r.tol));
                sweep_summary("s", &bs, &vals, bar)
            } else {
                let vals: Vec<f64> = res.iter().map(|r| 1.0 / r.s).collect();
                let bar = res.iter().fold(0.0f64, |m, r| m.max(r.tol / (r.s * r.s)));
                sweep_summary("lambda2", &bs, &vals, bar)
            };
            Ok((Outcome { summary, table: t }, a.domain.out.clone()))
        }
        InftyOp::R2(a) => {
            let d = load(a)?;
            let r = r2(&d.polygon)?;
            let mut t = Table::new(&["r2", "x1x", "x1y", "x2x", "x2y"]);
            let (p, q) = r.pair;
            t.rows.push(vec![num(r.r2), num(p.x), num(p.y), num(q.x), num(q.y)]);
            let bar = TOL_GEOM_REL * euclidean_diameter(&d.polygon).length;
            let summary = format!("r2 = {:.9} ± {bar:.1e}", r.r2);
            Ok((Outcome { summary, table: t }, a.out.clone()))
        }
        InftyOp::Mixed(a) => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let partition =
                d.partition.clone().unwrap_or_else(|| BoundaryPartition::uniform(d.polygon.n_vertices(), ArcLabel::Gamma2));
            let res = sweep(&bs, |b| Ok(mixed_lambda_infty(&d.polygon, &partition, b)?))?;
            let mut t = Table::new(&["beta", "lambda", "argmin_x", "argmin_y", "far_set_nonempty", "error_bar"]);
            for (b, m) in bs.iter().zip(&res) {
                t.rows.push(vec![
                    num(*b),
                    num(m.lambda),
                    num(m.argmin.x),
                    num(m.argmin.y),
                    m.far_set_nonempty.to_string(),
                    num(m.error_bar),
                ]);
            }
            let vals: Vec<f64> = res.iter().map(|m| m.lambda).collect();
            let bar = res.iter().fold(0.0f64, |m, r| m.max(r.error_bar));
            Ok((Outcome { summary: sweep_summary("mixed lambda", &bs, &vals, bar), table: t }, a.domain.out.clone()))
        }
        InftyOp::Regime(a) => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let res = sweep(&bs, |b| Ok(regime_report(&d.polygon, b, &[])?))?;
            let mut t =
                Table::new(&["beta", "lambda1", "lambda2", "two_over_dg", "two_over_de", "inv_r2", "regime"]);
            for r in &res {
                t.rows.push(vec![
                    num(r.beta),
                    num(r.lambda1),
                    num(r.lambda2),
                    num(r.two_over_dg),
                    num(r.two_over_de),
                    num(r.inv_r2),
                    r.regime.name().into(),
                ]);
            }
            let summary = match &res[..] {
                [r] => format!("regime = {} (lambda2 = {:.7}, beta = {})", r.regime.name(), r.lambda2, r.beta),
                _ => {
                    let vals: Vec<f64> = res.iter().map(|r| r.lambda2).collect();
                    sweep_summary("lambda2 by regime", &bs, &vals, 0.0)
                }
            };
            Ok((Outcome { summary, table: t }, a.domain.out.clone()))
        }
        InftyOp::Path { beta: a, steps, resolution } => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let res = sweep(&bs, |b| {
                let mp = build_minmax_path(&d.polygon, b, *steps)?;
                let sup = path_functional_sup(&d.polygon, &mp.path, b, *resolution)?;
                Ok((mp.placement.s, sup))
            })?;
            let mut t = Table::new(&["beta", "lambda2", "sup", "analytic", "error_bar", "argmax"]);
            for (b, (s, p)) in bs.iter().zip(&res) {
                t.rows.push(vec![num(*b), num(1.0 / s), num(p.value), num(p.analytic), num(p.error_bar), p.argmax.to_string()]);
            }
            let vals: Vec<f64> = res.iter().map(|(_, p)| p.value).collect();
            let bar = res.iter().fold(0.0f64, |m, (_, p)| m.max(p.error_bar));
            Ok((Outcome { summary: sweep_summary("path sup", &bs, &vals, bar), table: t }, a.domain.out.clone()))
        }
        InftyOp::Viscosity { beta: a, samples } => {
            let d = load(&a.domain)?;
            let bs = betas(a)?;
            let opts = SpotCheckOptions {
                interior_samples: *samples,
                boundary_samples: (*samples / 5).max(1),
                seed: a.domain.seed,
                ..Default::default()
            };
            let res = sweep(&bs, |b| {
                let prof = first_eigenfunction_profile(&d.polygon, b)?;
                let rep = viscosity_spot_check(&d.polygon, &Candidate::Analytic(&prof.field), prof.lambda1, b, opts)?;
                Ok((prof.lambda1, rep))
            })?;
            let mut t = Table::new(&[
                "beta",
                "lambda1",
                "interior_samples",
                "boundary_samples",
                "skipped",
                "interior_violations",
                "boundary_violations",
            ]);
            for (b, (l, r)) in bs.iter().zip(&res) {
                let ni: usize = r.interior.iter().map(|e| e.count).sum();
                let nb: usize = r.boundary.iter().map(|e| e.count).sum();
                t.rows.push(vec![
                    num(*b),
                    num(*l),
                    ni.to_string(),
                    nb.to_string(),
                    r.skipped.to_string(),
                    r.interior_violations.len().to_string(),
                    r.boundary_violations.len().to_string(),
                ]);
            }
            let bad: usize = res.iter().map(|(_, r)| r.interior_violations.len() + r.boundary_violations.len()).sum();
            let summary = format!("viscosity spot check: {bad} violations over {} beta values ± {:.1e}", bs.len(), opts.tol);
            Ok((Outcome { summary, table: t }, a.domain.out.clone()))
        }
    }
}

const PLAP_HEADER: [&str; 12] = [
    "level",
    "p",
    "h",
    "beta",
    "lambda",
    "lambda_root",
    "target_infty",
    "gap",
    "iterations",
    "residual",
    "bound_root",
    "status",
];

fn plap_row(level: &str, r: &EigenResult, target: f64, bound: f64) -> Vec<String> {
    vec![
        level.into(),
        num(r.p),
        num(r.h),
        num(r.beta),
        num(r.lambda),
        num(r.lambda_root),
        num(target),
        num((r.lambda_root - target).abs()),
        r.iterations.to_string(),
        num(r.residual),
        num(bound),
        "ok".into(),
    ]
}

fn solver_opts(a: &PlapArgs) -> SolverOptions {
    SolverOptions { max_iters: a.max_iters, tol: a.tol, ..Default::default() }
}

fn write_table(out: &Option<PathBuf>, t: &Table) -> Result<(), CliError> {
    if let Some(path) = out {
        std::fs::write(path, t.to_csv()?)?;
    }
    Ok(())
}

fn plap(op: &PlapOp) -> Result<Outcome, CliError> {
    let a = match op {
        PlapOp::Mesh { domain: a, h } => {
            let d = load(a)?;
            let mesh = triangulate(&d.polygon, *h)?;
            let q = mesh.quality();
            if let Some(path) = &a.out {
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                mesh.write_text(&mut f)?;
                f.flush()?;
            }
            let summary = format!(
                "mesh: {} nodes, {} triangles, min angle {:.1} deg, max edge {:.4} (h = {h})",
                mesh.n_nodes(),
                mesh.triangles.len(),
                q.min_angle_deg,
                q.max_edge
            );
            return Ok(Outcome { summary, table: Table::default() });
        }
        PlapOp::First(a) | PlapOp::Second(a) | PlapOp::Study(a) => a,
    };
    let d = load(&a.domain)?;
    let mut t = Table::new(&PLAP_HEADER);
    match op {
        PlapOp::First(_) => {
            let mesh = triangulate(&d.polygon, a.h)?;
            let target = lambda1_infty(&d.polygon, a.beta)?;
            let r = Workspace::new(&mesh, a.beta)?.first(a.p, &solver_opts(a))?;
            let bound = dlg_lower_bound(d.polygon.area(), a.p, a.beta, 2);
            t.rows.push(plap_row("first", &r, target, bound));
            write_table(&a.domain.out, &t)?;
            let summary = format!("lambda1_p^(1/p) = {:.7} ± {:.1e} (p = {})", r.lambda_root, r.residual, a.p);
            Ok(Outcome { summary, table: t })
        }
        PlapOp::Second(_) => {
            let mesh = triangulate(&d.polygon, a.h)?;
            let sres = s_omega(&d.polygon, a.beta)?;
            let ws = Workspace::new(&mesh, a.beta)?;
            let first = ws.first(a.p, &solver_opts(a))?;
            let opts = SecondOptions {
                solver: solver_opts(a),
                cone_seed: Some(crate::plap_fem::cone_pair_field(&mesh, &sres)),
                first: Some(first.field.clone()),
            };
            let s = crate::plap_fem::minimize_second(&mesh, a.p, a.beta, &opts)?;
            let bound = cone_span_upper_bound(&mesh, &d.polygon, a.beta, a.p, &sres)?.powf(1.0 / a.p);
            t.rows.push(plap_row("second", &s.result, 1.0 / sres.s, bound));
            write_table(&a.domain.out, &t)?;
            let summary =
                format!("lambda2_p^(1/p) = {:.7} ± {:.1e} (p = {})", s.result.lambda_root, s.result.residual, a.p);
            Ok(Outcome { summary, table: t })
        }
        _ => {
            let ps = if a.p_list.is_empty() { vec![a.p] } else { a.p_list.clone() };
            if ps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config(format!("--p-list must be ascending, got {ps:?}")));
            }
            let rows = convergence_study(&d.polygon, a.beta, &ps, a.h)?;
            for r in &rows {
                let status = r.error.clone().unwrap_or_else(|| "ok".into());
                for (level, l, root, target, it, res, bound) in [
                    ("first", r.lambda1, r.lambda1_root, r.target1, r.iterations1, r.residual1, r.dlg_bound),
                    ("second", r.lambda2, r.lambda2_root, r.target2, r.iterations2, r.residual2, r.cone_bound_root),
                ] {
                    t.rows.push(vec![
                        level.into(),
                        num(r.p),
                        num(r.h),
                        num(r.beta),
                        num(l),
                        num(root),
                        num(target),
                        num((root - target).abs()),
                        it.to_string(),
                        num(res),
                        num(bound),
                        status.clone(),
                    ]);
                }
            }
            write_table(&a.domain.out, &t)?;
            let last = rows.last().expect("nonempty p list");
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            let summary = format!(
                "study: lambda2_p^(1/p) = {:.7} at p = {} (target {:.7}, gap {:.2e}), {failed} failed rows",
                last.lambda2_root, last.p, last.target2, last.gap2
            );
            Ok(Outcome { summary, table: t })
        }
    }
}

fn domain(op: &DomainOp) -> Result<Outcome, CliError> {
    let DomainOp::Make { name, a, b, r, d, arc_n, out } = op;
    let which = match name {
        BuiltinName::UnitSquare => Builtin::UnitSquare,
        BuiltinName::Rectangle => Builtin::Rectangle { a: *a, b: *b },
        BuiltinName::Stadium => Builtin::Stadium { r: *r, d: *d, arc_n: *arc_n },
        BuiltinName::Lshape => Builtin::LShape,
    };
    let file = make_builtin_domain(which)?;
    save_domain(out, &file)?;
    let summary = format!("domain: {} vertices written to {}", file.vertices.len(), out.display());
    Ok(Outcome { summary, table: Table::default() })
}

/// Output path of the diagnostic written when a solver fails.
fn diagnostic_path(cli: &Cli) -> PathBuf {
    let out = match &cli.command {
        Command::Geom { op: GeomOp::Inradius(a) | GeomOp::Diameter(a) | GeomOp::Distance { domain: a, .. } } => {
            a.out.clone()
        }
        Command::Infty { op } => match op {
            InftyOp::R2(a) => a.out.clone(),
            InftyOp::Lambda1(b)
            | InftyOp::Lambda2(b)
            | InftyOp::S(b)
            | InftyOp::Mixed(b)
            | InftyOp::Regime(b)
            | InftyOp::Path { beta: b, .. }
            | InftyOp::Viscosity { beta: b, .. } => b.domain.out.clone(),
        },
        Command::Plap { op: PlapOp::First(a) | PlapOp::Second(a) | PlapOp::Study(a) } => a.domain.out.clone(),
        Command::Plap { op: PlapOp::Mesh { domain: a, .. } } => a.out.clone(),
        Command::Domain { op: DomainOp::Make { out, .. } } => Some(out.clone()),
    };
    match out {
        Some(p) => {
            let mut s = p.into_os_string();
            s.push(".diagnostic.txt");
            PathBuf::from(s)
        }
        None => PathBuf::from("infspec-diagnostic.txt"),
    }
}

fn write_diagnostic(path: &Path, err: &CliError) -> std::io::Result<()> {
    std::fs::write(path, format!("{err}\n\n{err:#?}\n"))
}

/// Caps the rayon pool from `INFSPEC_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("INFSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("INFSPEC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// Parses `args`, runs, prints the summary and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match <Cli as clap::Parser>::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            0
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            if code == 4 {
                let path = diagnostic_path(&cli);
                match write_diagnostic(&path, &e) {
                    Ok(()) => eprintln!("diagnostic written to {}", path.display()),
                    Err(w) => eprintln!("could not write diagnostic {}: {w}", path.display()),
                }
            }
            code
        }
    }
}
