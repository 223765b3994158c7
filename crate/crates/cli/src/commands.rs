use std::path::Path;

use clap::Args;
use focktrace::fredholm::{
    discretized_determinant, discretized_permanent_limit, fredholm_determinant, fredholm_permanent, nystrom_solve,
    solve_minus, solve_plus, EquationSign, KernelSpec, RealFn, DEFAULT_DET_ORDER, DEFAULT_PERM_ORDER,
};
use focktrace::genfun::{graded_residue_trace, residue_trace};
use focktrace::quadrature::gauss_legendre;
use focktrace::rng::{complex_matrix, SeedTree};
use focktrace::suite::{identity_suite, SuiteTolerances};
use focktrace::trace::graded_trace;
use focktrace::vertex::{
    barnes_product, default_box, eta_trace_ratio, regularized_truncated_trace, vertex_trace_ratio, EtaSpec,
    TruncatedBoson, VertexSpec,
};
use focktrace::{Statistics, C64};
use serde_json::json;
use thiserror::Error;

use crate::report::{digest, Report, Row};
use crate::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] focktrace::Error),
    #[error("cannot read spec {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

type CmdResult = Result<Report, CliError>;

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    /// `fermionic`, `bosonic`, or a substring of identity names.
    #[arg(long)]
    filter: Option<String>,
    /// Largest dimension N.
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    /// Largest insertion grade.
    #[arg(long, default_value_t = 2)]
    grade_max: usize,
}

pub fn identities(config: &RunConfig, args: &IdentitiesArgs) -> CmdResult {
    let (statistics, name_filter): (Vec<Statistics>, Option<&str>) = match args.filter.as_deref() {
        None => (Statistics::ALL.to_vec(), None),
        Some(f) => match f.parse::<Statistics>() {
            Ok(s) => (vec![s], None),
            Err(_) => (Statistics::ALL.to_vec(), Some(f)),
        },
    };
    let tol = SuiteTolerances {
        override_all: config.tol,
        ..SuiteTolerances::default()
    };
    let n_list: Vec<usize> = (1..=args.n_max).collect();
    let grades: Vec<usize> = (0..=args.grade_max).collect();
    let rows = identity_suite(config.seed, &n_list, &grades, &statistics, &tol)?
        .into_iter()
        .filter(|r| name_filter.map_or(true, |f| r.identity.contains(f)))
        .map(|r| {
            let check = format!("{}/{}/N{}/grade{}", r.identity, r.statistics, r.n, r.grade);
            Row {
                inputs_digest: digest(&[&config.seed.to_string(), &check]),
                check,
                value: r.value,
                reference: r.reference,
                rel_err: r.rel_err,
                pass: r.pass,
            }
        })
        .collect();
    Ok(Report::new(config.seed, rows))
}

#[derive(Debug, Args)]
pub struct FredholmArgs {
    /// Kernel such as `product:c=1`, `gaussian:amp=1,alpha=1`, `cosine:amp=0.5,freq=2`, `zero`.
    #[arg(long, default_value = "product:c=1")]
    kernel: String,
    /// Right-hand side: `one`, `x`, `x^k`, `exp`, `sin`, `cos` or a constant.
    #[arg(long, default_value = "x")]
    f: String,
    /// Gauss-Legendre nodes.
    #[arg(long, default_value_t = 32)]
    quad: usize,
    /// Series order; defaults depend on the sign.
    #[arg(long)]
    nmax: Option<usize>,
    /// `plus` solves φ + ∫Kφ = f, `minus` solves φ − ∫Kφ = f.
    #[arg(long, default_value = "plus")]
    sign: String,
    /// Add the series-versus-dense comparison row.
    #[arg(long)]
    compare: bool,
}

pub fn fredholm(config: &RunConfig, args: &FredholmArgs) -> CmdResult {
    let tol = config.tol.unwrap_or(1e-8);
    let kernel: KernelSpec = args.kernel.parse()?;
    let f: RealFn = args.f.parse()?;
    let sign: EquationSign = args.sign.parse()?;
    let rule = gauss_legendre(args.quad, kernel.a, kernel.b)?;
    let nmax = args.nmax.unwrap_or(match sign {
        EquationSign::Plus => DEFAULT_DET_ORDER,
        EquationSign::Minus => DEFAULT_PERM_ORDER,
    });
    let inputs = digest(&[
        &args.kernel,
        &f.to_string(),
        &args.quad.to_string(),
        &nmax.to_string(),
        &args.sign,
    ]);

    let mut rows = Vec::new();
    let (series, dense) = match sign {
        EquationSign::Plus => (
            solve_plus(&kernel, f, &rule, nmax)?,
            nystrom_solve(&kernel, f, &rule, EquationSign::Plus)?,
        ),
        EquationSign::Minus => (
            solve_minus(&kernel, f, &rule, nmax)?,
            nystrom_solve(&kernel, f, &rule, EquationSign::Minus)?,
        ),
    };
    let (name, value, reference) = match sign {
        EquationSign::Plus => (
            "determinant",
            fredholm_determinant(&kernel, &rule, nmax)?.value,
            discretized_determinant(&kernel, &rule)?,
        ),
        EquationSign::Minus => (
            "permanent",
            fredholm_permanent(&kernel, &rule, nmax)?.value,
            discretized_permanent_limit(&kernel, &rule)?,
        ),
    };
    rows.push(Row::compare(name, inputs.clone(), value, reference, tol));
    let residual = C64::new(series.residual, 0.0);
    rows.push(Row::compare(
        "residual",
        inputs.clone(),
        residual,
        C64::new(0.0, 0.0),
        tol,
    ));
    let width = rule.len().to_string().len();
    for (i, ((&x, &phi), &reference)) in series.nodes.iter().zip(&series.values).zip(&dense.values).enumerate() {
        rows.push(Row::compare(
            format!("phi[{i:0width$}] x={x:.6}"),
            inputs.clone(),
            C64::new(phi, 0.0),
            C64::new(reference, 0.0),
            tol,
        ));
    }
    if args.compare {
        let diff = series.max_node_difference(&dense);
        rows.push(Row::compare(
            "series_vs_dense",
            inputs.clone(),
            C64::new(diff, 0.0),
            C64::new(0.0, 0.0),
            tol,
        ));
    }
    Ok(Report::new(config.seed, rows))
}

#[derive(Debug, Args)]
pub struct VertexArgs {
    /// JSON spec, inline or a file path. Complex numbers are `[re, im]`.
    #[arg(long)]
    spec: String,
    /// Number of m-shells in the direct product.
    #[arg(long, default_value_t = 1000)]
    cutoff_m: usize,
    /// Box size for the extrapolated product (and k-range for eta specs).
    #[arg(long, default_value_t = 256)]
    cutoff_k: usize,
    /// Cross-check against the damped truncated Fock-space trace.
    #[arg(long)]
    validate: bool,
    #[arg(long, default_value_t = 0.995)]
    t: f64,
    #[arg(long, default_value_t = 24)]
    modes: usize,
    #[arg(long, default_value_t = 24)]
    degree: usize,
}

fn load_spec(spec: &str) -> Result<serde_json::Value, CliError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(Path::new(spec)).map_err(|source| CliError::Io {
            path: spec.to_string(),
            source,
        })?
    };
    Ok(serde_json::from_str(&text)?)
}

pub fn vertex(config: &RunConfig, args: &VertexArgs) -> CmdResult {
    let value = load_spec(&args.spec)?;
    let canonical = value.to_string();
    let inputs = digest(&[&canonical, &args.cutoff_m.to_string(), &args.cutoff_k.to_string()]);
    let tol = config.tol.unwrap_or(1e-6);
    let mut rows = Vec::new();
    let details = if value.get("hbar").is_some() {
        let spec: EtaSpec = serde_json::from_value(value)?;
        spec.validate()?;
        let direct = eta_trace_ratio(&spec, args.cutoff_m, args.cutoff_k)?;
        let barnes = barnes_product(&spec.to_barnes()?, default_box(2))?;
        let allowed = 2.0 * direct.tail_estimate + tol * barnes.value.norm().max(1.0);
        let pass = (direct.value - barnes.value).norm() <= allowed;
        rows.push(Row::compare("eta_trace_ratio", inputs.clone(), direct.value, barnes.value, tol).with_pass(pass));
        json!({
            "value": direct.value,
            "tail_estimate": direct.tail_estimate,
            "shells_used": direct.shells_used,
        })
    } else {
        let spec: VertexSpec = serde_json::from_value(value)?;
        spec.validate()?;
        let product = vertex_trace_ratio(&spec, args.cutoff_m)?;
        // extrapolated box product when it is in its asymptotic range,
        // otherwise the direct product at twice the cutoff
        let barnes = spec
            .to_barnes(1)
            .and_then(|b| barnes_product(&b, args.cutoff_k))
            .map(|p| p.value);
        let reference = match barnes {
            Ok(value) => value,
            Err(_) => vertex_trace_ratio(&spec, 2 * args.cutoff_m)?.value,
        };
        let allowed = product.tail_estimate + tol * reference.norm().max(1.0);
        let pass = (product.value - reference).norm() <= allowed;
        rows.push(Row::compare("vertex_trace_ratio", inputs.clone(), product.value, reference, tol).with_pass(pass));
        if args.validate {
            let trunc = TruncatedBoson::new(args.modes, args.degree, args.t)?;
            let check = format!(
                "regularized_truncated_trace modes={} degree={} t={}",
                args.modes, args.degree, args.t
            );
            let row = match regularized_truncated_trace(&spec, &trunc) {
                Ok(reg) => Row::compare(
                    check,
                    inputs.clone(),
                    reg.value,
                    product.value,
                    config.tol.unwrap_or(1e-3),
                ),
                Err(e) => {
                    eprintln!("validation failed: {e}");
                    Row::compare(check, inputs.clone(), C64::new(f64::NAN, f64::NAN), product.value, 0.0)
                        .with_pass(false)
                }
            };
            rows.push(row);
        }
        json!({
            "value": product.value,
            "tail_estimate": product.tail_estimate,
            "shells_used": product.shells_used,
        })
    };
    let mut report = Report::new(config.seed, rows);
    report.details = Some(details);
    Ok(report)
}

#[derive(Debug, Args)]
pub struct GenfunArgs {
    /// Random operators per dimension.
    #[arg(long, default_value_t = 5)]
    count: usize,
}

pub fn genfun(config: &RunConfig, args: &GenfunArgs) -> CmdResult {
    let tol = config.tol.unwrap_or(1e-12);
    let tree = SeedTree::new(config.seed).child("genfun");
    let mut rows = Vec::new();
    for n in 1..=5 {
        let mut rng = tree.stream(&format!("N{n}"));
        for i in 0..args.count {
            let a = complex_matrix(&mut rng, n, 1.0);
            let check = format!("residue_trace/N{n}/{i}");
            rows.push(Row::compare(
                check.clone(),
                digest(&[&config.seed.to_string(), &check]),
                residue_trace(&a),
                a.trace(),
                tol,
            ));
            if n <= 3 {
                for s in Statistics::ALL {
                    for grade in 1..=2 {
                        let check = format!("graded_residue_trace/{s}/N{n}/grade{grade}/{i}");
                        rows.push(Row::compare(
                            check.clone(),
                            digest(&[&config.seed.to_string(), &check]),
                            graded_residue_trace(&a, grade, s)?,
                            graded_trace(&a, grade, s),
                            tol,
                        ));
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage("nothing to check: --count must be positive".into()));
    }
    Ok(Report::new(config.seed, rows))
}
