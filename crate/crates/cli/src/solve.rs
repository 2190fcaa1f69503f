use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context as _, Result};
use clap::Args;
use exmex::{Express, FlatEx};
use gridfn::experiments::format_number;
use gridfn::grid::{GridDomain, GridFunction, GridLevel};
use gridfn::pde::{assemble, solve_detailed, Boundary, OperatorSpec, SolveOptions};
use serde::Serialize;

use crate::{MethodArg, EXIT_FAIL, EXIT_USAGE};

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Source term f in `x` (and `y` in 2D); `pi` and `PI` name π.
    #[arg(long)]
    rhs: String,
    /// Known solution, used to report the maximum error.
    #[arg(long)]
    exact: Option<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    dim: u32,
    /// Cells per axis.
    #[arg(long, default_value_t = 64)]
    n: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// CSV file receiving the grid solution.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

/// Parsed expression in `x`, `y` and the constant `pi`.
struct Formula {
    expr: FlatEx<f64>,
    slots: Vec<Slot>,
}

#[derive(Clone, Copy)]
enum Slot {
    X,
    Y,
    Pi,
}

impl Formula {
    fn parse(field: &str, text: &str, dim: usize) -> Result<Self, String> {
        let expr = exmex::parse::<f64>(text).map_err(|e| format!("{field}: cannot parse `{text}`: {e}"))?;
        let slots = expr
            .var_names()
            .iter()
            .map(|name| match name.as_str() {
                "x" => Ok(Slot::X),
                "y" if dim == 2 => Ok(Slot::Y),
                "pi" => Ok(Slot::Pi),
                other => Err(format!("{field}: unknown variable `{other}` in `{text}`")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Formula { expr, slots })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let args: Vec<f64> = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::X => x[0],
                Slot::Y => x[1],
                Slot::Pi => std::f64::consts::PI,
            })
            .collect();
        self.expr.eval(&args).unwrap_or(f64::NAN)
    }
}

#[derive(Serialize)]
struct SolveSummary {
    n: u64,
    dim: u32,
    points: usize,
    method: String,
    iterations: usize,
    relative_residual: f64,
    max_error: Option<f64>,
}

pub fn run(args: &SolveArgs) -> ExitCode {
    let dim = args.dim as usize;
    let parsed = Formula::parse("rhs", &args.rhs, dim)
        .and_then(|rhs| Ok((rhs, args.exact.as_deref().map(|e| Formula::parse("exact", e, dim)).transpose()?)));
    let (rhs, exact) = match parsed {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if args.n < 2 || !(args.tol > 0.0 && args.tol < 1.0) {
        eprintln!("error: need n >= 2 and 0 < tol < 1");
        return ExitCode::from(EXIT_USAGE);
    }
    match solve_box(args, &rhs, exact.as_ref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn solve_box(args: &SolveArgs, rhs: &Formula, exact: Option<&Formula>) -> Result<()> {
    let dim = args.dim as usize;
    let level = GridLevel::new(args.n, 1.0)?;
    let n = args.n as i64;
    let domain = Arc::new(GridDomain::lattice_box(level, &vec![0; dim], &vec![n; dim])?);
    let system = assemble(&OperatorSpec::negative_laplacian(dim)?, Arc::clone(&domain), Boundary::Dirichlet)?;
    let f = GridFunction::sample(Arc::clone(&domain), |x| rhs.eval(x)).context("sampling the source term")?;
    let options = SolveOptions { method: args.method.into(), tol: args.tol, max_iterations: None };
    let solution = solve_detailed(&system, &f, options)?;
    let u = solution.value.values();
    let exact_values: Option<Vec<f64>> =
        exact.map(|g| (0..domain.len()).map(|i| g.eval(&domain.coords(i)[..dim])).collect());
    let max_error = exact_values.as_ref().map(|e| e.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

    if let Some(path) = &args.out {
        let mut csv = String::from(if dim == 1 { "x" } else { "x,y" });
        csv.push_str(if exact_values.is_some() { ",u,exact\n" } else { ",u\n" });
        for i in 0..domain.len() {
            let x = domain.coords(i);
            for c in &x[..dim] {
                csv.push_str(&format_number(*c));
                csv.push(',');
            }
            csv.push_str(&format_number(u[i]));
            if let Some(e) = &exact_values {
                csv.push(',');
                csv.push_str(&format_number(e[i]));
            }
            csv.push('\n');
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }

    let summary = SolveSummary {
        n: args.n,
        dim: args.dim,
        points: domain.len(),
        method: format!("{:?}", solution.method).to_lowercase(),
        iterations: solution.iterations,
        relative_residual: solution.relative_residual,
        max_error,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!(
            "solved N = {} ({} points) with {} in {} iteration(s), relative residual {:e}",
            summary.n, summary.points, summary.method, summary.iterations, summary.relative_residual
        );
        if let Some(e) = max_error {
            println!("max error {e:e}");
        }
    }
    Ok(())
}
