//! Command line for validating algebroid structures and exploring the
//! chain hierarchy: identity suites with seeded sampling, pointwise
//! hierarchy tables, and Hamiltonian flows with conservation summaries.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pncalc::error::{Error, Result};
use pncalc::flows::{self, FlowField};
use pncalc::hierarchy;
use pncalc::poisson;
use pncalc::scalar::ScalarField;
use pncalc::suite::{LadderFlow, System};

#[derive(Parser)]
#[command(
    name = "pncalc",
    version,
    about = "Poisson-Nijenhuis calculus on Lie algebroids: validate structures, \
             tabulate hierarchies, integrate flows"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity suite for a built-in example or a JSON config
    Validate {
        /// Built-in name (toda-physical[-n], toda-extended[-n],
        /// toda-flaschka[-n], toda-algebroid[-n]) or a JSON config path
        target: String,
        /// Sample points per check
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Seed for the sample points
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Emit the JSON report instead of the text table
        #[arg(long)]
        json: bool,
    },
    /// Print hierarchy Hamiltonians and fields at a point
    Hierarchy {
        /// Built-in example name, or a config with both pi and N
        example: String,
        /// Index range lo..hi, both ends included
        #[arg(long, default_value = "-1..3", allow_hyphen_values = true)]
        range: String,
        /// Evaluation point, comma separated
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        /// Emit JSON instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Integrate a Hamiltonian flow and report conservation drift
    Flow {
        /// Built-in example name, or a config with a bivector
        example: String,
        /// Ladder Hamiltonian (h1, h2, ...) for built-ins; for configs, a
        /// coordinate expression
        #[arg(long)]
        hamiltonian: String,
        /// Bracket index k: the flow runs along (N^k pi0)# dh
        #[arg(long, default_value_t = 0)]
        bracket: i64,
        /// Initial point, comma separated; defaults to the box midpoint
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Integration time
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        /// Step size
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// CSV destination; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every n-th sample in the CSV (the last is always kept)
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
}

/// Prints to stdout, treating a closed pipe as a normal end of output.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn pipe_tolerant(res: Result<()>) -> Result<()> {
    match res {
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn run_validate(
    target: &str,
    points: usize,
    seed: u64,
    tol: f64,
    json: bool,
) -> Result<ExitCode> {
    let report = System::load(target)?.standard_report(points, tol, seed)?;
    if json {
        emit(&format!("{}\n", report.to_json()))?;
    } else {
        emit(&report.render_text())?;
    }
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{t}` in the point is not a number")))
        })
        .collect()
}

fn parse_range(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Config(format!("range `{s}` is not of the form lo..hi"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = a.trim().parse().map_err(|_| bad())?;
    let hi: i64 = b.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn run_hierarchy(example: &str, range: &str, at: &str, json: bool) -> Result<ExitCode> {
    let sys = System::load(example)?;
    let (pi, n) = sys.recursion_data()?;
    let a = sys.algebroid();
    let (lo, hi) = parse_range(range)?;
    let point = parse_point(at)?;
    if point.len() != a.dim() {
        return Err(Error::PointDimension {
            got: point.len(),
            expected: a.dim(),
        });
    }
    let hams = hierarchy::hamiltonians(n, lo, hi);
    let mut ham_rows = Vec::new();
    for (i, h) in &hams {
        ham_rows.push((*i, h.value(&point)?));
    }
    let mut field_rows = Vec::new();
    for m in lo..=hi {
        let x = hierarchy::hierarchy_field(a, pi, n, m)?;
        let fiber: Vec<f64> = x
            .vector_components()?
            .iter()
            .map(|f| f.value(&point))
            .collect::<Result<_>>()?;
        let base: Vec<f64> = hierarchy::covered_hierarchy_field(a, pi, n, m)?
            .iter()
            .map(|f| f.value(&point))
            .collect::<Result<_>>()?;
        field_rows.push((m, fiber, base));
    }
    if json {
        let doc = serde_json::json!({
            "schema": 1,
            "system": a.name(),
            "at": point,
            "hamiltonians": ham_rows
                .iter()
                .map(|(i, v)| serde_json::json!({"index": i, "value": v}))
                .collect::<Vec<_>>(),
            "fields": field_rows
                .iter()
                .map(|(m, fiber, base)| serde_json::json!({
                    "index": m, "fiber": fiber, "base": base,
                }))
                .collect::<Vec<_>>(),
        });
        emit(&format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializes")
        ))?;
    } else {
        use std::fmt::Write;
        let mut text = String::new();
        writeln!(text, "system: {}", a.name()).expect("writes");
        writeln!(text, "at: {point:?}").expect("writes");
        for (i, v) in &ham_rows {
            writeln!(text, "h_{i} = {v}").expect("writes");
        }
        for (m, fiber, base) in &field_rows {
            writeln!(text, "X^({m}) fiber: {fiber:?}").expect("writes");
            writeln!(text, "X^({m}) base:  {base:?}").expect("writes");
        }
        emit(&text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn ladder_index(h: &str) -> Option<i64> {
    h.strip_prefix('h')?.parse().ok()
}

/// Built-ins integrate a ladder Hamiltonian; configs parse `--hamiltonian`
/// as a coordinate expression over their own bracket.
fn flow_setup(sys: &System, h_arg: &str, bracket: i64) -> Result<LadderFlow> {
    let System::Custom(custom) = sys else {
        let idx = ladder_index(h_arg).ok_or_else(|| {
            Error::Config(format!("`{h_arg}` is not a ladder Hamiltonian h<i>"))
        })?;
        return sys.ladder_flow(idx, bracket);
    };
    let pi = custom
        .pi
        .as_ref()
        .ok_or_else(|| Error::Config("flow needs a bivector (`pi`) in the config".into()))?;
    let pi_k = if bracket == 0 {
        pi.clone()
    } else {
        let n = custom.n.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "bracket {bracket} needs an endomorphism (`N`) in the config"
            ))
        })?;
        poisson::deformed_bivector(pi, n, bracket)?
    };
    let coords: Vec<String> = custom.algebroid.coords().to_vec();
    let expr = pncalc::exprlang::parse(h_arg, &coords)
        .map_err(|e| Error::Config(format!("hamiltonian `{h_arg}`: {e}")))?;
    let h = ScalarField::from_expr(expr);
    Ok(LadderFlow {
        field: FlowField::hamiltonian(&custom.algebroid, &pi_k, &h)?,
        conserved: vec![(h_arg.to_string(), h)],
        coords,
        start: custom
            .algebroid
            .domain()
            .iter()
            .map(|&(lo, hi)| 0.5 * (lo + hi))
            .collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_flow(
    example: &str,
    hamiltonian: &str,
    bracket: i64,
    x0: Option<&str>,
    t: f64,
    dt: f64,
    out: Option<&Path>,
    stride: usize,
) -> Result<ExitCode> {
    let sys = System::load(example)?;
    let setup = flow_setup(&sys, hamiltonian, bracket)?;
    let start = match x0 {
        Some(s) => {
            let p = parse_point(s)?;
            if p.len() != setup.coords.len() {
                return Err(Error::PointDimension {
                    got: p.len(),
                    expected: setup.coords.len(),
                });
            }
            p
        }
        None => setup.start.clone(),
    };
    let traj = flows::integrate(&setup.field, &start, t, dt)?;
    let drift = flows::conservation_report(&traj, &setup.conserved)?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            flows::write_csv(std::io::BufWriter::new(file), &traj, &setup.coords, stride)?;
            println!(
                "wrote {} samples to {} (integrated to t = {t}, dt = {dt})",
                traj.times.len(),
                path.display()
            );
            println!("conserved quantities:");
            for d in &drift {
                println!(
                    "  {}: initial {:.12}, max relative drift {:.3e}",
                    d.name, d.initial, d.max_drift
                );
            }
        }
        None => {
            let stdout = std::io::stdout();
            pipe_tolerant(flows::write_csv(stdout.lock(), &traj, &setup.coords, stride))?;
            eprintln!("conserved quantities:");
            for d in &drift {
                eprintln!(
                    "  {}: initial {:.12}, max relative drift {:.3e}",
                    d.name, d.initial, d.max_drift
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Validate {
            target,
            points,
            seed,
            tolerance,
            json,
        } => run_validate(&target, points, seed, tolerance, json),
        Cmd::Hierarchy {
            example,
            range,
            at,
            json,
        } => run_hierarchy(&example, &range, &at, json),
        Cmd::Flow {
            example,
            hamiltonian,
            bracket,
            x0,
            t,
            dt,
            out,
            stride,
        } => run_flow(
            &example,
            &hamiltonian,
            bracket,
            x0.as_deref(),
            t,
            dt,
            out.as_deref(),
            stride,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
