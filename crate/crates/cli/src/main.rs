use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use cylpack::bounds::{BoundReport, Sampling};
use cylpack::cap_packing::{cap_example_report, Metric};
use cylpack::falconer::{self, DensityMode, DiskFamily};
use cylpack::generate;
use cylpack::instance::{evaluate, CylinderInstance, DiskInstance, Evaluation, Instance, Mode, SCHEMA_VERSION};
use cylpack::sampling::rng_for;
use cylpack::{ConvexBody, Cylinder};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "cylpack", version, about = "Cylinder packings and coverings of convex bodies")]
struct Cli {
    /// Monte Carlo samples for multiplicity checks.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance of exact comparisons (default 1e-9).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the packing or covering condition and every applicable bound.
    Verify { file: PathBuf },
    /// Generate an instance file.
    Construct(ConstructArgs),
    /// Summary table of every applicable bound over several instances.
    Bounds {
        files: Vec<PathBuf>,
        /// Only report this theorem id.
        #[arg(long)]
        theorem: Option<String>,
    },
    /// Separability, circumcircle, masses and the plank bounds of a disk family.
    Falconer {
        file: PathBuf,
        /// Also write an SVG drawing here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BodyKind {
    Ball,
    Ellipsoid,
    Polytope,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("kind").required(true).args(["cap", "plank_partition", "ns_family", "random_packing", "random_covering"])))]
struct ConstructArgs {
    /// Cap cylinders over a maximal separated set on the sphere.
    #[arg(long)]
    cap: bool,
    /// `n` parallel planks partitioning the unit ball, repeated `r` times.
    #[arg(long)]
    plank_partition: bool,
    /// A non-separable disk family with a random r-fold plank packing.
    #[arg(long)]
    ns_family: bool,
    /// Layered random r-fold packing.
    #[arg(long)]
    random_packing: bool,
    /// Random redundant r-fold covering.
    #[arg(long)]
    random_covering: bool,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    /// Count: planks, disks, cylinders per layer or cells per axis.
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, value_enum, default_value_t = BodyKind::Ball)]
    body: BodyKind,
}

/// Error with the name printed in the JSON error object.
struct Failure {
    kind: String,
    message: String,
}

impl From<cylpack::Error> for Failure {
    fn from(e: cylpack::Error) -> Self {
        Failure {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<cylpack::Error>() {
            Some(c) => Failure {
                kind: c.kind().into(),
                message: format!("{e:#}"),
            },
            None => Failure {
                kind: "Io".into(),
                message: format!("{e:#}"),
            },
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        kind: "Usage".into(),
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(usage(e.to_string().trim_end())),
    };
    if let Err(f) = init_threads() {
        return fail(f);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    println!("{}", json!({ "error": f.kind, "message": f.message }));
    ExitCode::from(2)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CYLPACK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("CYLPACK_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

/// `Ok(true)` when every check passes.
fn run(cli: &Cli) -> Result<bool, Failure> {
    if cli.samples < cylpack::multiplicity::MIN_SAMPLES {
        return Err(usage(format!("--samples must be at least {}", cylpack::multiplicity::MIN_SAMPLES)));
    }
    if let Some(t) = cli.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(usage(format!("--tol must be a nonnegative number, got {t}")));
        }
    }
    let sampling = Sampling {
        samples: cli.samples,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Verify { file } => {
            let inst = read_instance(file)?;
            let ev = retolerate(evaluate(&inst, sampling, None)?, cli.tol);
            let pass = ev.pass;
            match cli.format {
                Format::Json => {
                    let out = json!({
                        "schema_version": SCHEMA_VERSION,
                        "command": "verify",
                        "file": file.display().to_string(),
                        "samples": cli.samples,
                        "seed": cli.seed,
                        "evaluation": ev,
                    });
                    emit(cli, &pretty(&out))?;
                }
                Format::Csv => emit(cli, &csv_table(&[(file.as_path(), &ev)])?)?,
            }
            Ok(pass)
        }
        Command::Construct(args) => {
            let inst = construct(args, cli.seed)?;
            emit(cli, &inst.to_json())?;
            Ok(true)
        }
        Command::Bounds { files, theorem } => {
            if files.is_empty() {
                return Err(usage("bounds needs at least one instance file"));
            }
            let instances = files.iter().map(|f| read_instance(f)).collect::<Result<Vec<_>, _>>()?;
            let evals = par_map(&instances, |inst| evaluate(inst, sampling, theorem.as_deref()))
                .into_iter()
                .map(|e| e.map(|e| retolerate(e, cli.tol)))
                .collect::<Result<Vec<_>, _>>()?;
            let pass = evals.iter().all(|e| e.pass);
            let pairs: Vec<_> = files.iter().map(PathBuf::as_path).zip(evals.iter()).collect();
            match cli.format {
                Format::Json => {
                    let rows: Vec<_> = pairs
                        .iter()
                        .map(|(f, e)| json!({ "file": f.display().to_string(), "evaluation": e }))
                        .collect();
                    let out = json!({
                        "schema_version": SCHEMA_VERSION,
                        "command": "bounds",
                        "samples": cli.samples,
                        "seed": cli.seed,
                        "theorem": theorem,
                        "pass": pass,
                        "instances": rows,
                    });
                    emit(cli, &pretty(&out))?;
                }
                Format::Csv => emit(cli, &csv_table(&pairs)?)?,
            }
            Ok(pass)
        }
        Command::Falconer { file, svg } => falconer_cmd(cli, file, svg.as_deref(), sampling),
    }
}

/// Evaluations in parallel, results in input order.
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

fn retolerate(mut ev: Evaluation, tol: Option<f64>) -> Evaluation {
    if let Some(t) = tol {
        ev.reports = ev.reports.into_iter().map(|r| r.retolerate(t)).collect();
        ev.pass = ev.precondition.pass && ev.reports.iter().all(|r| r.pass);
    }
    ev
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).map_err(|e| Failure {
        kind: "Parse".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout")?,
    }
    Ok(())
}

fn csv_table(rows: &[(&Path, &Evaluation)]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["file", "theorem_id", "lhs", "rhs", "direction", "slack", "tolerance", "pass", "probabilistic", "instance_digest"];
    let io = |e: csv::Error| Failure {
        kind: "Io".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(io)?;
    for (file, ev) in rows {
        let f = file.display().to_string();
        if !ev.precondition.pass {
            let id = format!("precondition_{}", ev.precondition.kind);
            w.write_record([f.as_str(), &id, "", "", "", "", "", "false", "true", &ev.instance_digest])
                .map_err(io)?;
        }
        for r in &ev.reports {
            w.write_record(report_record(&f, r)).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure {
        kind: "Io".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn report_record(file: &str, r: &BoundReport) -> [String; 10] {
    [
        file.to_string(),
        r.theorem_id.clone(),
        r.lhs.to_string(),
        r.rhs.to_string(),
        r.direction.symbol().to_string(),
        r.slack.to_string(),
        r.tolerance.to_string(),
        r.pass.to_string(),
        r.probabilistic.to_string(),
        r.instance_digest.clone(),
    ]
}

fn make_body(kind: BodyKind, d: usize, seed: u64) -> Result<ConvexBody, Failure> {
    let mut rng = rng_for(seed, 1);
    Ok(match kind {
        BodyKind::Ball => ConvexBody::unit_ball(d),
        BodyKind::Ellipsoid => ConvexBody::Ellipsoid(generate::random_ellipsoid(d, &mut rng)?),
        BodyKind::Polytope if d == 2 => ConvexBody::Polytope(generate::random_polygon(8, &mut rng)?),
        BodyKind::Polytope => ConvexBody::Polytope(generate::random_polytope(d, 4 * d, &mut rng)?),
    })
}

fn construct(a: &ConstructArgs, seed: u64) -> Result<Instance, Failure> {
    if a.dim < 2 {
        return Err(cylpack::Error::Domain(format!("--dim must be at least 2, got {}", a.dim)).into());
    }
    if a.r == 0 || a.n == 0 {
        return Err(cylpack::Error::Domain("--r and --n must be positive".into()).into());
    }
    let cylinders = |body: ConvexBody, mode, r, cylinders: Vec<Cylinder>, construction| {
        Instance::CylinderFamily(CylinderInstance {
            body,
            r,
            mode,
            cylinders,
            seed: Some(seed),
            construction: Some(construction),
        })
    };
    if a.cap {
        let (set, family, report) = cap_example_report(a.dim, a.k, a.delta, Metric::Projective, seed)?;
        let info = json!({
            "generator": "cap",
            "separation": set.separation,
            "metric": set.metric,
            "maximal": set.maximal,
            "saturation_passes": set.saturation_passes,
            "proposals": set.proposals,
            "report": report,
        });
        return Ok(cylinders(ConvexBody::unit_ball(a.dim), Mode::Packing, 1, family.cylinders, info));
    }
    if a.plank_partition {
        let body = ConvexBody::unit_ball(a.dim);
        let mut u = DVector::zeros(a.dim);
        u[0] = 1.0;
        let strips = generate::plank_partition(&body, &u, a.n)?;
        let info = json!({ "generator": "plank_partition", "planks": a.n, "copies": a.r });
        return Ok(cylinders(body, Mode::Packing, a.r, generate::repeat(&strips, a.r), info));
    }
    if a.ns_family {
        let mut rng = rng_for(seed, 2);
        let family = falconer::random_ns_family(a.n, &mut rng);
        let planks = falconer::random_plank_packing(&family, a.r, 3, &mut rng);
        let info = json!({
            "generator": "ns_family",
            "separable": false,
            "ns_diameter": family.ns_diameter(),
        });
        return Ok(Instance::DiskFamily(DiskInstance {
            disks: family.disks,
            planks,
            r: a.r,
            seed: Some(seed),
            construction: Some(info),
        }));
    }
    let body = make_body(a.body, a.dim, seed)?;
    let mut rng = rng_for(seed, 3);
    if a.random_packing {
        let fam = generate::random_packing(&body, a.k, a.r, a.n, &mut rng)?;
        let info = json!({ "generator": "random_packing", "per_layer": a.n });
        return Ok(cylinders(body, Mode::Packing, a.r, fam, info));
    }
    let fam = generate::random_covering(&body, a.k, a.r, a.n, a.n, &mut rng)?;
    let info = json!({ "generator": "random_covering", "cells": a.n, "extra": a.n });
    Ok(cylinders(body, Mode::Covering, a.r, fam, info))
}

fn falconer_cmd(cli: &Cli, file: &Path, svg: Option<&Path>, s: Sampling) -> Result<bool, Failure> {
    let inst = read_instance(file)?;
    let Instance::DiskFamily(d) = &inst else {
        return Err(usage("falconer needs a disk_family instance"));
    };
    let family = DiskFamily::new(d.disks.clone())?;
    let separation = family.is_separable();
    let circle = family.circumradius();
    let ev = retolerate(evaluate(&inst, s, None)?, cli.tol);
    if let Some(p) = svg {
        let line = separation.line.as_ref();
        fs::write(p, falconer::to_svg(&family, &d.planks, line)).with_context(|| format!("writing {}", p.display()))?;
    }
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "falconer",
        "file": file.display().to_string(),
        "samples": s.samples,
        "seed": s.seed,
        "separation": separation,
        "ns_diameter": family.ns_diameter(),
        "circumcircle": circle,
        "mass_normalized": family.total_mass(DensityMode::Normalized),
        "mass_printed": family.total_mass(DensityMode::Printed),
        "evaluation": ev,
    });
    match cli.format {
        Format::Json => emit(cli, &pretty(&out))?,
        Format::Csv => emit(cli, &csv_table(&[(file, &ev)])?)?,
    }
    Ok(ev.pass)
}
