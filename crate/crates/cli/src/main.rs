//! `ldplab`: batch front end for asymptotic entropies, conjugate rates,
//! exposed points and LDP verification.
//!
//! Exit codes: 0 ok / certified, 1 bound violation or not certified,
//! 2 usage or input error, 3 numeric failure.

mod config;
mod plot;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use ldplab_core::conjugate::{check_richness, conjugate_rate, default_richness_radii, detect_exposed};
use ldplab_core::entropy::{check_representation, Shape};
use ldplab_core::extgrid::{read_curve_csv, ExtendedValue, Finite};
use ldplab_core::verify::{default_function_battery, gartner_ellis_pipeline};
use ldplab_core::Error;

use config::{parse_function, resolve, Overrides, Resolved};

#[derive(Parser)]
#[command(name = "ldplab", version, about = "Numerical lab for large deviations and maxitive integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy sweeps and asymptotic entropies of a family or a function
    Entropy(Overrides),
    /// Conjugate rate of a testing family
    Rate(Overrides),
    /// Exposed points of a testing family, with the richness check
    Exposed(Overrides),
    /// Full pipeline: tightness, conjugate, exposed points, richness, LDP/LP
    Verify(Overrides),
    /// Compare entropies with convex integrals of the upper concentration
    Represent(Overrides),
    /// Plot up to three one-dimensional curves as SVG
    Plot(PlotArgs),
}

#[derive(clap::Args)]
struct PlotArgs {
    /// CSV files with columns x_1,value
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Analytic overlays on the first input's x values: const:c | linear:y | invv:a
    #[arg(long = "overlay", allow_hyphen_values = true)]
    overlays: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(
            Error::Numeric(_)
            | Error::NegativeRate { .. }
            | Error::NegInfInRate(_)
            | Error::UndefinedSum
            | Error::NotANumber,
        ) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Entropy(o) => cmd_entropy(&resolve(&o)?),
        Command::Rate(o) => cmd_rate(&resolve(&o)?),
        Command::Exposed(o) => cmd_exposed(&resolve(&o)?),
        Command::Verify(o) => cmd_verify(&resolve(&o)?),
        Command::Represent(o) => cmd_represent(&resolve(&o)?),
        Command::Plot(p) => cmd_plot(&p),
    }
}

fn out_dir(r: &Resolved) -> anyhow::Result<&Path> {
    let dir = r.config.out_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_provenance(dir: &Path, command: &str, r: &Resolved, outputs: &[&str]) -> anyhow::Result<()> {
    write_json(
        &dir.join("provenance.json"),
        &json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": r.config,
            "sources": r.sources,
            "config_file": r.config_file,
            "outputs": outputs,
        }),
    )
}

fn ext(v: ExtendedValue) -> String {
    v.to_string()
}

fn cmd_entropy(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let model = cfg.model()?;
    let space = model.space().clone();
    let mut members: Vec<(Vec<f64>, Shape, ldplab_core::GridFunction)> = Vec::new();
    if let Some(spec) = &cfg.function {
        let (shape, f) = parse_function(spec, &space)?;
        members.push((Vec::new(), shape, f));
    } else {
        let fam = cfg.family(&space)?;
        for k in 0..fam.len() {
            members.push((fam.params()[k].clone(), fam.shape(k), fam.member(k)));
        }
    }
    if members.is_empty() {
        bail!(Error::EmptyFamily);
    }
    let width = members.iter().map(|m| m.0.len()).max().unwrap_or(0);
    let dir = out_dir(r)?;
    let mut wtr = csv::Writer::from_writer(create(&dir.join("entropy.csv"))?);
    let mut header: Vec<String> = (1..=width).map(|k| format!("param_{k}")).collect();
    header.extend(cfg.ladder.iter().map(|n| format!("n_{n}")));
    header.extend(["lower", "upper", "converged", "asymptotic"].map(String::from));
    wtr.write_record(&header)?;
    let mut records = Vec::new();
    for (param, shape, f) in &members {
        let sweep = model.sweep(f)?;
        let rec = model.asymptotic_entropy(f)?;
        let (_, limit) = model.limit_entropy(shape, f, cfg.route)?;
        let mut row: Vec<String> = param.iter().map(|p| p.to_string()).collect();
        row.extend(sweep.iter().map(|(_, v)| ext(*v)));
        row.extend([ext(rec.lower), ext(rec.upper), rec.converged.to_string(), ext(limit)]);
        wtr.write_record(&row)?;
        records.push(json!({
            "param": param,
            "sweep": sweep,
            "lower": rec.lower,
            "upper": rec.upper,
            "converged": rec.converged,
            "asymptotic": limit,
            "proxy": rec.proxy,
        }));
    }
    wtr.flush()?;
    write_json(&dir.join("entropy.json"), &json!({ "model": model.id(), "route": cfg.route, "records": records }))?;
    write_provenance(dir, "entropy", r, &["entropy.csv", "entropy.json"])?;
    Ok(Status::Ok)
}

fn cmd_rate(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let model = cfg.model()?;
    let fam = cfg.family(model.space())?;
    let conj = conjugate_rate(&model, &fam, cfg.route)?;
    let rate = conj.rate_field(cfg.exact_tolerance)?;
    let dir = out_dir(r)?;
    rate.write_csv(create(&dir.join("rate.csv"))?)?;
    write_json(
        &dir.join("conjugate.json"),
        &json!({
            "model": model.id(),
            "family": fam.spec(),
            "route": conj.route,
            "skipped_members": conj.skipped,
            "members": conj.entropies,
        }),
    )?;
    write_provenance(dir, "rate", r, &["rate.csv", "conjugate.json"])?;
    Ok(Status::Ok)
}

fn cmd_exposed(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let model = cfg.model()?;
    let space = model.space().clone();
    let fam = cfg.family(&space)?;
    let conj = conjugate_rate(&model, &fam, cfg.route)?;
    let rate = conj.rate_field(cfg.exact_tolerance)?;
    let exposed = detect_exposed(&model, &fam, &conj, cfg.exposure(&space))?;
    let richness = check_richness(&rate, &exposed, &default_richness_radii(&space), cfg.verify_tolerance)?;
    let dir = out_dir(r)?;
    exposed.write_csv(create(&dir.join("exposed.csv"))?)?;
    rate.write_csv(create(&dir.join("rate.csv"))?)?;
    write_json(
        &dir.join("exposed.json"),
        &json!({
            "label": exposed.label,
            "exposed_points": exposed.count(),
            "nice_points": exposed.nice_set().count(),
            "params": exposed.params,
            "richness": richness,
        }),
    )?;
    write_provenance(dir, "exposed", r, &["exposed.csv", "rate.csv", "exposed.json"])?;
    Ok(Status::Ok)
}

fn cmd_verify(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let model = cfg.model()?;
    let fam = cfg.family(model.space())?;
    let mut pipeline = cfg.pipeline();
    pipeline.exposure = Some(cfg.exposure(model.space()));
    let outcome = gartner_ellis_pipeline(&model, &fam, &pipeline)?;
    let dir = out_dir(r)?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    outcome.rate.write_csv(create(&dir.join("rate.csv"))?)?;
    outcome.exposed.write_csv(create(&dir.join("exposed.csv"))?)?;
    write_provenance(dir, "verify", r, &["report.json", "rate.csv", "exposed.csv"])?;
    let s = &outcome.report.summary;
    eprintln!("status: {} (ldp_pass={}, lp_pass={})", s.status, s.ldp_pass, s.lp_pass);
    Ok(if s.status == "certified" { Status::Ok } else { Status::Violation })
}

fn cmd_represent(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let model = cfg.model()?;
    let space = model.space().clone();
    let functions: Vec<(String, ldplab_core::GridFunction)> = match &cfg.function {
        Some(spec) => vec![(spec.clone(), parse_function(spec, &space)?.1)],
        None => default_function_battery(&space, cfg.function_count, cfg.seed)?
            .into_iter()
            .map(|lf| (lf.label, lf.f))
            .collect(),
    };
    let mut records = Vec::new();
    let mut all_pass = true;
    for (label, f) in &functions {
        let rep = check_representation(&model, f)?;
        all_pass &= rep.pass;
        records.push(json!({ "function": label, "report": rep }));
    }
    let dir = out_dir(r)?;
    write_json(&dir.join("represent.json"), &json!({ "model": model.id(), "pass": all_pass, "records": records }))?;
    write_provenance(dir, "represent", r, &["represent.json"])?;
    Ok(if all_pass { Status::Ok } else { Status::Violation })
}

fn cmd_plot(p: &PlotArgs) -> anyhow::Result<Status> {
    if p.inputs.is_empty() {
        bail!(Error::Precondition("plot needs at least one --input".into()));
    }
    if p.inputs.len() + p.overlays.len() > 3 {
        bail!(Error::Precondition("at most three curves per plot".into()));
    }
    let mut curves = Vec::new();
    for path in &p.inputs {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let (xs, ys) = read_curve_csv(file)?;
        let label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        curves.push(plot::Curve { label, xs, ys });
    }
    let xs = curves[0].xs.clone();
    for spec in &p.overlays {
        let (kind, arg) = spec.split_once(':').context("overlay spec needs a kind prefix")?;
        let v: f64 = arg.trim().parse().with_context(|| format!("bad number in `{spec}`"))?;
        let eval = |x: f64| match kind {
            "const" => Ok(v),
            "linear" => Ok(v * x),
            "invv" => Ok(v.abs() - 2.0 * (x - v).abs()),
            other => Err(Error::Parse(format!("unknown overlay kind `{other}`"))),
        };
        let ys = xs.iter().map(|&x| eval(x).map(Finite)).collect::<Result<Vec<_>, _>>()?;
        curves.push(plot::Curve {
            label: spec.clone(),
            xs: xs.clone(),
            ys,
        });
    }
    if let Some(parent) = p.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&p.out, plot::render(&curves)).with_context(|| format!("writing {}", p.out.display()))?;
    Ok(Status::Ok)
}
