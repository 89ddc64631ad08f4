use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use rayon::prelude::*;
use spectral_comm::cluster::{detect as run_detect, DetectOptions};
use spectral_comm::config::{ExperimentConfig, ModelTemplate};
use spectral_comm::estimate::{default_threshold, delta_grid, delta_sweep, estimate_k as run_estimate};
use spectral_comm::experiment::{run_experiment, ExperimentSpec, Preset};
use spectral_comm::io::{
    largest_connected_component, read_edge_list, read_labels, write_edge_list, write_labels, write_report_csv,
    write_sweep_csv,
};
use spectral_comm::metrics::relative_error_rate;
use spectral_comm::model::generate as sample;
use spectral_comm::rng::repetition_seed;
use spectral_comm::spectral::{eig_sym, eigenvalues_sym};
use spectral_comm::theory::{
    eigen_transform_check, linf_residual_from, median, noise_norm, population_ratio_check, row_separation_from,
    trend_non_increasing,
};
use spectral_comm::{AdjacencyMatrix, Error, Method};

use crate::{BenchmarkArgs, DetectArgs, EstimateArgs, GenerateArgs, GraphInput, ModelSource, SweepArgs, VerifyArgs};

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_validation() => 1,
        _ => 2,
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

struct Graph {
    adjacency: AdjacencyMatrix,
    /// Node count before any component restriction.
    full_n: usize,
    /// Original (0-based) node index of each row.
    nodes: Vec<usize>,
}

fn load_graph(input: &GraphInput) -> Result<Graph> {
    let full = read_edge_list(&input.edges, input.indexing, input.diag)?;
    let full_n = full.n();
    if !input.lcc {
        return Ok(Graph {
            adjacency: full,
            full_n,
            nodes: (0..full_n).collect(),
        });
    }
    let nodes = largest_connected_component(&full);
    log::info!("largest connected component: {} of {full_n} nodes", nodes.len());
    Ok(Graph {
        adjacency: full.submatrix(&nodes),
        full_n,
        nodes,
    })
}

fn template(src: &ModelSource) -> Result<ModelTemplate> {
    let t = match (&src.config, &src.experiment) {
        (Some(path), _) => {
            if src.case.is_some() || src.k.is_some() {
                return Err(invalid("--case and --k apply to --experiment presets only"));
            }
            ModelTemplate::load(path)?
        }
        (None, Some(name)) => {
            let preset = Preset::parse(name, src.case)?;
            preset.template(preset.default_n(), src.k.unwrap_or(preset.default_k()))?
        }
        (None, None) => return Err(invalid("one of --config or --experiment is required")),
    };
    Ok(match src.n {
        Some(n) => t.with_n(n),
        None => t,
    })
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let t = template(&args.model)?;
    let spec = t.instantiate(args.seed)?;
    if !spec.kind().is_binary() {
        return Err(invalid("edge lists hold 0/1 networks; the general model produces real-valued entries"));
    }
    let a = sample(&spec, args.seed);
    write_edge_list(output(args.out.as_deref())?, &a, args.indexing)?;
    if let Some(p) = &args.labels_out {
        write_labels(output(Some(p))?, spec.membership(), args.indexing)?;
    }
    Ok(())
}

pub fn detect(args: DetectArgs) -> Result<()> {
    let g = load_graph(&args.input)?;
    let opts = DetectOptions {
        delta: args.delta,
        ..DetectOptions::default()
    };
    let r = run_detect(&g.adjacency, args.method, args.k, &opts, args.seed)?;
    if let Some(est) = &r.estimate {
        eprintln!("k_hat: {} (threshold {:.6})", est.k_hat, est.threshold);
    }
    eprintln!("method: {}, k: {}, objective: {:.6}", r.method, r.k_used, r.objective);
    if let Some(path) = &args.truth {
        let truth = read_labels(path)?;
        if truth.labels.len() != g.full_n {
            return Err(Error::LengthMismatch {
                estimated: g.full_n,
                truth: truth.labels.len(),
            }
            .into());
        }
        let t: Vec<usize> = g.nodes.iter().map(|&i| truth.labels[i]).collect();
        let e = relative_error_rate(&r.labels, &t)?;
        eprintln!(
            "error rate: {:.6} ({}/{} misclassified)",
            e.error_rate,
            t.len() - e.matched,
            t.len()
        );
    }
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record(["node_id", "label"])?;
    let base = args.input.indexing.base();
    for (&node, &label) in g.nodes.iter().zip(&r.labels) {
        w.write_record([(node + base).to_string(), (label + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn estimate_k(args: EstimateArgs) -> Result<()> {
    let g = load_graph(&args.input)?;
    let n = g.adjacency.n();
    let l = eigenvalues_sym(g.adjacency.as_mat())?;
    let est = run_estimate(&l, default_threshold(n, args.delta)?);
    let mut out = io::stdout().lock();
    writeln!(out, "k_hat: {}", est.k_hat)?;
    writeln!(out, "threshold: {:.6} (delta {})", est.threshold, args.delta)?;
    writeln!(out, "mean |eigenvalue|: {:.6}", est.mean_abs_eigenvalue)?;
    writeln!(out, "{:>5} {:>14} {:>12}", "index", "eigenvalue", "ratio")?;
    let shown = (est.k_hat + 3).max(10).min(n);
    for i in 0..shown {
        let mark = if i < est.k_hat { " *" } else { "" };
        writeln!(out, "{:>5} {:>14.6} {:>12.6}{mark}", i + 1, l[i], est.ratios[i])?;
    }
    if let Some(p) = &args.out {
        let mut w = csv::Writer::from_writer(output(Some(p))?);
        w.write_record(["index", "eigenvalue", "ratio", "selected"])?;
        for i in 0..n {
            w.write_record([
                (i + 1).to_string(),
                l[i].to_string(),
                est.ratios[i].to_string(),
                (i < est.k_hat).to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn sweep_k(args: SweepArgs) -> Result<()> {
    let g = load_graph(&args.input)?;
    let grid = delta_grid(args.delta_min, args.delta_max, args.step)?;
    let l = eigenvalues_sym(g.adjacency.as_mat())?;
    let sweep: Vec<(f64, usize)> = delta_sweep(&l, g.adjacency.n(), &grid)?
        .into_iter()
        .map(|(d, e)| (d, e.k_hat))
        .collect();
    write_sweep_csv(output(args.out.as_deref())?, &sweep)?;
    Ok(())
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let (spec, reps, seed, out) = match (&args.experiment, &args.config) {
        (Some(name), _) => {
            let preset = Preset::parse(name, args.case)?;
            let methods = if args.methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                args.methods.clone()
            };
            let n = args.n.unwrap_or(preset.default_n());
            let k = args.k.unwrap_or(preset.default_k());
            let seed = args.seed.ok_or_else(|| invalid("--seed is required with --experiment"))?;
            (preset.spec(n, k, &methods)?, args.reps.unwrap_or(100), seed, args.out.clone())
        }
        (None, Some(path)) => {
            if args.case.is_some() || args.k.is_some() {
                return Err(invalid("--case and --k apply to --experiment presets only"));
            }
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(n) = args.n {
                cfg.model = cfg.model.with_n(n);
            }
            if !args.methods.is_empty() {
                cfg.methods = args.methods.clone();
            }
            let spec = ExperimentSpec::try_from(&cfg)?;
            let out = args.out.clone().or(cfg.output.clone());
            (spec, args.reps.unwrap_or(cfg.reps), args.seed.unwrap_or(cfg.seed), out)
        }
        (None, None) => return Err(invalid("one of --experiment or --config is required")),
    };
    eprintln!("{}: config digest {}", spec.name, spec.digest());
    let reports = run_experiment(&spec, reps, seed)?;
    for r in &reports {
        eprintln!(
            "{:>6}: mean {:.4} (sd {:.4}) over {} reps, {} flagged",
            r.label,
            r.mean,
            r.sd,
            r.reps() - r.flagged,
            r.flagged
        );
    }
    write_report_csv(output(out.as_deref())?, &reports)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Transform,
    NoiseNorm,
    Linf,
    Separation,
    Ratios,
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> spectral_comm::Result<Self> {
        match s {
            "transform" => Ok(Check::Transform),
            "noise-norm" => Ok(Check::NoiseNorm),
            "linf" => Ok(Check::Linf),
            "separation" => Ok(Check::Separation),
            "ratios" => Ok(Check::Ratios),
            other => Err(Error::InvalidArgument(format!(
                "unknown check '{other}' (transform, noise-norm, linf, separation, ratios)"
            ))),
        }
    }
}

impl Check {
    fn columns(self) -> &'static [&'static str] {
        match self {
            Check::Transform => &["max_relative_deviation"],
            Check::NoiseNorm => &["norm_over_root_n", "bound", "max_entry_over_root_n"],
            Check::Linf => &["residual", "normalized", "alignment_defect", "gap_warning"],
            Check::Separation => &["max_within", "min_cross", "max_within_scaled", "zero_rows"],
            Check::Ratios => &["pairs", "all_distinguished"],
        }
    }

    /// Column used for the per-n summary and trend.
    fn headline(self) -> usize {
        match self {
            Check::Linf => 1,
            Check::Separation => 2,
            _ => 0,
        }
    }

    fn run(self, t: &ModelTemplate, seed: u64) -> spectral_comm::Result<Vec<f64>> {
        let spec = t.instantiate(seed)?;
        let n = spec.n() as f64;
        Ok(match self {
            Check::Transform => vec![eigen_transform_check(&spec)?],
            Check::NoiseNorm => {
                let r = noise_norm(&sample(&spec, seed), &spec)?;
                vec![r.value, r.bound, r.max_entry_scaled]
            }
            Check::Linf => {
                let d = eig_sym(sample(&spec, seed).as_mat())?;
                let r = linf_residual_from(&d, &spec)?;
                let defect = r.groups.iter().map(|g| g.alignment_defect).fold(0.0, f64::max);
                vec![r.max_residual, r.normalized, defect, f64::from(u8::from(r.gap_warning))]
            }
            Check::Separation => {
                let d = eig_sym(sample(&spec, seed).as_mat())?;
                let r = row_separation_from(&d, spec.membership(), spec.k())?;
                vec![r.max_within, r.min_cross, r.max_within * n.sqrt() / n.ln(), r.zero_rows as f64]
            }
            Check::Ratios => {
                let r = population_ratio_check(&spec)?;
                vec![r.pairs.len() as f64, f64::from(u8::from(r.all_distinguished()))]
            }
        })
    }
}

pub fn verify(args: VerifyArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(invalid("--reps must be positive"));
    }
    let base = template(&args.model)?;
    let ns: Vec<usize> = if args.sweep.is_empty() { vec![base.n] } else { args.sweep.clone() };
    let cells: Vec<(usize, usize, usize, u64)> = ns
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| (0..args.reps).map(move |r| (c, n, r, repetition_seed(args.seed, c * args.reps + r))))
        .collect();
    let templates: Vec<ModelTemplate> = ns.iter().map(|&n| base.with_n(n)).collect();
    let rows: Vec<spectral_comm::Result<Vec<f64>>> = cells
        .par_iter()
        .map(|&(c, _, _, seed)| args.check.run(&templates[c], seed))
        .collect();

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut header = vec!["n", "rep", "seed"];
    header.extend_from_slice(args.check.columns());
    w.write_record(&header)?;
    let mut medians = Vec::new();
    let mut headline: Vec<f64> = Vec::new();
    for (cell, row) in cells.iter().zip(rows) {
        let (c, n, rep, seed) = *cell;
        let values = row?;
        let mut rec = vec![n.to_string(), rep.to_string(), seed.to_string()];
        rec.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
        headline.push(values[args.check.headline()]);
        if rep + 1 == args.reps {
            medians.push((ns[c], median(&headline)));
            headline.clear();
        }
    }
    w.flush()?;
    let name = args.check.columns()[args.check.headline()];
    for (n, m) in &medians {
        eprintln!("n = {n}: median {name} = {m:.6e}");
    }
    if matches!(args.check, Check::Linf | Check::Separation) && medians.len() > 1 {
        let values: Vec<f64> = medians.iter().map(|m| m.1).collect();
        let ok = trend_non_increasing(&values, 1, 0.10);
        eprintln!("trend over n: {}", if ok { "non-increasing" } else { "NOT non-increasing" });
    }
    Ok(())
}
