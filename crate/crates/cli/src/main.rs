//! `loopnet`: sample loop ensembles, evaluate exact laws and run the
//! verification suite.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a verification check
//! fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use loopnet::complete::{
    complete_graph_essential_vertices, complete_graph_expected_chi, expected_chi,
    expected_essential_vertices, miscomputed_complete_graph_essential_vertices, solve_u,
};
use loopnet::configs::uniform_preimage;
use loopnet::homology::{coordinate_box, harmonic_basis, homology_pmf};
use loopnet::io::{
    fmt17, read_graph, read_networks, to_json, write_eulerian, write_even, write_loops, NetworkFile,
};
use loopnet::maps::face_report;
use loopnet::networks::{pmf_eulerian, pmf_even};
use loopnet::quad::flow_marginal;
use loopnet::rng::try_par_samples;
use loopnet::soup::{edge_network, occupation_field, LoopSoup};
use loopnet::suite::{run_criterion, SuiteConfig, CRITERIA};
use loopnet::{Error, McEstimate, WeightedGraph};

#[derive(Debug, Parser)]
#[command(
    name = "loopnet",
    version,
    about = "Markov loop ensembles on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample jump-count networks (or loops) of the loop ensemble.
    Sample(SampleArgs),
    /// Exact probability of each network in a network file.
    Pmf(PmfArgs),
    /// Euler characteristic and faces of random maps.
    Maps(MapsArgs),
    /// Law of the flow, occupation field integrated out.
    Flow(FlowArgs),
    /// Law of the random homology class.
    Homology(HomologyArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Closed forms on the complete graph.
    CompleteGraph(CompleteArgs),
}

#[derive(Debug, Args)]
struct GraphArg {
    /// Graph file (JSON: vertices, edges [{u, v, c}], killing).
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Intensity, 1 or 0.5.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Longest loop sampled; default from a 1e-9 tail bound.
    #[arg(long)]
    kmax: Option<usize>,
    /// Write the loops of each ensemble instead of networks.
    #[arg(long)]
    loops: bool,
    /// Add the occupation field of each sample as a `# rho` comment line.
    #[arg(long)]
    occupation: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PmfArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Network file: header `eulerian` or `even`, then `x y count` lines.
    #[arg(long)]
    network: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct MapsArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    kmax: Option<usize>,
    /// Print only the summary line.
    #[arg(long)]
    summary: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Gauss-Legendre points per axis.
    #[arg(long, default_value_t = 48)]
    grid: usize,
    /// Classes with every cycle coordinate in `-radius..=radius`.
    #[arg(long, default_value_t = 2)]
    radius: i64,
    /// Monte Carlo samples to compare against (0 to skip).
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct HomologyArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Torus grid points per axis (also evaluated at twice this).
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 6)]
    radius: i64,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = SuiteConfig::default().seed)]
    seed: u64,
    /// Tenfold smaller samples.
    #[arg(long)]
    quick: bool,
    /// Relative conductance perturbation of the expected tables.
    #[arg(long)]
    perturb: Option<f64>,
    /// Run only these checks (1-12); repeatable.
    #[arg(long)]
    only: Vec<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct CompleteArgs {
    /// Number of vertices.
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Target value for E(chi) - ln d; solves for the matching killing rate.
    #[arg(long)]
    target: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Sample(a) => sample(a),
        Command::Pmf(a) => pmf(a),
        Command::Maps(a) => maps(a),
        Command::Flow(a) => flow(a),
        Command::Homology(a) => homology(a),
        Command::Verify(a) => verify(a),
        Command::CompleteGraph(a) => complete_graph(a),
    }
}

fn emit(out: &OutArg, text: &str) -> Result<(), Error> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load(path: &Path) -> Result<WeightedGraph, Error> {
    read_graph(path)
}

fn soup(g: &WeightedGraph, kmax: Option<usize>) -> Result<LoopSoup<'_>, Error> {
    match kmax {
        Some(k) => LoopSoup::new(g, k),
        None => LoopSoup::with_default_truncation(g),
    }
}

fn check_alpha(alpha: f64) -> Result<(), Error> {
    if alpha == 1.0 || alpha == 0.5 {
        Ok(())
    } else {
        Err(Error::UnsupportedAlpha(alpha))
    }
}

fn sample(a: SampleArgs) -> Result<ExitCode, Error> {
    check_alpha(a.alpha)?;
    let g = load(&a.graph.graph)?;
    let s = soup(&g, a.kmax)?;
    let n = g.vertex_count();
    let draws = try_par_samples(a.seed, a.n, |rng| {
        let loops = s.sample_loops(a.alpha, rng)?;
        let net = edge_network(&loops, n);
        let rho = if a.occupation {
            Some(occupation_field(&g, &net.vertex_totals(), a.alpha, rng)?.0)
        } else {
            None
        };
        Ok::<_, Error>((loops, net, rho))
    })?;
    if s.tail_bound() > 1e-6 {
        eprintln!(
            "warning: loops longer than {} carry mass up to {}",
            s.k_max(),
            fmt17(s.tail_bound())
        );
    }
    let mut text = String::new();
    let rho_line = |rho: &Option<Vec<f64>>| -> String {
        rho.as_ref()
            .map(|r| {
                format!(
                    "# rho {}\n",
                    r.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(" ")
                )
            })
            .unwrap_or_default()
    };
    if a.loops {
        for (i, (loops, _, rho)) in draws.iter().enumerate() {
            let _ = writeln!(text, "ensemble {i}");
            text.push_str(&rho_line(rho));
            text.push_str(&write_loops(loops));
        }
    } else {
        // Records with the occupation comment placed after each separator.
        let body = if a.alpha == 1.0 {
            write_eulerian(&draws.iter().map(|d| d.1.clone()).collect::<Vec<_>>())
        } else {
            write_even(&draws.iter().map(|d| d.1.symmetrized()).collect::<Vec<_>>())
        };
        let mut record = 0;
        for (i, line) in body.lines().enumerate() {
            text.push_str(line);
            text.push('\n');
            if i == 0 || line == "--" {
                if let Some(d) = draws.get(record) {
                    text.push_str(&rho_line(&d.2));
                }
                record += 1;
            }
        }
    }
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn pmf(a: PmfArgs) -> Result<ExitCode, Error> {
    let g = load(&a.graph.graph)?;
    let values = match read_networks(&g, &a.network)? {
        NetworkFile::Eulerian(nets) => nets
            .iter()
            .map(|k| pmf_eulerian(&g, k))
            .collect::<Result<Vec<_>, _>>()?,
        NetworkFile::Even(nets) => nets
            .iter()
            .map(|k| pmf_even(&g, k))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let mut text = String::new();
    for v in values {
        let _ = writeln!(text, "{}", fmt17(v));
    }
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn maps(a: MapsArgs) -> Result<ExitCode, Error> {
    let g = load(&a.graph.graph)?;
    let s = soup(&g, a.kmax)?;
    let reports = try_par_samples(a.seed, a.n, |rng| {
        let net = s.sample_network(1.0, rng)?;
        Ok::<_, Error>(face_report(&uniform_preimage(&net, rng)))
    })?;
    let mut text = String::new();
    if !a.summary {
        for r in &reports {
            text.push_str(&to_json(r));
            text.push('\n');
        }
    }
    let est = McEstimate::from_values(&reports.iter().map(|r| r.chi as f64).collect::<Vec<_>>());
    let exact = expected_chi(&g);
    let summary = json!({
        "summary": { "n": est.n, "mean_chi": est.mean, "se": est.se, "expected_chi": exact, "z": est.z_score(exact) }
    });
    text.push_str(&to_json(&summary));
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn classes(g: &WeightedGraph, radius: i64) -> Vec<(Vec<i64>, loopnet::HomologyClass)> {
    let basis = harmonic_basis(g);
    coordinate_box(basis.dimension(), radius)
        .into_iter()
        .map(|c| {
            let h = basis.class_from_coordinates(g.vertex_count(), &c);
            (c, h)
        })
        .collect()
}

fn mc_frequency(count: usize, n: usize) -> Value {
    let p = count as f64 / n as f64;
    json!({ "mc_freq": p, "se": (p * (1.0 - p) / n as f64).sqrt() })
}

fn flow(a: FlowArgs) -> Result<ExitCode, Error> {
    let g = load(&a.graph.graph)?;
    let table = classes(&g, a.radius);
    let sampled: Vec<loopnet::Flow> = if a.n > 0 {
        let s = LoopSoup::with_default_truncation(&g)?;
        try_par_samples(a.seed, a.n, |rng| {
            s.sample_network(1.0, rng)
                .map(|k| k.homology_class().flow())
        })?
    } else {
        Vec::new()
    };
    let mut text = String::new();
    for (coords, h) in table {
        let f = h.flow();
        let m = flow_marginal(&g, &f, a.grid)?;
        let mut row =
            json!({ "class": coords, "pmf": m.value, "grid_difference": m.grid_difference });
        if a.n > 0 {
            let count = sampled.iter().filter(|s| **s == f).count();
            merge(&mut row, mc_frequency(count, a.n));
        }
        text.push_str(&to_json(&row));
        text.push('\n');
    }
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn merge(row: &mut Value, extra: Value) {
    if let (Value::Object(r), Value::Object(e)) = (row, extra) {
        r.extend(e);
    }
}

fn homology(a: HomologyArgs) -> Result<ExitCode, Error> {
    check_alpha(a.alpha)?;
    let g = load(&a.graph.graph)?;
    let basis = harmonic_basis(&g);
    let table = classes(&g, a.radius);
    let sampled: Vec<Vec<i64>> = if a.n > 0 {
        let s = LoopSoup::with_default_truncation(&g)?;
        try_par_samples(a.seed, a.n, |rng| {
            s.sample_network(a.alpha, rng)
                .map(|k| basis.coordinates(&k.homology_class()))
        })?
    } else {
        Vec::new()
    };
    let mut text = String::new();
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for (coords, h) in table {
        let p = homology_pmf(&g, a.alpha, &h, a.grid)?;
        total += p.value;
        worst = worst.max(p.grid_difference);
        let mut row =
            json!({ "class": coords, "pmf": p.value, "grid_difference": p.grid_difference });
        if a.n > 0 {
            let count = sampled.iter().filter(|s| **s == coords).count();
            merge(&mut row, mc_frequency(count, a.n));
        }
        text.push_str(&to_json(&row));
        text.push('\n');
    }
    text.push_str(&to_json(
        &json!({ "summary": { "total": total, "max_grid_difference": worst } }),
    ));
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode, Error> {
    let cfg = SuiteConfig {
        seed: a.seed,
        quick: a.quick,
        perturb: a.perturb,
    };
    let which: Vec<usize> = if a.only.is_empty() {
        (1..=CRITERIA.len()).collect()
    } else {
        a.only.clone()
    };
    let mut reports = Vec::with_capacity(which.len());
    for i in which {
        let r = run_criterion(i, &cfg)?;
        eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.test_id);
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.pass);
    let mut text = to_json(&reports);
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn complete_graph(a: CompleteArgs) -> Result<ExitCode, Error> {
    let g = WeightedGraph::complete(a.d, a.kappa)?;
    let mut report = json!({
        "d": a.d,
        "kappa": a.kappa,
        "expected_chi": complete_graph_expected_chi(a.d, a.kappa)?,
        "expected_chi_general": expected_chi(&g),
        "essential_vertices": complete_graph_essential_vertices(a.d, a.kappa)?,
        "essential_vertices_general": expected_essential_vertices(&g),
        "essential_vertices_miscomputed_form": miscomputed_complete_graph_essential_vertices(a.d, a.kappa)?,
    });
    if let Some(v) = a.target {
        let u = solve_u(a.d as f64, v)?;
        merge(
            &mut report,
            json!({ "u": u.u, "kappa_for_target": u.kappa, "residual": u.residual }),
        );
    }
    let mut text = to_json(&report);
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}
