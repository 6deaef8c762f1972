//! The verification suite: twelve checks of sampled ensembles against exact
//! laws, each producing a JSON-ready report.
//!
//! Every randomized check is reproducible from [`SuiteConfig::seed`]. Mean
//! comparisons pass within [`Z_MAX`] standard errors, distribution tests at
//! p-values above [`P_MIN`]; there is no multiple-testing correction, so with
//! dozens of comparisons per run the seeds matter.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::complete::{complete_graph_expected_chi, expected_chi};
use crate::configs::{
    enumerate_configurations, enumerate_even_configurations, even_multiplicity,
    for_each_even_configuration, multiplicity, preimage_count, q_even_probability, q_probability,
    uniform_preimage,
};
use crate::enumerate::{enumerate_eulerian, enumerate_even, networks_with_flow};
use crate::error::{Error, Result};
use crate::genfunc::{config_generating_check, even_generating_check};
use crate::graph::{Edge, WeightedGraph};
use crate::homology::{harmonic_basis, homology_pmf};
use crate::identities::{
    complex_twist_check, det_perm_identity_check, field_side, homology_covariance_check,
    isomorphism_check, markov_property_check, moment_identity_check, random_complex_twist,
    random_real_twist, real_twist_check, sample_with_occupation, CovarianceCheck,
};
use crate::maps::{build_map, face_sets_of};
use crate::networks::{
    bessel_i, pmf_eulerian, pmf_even, quasi_invariance_check, EulerianNetwork, Flow,
};
use crate::quad::flow_marginal;
use crate::rng::{seeded, try_par_samples};
use crate::soup::{edge_network, occupation_field, LoopSoup};
use crate::stats::{chi_square_gof, two_sample_chi_square, GofReport, McEstimate};
use crate::wilson::wilson_sample;

/// Largest standardized deviation accepted for a mean.
pub const Z_MAX: f64 = 3.0;
/// Smallest p-value accepted for a distribution test.
pub const P_MIN: f64 = 1e-3;
/// Exact normalization sums.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Closed forms against general formulas.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Mass of the homology law missing from `|winding| <= 6`.
pub const HOMOLOGY_MASS_TOL: f64 = 1e-6;
/// Torus grid doubling.
pub const GRID_TOL: f64 = 1e-8;
/// Bessel series against the rational oracle, relative.
pub const BESSEL_TOL: f64 = 1e-12;
/// Conditioning cells of the Markov check need this many samples.
pub const MIN_CELL_HITS: usize = 500;

pub const CRITERIA: [(&str, &str); 12] = [
    (
        "normalization",
        "network laws and configuration measures have total mass one",
    ),
    (
        "sampler-law",
        "jump counts of the alpha = 1 and 1/2 ensembles follow the closed-form network laws",
    ),
    (
        "moments",
        "mean jump counts, occupation field and loop count",
    ),
    (
        "wilson",
        "networks from the Wilson-type construction follow the soup's network law",
    ),
    (
        "configurations",
        "configuration multiplicities and generating functions",
    ),
    (
        "maps",
        "Euler characteristic of the random map and the law of its faces",
    ),
    (
        "homology",
        "Fourier-integral law and covariances of the random homology class",
    ),
    (
        "flows",
        "Bessel law of the flow with the occupation field integrated out",
    ),
    (
        "field-identities",
        "loop/field generating functionals, Wick moments, determinant/permanent identity",
    ),
    (
        "isomorphism",
        "occupation field against squared free fields",
    ),
    (
        "markov",
        "conditional independence of the two sides of a cut",
    ),
    (
        "quasi-invariance",
        "shift identity for the alpha = 1 network law",
    ),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Tenfold smaller samples, for smoke runs.
    pub quick: bool,
    /// Scale the conductances of the graphs behind the expected tables of
    /// the sampler-law and moment checks by `1 + perturb`, while sampling
    /// the unperturbed graphs. Used to confirm the suite can fail.
    pub perturb: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20_160_419,
            quick: false,
            perturb: None,
        }
    }
}

impl SuiteConfig {
    fn n(&self, full: usize) -> usize {
        if self.quick {
            (full / 10).max(10_000)
        } else {
            full
        }
    }

    fn seed_for(&self, tag: u64) -> u64 {
        self.seed.wrapping_mul(1_000_003).wrapping_add(tag)
    }

    fn expected_graph(&self, g: &WeightedGraph) -> Result<WeightedGraph> {
        match self.perturb {
            Some(d) => g.scaled_conductances(1.0 + d),
            None => Ok(g.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub test_id: String,
    pub paper_ref: String,
    pub pass: bool,
    pub details: Value,
}

/// Runs check `index` (1 to 12).
pub fn run_criterion(index: usize, cfg: &SuiteConfig) -> Result<CheckReport> {
    let (id, reference) = *CRITERIA
        .get(index.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidInput(format!("no check numbered {index}")))?;
    let mut out = Outcome::default();
    match index {
        1 => normalization(&mut out)?,
        2 => sampler_law(cfg, &mut out)?,
        3 => moments(cfg, &mut out)?,
        4 => wilson(cfg, &mut out)?,
        5 => configurations(&mut out)?,
        6 => maps(cfg, &mut out)?,
        7 => homology(cfg, &mut out)?,
        8 => flows(cfg, &mut out)?,
        9 => field_identities(cfg, &mut out)?,
        10 => isomorphism(cfg, &mut out)?,
        11 => markov(cfg, &mut out)?,
        12 => quasi_invariance(cfg, &mut out)?,
        _ => unreachable!(),
    }
    Ok(CheckReport {
        test_id: format!("{index:02}-{id}"),
        paper_ref: reference.to_string(),
        pass: out.rows.iter().all(|r| r.pass),
        details: json!({ "seed": cfg.seed, "quick": cfg.quick, "perturb": cfg.perturb,
                         "bonferroni": out.family_bound(), "rows": out.rows }),
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckReport>> {
    (1..=CRITERIA.len())
        .map(|i| run_criterion(i, cfg))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    name: String,
    pass: bool,
    #[serde(flatten)]
    data: Value,
}

#[derive(Debug, Default)]
struct Outcome {
    rows: Vec<Row>,
}

impl Outcome {
    fn push(&mut self, name: impl Into<String>, pass: bool, data: Value) {
        self.rows.push(Row {
            name: name.into(),
            pass,
            data,
        });
    }

    fn mean(&mut self, name: impl Into<String>, est: McEstimate, exact: f64) {
        let z = est.z_score(exact);
        self.push(
            name,
            z <= Z_MAX,
            json!({ "mc": est.mean, "se": est.se, "n": est.n, "exact": exact, "z": z }),
        );
    }

    fn gof(&mut self, name: impl Into<String>, r: &GofReport) {
        self.push(
            name,
            r.passes(P_MIN),
            json!({ "statistic": r.statistic, "df": r.df, "p": r.p_value, "cells": r.cells.len(), "pooled": r.pooled }),
        );
    }

    /// Rows are tested separately at `p > P_MIN` or `|z| <= Z_MAX`; this is
    /// the union bound on a false failure of the whole check.
    fn family_bound(&self) -> Value {
        let z_level = 2.0 * (1.0 - Normal::standard().cdf(Z_MAX));
        let (mut tests, mut level) = (0usize, 0.0);
        for r in &self.rows {
            if r.data.get("p").is_some() {
                tests += 1;
                level += P_MIN;
            } else if r.data.get("z").is_some() {
                tests += 1;
                level += z_level;
            }
        }
        json!({ "statistical_rows": tests, "family_wise_false_failure_bound": level.min(1.0) })
    }

    fn close(&mut self, name: impl Into<String>, value: f64, exact: f64, tol: f64) {
        let err = (value - exact).abs();
        self.push(
            name,
            err <= tol,
            json!({ "value": value, "exact": exact, "error": err, "tol": tol }),
        );
    }
}

/// Binomial test of an observed count against probability `p`: the SE is
/// taken under the null, so classes never observed still get a finite score.
fn frequency(out: &mut Outcome, name: String, count: u64, n: usize, p: f64) {
    let nf = n as f64;
    let freq = count as f64 / nf;
    let se = (p * (1.0 - p) / nf).sqrt();
    let z = if se > 0.0 {
        (freq - p).abs() / se
    } else if count == 0 {
        0.0
    } else {
        f64::INFINITY
    };
    out.push(
        name,
        z <= Z_MAX,
        json!({ "freq": freq, "count": count, "n": n, "exact": p, "se_null": se, "z": z }),
    );
}

fn triangle() -> WeightedGraph {
    WeightedGraph::complete(3, 1.0).expect("fixture")
}

/// `K_4` with unequal conductances and killing 1/2 everywhere.
pub fn weighted_k4() -> WeightedGraph {
    let c = [
        (0, 1, 0.5),
        (0, 2, 1.5),
        (0, 3, 1.0),
        (1, 2, 2.0),
        (1, 3, 0.3),
        (2, 3, 0.9),
    ];
    let edges = c
        .iter()
        .map(|&(u, v, conductance)| Edge { u, v, conductance })
        .collect();
    WeightedGraph::new(4, edges, vec![0.5; 4]).expect("fixture")
}

fn sample_networks(
    g: &WeightedGraph,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<EulerianNetwork>> {
    let soup = LoopSoup::with_default_truncation(g)?;
    try_par_samples(seed, n, |rng| soup.sample_network(alpha, rng))
}

/// Observed counts of `keys` over the enumerated cells; unlisted keys fall
/// into the tail.
fn tally<K: std::hash::Hash + Eq>(cells: &[K], samples: impl Iterator<Item = K>) -> Vec<u64> {
    let index: HashMap<&K, usize> = cells.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut counts = vec![0u64; cells.len() + 1];
    for s in samples {
        match index.get(&s) {
            Some(&i) => counts[i] += 1,
            None => counts[cells.len()] += 1,
        }
    }
    counts
}

fn eulerian_gof(
    g: &WeightedGraph,
    expected: &WeightedGraph,
    samples: &[EulerianNetwork],
    max_total: u32,
) -> Result<GofReport> {
    let cells = enumerate_eulerian(expected, max_total);
    let probs = cells
        .iter()
        .map(|k| pmf_eulerian(expected, k))
        .collect::<Result<Vec<_>>>()?;
    let counts = tally(
        &cells,
        samples.iter().map(|k| {
            debug_assert_eq!(k.vertex_count(), g.vertex_count());
            k.clone()
        }),
    );
    chi_square_gof(&counts[..cells.len()], &probs, samples.len() as u64)
}

fn normalization(out: &mut Outcome) -> Result<()> {
    let g = WeightedGraph::two_vertex();
    // Two vertices: N_01 = N_10 = m with P(m) = (3/4)(1/4)^m.
    let m_max = 20;
    let pair = |m: u32| EulerianNetwork::from_triples(&g, &[(0, 1, m), (1, 0, m)]);
    let mut sum = 0.0;
    for m in 0..=m_max {
        sum += pmf_eulerian(&g, &pair(m)?)?;
    }
    let tail = 0.25f64.powi(m_max as i32 + 1);
    out.close(
        "eulerian two-vertex, exact geometric tail",
        sum + tail,
        1.0,
        NORMALIZATION_TOL,
    );

    // Even: k_{0,1} = 2j with P(j) = sqrt(3/4) C(2j, j) 16^-j; the tail is
    // at most sum_{j > J} 4^-j.
    let j_max = 20u32;
    let mut even_sum = 0.0;
    for j in 0..=j_max {
        let k = crate::networks::EvenNetwork::from_triples(&g, &[(0, 1, 2 * j)])?;
        even_sum += pmf_even(&g, &k)?;
    }
    let mut series = 0.0;
    let mut term = 1.0f64;
    for j in 0..=j_max {
        if j > 0 {
            term *= (2 * j - 1) as f64 * (2 * j) as f64 / (j as f64 * j as f64) / 16.0;
        }
        series += term;
    }
    let series = 0.75f64.sqrt() * series;
    let even_tail = 0.75f64.sqrt() * 0.25f64.powi(j_max as i32 + 1) / 0.75;
    out.close(
        "even two-vertex, binomial series partial sum",
        even_sum,
        series,
        1e-14,
    );
    out.push(
        "even two-vertex, total mass with tail bound",
        (even_sum - 1.0).abs() <= even_tail + NORMALIZATION_TOL,
        json!({ "sum": even_sum, "tail_bound": even_tail }),
    );

    // Configurations with at most `cap` half-edge pairs per vertex.
    let cap = 4;
    let q: f64 = enumerate_configurations(&g, &[cap, cap])?
        .iter()
        .map(|c| q_probability(&g, c))
        .sum::<Result<f64>>()?;
    let q_tail = 0.25f64.powi(cap as i32 + 1);
    out.close(
        "Q over configurations plus tail",
        q + q_tail,
        1.0,
        NORMALIZATION_TOL,
    );

    let qe: f64 = enumerate_even_configurations(&g, &[cap, cap])?
        .iter()
        .map(|c| q_even_probability(&g, c))
        .sum::<Result<f64>>()?;
    // sqrt(3/4) sum_{j > cap} C(2j, j) 16^-j, summed until negligible.
    let mut qe_tail = 0.0;
    let mut term = 1.0f64;
    for j in 1..400u32 {
        term *= (2 * j - 1) as f64 * (2 * j) as f64 / (j as f64 * j as f64) / 16.0;
        if j as usize > cap {
            qe_tail += term;
        }
    }
    out.close(
        "even Q over configurations plus tail",
        qe + 0.75f64.sqrt() * qe_tail,
        1.0,
        NORMALIZATION_TOL,
    );
    Ok(())
}

fn sampler_law(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(1_000_000);
    for (name, g) in [
        ("two-vertex", WeightedGraph::two_vertex()),
        ("triangle", triangle()),
    ] {
        let expected = cfg.expected_graph(&g)?;
        let one = sample_networks(&g, 1.0, n, cfg.seed_for(20))?;
        out.gof(
            format!("{name} alpha=1"),
            &eulerian_gof(&g, &expected, &one, 6)?,
        );

        let half = sample_networks(&g, 0.5, n, cfg.seed_for(21))?;
        let cells = enumerate_even(&expected, 6);
        let probs = cells
            .iter()
            .map(|k| pmf_even(&expected, k))
            .collect::<Result<Vec<_>>>()?;
        let counts = tally(&cells, half.iter().map(|k| k.symmetrized()));
        out.gof(
            format!("{name} alpha=1/2"),
            &chi_square_gof(&counts[..cells.len()], &probs, n as u64)?,
        );
    }
    Ok(())
}

fn moments(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(200_000);
    for (name, g) in [("triangle", triangle()), ("weighted K4", weighted_k4())] {
        let expected = cfg.expected_graph(&g)?;
        let gm = expected.green_function();
        let soup = LoopSoup::with_default_truncation(&g)?;
        for (tag, alpha) in [(30, 1.0), (31, 0.5)] {
            let samples = try_par_samples(cfg.seed_for(tag), n, |rng| {
                let loops = soup.sample_loops(alpha, rng)?;
                let net = edge_network(&loops, g.vertex_count());
                let rho = occupation_field(&g, &net.vertex_totals(), alpha, rng)?.0;
                Ok::<_, Error>((net, rho, loops.len()))
            })?;
            for (x, y) in g.oriented_edges() {
                let est = McEstimate::from_values(
                    &samples
                        .iter()
                        .map(|s| s.0.get(x, y) as f64)
                        .collect::<Vec<_>>(),
                );
                out.mean(
                    format!("{name} alpha={alpha} E N({x},{y})"),
                    est,
                    alpha * expected.conductance(x, y) * gm.get(x, y),
                );
            }
            for x in 0..g.vertex_count() {
                let est =
                    McEstimate::from_values(&samples.iter().map(|s| s.1[x]).collect::<Vec<_>>());
                out.mean(
                    format!("{name} alpha={alpha} E L({x})"),
                    est,
                    alpha * gm.get(x, x),
                );
            }
            let est =
                McEstimate::from_values(&samples.iter().map(|s| s.2 as f64).collect::<Vec<_>>());
            out.mean(
                format!("{name} alpha={alpha} E loop count"),
                est,
                -alpha * expected.det_i_minus_p().ln(),
            );
        }
    }
    Ok(())
}

fn wilson(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(300_000);
    for (name, g, max_total) in [
        ("triangle", triangle(), 6),
        ("weighted K4", weighted_k4(), 4),
    ] {
        let order: Vec<usize> = (0..g.vertex_count()).collect();
        let bridge = sample_networks(&g, 1.0, n, cfg.seed_for(40))?;
        let walks = try_par_samples(cfg.seed_for(41), n, |rng| {
            wilson_sample(&g, &order, rng).map(|s| s.exit_configuration.network())
        })?;
        let cells = enumerate_eulerian(&g, max_total);
        let a = tally(&cells, bridge.into_iter());
        let b = tally(&cells, walks.iter().cloned());
        out.gof(
            format!("{name} Wilson vs bridge"),
            &two_sample_chi_square(&a, &b)?,
        );
        let probs = cells
            .iter()
            .map(|k| pmf_eulerian(&g, k))
            .collect::<Result<Vec<_>>>()?;
        out.gof(
            format!("{name} Wilson vs exact law"),
            &chi_square_gof(&b[..cells.len()], &probs, n as u64)?,
        );
    }
    Ok(())
}

fn configurations(out: &mut Outcome) -> Result<()> {
    let graphs = [
        ("two-vertex", WeightedGraph::two_vertex()),
        ("path", WeightedGraph::path(3, 1.0)?),
        ("triangle", triangle()),
        ("K4", WeightedGraph::complete(4, 1.0)?),
    ];
    for (name, g) in &graphs {
        let mut checked = 0;
        let mut mismatches = 0;
        for k in enumerate_eulerian(g, 4) {
            checked += 1;
            if multiplicity(&k)? != preimage_count(g, &k)?.into() {
                mismatches += 1;
            }
        }
        for k in enumerate_even(g, 4) {
            checked += 1;
            let half: Vec<usize> = k.vertex_totals().iter().map(|&t| t as usize).collect();
            let mut count = 0u64;
            for_each_even_configuration(g, &half, |c| {
                if c.network() == k {
                    count += 1;
                }
            })?;
            if even_multiplicity(&k)? != count.into() {
                mismatches += 1;
            }
        }
        out.push(
            format!("{name} multiplicities"),
            mismatches == 0,
            json!({ "networks": checked, "mismatches": mismatches }),
        );

        let plain = config_generating_check(g, 8)?;
        out.push(
            format!("{name} configuration generating function"),
            plain.all_match,
            json!({ "coefficients": plain.rows.len(), "mismatches": plain.rows.iter().filter(|r| !r.matches).count() }),
        );
        let even = even_generating_check(g, 8)?;
        out.push(
            format!("{name} even generating function"),
            even.all_match,
            json!({
                "coefficients": even.rows.len(),
                "mismatches": even.rows.iter().filter(|r| !r.matches).count(),
                "half_scaling_matches": even.alt_all_match,
            }),
        );
    }
    Ok(())
}

fn maps(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(500_000);
    for (tag, name, g) in [
        (60, "triangle", triangle()),
        (61, "weighted K4", weighted_k4()),
    ] {
        let soup = LoopSoup::with_default_truncation(&g)?;
        let nv = g.vertex_count();
        let samples = try_par_samples(cfg.seed_for(tag), n, |rng| {
            let net = soup.sample_network(1.0, rng)?;
            let c = uniform_preimage(&net, rng);
            let map = build_map(&c);
            let chi = map.euler_characteristic();
            let genus = map.genus_per_component();
            let invariant = chi % 2 == 0
                && genus.iter().all(|&g| g >= 0)
                && genus.iter().map(|g| 2 - 2 * g).sum::<i64>() == chi;
            let faces = face_sets_of(&map);
            Ok::<_, Error>((
                chi,
                invariant,
                edge_network(&faces.plus, nv),
                edge_network(&faces.minus, nv),
            ))
        })?;
        let est = McEstimate::from_values(&samples.iter().map(|s| s.0 as f64).collect::<Vec<_>>());
        out.mean(format!("{name} E chi"), est, expected_chi(&g));
        let bad = samples.iter().filter(|s| !s.1).count();
        out.push(
            format!("{name} parity and genus invariants"),
            bad == 0,
            json!({ "samples": n, "violations": bad }),
        );
        let plus: Vec<EulerianNetwork> = samples.iter().map(|s| s.2.clone()).collect();
        out.gof(
            format!("{name} faces L+ network law"),
            &eulerian_gof(&g, &g, &plus, if nv == 3 { 6 } else { 4 })?,
        );
        let minus: Vec<EulerianNetwork> = samples.iter().map(|s| s.3.clone()).collect();
        out.gof(
            format!("{name} faces L- network law"),
            &eulerian_gof(&g, &g, &minus, if nv == 3 { 6 } else { 4 })?,
        );
    }
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        for kappa in [0.5, 1.0, 2.0] {
            let closed = complete_graph_expected_chi(d, kappa)?;
            let general = expected_chi(&WeightedGraph::complete(d, kappa)?);
            worst = worst.max((closed - general).abs());
        }
    }
    out.push(
        "complete-graph E chi closed form",
        worst <= CLOSED_FORM_TOL,
        json!({ "max_error": worst, "tol": CLOSED_FORM_TOL }),
    );
    Ok(())
}

fn covariance_row(out: &mut Outcome, name: String, c: &CovarianceCheck) {
    let z = c.mc.z_score(c.wick);
    out.push(
        name,
        z <= Z_MAX,
        json!({
            "mc": c.mc.mean, "se": c.mc.se, "wick": c.wick, "z": z,
            "without_conductances": c.without_conductances, "ratio": c.ratio,
        }),
    );
}

fn homology(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let g = triangle();
    let basis = harmonic_basis(&g);
    let n = cfg.n(1_000_000);
    for (tag, alpha) in [(70, 1.0), (71, 0.5)] {
        let mut total = 0.0;
        let mut worst_grid: f64 = 0.0;
        let mut worst_imag: f64 = 0.0;
        let mut probs = Vec::new();
        for w in -6..=6i64 {
            let p = homology_pmf(&g, alpha, &basis.class_from_coordinates(3, &[w]), 64)?;
            total += p.value;
            worst_grid = worst_grid.max(p.grid_difference);
            worst_imag = worst_imag.max(p.imag_residue.abs());
            probs.push((w, p.value));
        }
        out.push(
            format!("alpha={alpha} mass over |winding| <= 6"),
            (1.0 - HOMOLOGY_MASS_TOL..=1.0 + 1e-9).contains(&total) && worst_imag <= 1e-9,
            json!({ "sum": total, "imag_residue": worst_imag }),
        );
        out.push(
            format!("alpha={alpha} grid doubling"),
            worst_grid < GRID_TOL,
            json!({ "max_difference": worst_grid, "tol": GRID_TOL }),
        );
        let windings: Vec<i64> = sample_networks(&g, alpha, n, cfg.seed_for(tag))?
            .iter()
            .map(|k| basis.coordinates(&k.homology_class())[0])
            .collect();
        for (w, p) in probs {
            let count = windings.iter().filter(|&&v| v == w).count() as u64;
            frequency(out, format!("alpha={alpha} P(winding = {w})"), count, n, p);
        }
    }
    let k4 = weighted_k4();
    let nets = sample_networks(&k4, 1.0, cfg.n(400_000), cfg.seed_for(72))?;
    for (a, b) in [((0, 1), (2, 3)), ((0, 1), (1, 2)), ((0, 2), (0, 2))] {
        let c = homology_covariance_check(&k4, a, b, &nets)?;
        covariance_row(out, format!("weighted K4 Cov(flux{a:?}, flux{b:?})"), &c);
    }
    Ok(())
}

/// `I_nu(x)` for rational `x = p / q` from its power series in exact
/// arithmetic, summed far past double precision.
pub fn bessel_i_rational(nu: u32, p: i64, q: i64) -> f64 {
    let half = BigRational::new(BigInt::from(p), BigInt::from(2 * q));
    let sq = &half * &half;
    let mut term = BigRational::one();
    for k in 1..=nu {
        term = term * &half / BigRational::from_integer(BigInt::from(k));
    }
    let mut sum = BigRational::zero();
    for m in 0..200u32 {
        if m > 0 {
            term = term * &sq / BigRational::from_integer(BigInt::from(m as u64 * (m + nu) as u64));
        }
        sum += &term;
    }
    sum.to_f64().unwrap_or(f64::NAN)
}

fn flows(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let g = triangle();
    let basis = harmonic_basis(&g);
    let n = cfg.n(1_000_000);
    let flows: Vec<(i64, Flow)> = (-3..=3)
        .map(|w| (w, basis.class_from_coordinates(3, &[w]).flow()))
        .collect();
    let sampled: Vec<Flow> = sample_networks(&g, 1.0, n, cfg.seed_for(80))?
        .iter()
        .map(|k| k.homology_class().flow())
        .collect();
    let counts = tally(
        &flows.iter().map(|f| f.1.clone()).collect::<Vec<_>>(),
        sampled.into_iter(),
    );
    for (i, (w, f)) in flows.iter().enumerate() {
        let m = flow_marginal(&g, f, 48)?;
        let fibre: f64 = networks_with_flow(&g, f, 14)
            .iter()
            .map(|k| pmf_eulerian(&g, k))
            .sum::<Result<f64>>()?;
        out.close(
            format!("winding {w}: quadrature vs fibre sum"),
            m.value,
            fibre,
            1e-9,
        );
        frequency(
            out,
            format!("winding {w}: flow law vs MC"),
            counts[i],
            n,
            m.value,
        );
    }
    let mut worst: f64 = 0.0;
    for nu in 0..=8u32 {
        for (p, q) in [
            (1, 10),
            (1, 2),
            (1, 1),
            (3, 2),
            (2, 1),
            (7, 2),
            (5, 1),
            (10, 1),
            (20, 1),
        ] {
            let oracle = bessel_i_rational(nu, p, q);
            let v = bessel_i(nu, p as f64 / q as f64);
            worst = worst.max((v - oracle).abs() / oracle);
        }
    }
    out.push(
        "Bessel series vs rational oracle",
        worst <= BESSEL_TOL,
        json!({ "max_relative_error": worst, "tol": BESSEL_TOL }),
    );
    Ok(())
}

fn field_identities(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(200_000);
    let graphs = [
        ("two-vertex", WeightedGraph::two_vertex()),
        ("triangle", triangle()),
        ("weighted K4", weighted_k4()),
    ];
    for (name, g) in &graphs {
        // s = 1, chi = 0 is the total mass; s = 0 keeps only the empty network.
        let n_v = g.vertex_count();
        let ones = DMatrix::from_element(n_v, n_v, Complex::<f64>::new(1.0, 0.0));
        let zeros = DMatrix::from_element(n_v, n_v, Complex::<f64>::new(0.0, 0.0));
        for alpha in [1.0, 0.5] {
            let total = field_side(g, &ones, &vec![0.0; n_v], alpha)?;
            out.close(
                format!("{name} field side at s = 1, chi = 0, alpha = {alpha}"),
                total.re,
                1.0,
                CLOSED_FORM_TOL,
            );
            let empty = field_side(g, &zeros, &vec![0.0; n_v], alpha)?;
            let exact = g.det_i_minus_p().powf(alpha);
            out.close(
                format!("{name} field side at s = 0, chi = 0, alpha = {alpha}"),
                empty.re,
                exact,
                CLOSED_FORM_TOL,
            );
        }
    }
    for (gi, (name, g)) in graphs.iter().enumerate() {
        let mut rng = seeded(cfg.seed_for(90), gi as u64);
        for i in 0..5u64 {
            let (s, chi) = random_complex_twist(g, &mut rng);
            let c = complex_twist_check(g, &s, &chi, n, cfg.seed_for(100 + 10 * gi as u64 + i))?;
            out.push(
                format!("{name} complex generating functional #{i}"),
                c.max_z() <= Z_MAX,
                json!({ "identity": "E prod s^N exp(-<chi, rho>) = det ratio, alpha = 1",
                        "lhs": [c.loop_re.mean, c.loop_im.mean], "se": [c.loop_re.se, c.loop_im.se],
                        "rhs": [c.field_re, c.field_im], "z": c.max_z() }),
            );
            let (s, chi) = random_real_twist(g, &mut rng);
            let c = real_twist_check(g, &s, &chi, n, cfg.seed_for(200 + 10 * gi as u64 + i))?;
            out.push(
                format!("{name} real generating functional #{i}"),
                c.max_z() <= Z_MAX,
                json!({ "identity": "E prod s^N exp(-<chi, rho>) = sqrt(det ratio), alpha = 1/2",
                        "lhs": c.loop_re.mean, "se": c.loop_re.se, "rhs": c.field_re, "z": c.max_z() }),
            );
        }
    }

    let two = WeightedGraph::two_vertex();
    let k4 = weighted_k4();
    let anchors: [(&str, &WeightedGraph, f64, Vec<(usize, usize)>, Vec<usize>); 6] = [
        (
            "two-vertex E N(0,1) N(1,0)",
            &two,
            1.0,
            vec![(0, 1), (1, 0)],
            vec![],
        ),
        ("two-vertex E (N_0 + 1)", &two, 1.0, vec![], vec![0]),
        (
            "two-vertex alpha=1/2 E (N_0 + 1/2)",
            &two,
            0.5,
            vec![],
            vec![0],
        ),
        (
            "weighted K4 E N(0,1) N(1,2) N(2,0) (N_3 + 1)",
            &k4,
            1.0,
            vec![(0, 1), (1, 2), (2, 0)],
            vec![3],
        ),
        (
            "weighted K4 E N(0,1) N(1,0) N(2,3)",
            &k4,
            1.0,
            vec![(0, 1), (1, 0), (2, 3)],
            vec![],
        ),
        (
            "weighted K4 alpha=1/2 E N{0,1} N{2,3} (N_1 + 1/2)",
            &k4,
            0.5,
            vec![(0, 1), (2, 3)],
            vec![1],
        ),
    ];
    for (i, (label, g, alpha, edges, verts)) in anchors.iter().enumerate() {
        let m = moment_identity_check(g, *alpha, edges, verts, n, cfg.seed_for(300 + i as u64))?;
        out.mean(*label, m.mc, m.wick);
    }
    out.close(
        "two-vertex Wick value of E N(0,1) N(1,0) by hand",
        {
            let gm = two.green_function();
            gm.get(0, 1).powi(2) + gm.get(0, 0) * gm.get(1, 1)
        },
        5.0 / 9.0,
        1e-15,
    );

    for (i, (name, g)) in [
        ("two-vertex", two.clone()),
        ("triangle", triangle()),
        ("weighted K4", k4.clone()),
    ]
    .iter()
    .enumerate()
    {
        let chi: Vec<f64> = g.duality_measure().as_slice().to_vec();
        let c = det_perm_identity_check(g, &chi, n, cfg.seed_for(400 + i as u64))?;
        out.push(
            format!("{name} det/perm at chi = lambda"),
            c.normalized_z() <= Z_MAX,
            json!({ "mc": c.normalized.mean, "se": c.normalized.se, "rhs": c.rhs, "z": c.normalized_z(),
                    "without_lambda_normalization": c.literal.mean }),
        );
        out.push(
            format!("{name} even det expansion at chi = lambda"),
            c.even_z() <= Z_MAX,
            json!({ "mc": c.even_expansion.mean, "se": c.even_expansion.se, "rhs": c.even_rhs, "z": c.even_z(),
                    "doubled_det_form": c.even_literal.mean, "permanent_rhs": c.rhs }),
        );
    }
    Ok(())
}

fn isomorphism(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(100_000);
    for (gi, (name, g)) in [
        ("two-vertex", WeightedGraph::two_vertex()),
        ("triangle", triangle()),
    ]
    .iter()
    .enumerate()
    {
        for (ai, alpha) in [1.0, 0.5].into_iter().enumerate() {
            let c = isomorphism_check(g, alpha, n, cfg.seed_for(500 + 2 * gi as u64 + ai as u64))?;
            for v in &c.vertices {
                out.push(
                    format!("{name} alpha={alpha} KS at vertex {}", v.vertex),
                    v.ks.p_value > P_MIN,
                    json!({ "statistic": v.ks.statistic, "p": v.ks.p_value }),
                );
                out.mean(
                    format!("{name} alpha={alpha} E L({})", v.vertex),
                    v.mean,
                    v.mean_exact,
                );
                out.mean(
                    format!("{name} alpha={alpha} E L({})^2", v.vertex),
                    v.second_moment,
                    v.second_moment_exact,
                );
            }
            if let Some((x, y, est, exact)) = c.pair {
                out.mean(format!("{name} alpha={alpha} E L({x}) L({y})"), est, exact);
            }
        }
    }
    Ok(())
}

fn markov(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(400_000);
    let path3 = WeightedGraph::path(3, 1.0)?;
    let path4 = WeightedGraph::path(4, 1.0)?;
    let cases: [(&str, &WeightedGraph, Vec<bool>, f64, u64); 3] = [
        (
            "3-path {0}|{1,2} alpha=1",
            &path3,
            vec![false, true, true],
            1.0,
            110,
        ),
        (
            "3-path {0}|{1,2} alpha=1/2",
            &path3,
            vec![false, true, true],
            0.5,
            111,
        ),
        (
            "4-path {0,1}|{2,3} alpha=1",
            &path4,
            vec![false, false, true, true],
            1.0,
            112,
        ),
    ];
    for (name, g, side, alpha, tag) in cases {
        let samples = sample_with_occupation(g, alpha, n, cfg.seed_for(tag))?;
        let check = markov_property_check(g, &side, alpha, &samples, MIN_CELL_HITS)?;
        out.push(
            format!("{name} cells tested"),
            !check.cells.is_empty(),
            json!({ "cells": check.cells.len(), "skipped_samples": check.skipped }),
        );
        for cell in &check.cells {
            out.push(
                format!("{name} given {:?}", cell.key),
                cell.report.passes(P_MIN),
                json!({ "hits": cell.hits, "statistic": cell.report.statistic, "df": cell.report.df, "p": cell.report.p_value }),
            );
        }
    }
    Ok(())
}

/// `E z^{|N|} = det(I - P) / det(I - z P)` for the total jump count.
fn total_jump_transform(g: &WeightedGraph, z: f64) -> f64 {
    let n = g.vertex_count();
    let m = DMatrix::from_fn(n, n, |x, y| {
        if x == y {
            g.lambda(x)
        } else {
            -z * g.conductance(x, y)
        }
    });
    let prod: f64 = (0..n).map(|x| g.lambda(x)).product();
    g.det_i_minus_p() / (m.determinant() / prod)
}

fn quasi_invariance(cfg: &SuiteConfig, out: &mut Outcome) -> Result<()> {
    let n = cfg.n(400_000);
    for (tag, name, g) in [
        (120, "two-vertex", WeightedGraph::two_vertex()),
        (121, "triangle", triangle()),
    ] {
        let k = EulerianNetwork::from_triples(&g, &[(0, 1, 1), (1, 0, 1)])?;
        let samples = sample_networks(&g, 1.0, n, cfg.seed_for(tag))?;
        let decay = 0.3f64;
        let z = (-decay).exp();
        let shift = z.powi(k.total() as i32);
        let fs: [(&str, Box<dyn Fn(&EulerianNetwork) -> f64 + Sync>, f64); 2] = [
            ("F = 1", Box::new(|_| 1.0), 1.0),
            (
                "F = exp(-0.3 |N|)",
                Box::new(move |s| (-decay * s.total() as f64).exp()),
                shift * total_jump_transform(&g, z),
            ),
        ];
        for (label, f, exact) in fs {
            let q = quasi_invariance_check(&g, &k, f, &samples)?;
            let (zl, zr) = (q.lhs.z_score(exact), q.rhs.z_score(exact));
            out.push(
                format!("{name} {label}"),
                zl <= Z_MAX && zr <= Z_MAX,
                json!({ "lhs": q.lhs.mean, "lhs_se": q.lhs.se, "rhs": q.rhs.mean, "rhs_se": q.rhs.se,
                        "exact": exact, "z_lhs": zl, "z_rhs": zr }),
            );
        }
    }
    Ok(())
}
