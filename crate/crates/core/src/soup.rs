//! Poissonian ensembles of discrete-time loops.
//!
//! Loops of length `k` carry total mass `m_k = tr(P^k) / k`. A sample of the
//! ensemble at intensity `alpha` draws a Poisson number of loops with mean
//! `alpha * sum_k m_k`, a length for each loop from the masses, a base point
//! `x` with probability `(P^k)_xx / tr(P^k)`, and then the steps of the loop
//! as a Markov bridge from `x` back to `x`. Forgetting the base point (by
//! canonical rotation) yields unbased loops with weight
//! `prod P / multiplicity`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::networks::{EulerianNetwork, EvenNetwork};
use crate::rng::seeded;

/// Default bound on the loop mass dropped by truncating lengths.
pub const DEFAULT_TAIL_EPS: f64 = 1e-9;
const MAX_DEFAULT_KMAX: usize = 20_000;

/// A loop stored by its lexicographically smallest rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteLoop {
    vertices: Vec<usize>,
    multiplicity: usize,
}

impl DiscreteLoop {
    /// Canonicalizes a cyclic vertex sequence of length at least 2.
    pub fn new(seq: &[usize]) -> Self {
        assert!(seq.len() >= 2, "a discrete loop has at least two steps");
        let k = seq.len();
        let best = (0..k)
            .min_by(|&a, &b| {
                (0..k)
                    .map(|i| seq[(a + i) % k])
                    .cmp((0..k).map(|i| seq[(b + i) % k]))
            })
            .unwrap();
        let vertices: Vec<usize> = (0..k).map(|i| seq[(best + i) % k]).collect();
        let period = (1..=k)
            .find(|&p| k.is_multiple_of(p) && (0..k).all(|i| vertices[i] == vertices[i % p]))
            .unwrap();
        Self {
            vertices,
            multiplicity: k / period,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// Oriented steps `(v_i, v_{i+1})`, cyclically.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| (self.vertices[i], self.vertices[(i + 1) % k]))
    }

    pub fn reversed(&self) -> Self {
        let rev: Vec<usize> = self.vertices.iter().rev().copied().collect();
        Self::new(&rev)
    }

    pub fn add_to(&self, net: &mut EulerianNetwork) {
        for (x, y) in self.steps() {
            net.increment(x, y);
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopEnsemble {
    pub loops: Vec<DiscreteLoop>,
    pub alpha: f64,
    pub seed: u64,
    pub k_max: usize,
    /// Upper bound on the dropped loop mass per unit intensity.
    pub tail_bound: f64,
}

impl LoopEnsemble {
    pub fn edge_network(&self, n: usize) -> EulerianNetwork {
        edge_network(&self.loops, n)
    }

    /// Set when the truncation bound exceeds [`DEFAULT_TAIL_EPS`].
    pub fn truncation_warning(&self) -> Option<String> {
        (self.tail_bound > DEFAULT_TAIL_EPS).then(|| {
            format!(
                "loop lengths truncated at {} drop up to {:.3e} of the loop mass",
                self.k_max, self.tail_bound
            )
        })
    }
}

/// Oriented traversal counts of a family of loops.
pub fn edge_network(loops: &[DiscreteLoop], n: usize) -> EulerianNetwork {
    let mut net = EulerianNetwork::zeros(n);
    for l in loops {
        l.add_to(&mut net);
    }
    net
}

/// Masses `m_k = tr(P^k)/k` for `k = 2..=k_max` and a bound on the tail
/// `sum_{k > k_max} |X| rho^k / k`.
#[derive(Debug, Clone)]
pub struct LoopMasses {
    pub masses: Vec<f64>,
    pub tail_bound: f64,
}

impl LoopMasses {
    pub fn mass(&self, k: usize) -> f64 {
        self.masses[k - 2]
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

pub fn loop_length_masses(g: &WeightedGraph, k_max: usize) -> Result<LoopMasses> {
    if k_max < 2 {
        return Err(Error::InvalidInput("k_max must be at least 2".into()));
    }
    let p = g.transition_matrix().matrix();
    let mut power = p.clone();
    let mut masses = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        power = &power * p;
        masses.push(power.trace() / k as f64);
    }
    Ok(LoopMasses {
        masses,
        tail_bound: tail_bound(g, k_max),
    })
}

fn tail_bound(g: &WeightedGraph, k_max: usize) -> f64 {
    let rho = g.spectral_radius();
    if rho == 0.0 {
        return 0.0;
    }
    let n = g.vertex_count() as f64;
    let k = (k_max + 1) as f64;
    n * rho.powf(k) / (k * (1.0 - rho))
}

/// Smallest `k_max` whose tail bound is below `eps`.
pub fn default_k_max(g: &WeightedGraph, eps: f64) -> usize {
    (2..MAX_DEFAULT_KMAX)
        .find(|&k| tail_bound(g, k) < eps)
        .unwrap_or(MAX_DEFAULT_KMAX)
}

/// Precomputed bridge sampler for one graph.
#[derive(Debug, Clone)]
pub struct LoopSoup<'g> {
    graph: &'g WeightedGraph,
    k_max: usize,
    /// `P^r` for `r = 0..=k_max`, dense row-major.
    powers: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
    total_mass: f64,
    tail_bound: f64,
}

impl<'g> LoopSoup<'g> {
    pub fn new(graph: &'g WeightedGraph, k_max: usize) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::InvalidInput("k_max must be at least 2".into()));
        }
        let n = graph.vertex_count();
        let p = graph.transition_matrix().matrix();
        let mut powers = Vec::with_capacity(k_max + 1);
        let mut current = DMatrix::<f64>::identity(n, n);
        powers.push(row_major(&current));
        let mut cumulative = Vec::with_capacity(k_max - 1);
        let mut acc = 0.0;
        for k in 1..=k_max {
            current = &current * p;
            powers.push(row_major(&current));
            if k >= 2 {
                acc += current.trace() / k as f64;
                cumulative.push(acc);
            }
        }
        Ok(Self {
            graph,
            k_max,
            powers,
            cumulative,
            total_mass: acc,
            tail_bound: tail_bound(graph, k_max),
        })
    }

    /// Sampler with lengths truncated so the dropped mass is below `1e-9`.
    pub fn with_default_truncation(graph: &'g WeightedGraph) -> Result<Self> {
        Self::new(graph, default_k_max(graph, DEFAULT_TAIL_EPS))
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `sum_{k=2}^{k_max} m_k`, the expected loop count at unit intensity.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    fn power(&self, r: usize, x: usize, y: usize) -> f64 {
        self.powers[r][x * self.graph.vertex_count() + y]
    }

    fn sample_count<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> Result<u64> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        let mean = alpha * self.total_mass;
        if mean == 0.0 {
            return Ok(0);
        }
        let poisson = Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(poisson.sample(rng) as u64)
    }

    /// Draws one based loop as a vertex sequence `x_0, ..., x_{k-1}` (the
    /// return to `x_0` is implicit).
    pub fn sample_based_loop<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.graph.vertex_count();
        let u = rng.random::<f64>() * self.total_mass;
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.cumulative.len() - 1);
        let k = idx + 2;

        let trace: f64 = (0..n).map(|x| self.power(k, x, x)).sum();
        let mut v = rng.random::<f64>() * trace;
        let mut start = n - 1;
        for x in 0..n {
            v -= self.power(k, x, x);
            if v < 0.0 {
                start = x;
                break;
            }
        }

        let p = self.graph.transition_matrix();
        let mut seq = Vec::with_capacity(k);
        seq.push(start);
        let mut cur = start;
        for remaining in (1..k).rev() {
            // Step from `cur` with `remaining + 1` steps left before return.
            let denom = self.power(remaining + 1, cur, start);
            let mut u = rng.random::<f64>() * denom;
            let nbrs = self.graph.neighbors(cur);
            let mut next = *nbrs.last().unwrap();
            for &w in nbrs {
                u -= p.get(cur, w) * self.power(remaining, w, start);
                if u < 0.0 {
                    next = w;
                    break;
                }
            }
            seq.push(next);
            cur = next;
        }
        seq
    }

    pub fn sample_loops<R: Rng + ?Sized>(
        &self,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Vec<DiscreteLoop>> {
        let count = self.sample_count(alpha, rng)?;
        Ok((0..count)
            .map(|_| DiscreteLoop::new(&self.sample_based_loop(rng)))
            .collect())
    }

    /// Jump counts of one ensemble, without materializing loops.
    pub fn sample_network<R: Rng + ?Sized>(
        &self,
        alpha: f64,
        rng: &mut R,
    ) -> Result<EulerianNetwork> {
        let n = self.graph.vertex_count();
        let count = self.sample_count(alpha, rng)?;
        let mut net = EulerianNetwork::zeros(n);
        for _ in 0..count {
            let seq = self.sample_based_loop(rng);
            let k = seq.len();
            for i in 0..k {
                net.increment(seq[i], seq[(i + 1) % k]);
            }
        }
        Ok(net)
    }

    pub fn sample_ensemble(&self, alpha: f64, seed: u64) -> Result<LoopEnsemble> {
        let mut rng = seeded(seed, 0);
        let loops = self.sample_loops(alpha, &mut rng)?;
        Ok(LoopEnsemble {
            loops,
            alpha,
            seed,
            k_max: self.k_max,
            tail_bound: self.tail_bound,
        })
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            out[x * n + y] = m[(x, y)];
        }
    }
    out
}

/// One ensemble at intensity `alpha`, reproducible from `seed`.
pub fn sample_ensemble(
    g: &WeightedGraph,
    alpha: f64,
    k_max: usize,
    seed: u64,
) -> Result<LoopEnsemble> {
    LoopSoup::new(g, k_max)?.sample_ensemble(alpha, seed)
}

/// Occupation field `rho_x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationField(pub Vec<f64>);

impl OccupationField {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Draws the occupation field conditionally on vertex totals `N_x`: Gamma
/// with shape `N_x + alpha` and rate `lambda_x`, independently over `x`.
///
/// For `alpha = 1` the totals are the out-degrees of the Eulerian network;
/// for `alpha = 1/2` they are half the degrees of the even network.
pub fn occupation_field<R: Rng + ?Sized>(
    g: &WeightedGraph,
    totals: &[u32],
    alpha: f64,
    rng: &mut R,
) -> Result<OccupationField> {
    if alpha != 1.0 && alpha != 0.5 {
        return Err(Error::UnsupportedAlpha(alpha));
    }
    if totals.len() != g.vertex_count() {
        return Err(Error::InvalidInput(
            "totals length does not match graph".into(),
        ));
    }
    let rho = totals
        .iter()
        .enumerate()
        .map(|(x, &t)| {
            let gamma = Gamma::new(t as f64 + alpha, 1.0 / g.lambda(x))
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok(gamma.sample(rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OccupationField(rho))
}

pub fn occupation_field_eulerian<R: Rng + ?Sized>(
    g: &WeightedGraph,
    net: &EulerianNetwork,
    rng: &mut R,
) -> Result<OccupationField> {
    net.validate(g)?;
    occupation_field(g, &net.vertex_totals(), 1.0, rng)
}

pub fn occupation_field_even<R: Rng + ?Sized>(
    g: &WeightedGraph,
    net: &EvenNetwork,
    rng: &mut R,
) -> Result<OccupationField> {
    net.validate(g)?;
    occupation_field(g, &net.vertex_totals(), 0.5, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::McEstimate;

    #[test]
    fn canonical_rotation() {
        let l = DiscreteLoop::new(&[2, 0, 1]);
        assert_eq!(l.vertices(), &[0, 1, 2]);
        assert_eq!(l.multiplicity(), 1);
        let l = DiscreteLoop::new(&[1, 0, 1, 0]);
        assert_eq!(l.vertices(), &[0, 1, 0, 1]);
        assert_eq!(l.multiplicity(), 2);
        assert_eq!(DiscreteLoop::new(&[0, 1, 2]), DiscreteLoop::new(&[1, 2, 0]));
        assert_ne!(DiscreteLoop::new(&[0, 1, 2]), DiscreteLoop::new(&[0, 2, 1]));
        assert_eq!(
            DiscreteLoop::new(&[0, 1, 2]).reversed(),
            DiscreteLoop::new(&[0, 2, 1])
        );
    }

    #[test]
    fn masses_examples() {
        let g = WeightedGraph::two_vertex();
        let m = loop_length_masses(&g, 60).unwrap();
        assert!((m.mass(2) - 0.25).abs() < 1e-15);
        // Odd lengths vanish on a bipartite graph.
        assert_eq!(m.mass(3), 0.0);
        let log_det = -g.det_i_minus_p().ln();
        assert!((m.total() - log_det).abs() <= m.tail_bound + 1e-14);
        assert!(loop_length_masses(&g, 1).is_err());
    }

    #[test]
    fn mass_two_is_edge_sum() {
        let g = WeightedGraph::new(
            4,
            vec![
                crate::graph::Edge {
                    u: 0,
                    v: 1,
                    conductance: 0.7,
                },
                crate::graph::Edge {
                    u: 1,
                    v: 2,
                    conductance: 2.1,
                },
                crate::graph::Edge {
                    u: 2,
                    v: 0,
                    conductance: 1.3,
                },
                crate::graph::Edge {
                    u: 2,
                    v: 3,
                    conductance: 0.4,
                },
            ],
            vec![0.2, 0.0, 0.5, 1.0],
        )
        .unwrap();
        let p = g.transition_matrix();
        let direct: f64 = g
            .edges()
            .iter()
            .map(|e| p.get(e.u, e.v) * p.get(e.v, e.u))
            .sum();
        let m = loop_length_masses(&g, 40).unwrap();
        assert!((m.mass(2) - direct).abs() < 1e-15);
        let log_det = -g.det_i_minus_p().ln();
        assert!((m.total() - log_det).abs() <= m.tail_bound + 1e-12);
    }

    #[test]
    fn zero_intensity_is_empty() {
        let g = WeightedGraph::two_vertex();
        let ens = sample_ensemble(&g, 0.0, 20, 3).unwrap();
        assert!(ens.loops.is_empty());
        assert!(ens.edge_network(2).is_zero());
    }

    #[test]
    fn ensembles_are_reproducible_and_eulerian() {
        let g = WeightedGraph::complete(4, 0.3).unwrap();
        let soup = LoopSoup::with_default_truncation(&g).unwrap();
        let a = soup.sample_ensemble(1.0, 99).unwrap();
        let b = soup.sample_ensemble(1.0, 99).unwrap();
        assert_eq!(a.loops, b.loops);
        let mut rng = seeded(5, 0);
        for _ in 0..2000 {
            let loops = soup.sample_loops(1.0, &mut rng).unwrap();
            for l in &loops {
                for (x, y) in l.steps() {
                    assert!(g.is_edge(x, y));
                }
            }
            assert!(edge_network(&loops, 4).is_eulerian());
        }
    }

    #[test]
    fn single_loop_network() {
        let l = DiscreteLoop::new(&[0, 1]);
        let net = edge_network(&[l], 2);
        assert_eq!((net.get(0, 1), net.get(1, 0)), (1, 1));
    }

    #[test]
    fn two_vertex_length_two_count() {
        let g = WeightedGraph::two_vertex();
        let soup = LoopSoup::new(&g, 60).unwrap();
        let mut rng = seeded(11, 0);
        let counts: Vec<f64> = (0..200_000)
            .map(|_| {
                let loops = soup.sample_loops(1.0, &mut rng).unwrap();
                loops.iter().filter(|l| l.len() == 2).count() as f64
            })
            .collect();
        let est = McEstimate::from_values(&counts);
        assert!(est.within(0.25, 3.0), "{est:?}");
    }

    #[test]
    fn occupation_examples() {
        let g = WeightedGraph::two_vertex();
        let mut rng = seeded(1, 0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..100_000 {
            let f = occupation_field(&g, &[0, 2], 1.0, &mut rng).unwrap();
            a.push(f.0[0]);
            b.push(f.0[1]);
        }
        assert!(McEstimate::from_values(&a).within(0.5, 3.0));
        assert!(McEstimate::from_values(&b).within(1.5, 3.0));
        assert!(matches!(
            occupation_field(&g, &[0, 0], 0.3, &mut rng),
            Err(Error::UnsupportedAlpha(_))
        ));
    }
}
