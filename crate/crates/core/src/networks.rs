//! Integer edge fields and their exact laws.
//!
//! An [`EulerianNetwork`] counts traversals of oriented edges with in-flow
//! equal to out-flow at every vertex; the jump counts of a loop ensemble are
//! always of this kind. An [`EvenNetwork`] lives on unordered edges with an
//! even total at every vertex. Probabilities are evaluated in log space so
//! that factorials of totals in the tens do not overflow.

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::stats::McEstimate;

/// Nonnegative integer counts on oriented edges, stored as a dense `n x n`
/// row-major matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EulerianNetwork {
    n: usize,
    counts: Vec<u32>,
}

/// The jump-count field of a loop ensemble.
pub type EdgeNetwork = EulerianNetwork;

impl EulerianNetwork {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Builds from a dense row-major matrix. Does not check the Eulerian
    /// property; see [`EulerianNetwork::validate`].
    pub fn from_dense(n: usize, counts: Vec<u32>) -> Self {
        assert_eq!(counts.len(), n * n, "dense network must be n x n");
        Self { n, counts }
    }

    /// Builds from `(x, y, count)` triples and validates against `g`.
    pub fn from_triples(g: &WeightedGraph, triples: &[(usize, usize, u32)]) -> Result<Self> {
        let n = g.vertex_count();
        let mut net = Self::zeros(n);
        for &(x, y, c) in triples {
            if x >= n || y >= n {
                return Err(Error::InvalidInput(format!(
                    "vertex out of range in ({x}, {y})"
                )));
            }
            net.counts[x * n + y] += c;
        }
        net.validate(g)?;
        Ok(net)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[x * self.n + y]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u32) {
        self.counts[x * self.n + y] = value;
    }

    pub fn increment(&mut self, x: usize, y: usize) {
        self.counts[x * self.n + y] += 1;
    }

    pub fn as_dense(&self) -> &[u32] {
        &self.counts
    }

    /// Out-degree `k_x = sum_y k_xy`.
    pub fn vertex_total(&self, x: usize) -> u32 {
        self.counts[x * self.n..(x + 1) * self.n].iter().sum()
    }

    pub fn in_total(&self, x: usize) -> u32 {
        (0..self.n).map(|y| self.get(y, x)).sum()
    }

    pub fn vertex_totals(&self) -> Vec<u32> {
        (0..self.n).map(|x| self.vertex_total(x)).collect()
    }

    /// `sum_{x,y} k_xy`.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn first_non_eulerian_vertex(&self) -> Option<usize> {
        (0..self.n).find(|&x| self.vertex_total(x) != self.in_total(x))
    }

    pub fn is_eulerian(&self) -> bool {
        self.first_non_eulerian_vertex().is_none()
    }

    /// Checks size, support on the edges of `g`, and the Eulerian property.
    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.n != g.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "network has {} vertices, graph has {}",
                self.n,
                g.vertex_count()
            )));
        }
        for x in 0..self.n {
            for y in 0..self.n {
                if self.get(x, y) > 0 && !g.is_edge(x, y) {
                    return Err(Error::OffGraph(x, y));
                }
            }
        }
        match self.first_non_eulerian_vertex() {
            Some(vertex) => Err(Error::NotEulerian { vertex }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for x in 0..n {
            for y in 0..n {
                t.counts[y * n + x] = self.counts[x * n + y];
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Self { n: self.n, counts }
    }

    /// Entrywise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.counts.iter().zip(&other.counts).all(|(a, b)| a >= b)
    }

    /// `k_{x,y} + k_{y,x}` on unordered edges.
    pub fn symmetrized(&self) -> EvenNetwork {
        let n = self.n;
        let mut counts = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                counts[x * n + y] = self.get(x, y) + self.get(y, x);
            }
        }
        EvenNetwork { n, counts }
    }

    /// Antisymmetric part `k - k^T`.
    pub fn homology_class(&self) -> HomologyClass {
        let n = self.n;
        let values = (0..n * n)
            .map(|i| {
                let (x, y) = (i / n, i % n);
                self.get(x, y) as i64 - self.get(y, x) as i64
            })
            .collect();
        HomologyClass { n, values }
    }

    /// `R_x = N_x^2 - sum_y N_xy^2`.
    pub fn r_field(&self) -> Vec<u64> {
        (0..self.n)
            .map(|x| {
                let row = &self.counts[x * self.n..(x + 1) * self.n];
                let total: u64 = row.iter().map(|&c| c as u64).sum();
                total * total - row.iter().map(|&c| (c as u64) * (c as u64)).sum::<u64>()
            })
            .collect()
    }

    /// Oriented-edge counts in the order of [`WeightedGraph::oriented_edges`].
    pub fn edge_vector(&self, g: &WeightedGraph) -> Vec<u32> {
        g.oriented_edges()
            .iter()
            .map(|&(x, y)| self.get(x, y))
            .collect()
    }

    pub fn from_edge_vector(g: &WeightedGraph, values: &[u32]) -> Self {
        let mut net = Self::zeros(g.vertex_count());
        for (&(x, y), &v) in g.oriented_edges().iter().zip(values) {
            net.set(x, y, v);
        }
        net
    }
}

/// Nonnegative integers on unordered edges, stored symmetric and dense.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvenNetwork {
    n: usize,
    counts: Vec<u32>,
}

impl EvenNetwork {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Builds from `(x, y, count)` triples on unordered pairs and validates.
    pub fn from_triples(g: &WeightedGraph, triples: &[(usize, usize, u32)]) -> Result<Self> {
        let n = g.vertex_count();
        let mut net = Self::zeros(n);
        for &(x, y, c) in triples {
            if x >= n || y >= n {
                return Err(Error::InvalidInput(format!(
                    "vertex out of range in ({x}, {y})"
                )));
            }
            if x == y {
                return Err(Error::OffGraph(x, y));
            }
            net.counts[x * n + y] += c;
            net.counts[y * n + x] += c;
        }
        net.validate(g)?;
        Ok(net)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[x * self.n + y]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u32) {
        self.counts[x * self.n + y] = value;
        self.counts[y * self.n + x] = value;
    }

    /// `sum_y k_{x,y}`, always even for a valid network.
    pub fn degree(&self, x: usize) -> u32 {
        self.counts[x * self.n..(x + 1) * self.n].iter().sum()
    }

    /// `k_x = degree / 2`.
    pub fn vertex_total(&self, x: usize) -> u32 {
        self.degree(x) / 2
    }

    pub fn vertex_totals(&self) -> Vec<u32> {
        (0..self.n).map(|x| self.vertex_total(x)).collect()
    }

    /// Sum over unordered edges.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum::<u32>() / 2
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.n != g.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "network has {} vertices, graph has {}",
                self.n,
                g.vertex_count()
            )));
        }
        for x in 0..self.n {
            for y in 0..self.n {
                if self.get(x, y) != self.get(y, x) {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric entry at ({x}, {y})"
                    )));
                }
                if self.get(x, y) > 0 && !g.is_edge(x, y) {
                    return Err(Error::OffGraph(x, y));
                }
            }
        }
        match (0..self.n).find(|&x| self.degree(x) % 2 == 1) {
            Some(vertex) => Err(Error::NotEven { vertex }),
            None => Ok(()),
        }
    }

    /// Counts per edge in the order of [`WeightedGraph::edges`].
    pub fn edge_vector(&self, g: &WeightedGraph) -> Vec<u32> {
        g.edges().iter().map(|e| self.get(e.u, e.v)).collect()
    }

    pub fn from_edge_vector(g: &WeightedGraph, values: &[u32]) -> Self {
        let mut net = Self::zeros(g.vertex_count());
        for (e, &v) in g.edges().iter().zip(values) {
            net.set(e.u, e.v, v);
        }
        net
    }
}

/// Antisymmetric integer matrix supported on edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HomologyClass {
    n: usize,
    values: Vec<i64>,
}

impl HomologyClass {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0; n * n],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.values[x * self.n + y]
    }

    /// Sets `h_xy = value` and `h_yx = -value`.
    pub fn set(&mut self, x: usize, y: usize, value: i64) {
        self.values[x * self.n + y] = value;
        self.values[y * self.n + x] = -value;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// `j_xy = max(h_xy, 0)`.
    pub fn flow(&self) -> Flow {
        let counts = self.values.iter().map(|&v| v.max(0) as u32).collect();
        Flow { n: self.n, counts }
    }
}

/// An Eulerian network without two-way traffic on any edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Flow {
    n: usize,
    counts: Vec<u32>,
}

impl Flow {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[x * self.n + y]
    }

    pub fn vertex_total(&self, x: usize) -> u32 {
        self.counts[x * self.n..(x + 1) * self.n].iter().sum()
    }

    /// Inverse of [`HomologyClass::flow`].
    pub fn homology_class(&self) -> HomologyClass {
        let n = self.n;
        let values = (0..n * n)
            .map(|i| {
                let (x, y) = (i / n, i % n);
                self.get(x, y) as i64 - self.get(y, x) as i64
            })
            .collect();
        HomologyClass { n, values }
    }

    pub fn as_network(&self) -> EulerianNetwork {
        EulerianNetwork::from_dense(self.n, self.counts.clone())
    }

    /// Transition matrix `q[x][y] = j_xy / j_x`, identity rows where `j_x = 0`.
    pub fn markov_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n;
        nalgebra::DMatrix::from_fn(n, n, |x, y| {
            let total = self.vertex_total(x);
            if total == 0 {
                if x == y {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.get(x, y) as f64 / total as f64
            }
        })
    }

    /// `S_x = j_x^2 - sum_y j_xy^2`.
    pub fn stochasticity(&self, x: usize) -> u64 {
        let row = &self.counts[x * self.n..(x + 1) * self.n];
        let total: u64 = row.iter().map(|&c| c as u64).sum();
        total * total - row.iter().map(|&c| (c as u64) * (c as u64)).sum::<u64>()
    }
}

/// `j(h)`: positive part of a homology class.
pub fn flow_of(h: &HomologyClass) -> Flow {
    h.flow()
}

/// `P(N^(1) = k) = det(I-P) prod_x k_x! / prod k_xy! prod P_xy^k_xy`.
pub fn pmf_eulerian(g: &WeightedGraph, k: &EulerianNetwork) -> Result<f64> {
    k.validate(g)?;
    Ok(ln_pmf_eulerian(g, k).exp())
}

pub(crate) fn ln_pmf_eulerian(g: &WeightedGraph, k: &EulerianNetwork) -> f64 {
    let n = g.vertex_count();
    let p = g.transition_matrix();
    let mut acc = g.det_i_minus_p().ln();
    for x in 0..n {
        acc += ln_factorial(k.vertex_total(x) as u64);
        for &y in g.neighbors(x) {
            let c = k.get(x, y);
            if c > 0 {
                acc += c as f64 * p.get(x, y).ln() - ln_factorial(c as u64);
            }
        }
    }
    acc
}

/// Joint density of `(N^(1), occupation field)` at `(k, rho)`.
pub fn joint_density_eulerian(g: &WeightedGraph, k: &EulerianNetwork, rho: &[f64]) -> Result<f64> {
    k.validate(g)?;
    check_rho(rho, g.vertex_count())?;
    let n = g.vertex_count();
    let mut acc = g.det_i_minus_p().ln();
    for x in 0..n {
        let lam = g.lambda(x);
        acc += lam.ln() - lam * rho[x];
        for &y in g.neighbors(x) {
            let c = k.get(x, y);
            if c > 0 {
                let base = (rho[x] * rho[y]).sqrt() * g.conductance(x, y);
                if base == 0.0 {
                    return Ok(0.0);
                }
                acc += c as f64 * base.ln() - ln_factorial(c as u64);
            }
        }
    }
    Ok(acc.exp())
}

/// `P(N^(1/2) = k)` for an even network `k`.
///
/// The edge weight is `C_xy / sqrt(lambda_x lambda_y)` to the power
/// `k_{x,y}`, the orientation-free form of `P_xy`.
pub fn pmf_even(g: &WeightedGraph, k: &EvenNetwork) -> Result<f64> {
    k.validate(g)?;
    Ok(ln_pmf_even(g, k).exp())
}

pub(crate) fn ln_pmf_even(g: &WeightedGraph, k: &EvenNetwork) -> f64 {
    let n = g.vertex_count();
    let mut acc = 0.5 * g.det_i_minus_p().ln();
    for x in 0..n {
        let kx = k.vertex_total(x) as u64;
        acc += ln_factorial(2 * kx) - kx as f64 * std::f64::consts::LN_2 - ln_factorial(kx);
    }
    for e in g.edges() {
        let c = k.get(e.u, e.v);
        if c > 0 {
            let w = e.conductance / (g.lambda(e.u) * g.lambda(e.v)).sqrt();
            acc += c as f64 * w.ln() - ln_factorial(c as u64);
        }
    }
    acc
}

/// Joint density of `(N^(1/2) symmetrized, occupation field of the
/// alpha = 1/2 ensemble)` at `(k, rho)`. Conditionally on `k`, `rho_x` is
/// Gamma with shape `k_x + 1/2` and rate `lambda_x`.
pub fn joint_density_even(g: &WeightedGraph, k: &EvenNetwork, rho: &[f64]) -> Result<f64> {
    k.validate(g)?;
    check_rho(rho, g.vertex_count())?;
    let n = g.vertex_count();
    if let Some(x) = (0..n).find(|&x| rho[x] <= 0.0) {
        return Err(Error::NegativeOccupation {
            vertex: x,
            value: rho[x],
        });
    }
    let mut acc = 0.5 * g.det_i_minus_p().ln();
    for x in 0..n {
        let lam = g.lambda(x);
        acc += 0.5 * (lam / (std::f64::consts::PI * rho[x])).ln() - lam * rho[x];
    }
    for e in g.edges() {
        let c = k.get(e.u, e.v);
        if c > 0 {
            let base = 2.0 * (rho[e.u] * rho[e.v]).sqrt() * e.conductance;
            acc += c as f64 * base.ln() - ln_factorial(c as u64);
        }
    }
    Ok(acc.exp())
}

fn check_rho(rho: &[f64], n: usize) -> Result<()> {
    if rho.len() != n {
        return Err(Error::InvalidInput(format!(
            "rho has {} entries, expected {n}",
            rho.len()
        )));
    }
    if let Some((x, &v)) = rho.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeOccupation {
            vertex: x,
            value: v,
        });
    }
    Ok(())
}

/// Modified Bessel function of the first kind `I_nu(x)` for integer order,
/// by its power series. Terms are added until they fall below `1e-17` of the
/// running sum.
pub fn bessel_i(nu: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i needs x >= 0");
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // (x/2)^nu / nu!, in log space so large orders do not overflow.
    let mut term = (nu as f64 * half.ln() - ln_factorial(nu as u64)).exp();
    let q = half * half;
    let mut sum = term;
    let mut m = 0u64;
    loop {
        m += 1;
        term *= q / (m as f64 * (m + nu as u64) as f64);
        sum += term;
        if term < 1e-17 * sum && m as f64 > half {
            break;
        }
    }
    sum
}

/// Joint density of the flow `j(N^(1) - N^(1)T)` and the occupation field,
/// `det(I-P) prod_{edges} I_{h_e}(2 sqrt(rho_x rho_y) C_xy) prod_x lambda_x e^{-lambda_x rho_x}`,
/// where `h_e` is the flow on edge `e` in whichever direction it runs.
pub fn flow_joint_density(g: &WeightedGraph, h: &Flow, rho: &[f64]) -> Result<f64> {
    check_rho(rho, g.vertex_count())?;
    let n = g.vertex_count();
    let mut acc = g.det_i_minus_p().ln();
    for x in 0..n {
        let lam = g.lambda(x);
        acc += lam.ln() - lam * rho[x];
    }
    let mut prod = 1.0;
    for e in g.edges() {
        let order = h.get(e.u, e.v).max(h.get(e.v, e.u));
        let z = 2.0 * (rho[e.u] * rho[e.v]).sqrt() * e.conductance;
        prod *= bessel_i(order, z);
    }
    for x in 0..n {
        for y in 0..n {
            if h.get(x, y) > 0 && !g.is_edge(x, y) {
                return Err(Error::OffGraph(x, y));
            }
        }
    }
    Ok(acc.exp() * prod)
}

/// Both sides of the shift identity
/// `E F(N + k) = E[1{N >= k} F(N) prod (N_x-k_x)!/N_x! prod N_xy!/(N_xy-k_xy)! prod P^-k]`
/// estimated from the same samples of `N^(1)`.
#[derive(Debug, Clone)]
pub struct QuasiInvariance {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
}

pub fn quasi_invariance_check<F>(
    g: &WeightedGraph,
    k: &EulerianNetwork,
    functional: F,
    samples: &[EulerianNetwork],
) -> Result<QuasiInvariance>
where
    F: Fn(&EulerianNetwork) -> f64,
{
    k.validate(g)?;
    let n = g.vertex_count();
    let p = g.transition_matrix();
    let lhs: Vec<f64> = samples.iter().map(|s| functional(&s.add(k))).collect();
    let rhs: Vec<f64> = samples
        .iter()
        .map(|s| {
            if !s.dominates(k) {
                return 0.0;
            }
            let mut acc = 0.0;
            for x in 0..n {
                let (sx, kx) = (s.vertex_total(x) as u64, k.vertex_total(x) as u64);
                acc += ln_factorial(sx - kx) - ln_factorial(sx);
                for &y in g.neighbors(x) {
                    let (sxy, kxy) = (s.get(x, y) as u64, k.get(x, y) as u64);
                    if kxy > 0 {
                        acc += ln_factorial(sxy)
                            - ln_factorial(sxy - kxy)
                            - kxy as f64 * p.get(x, y).ln();
                    }
                }
            }
            functional(s) * acc.exp()
        })
        .collect();
    Ok(QuasiInvariance {
        lhs: McEstimate::from_values(&lhs),
        rhs: McEstimate::from_values(&rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_eulerian, networks_with_flow};
    use crate::graph::WeightedGraph;

    fn two() -> WeightedGraph {
        WeightedGraph::two_vertex()
    }

    fn unit_pair(g: &WeightedGraph, m: u32) -> EulerianNetwork {
        EulerianNetwork::from_triples(g, &[(0, 1, m), (1, 0, m)]).unwrap()
    }

    #[test]
    fn pmf_eulerian_examples() {
        let g = two();
        assert!((pmf_eulerian(&g, &EulerianNetwork::zeros(2)).unwrap() - 0.75).abs() < 1e-15);
        assert!((pmf_eulerian(&g, &unit_pair(&g, 1)).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        let total: f64 = (0..=20)
            .map(|m| pmf_eulerian(&g, &unit_pair(&g, m)).unwrap())
            .sum();
        // Geometric tail beyond m = 20 is (1/4)^21.
        assert!((total + 0.25f64.powi(21) - 1.0).abs() < 1e-12);
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pmf_eulerian_rejects_bad_input() {
        let g = two();
        let mut k = EulerianNetwork::zeros(2);
        k.set(0, 1, 1);
        assert!(matches!(
            pmf_eulerian(&g, &k),
            Err(Error::NotEulerian { .. })
        ));
        let path = WeightedGraph::path(3, 1.0).unwrap();
        let mut off = EulerianNetwork::zeros(3);
        off.set(0, 2, 1);
        off.set(2, 0, 1);
        assert!(matches!(
            pmf_eulerian(&path, &off),
            Err(Error::OffGraph(0, 2))
        ));
    }

    #[test]
    fn pmf_eulerian_triangle_normalizes() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let total: f64 = enumerate_eulerian(&g, 12)
            .iter()
            .map(|k| pmf_eulerian(&g, k).unwrap())
            .sum();
        // The total jump count has generating function det(I-P)/det(I-zP),
        // whose coefficients come from exp(sum z^k tr(P^k)/k).
        let p = g.transition_matrix().matrix();
        let t_max = 12;
        let mut traces = vec![0.0; t_max + 1];
        let mut power = p.clone();
        for k in 1..=t_max {
            traces[k] = power.trace() / k as f64;
            power = &power * p;
        }
        let mut series = vec![0.0; t_max + 1];
        series[0] = 1.0;
        // Coefficients of exp(f) via a_t = (1/t) sum_k k f_k a_{t-k}.
        for t in 1..=t_max {
            series[t] = (1..=t)
                .map(|k| k as f64 * traces[k] * series[t - k])
                .sum::<f64>()
                / t as f64;
        }
        let expected: f64 = g.det_i_minus_p() * series.iter().sum::<f64>();
        assert!((total - expected).abs() < 1e-12, "{total} vs {expected}");
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn product_of_p_is_convention_free() {
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
        let row = g.transition_matrix();
        let col = g.column_transition_matrix();
        for k in enumerate_eulerian(&g, 6) {
            let mut a = 0.0;
            let mut b = 0.0;
            for (x, y) in g.oriented_edges() {
                let c = k.get(x, y) as f64;
                a += c * row.get(x, y).ln();
                b += c * col.get(x, y).ln();
            }
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_even_examples() {
        let g = two();
        let zero = EvenNetwork::zeros(2);
        assert!((pmf_even(&g, &zero).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        let k2 = EvenNetwork::from_triples(&g, &[(0, 1, 2)]).unwrap();
        let want = 0.75f64.sqrt() * 0.5 * 0.25;
        assert!((pmf_even(&g, &k2).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.108_253_175_473_054_83).abs() < 1e-15);
        let total: f64 = (0..=30)
            .map(|j| {
                pmf_even(
                    &g,
                    &EvenNetwork::from_triples(&g, &[(0, 1, 2 * j)]).unwrap(),
                )
                .unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
        let odd =
            EvenNetwork::from_triples(&WeightedGraph::complete(3, 1.0).unwrap(), &[(0, 1, 1)]);
        assert!(matches!(odd, Err(Error::NotEven { .. })));
    }

    #[test]
    fn joint_density_examples() {
        let g = two();
        let zero = EulerianNetwork::zeros(2);
        let rho = [0.3, 1.1];
        let d = joint_density_eulerian(&g, &zero, &rho).unwrap();
        let want = 0.75 * 2.0 * (-0.6f64).exp() * 2.0 * (-2.2f64).exp();
        assert!((d - want).abs() < 1e-14);
        assert!(joint_density_eulerian(&g, &zero, &[-1.0, 0.0]).is_err());

        // Conditional law of rho given k is Gamma(k_x + 1, lambda_x).
        let k = unit_pair(&g, 2);
        let pk = pmf_eulerian(&g, &k).unwrap();
        for &(a, b) in &[(0.2, 0.9), (1.5, 0.4), (2.0, 2.0)] {
            let joint = joint_density_eulerian(&g, &k, &[a, b]).unwrap();
            let gamma = |r: f64| 8.0 * r * r * (-2.0 * r).exp() / 2.0;
            assert!((joint / pk - gamma(a) * gamma(b)).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_density_even_conditional_is_gamma() {
        let g = WeightedGraph::complete(3, 0.5).unwrap();
        let k = EvenNetwork::from_triples(&g, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let pk = pmf_even(&g, &k).unwrap();
        let rho = [0.4, 1.3, 0.8];
        let joint = joint_density_even(&g, &k, &rho).unwrap();
        let lam = g.lambda(0);
        let gamma = |r: f64, shape: f64| {
            (shape * lam.ln() + (shape - 1.0) * r.ln()
                - lam * r
                - statrs::function::gamma::ln_gamma(shape))
            .exp()
        };
        let want: f64 = rho.iter().map(|&r| gamma(r, 1.5)).product();
        assert!((joint / pk - want).abs() < 1e-12 * want);
    }

    #[test]
    fn homology_and_flow_examples() {
        let g = two();
        assert!(unit_pair(&g, 3).homology_class().is_zero());
        let mut k = EulerianNetwork::zeros(2);
        k.set(0, 1, 2);
        k.set(1, 0, 1);
        let h = k.homology_class();
        assert_eq!(h.get(0, 1), 1);
        assert_eq!(h.get(1, 0), -1);

        let tri = WeightedGraph::complete(3, 1.0).unwrap();
        let cyc = EulerianNetwork::from_triples(&tri, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let hc = cyc.homology_class();
        assert_eq!((hc.get(0, 1), hc.get(1, 2), hc.get(2, 0)), (1, 1, 1));
        assert_eq!((hc.get(1, 0), hc.get(2, 1), hc.get(0, 2)), (-1, -1, -1));

        assert!(flow_of(&HomologyClass::zeros(3)).as_network().is_zero());
        let mut h3 = HomologyClass::zeros(2);
        h3.set(0, 1, 3);
        let j = flow_of(&h3);
        assert_eq!((j.get(0, 1), j.get(1, 0)), (3, 0));
        assert_eq!(j.homology_class(), h3);
    }

    #[test]
    fn flow_markov_examples() {
        let tri = WeightedGraph::complete(3, 1.0).unwrap();
        let zero = flow_of(&HomologyClass::zeros(3));
        assert_eq!(zero.markov_matrix(), nalgebra::DMatrix::identity(3, 3));
        let cyc = EulerianNetwork::from_triples(&tri, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let j = flow_of(&cyc.homology_class());
        let q = j.markov_matrix();
        let want = nalgebra::DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]);
        assert_eq!(q, want);
    }

    #[test]
    fn stochasticity_examples() {
        let k4 = WeightedGraph::complete(4, 1.0).unwrap();
        let mut h = HomologyClass::zeros(4);
        h.set(0, 1, 2);
        h.set(1, 0, -2);
        assert_eq!(h.flow().stochasticity(0), 0);
        let mut h = HomologyClass::zeros(4);
        h.set(0, 1, 1);
        h.set(0, 2, 1);
        h.set(1, 3, 1);
        h.set(2, 3, 1);
        h.set(3, 0, 2);
        assert_eq!(h.flow().stochasticity(0), 2);
        let _ = k4;
    }

    #[test]
    fn zero_stochasticity_means_permutation() {
        let g = WeightedGraph::complete(4, 1.0).unwrap();
        for k in enumerate_eulerian(&g, 6) {
            let j = flow_of(&k.homology_class());
            if (0..4).all(|x| j.stochasticity(x) == 0) {
                let q = j.markov_matrix();
                for x in 0..4 {
                    let row_ones = (0..4).filter(|&y| q[(x, y)] == 1.0).count();
                    let col_ones = (0..4).filter(|&y| q[(y, x)] == 1.0).count();
                    assert_eq!(row_ones, 1);
                    assert_eq!(col_ones, 1);
                }
            }
        }
    }

    #[test]
    fn flow_preserves_vertex_measure() {
        let g = WeightedGraph::complete(4, 1.0).unwrap();
        for k in enumerate_eulerian(&g, 6) {
            let j = flow_of(&k.homology_class());
            let q = j.markov_matrix();
            for y in 0..4 {
                let pushed: f64 = (0..4).map(|x| j.vertex_total(x) as f64 * q[(x, y)]).sum();
                assert_eq!(pushed, j.vertex_total(y) as f64);
            }
        }
    }

    #[test]
    fn r_field_examples() {
        let g = two();
        assert_eq!(EulerianNetwork::zeros(2).r_field(), vec![0, 0]);
        assert_eq!(unit_pair(&g, 1).r_field(), vec![0, 0]);
    }

    #[test]
    fn zero_r_implies_zero_stochasticity() {
        for g in [
            WeightedGraph::complete(3, 1.0).unwrap(),
            WeightedGraph::complete(4, 1.0).unwrap(),
        ] {
            for k in enumerate_eulerian(&g, 6) {
                if k.r_field().iter().all(|&r| r == 0) {
                    let j = flow_of(&k.homology_class());
                    assert!((0..g.vertex_count()).all(|x| j.stochasticity(x) == 0));
                }
            }
        }
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_i(0, 0.0), 1.0);
        assert_eq!(bessel_i(3, 0.0), 0.0);
        assert!((bessel_i(1, 2.0) - 1.590_636_854_637_329).abs() < 1e-14);
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
    }

    #[test]
    fn flow_density_is_sum_over_networks() {
        // On the two-vertex graph every flow is zero; the Bessel kernel must
        // reproduce the sum of the network densities over k_ab = k_ba = m.
        let g = two();
        let zero_flow = flow_of(&HomologyClass::zeros(2));
        for &rho in &[[0.3, 0.5], [1.2, 2.5], [4.0, 0.1]] {
            let lhs = flow_joint_density(&g, &zero_flow, &rho).unwrap();
            let rhs: f64 = (0..80)
                .map(|m| joint_density_eulerian(&g, &unit_pair(&g, m), &rho).unwrap())
                .sum();
            assert!(
                (lhs - rhs).abs() < 1e-10 * rhs.max(1e-300),
                "{lhs} vs {rhs}"
            );
        }
        // Triangle: a winding-w flow collects all networks with that class.
        let tri = WeightedGraph::complete(3, 1.0).unwrap();
        let rho = [0.7, 0.4, 1.1];
        for w in 0..3u32 {
            let flow = flow_of(
                &EulerianNetwork::from_triples(&tri, &[(0, 1, w), (1, 2, w), (2, 0, w)])
                    .unwrap()
                    .homology_class(),
            );
            let lhs = flow_joint_density(&tri, &flow, &rho).unwrap();
            let rhs: f64 = networks_with_flow(&tri, &flow, 40)
                .iter()
                .map(|k| joint_density_eulerian(&tri, k, &rho).unwrap())
                .sum();
            assert!((lhs - rhs).abs() < 1e-10 * rhs, "w={w}: {lhs} vs {rhs}");
        }
    }
}
