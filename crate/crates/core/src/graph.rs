//! Finite weighted graphs and the Markov data they carry.
//!
//! A [`WeightedGraph`] holds symmetric conductances on edges and a killing
//! measure on vertices. From these we derive the duality measure
//! `lambda_x = sum_y C_xy + kappa_x`, the row-substochastic transition matrix
//! `P[x][y] = C_xy / lambda_x` and the Green function `G = (M_lambda - C)^-1`.
//! All of them are computed once at construction; the graph is immutable.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    #[serde(rename = "c")]
    pub conductance: f64,
}

/// Per-vertex `lambda_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityMeasure(pub Vec<f64>);

impl DualityMeasure {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for DualityMeasure {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(pub DMatrix<f64>);

impl TransitionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction(pub DMatrix<f64>);

impl GreenFunction {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    killing: Vec<f64>,
    conductance: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
    lambda: DualityMeasure,
    transition: TransitionMatrix,
    green: GreenFunction,
    det_i_minus_p: f64,
    spectral_radius: f64,
}

impl WeightedGraph {
    /// Validates and builds a graph. The graph must be connected, free of
    /// self-loops and duplicate edges, have positive conductances, nonnegative
    /// killing, and at least one vertex with positive killing.
    pub fn new(n: usize, edges: Vec<Edge>, killing: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if killing.len() != n {
            return Err(Error::InvalidGraph(format!(
                "killing has {} entries, expected {n}",
                killing.len()
            )));
        }
        let mut conductance = DMatrix::zeros(n, n);
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a vertex outside 0..{n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.conductance.is_finite() && e.conductance > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive conductance {}",
                    e.u, e.v, e.conductance
                )));
            }
            if conductance[(e.u, e.v)] != 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.u, e.v
                )));
            }
            conductance[(e.u, e.v)] = e.conductance;
            conductance[(e.v, e.u)] = e.conductance;
            neighbors[e.u].push(e.v);
            neighbors[e.v].push(e.u);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        if let Some((x, k)) = killing
            .iter()
            .enumerate()
            .find(|(_, k)| !(k.is_finite() && **k >= 0.0))
        {
            return Err(Error::InvalidGraph(format!(
                "killing at vertex {x} is {k}, must be finite and >= 0"
            )));
        }
        if !killing.iter().any(|&k| k > 0.0) {
            return Err(Error::InvalidGraph(
                "no vertex has positive killing; the chain is recurrent".into(),
            ));
        }
        if !is_connected(&neighbors) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }

        let lambda: Vec<f64> = (0..n)
            .map(|x| conductance.row(x).sum() + killing[x])
            .collect();
        let transition = DMatrix::from_fn(n, n, |x, y| conductance[(x, y)] / lambda[x]);

        let energy = DMatrix::from_fn(n, n, |x, y| {
            if x == y {
                lambda[x]
            } else {
                -conductance[(x, y)]
            }
        });
        let chol = energy.clone().cholesky().ok_or(Error::Singular)?;
        let green = chol.inverse();
        let green = (&green + green.transpose()) * 0.5;
        let log_det_energy = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let log_prod_lambda: f64 = lambda.iter().map(|l| l.ln()).sum();
        let det_i_minus_p = (log_det_energy - log_prod_lambda).exp();

        // P is similar to the symmetric M^-1/2 C M^-1/2.
        let sym = DMatrix::from_fn(n, n, |x, y| {
            conductance[(x, y)] / (lambda[x] * lambda[y]).sqrt()
        });
        let spectral_radius = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));

        Ok(Self {
            n,
            edges,
            killing,
            conductance,
            neighbors,
            lambda: DualityMeasure(lambda),
            transition: TransitionMatrix(transition),
            green: GreenFunction(green),
            det_i_minus_p,
            spectral_radius,
        })
    }

    /// Two vertices joined by one edge of conductance 1, killing 1 at both.
    pub fn two_vertex() -> Self {
        Self::complete(2, 1.0).expect("valid fixture")
    }

    /// Complete graph on `d` vertices with unit conductances and constant
    /// killing `kappa`.
    pub fn complete(d: usize, kappa: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..d {
            for v in u + 1..d {
                edges.push(Edge {
                    u,
                    v,
                    conductance: 1.0,
                });
            }
        }
        Self::new(d, edges, vec![kappa; d])
    }

    /// Path `0 - 1 - ... - (n-1)` with unit conductances and constant killing.
    pub fn path(n: usize, kappa: f64) -> Result<Self> {
        let edges = (0..n.saturating_sub(1))
            .map(|u| Edge {
                u,
                v: u + 1,
                conductance: 1.0,
            })
            .collect();
        Self::new(n, edges, vec![kappa; n])
    }

    /// Cycle on `n >= 3` vertices with unit conductances and constant killing.
    pub fn cycle(n: usize, kappa: f64) -> Result<Self> {
        let edges = (0..n)
            .map(|u| Edge {
                u,
                v: (u + 1) % n,
                conductance: 1.0,
            })
            .collect();
        Self::new(n, edges, vec![kappa; n])
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.conductance[(x, y)]
    }

    pub fn conductance_matrix(&self) -> &DMatrix<f64> {
        &self.conductance
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        x != y && self.conductance[(x, y)] > 0.0
    }

    /// Oriented edges `(u, v)` and `(v, u)` for every edge, in edge order.
    pub fn oriented_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .flat_map(|e| [(e.u, e.v), (e.v, e.u)])
            .collect()
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        self.conductance.map(|c| if c > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn duality_measure(&self) -> &DualityMeasure {
        &self.lambda
    }

    pub fn lambda(&self, x: usize) -> f64 {
        self.lambda.0[x]
    }

    /// Row form `P[x][y] = C_xy / lambda_x`.
    pub fn transition_matrix(&self) -> &TransitionMatrix {
        &self.transition
    }

    /// Column form `P[x][y] = C_xy / lambda_y`.
    pub fn column_transition_matrix(&self) -> TransitionMatrix {
        let n = self.n;
        TransitionMatrix(DMatrix::from_fn(n, n, |x, y| {
            self.conductance[(x, y)] / self.lambda.0[y]
        }))
    }

    pub fn green_function(&self) -> &GreenFunction {
        &self.green
    }

    /// `M_lambda - C`.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |x, y| {
            if x == y {
                self.lambda.0[x]
            } else {
                -self.conductance[(x, y)]
            }
        })
    }

    /// `det(I - P) = det(M_lambda - C) / prod_x lambda_x`.
    pub fn det_i_minus_p(&self) -> f64 {
        self.det_i_minus_p
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// Same graph with every conductance multiplied by `factor`. Killing is
    /// unchanged.
    pub fn scaled_conductances(&self, factor: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                conductance: e.conductance * factor,
                ..*e
            })
            .collect();
        Self::new(self.n, edges, self.killing.clone())
    }
}

fn is_connected(neighbors: &[Vec<usize>]) -> bool {
    let n = neighbors.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &neighbors[x] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lambda_examples() {
        let g = WeightedGraph::two_vertex();
        assert_eq!(g.duality_measure().as_slice(), &[2.0, 2.0]);

        let single = WeightedGraph::new(1, vec![], vec![2.0]).unwrap();
        assert_eq!(single.duality_measure().as_slice(), &[2.0]);

        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        assert_eq!(k3.duality_measure().as_slice(), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn transition_examples() {
        let g = WeightedGraph::two_vertex();
        let p = g.transition_matrix();
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(1, 0), 0.5);
        assert_eq!(p.get(0, 0), 0.0);

        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let want = if x == y { 0.0 } else { 1.0 / 3.0 };
                assert!(close(k3.transition_matrix().get(x, y), want, 1e-15));
            }
        }

        let heavy = WeightedGraph::complete(3, 1e12).unwrap();
        assert!(heavy.transition_matrix().matrix().amax() < 1e-11);
    }

    #[test]
    fn green_examples() {
        let single = WeightedGraph::new(1, vec![], vec![2.0]).unwrap();
        assert!(close(single.green_function().get(0, 0), 0.5, 1e-15));

        let g = WeightedGraph::two_vertex();
        let gr = g.green_function();
        assert!(close(gr.get(0, 0), 2.0 / 3.0, 1e-14));
        assert!(close(gr.get(0, 1), 1.0 / 3.0, 1e-14));

        for d in 2..6 {
            for &kappa in &[0.5, 1.0, 3.0] {
                let g = WeightedGraph::complete(d, kappa).unwrap();
                let df = d as f64;
                for x in 0..d {
                    for y in 0..d {
                        let delta = if x == y { 1.0 } else { 0.0 };
                        let want = (delta + 1.0 / kappa) / (df + kappa);
                        assert!(close(g.green_function().get(x, y), want, 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn green_inverts_energy() {
        let g = WeightedGraph::new(
            4,
            vec![
                Edge {
                    u: 0,
                    v: 1,
                    conductance: 0.7,
                },
                Edge {
                    u: 1,
                    v: 2,
                    conductance: 2.1,
                },
                Edge {
                    u: 2,
                    v: 3,
                    conductance: 1.3,
                },
                Edge {
                    u: 3,
                    v: 0,
                    conductance: 0.4,
                },
                Edge {
                    u: 0,
                    v: 2,
                    conductance: 1.0,
                },
            ],
            vec![0.0, 0.3, 0.0, 1.1],
        )
        .unwrap();
        let prod = g.green_function().matrix() * g.energy_matrix();
        let err = (prod - DMatrix::identity(4, 4)).amax();
        assert!(err < 1e-10);
        let gm = g.green_function().matrix();
        assert!((gm - gm.transpose()).amax() == 0.0);
        assert!(gm.iter().all(|&v| v > 0.0));
        let det = g.det_i_minus_p();
        assert!(det > 0.0 && det <= 1.0);
        let direct = g.energy_matrix().determinant()
            / g.duality_measure().as_slice().iter().product::<f64>();
        assert!(close(det, direct, 1e-12));
    }

    #[test]
    fn det_examples() {
        assert!(close(
            WeightedGraph::two_vertex().det_i_minus_p(),
            0.75,
            1e-15
        ));
        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        assert!(close(k3.det_i_minus_p(), 16.0 / 27.0, 1e-14));
        let single = WeightedGraph::new(1, vec![], vec![0.3]).unwrap();
        assert!(close(single.det_i_minus_p(), 1.0, 1e-15));
    }

    #[test]
    fn rejects_invalid_graphs() {
        let e = |u, v| Edge {
            u,
            v,
            conductance: 1.0,
        };
        assert!(WeightedGraph::new(2, vec![e(0, 0)], vec![1.0, 1.0]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1), e(1, 0)], vec![1.0, 1.0]).is_err());
        assert!(WeightedGraph::new(3, vec![e(0, 1)], vec![1.0, 1.0, 1.0]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1)], vec![0.0, 0.0]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1)], vec![1.0]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 2)], vec![1.0, 1.0]).is_err());
        assert!(WeightedGraph::new(
            2,
            vec![Edge {
                u: 0,
                v: 1,
                conductance: -1.0
            }],
            vec![1.0, 1.0]
        )
        .is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1)], vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn spectral_radius_below_one() {
        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        assert!(close(k3.spectral_radius(), 2.0 / 3.0, 1e-12));
        assert!(WeightedGraph::two_vertex().spectral_radius() < 1.0);
    }
}
