//! Exhaustive enumeration of small networks, used by exact checks.
//!
//! Order is lexicographic in the flattened count vector (oriented edges for
//! Eulerian networks, unordered edges for even ones), following the edge order
//! of the graph.

use crate::graph::WeightedGraph;
use crate::networks::{EulerianNetwork, EvenNetwork, Flow};

/// All Eulerian networks with `sum k_xy <= max_total`.
pub fn enumerate_eulerian(g: &WeightedGraph, max_total: u32) -> Vec<EulerianNetwork> {
    let oriented = g.oriented_edges();
    let n = g.vertex_count();
    let mut out = Vec::new();
    let mut values = vec![0u32; oriented.len()];
    let mut balance = vec![0i64; n];
    rec_eulerian(
        g,
        &oriented,
        0,
        max_total,
        &mut values,
        &mut balance,
        &mut out,
    );
    out
}

fn rec_eulerian(
    g: &WeightedGraph,
    oriented: &[(usize, usize)],
    idx: usize,
    budget: u32,
    values: &mut Vec<u32>,
    balance: &mut Vec<i64>,
    out: &mut Vec<EulerianNetwork>,
) {
    if idx == oriented.len() {
        if balance.iter().all(|&b| b == 0) {
            out.push(EulerianNetwork::from_edge_vector(g, values));
        }
        return;
    }
    let (x, y) = oriented[idx];
    for c in 0..=budget {
        values[idx] = c;
        balance[x] += c as i64;
        balance[y] -= c as i64;
        rec_eulerian(g, oriented, idx + 1, budget - c, values, balance, out);
        balance[x] -= c as i64;
        balance[y] += c as i64;
    }
    values[idx] = 0;
}

/// All even networks with `sum_{edges} k_e <= max_total`.
pub fn enumerate_even(g: &WeightedGraph, max_total: u32) -> Vec<EvenNetwork> {
    let m = g.edge_count();
    let mut out = Vec::new();
    let mut values = vec![0u32; m];
    let mut parity = vec![0u32; g.vertex_count()];
    rec_even(g, 0, max_total, &mut values, &mut parity, &mut out);
    out
}

fn rec_even(
    g: &WeightedGraph,
    idx: usize,
    budget: u32,
    values: &mut Vec<u32>,
    degree: &mut Vec<u32>,
    out: &mut Vec<EvenNetwork>,
) {
    if idx == g.edge_count() {
        if degree.iter().all(|d| d % 2 == 0) {
            out.push(EvenNetwork::from_edge_vector(g, values));
        }
        return;
    }
    let e = g.edges()[idx];
    for c in 0..=budget {
        values[idx] = c;
        degree[e.u] += c;
        degree[e.v] += c;
        rec_even(g, idx + 1, budget - c, values, degree, out);
        degree[e.u] -= c;
        degree[e.v] -= c;
    }
    values[idx] = 0;
}

/// Networks `j + s` with `s` symmetric and `s_e <= max_per_edge`: exactly the
/// Eulerian networks whose flow is `j`, truncated.
pub fn networks_with_flow(
    g: &WeightedGraph,
    flow: &Flow,
    max_per_edge: u32,
) -> Vec<EulerianNetwork> {
    let m = g.edge_count();
    let base = flow.as_network();
    let mut out = Vec::new();
    let mut sym = vec![0u32; m];
    loop {
        let mut k = base.clone();
        for (e, &s) in g.edges().iter().zip(&sym) {
            k.set(e.u, e.v, k.get(e.u, e.v) + s);
            k.set(e.v, e.u, k.get(e.v, e.u) + s);
        }
        out.push(k);
        // Odometer increment.
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if sym[i] < max_per_edge {
                sym[i] += 1;
                break;
            }
            sym[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_networks() {
        let g = WeightedGraph::two_vertex();
        let nets = enumerate_eulerian(&g, 4);
        assert_eq!(nets.len(), 3);
        assert!(nets.iter().all(|k| k.get(0, 1) == k.get(1, 0)));
        let even = enumerate_even(&g, 4);
        assert_eq!(even.len(), 3);
    }

    #[test]
    fn triangle_counts() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let nets = enumerate_eulerian(&g, 3);
        // zero, three back-and-forth pairs, two 3-cycles
        assert_eq!(nets.len(), 6);
        assert!(nets.iter().all(|k| k.is_eulerian()));
        let mut sorted = nets.clone();
        sorted.sort_by_key(|k| k.edge_vector(&g));
        assert_eq!(sorted, nets);
    }

    #[test]
    fn flow_fibres_are_eulerian() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let cyc = EulerianNetwork::from_triples(&g, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let flow = cyc.homology_class().flow();
        let fibre = networks_with_flow(&g, &flow, 2);
        assert_eq!(fibre.len(), 27);
        for k in &fibre {
            assert!(k.is_eulerian());
            assert_eq!(k.homology_class().flow(), flow);
        }
    }
}
