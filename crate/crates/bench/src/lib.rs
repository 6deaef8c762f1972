//! Fixtures shared by the benchmarks.

use loopnet::{Edge, WeightedGraph};

/// Square grid `side x side`, unit conductances, killing `kappa` everywhere.
pub fn grid(side: usize, kappa: f64) -> WeightedGraph {
    grid_rect(side, side, kappa)
}

/// `rows x cols` grid, unit conductances, killing `kappa` everywhere.
pub fn grid_rect(rows: usize, cols: usize, kappa: f64) -> WeightedGraph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push(Edge {
                    u: id(r, c),
                    v: id(r, c + 1),
                    conductance: 1.0,
                });
            }
            if r + 1 < rows {
                edges.push(Edge {
                    u: id(r, c),
                    v: id(r + 1, c),
                    conductance: 1.0,
                });
            }
        }
    }
    WeightedGraph::new(rows * cols, edges, vec![kappa; rows * cols]).expect("grid is valid")
}
