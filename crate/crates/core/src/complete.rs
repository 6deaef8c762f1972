//! Closed forms for the Euler characteristic of the random map and related
//! vertex counts, in general and on complete graphs.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// `P(N_x >= 1) = 1 - 1 / (lambda_x G_xx)` for the `alpha = 1` ensemble.
pub fn visit_probability(g: &WeightedGraph, x: usize) -> f64 {
    1.0 - 1.0 / (g.lambda(x) * g.green_function().get(x, x))
}

/// `E(chi) = sum_x (1 - 1/(lambda_x G_xx)) - 2 ln det(I-P) - sum_{x,y} C_xy G_xy`,
/// the last sum over ordered pairs.
pub fn expected_chi(g: &WeightedGraph) -> f64 {
    let n = g.vertex_count();
    let vertices: f64 = (0..n).map(|x| visit_probability(g, x)).sum();
    let gf = g.green_function();
    let edges: f64 = g
        .edges()
        .iter()
        .map(|e| 2.0 * e.conductance * gf.get(e.u, e.v))
        .sum();
    vertices - 2.0 * g.det_i_minus_p().ln() - edges
}

fn check_complete(d: usize, kappa: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidInput("complete graph needs d >= 2".into()));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidInput("killing rate must be positive".into()));
    }
    Ok(())
}

/// `E(chi)` on the complete graph with `d` vertices, unit conductances and
/// killing rate `kappa` at every vertex.
pub fn complete_graph_expected_chi(d: usize, kappa: f64) -> Result<f64> {
    check_complete(d, kappa)?;
    let d = d as f64;
    let lam = d - 1.0 + kappa;
    Ok(d * (1.0 - (1.0 - 1.0 / (kappa + 1.0)) * (1.0 + 1.0 / lam))
        - d * (d - 1.0) / (kappa * (d + kappa))
        - 2.0 * (kappa / lam).ln()
        - 2.0 * (d - 1.0) * (1.0 + 1.0 / lam).ln())
}

/// Expected number of vertices with `N_x > 1`. Under the `alpha = 1`
/// ensemble `N_x` is geometric, so this is `sum_x (1 - 1/(lambda_x G_xx))^2`.
pub fn expected_essential_vertices(g: &WeightedGraph) -> f64 {
    (0..g.vertex_count())
        .map(|x| visit_probability(g, x).powi(2))
        .sum()
}

/// Complete-graph value of [`expected_essential_vertices`]:
/// `d (d-1)^2 / ((kappa+1)^2 (d-1+kappa)^2)`.
pub fn complete_graph_essential_vertices(d: usize, kappa: f64) -> Result<f64> {
    check_complete(d, kappa)?;
    let d = d as f64;
    Ok(d * (d - 1.0).powi(2) / ((kappa + 1.0).powi(2) * (d - 1.0 + kappa).powi(2)))
}

/// `d (d + 2 kappa - 1)^2 / ((kappa+1)^2 (d-1+kappa)^2)`, a tempting but
/// wrong simplification. Kept so the disagreement can be reported; use
/// [`complete_graph_essential_vertices`].
pub fn miscomputed_complete_graph_essential_vertices(d: usize, kappa: f64) -> Result<f64> {
    check_complete(d, kappa)?;
    let d = d as f64;
    Ok(d * (d + 2.0 * kappa - 1.0).powi(2) / ((kappa + 1.0).powi(2) * (d - 1.0 + kappa).powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct USolution {
    pub u: f64,
    /// `sqrt(d / u)`, the killing rate that drives `E(chi)` towards `v`.
    pub kappa: f64,
    pub residual: f64,
}

/// Solves `u - ln u = ln d - v` for `u >= 1` by safeguarded Newton steps.
pub fn solve_u(d: f64, v: f64) -> Result<USolution> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput("d must be positive".into()));
    }
    let target = d.ln() - v;
    let f = |u: f64| u - u.ln() - target;
    if (target - 1.0).abs() <= 1e-15 {
        return Ok(USolution {
            u: 1.0,
            kappa: d.sqrt(),
            residual: f(1.0).abs(),
        });
    }
    if target < 1.0 {
        return Err(Error::NoSolution(format!(
            "ln d - v = {target} must exceed 1"
        )));
    }
    // f is increasing on [1, inf), f(1) < 0 < f(2 target + 1).
    let (mut lo, mut hi) = (1.0, 2.0 * target + 1.0);
    let mut u = target + target.ln();
    for _ in 0..200 {
        let fu = f(u);
        if fu.abs() < 1e-13 {
            break;
        }
        if fu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let step = u - fu / (1.0 - 1.0 / u);
        u = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    let residual = f(u).abs();
    if residual >= 1e-12 {
        return Err(Error::NoSolution(format!(
            "no convergence, residual {residual}"
        )));
    }
    Ok(USolution {
        u,
        kappa: (d / u).sqrt(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_value() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let a = expected_chi(&g);
        let b = complete_graph_expected_chi(3, 1.0).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!((a - 0.5465).abs() < 1e-4, "{a}");
    }

    #[test]
    fn general_and_complete_forms_agree() {
        for d in 2..=6 {
            for kappa in [0.5, 1.0, 2.0] {
                let g = WeightedGraph::complete(d, kappa).unwrap();
                let a = expected_chi(&g);
                let b = complete_graph_expected_chi(d, kappa).unwrap();
                assert!((a - b).abs() < 1e-10, "d={d} kappa={kappa}");
                let e = expected_essential_vertices(&g);
                let f = complete_graph_essential_vertices(d, kappa).unwrap();
                assert!((e - f).abs() < 1e-10);
            }
        }
        let two = WeightedGraph::two_vertex();
        assert!((expected_chi(&two) - complete_graph_expected_chi(2, 1.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_cases() {
        let single = WeightedGraph::new(1, vec![], vec![2.0]).unwrap();
        assert!(expected_chi(&single).abs() < 1e-15);
        assert!(expected_essential_vertices(&single).abs() < 1e-15);
        let big = complete_graph_expected_chi(4, 1e6).unwrap();
        assert!(big.abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for kappa in [1.0, 10.0, 100.0, 1e3, 1e4] {
            let v = complete_graph_expected_chi(4, kappa).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn miscomputed_essential_form_differs() {
        let correct = complete_graph_essential_vertices(3, 1.0).unwrap();
        assert!((correct - 1.0 / 3.0).abs() < 1e-15);
        let wrong = miscomputed_complete_graph_essential_vertices(3, 1.0).unwrap();
        assert!((wrong - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn u_solutions() {
        let d = 5f64.exp();
        let s = solve_u(d, d.ln() - 1.0).unwrap();
        assert_eq!(s.u, 1.0);
        let s = solve_u(d, 0.0).unwrap();
        // bisection oracle
        let (mut lo, mut hi) = (1.0f64, 20.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.ln() < 5.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s.u - lo).abs() < 1e-10);
        assert!((s.u - 6.9368).abs() < 1e-4);
        assert!(s.residual < 1e-12);
        assert!((s.kappa - (d / s.u).sqrt()).abs() < 1e-15);
        assert!(matches!(solve_u(d, 4.5), Err(Error::NoSolution(_))));
        for v in [-3.0, 0.0, 1.0, 2.9, 3.999999] {
            assert!(solve_u(d, v).unwrap().residual < 1e-12);
        }
    }
}
