//! Gaussian moments by explicit enumeration of pairings.
//!
//! These are oracles: they enumerate permutations and perfect matchings
//! directly instead of calling the Ryser permanent.

use nalgebra::DMatrix;

/// `E prod_i phi_{a_i} prod_j conj(phi_{b_j})` for the complex field with
/// `E(phi_x conj(phi_y)) = 2 G_xy`: the sum over bijections `a -> b` of the
/// products of `2 G`. Zero when the lengths differ.
pub fn complex_moment(g: &DMatrix<f64>, a: &[usize], b: &[usize]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    fn rec(g: &DMatrix<f64>, a: &[usize], b: &[usize], i: usize, used: &mut [bool]) -> f64 {
        if i == a.len() {
            return 1.0;
        }
        let mut s = 0.0;
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                s += 2.0 * g[(a[i], b[j])] * rec(g, a, b, i + 1, used);
                used[j] = false;
            }
        }
        s
    }
    rec(g, a, b, 0, &mut vec![false; b.len()])
}

/// `E prod_i phi_{x_i}` for the real field with covariance `G` (Isserlis):
/// the sum over perfect matchings of products of `G`.
pub fn real_moment(g: &DMatrix<f64>, xs: &[usize]) -> f64 {
    if xs.len() % 2 == 1 {
        return 0.0;
    }
    fn rec(g: &DMatrix<f64>, rest: &mut Vec<usize>) -> f64 {
        if rest.is_empty() {
            return 1.0;
        }
        let first = rest.remove(0);
        let mut s = 0.0;
        for j in 0..rest.len() {
            let partner = rest.remove(j);
            s += g[(first, partner)] * rec(g, rest);
            rest.insert(j, partner);
        }
        rest.insert(0, first);
        s
    }
    rec(g, &mut xs.to_vec())
}

/// Exact `E prod_e N_e prod_z (N_z + 1)` for the `alpha = 1` ensemble over
/// distinct oriented edges and distinct vertices:
/// `prod (C/2) prod (lambda/2) E prod phi_x conj(phi_y) prod |phi_z|^2`.
///
/// Repeated edges are allowed and then give falling factorial moments: an
/// edge listed `r` times contributes `N_e (N_e - 1) ... (N_e - r + 1)`.
pub fn loop_moment_alpha_one(
    c: &DMatrix<f64>,
    lambda: &[f64],
    g: &DMatrix<f64>,
    edges: &[(usize, usize)],
    vertices: &[usize],
) -> f64 {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut coef = 1.0;
    for &(x, y) in edges {
        a.push(x);
        b.push(y);
        coef *= 0.5 * c[(x, y)];
    }
    for &z in vertices {
        a.push(z);
        b.push(z);
        coef *= 0.5 * lambda[z];
    }
    coef * complex_moment(g, &a, &b)
}

/// Exact `E prod_e N_{e} prod_z (N_z + 1/2)` for the `alpha = 1/2` ensemble,
/// with `N_{e}` symmetrized edge counts over distinct unordered edges and
/// `N_z` the vertex totals: `prod C prod (lambda/2) E prod phi_x phi_y prod phi_z^2`.
pub fn loop_moment_alpha_half(
    c: &DMatrix<f64>,
    lambda: &[f64],
    g: &DMatrix<f64>,
    edges: &[(usize, usize)],
    vertices: &[usize],
) -> f64 {
    let mut xs = Vec::new();
    let mut coef = 1.0;
    for &(x, y) in edges {
        xs.push(x);
        xs.push(y);
        coef *= c[(x, y)];
    }
    for &z in vertices {
        xs.push(z);
        xs.push(z);
        coef *= 0.5 * lambda[z];
    }
    coef * real_moment(g, &xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    #[test]
    fn small_moments() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        assert_eq!(complex_moment(&g, &[], &[]), 1.0);
        assert_eq!(complex_moment(&g, &[0], &[1]), 2.0);
        assert_eq!(complex_moment(&g, &[0], &[]), 0.0);
        // E|phi_0|^4 = 2 (2 G_00)^2
        assert_eq!(complex_moment(&g, &[0, 0], &[0, 0]), 32.0);
        assert_eq!(real_moment(&g, &[0]), 0.0);
        assert_eq!(real_moment(&g, &[0, 0, 0, 0]), 12.0);
        // G00 G11 + 2 G01^2
        assert_eq!(real_moment(&g, &[0, 0, 1, 1]), 8.0);
    }

    #[test]
    fn two_vertex_anchor() {
        let g = WeightedGraph::two_vertex();
        let lam = g.duality_measure().as_slice().to_vec();
        let v = loop_moment_alpha_one(
            g.conductance_matrix(),
            &lam,
            g.green_function().matrix(),
            &[(0, 1), (1, 0)],
            &[],
        );
        assert!((v - 5.0 / 9.0).abs() < 1e-15);
        // E(N_z + 1) = lambda G_zz
        let v = loop_moment_alpha_one(
            g.conductance_matrix(),
            &lam,
            g.green_function().matrix(),
            &[],
            &[0],
        );
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
        let v = loop_moment_alpha_half(
            g.conductance_matrix(),
            &lam,
            g.green_function().matrix(),
            &[],
            &[0],
        );
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_edge_is_falling_factorial() {
        // N_01 is geometric with mean C G_01 = 1/3: E N(N-1) = 2/9.
        let g = WeightedGraph::two_vertex();
        let lam = g.duality_measure().as_slice().to_vec();
        let v = loop_moment_alpha_one(
            g.conductance_matrix(),
            &lam,
            g.green_function().matrix(),
            &[(0, 1), (0, 1)],
            &[],
        );
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
    }
}
