//! Gauss–Legendre tensor quadrature over the occupation field, used to
//! marginalize `rho` out of the flow law.
//!
//! The substitution `rho_x = s_x^2` turns the half-integer powers coming from
//! `sqrt(rho_x rho_y)` into polynomials in `s`, so the integrand is smooth on
//! `[0, S]^n`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::networks::{flow_joint_density, Flow};

pub const MAX_QUADRATURE_DIM: usize = 4;

/// `exp(-CUTOFF)` is the neglected mass scale.
const CUTOFF: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMarginal {
    pub value: f64,
    /// `|value(m) - value(m / 2)|`.
    pub grid_difference: f64,
}

/// Upper limit for each `s_x`. The exponent of every joint density is at most
/// `-mu_min |s|^2` with `mu_min` the smallest eigenvalue of `M_lambda - C`.
pub fn s_cutoff(g: &WeightedGraph) -> f64 {
    let mu = SymmetricEigen::new(g.energy_matrix()).eigenvalues.min();
    (CUTOFF / mu).sqrt()
}

/// `int_{R_+^n} f(rho) d rho` by an `m`-point rule per axis in `s = sqrt(rho)`.
pub fn integrate_occupation<F>(g: &WeightedGraph, m: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = g.vertex_count();
    if n > MAX_QUADRATURE_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: MAX_QUADRATURE_DIM,
        });
    }
    let m = NonZeroUsize::new(m)
        .ok_or_else(|| Error::InvalidInput("quadrature needs m >= 1".into()))?;
    let rule = GaussLegendre::new(m);
    let upper = s_cutoff(g);
    // Nodes mapped to [0, upper] with the Jacobian 2 s folded into the weight.
    let nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| {
            let s = 0.5 * upper * (x + 1.0);
            (s * s, 0.5 * upper * w * 2.0 * s)
        })
        .collect();
    let m = nodes.len();
    let points = m.pow(n as u32);
    let terms = (0..points)
        .into_par_iter()
        .map(|mut idx| {
            let mut rho = vec![0.0; n];
            let mut weight = 1.0;
            for r in rho.iter_mut() {
                let (v, w) = nodes[idx % m];
                *r = v;
                weight *= w;
                idx /= m;
            }
            f(&rho).map(|v| v * weight)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// `P(flow(N^(1) - N^(1)T) = h)`: the joint flow/occupation density with `rho`
/// integrated out, on `m` and `m / 2` point rules.
pub fn flow_marginal(g: &WeightedGraph, h: &Flow, m: usize) -> Result<FlowMarginal> {
    let fine = integrate_occupation(g, m, |rho| flow_joint_density(g, h, rho))?;
    let coarse = integrate_occupation(g, (m / 2).max(1), |rho| flow_joint_density(g, h, rho))?;
    Ok(FlowMarginal {
        value: fine,
        grid_difference: (fine - coarse).abs(),
    })
}
