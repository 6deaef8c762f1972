//! Real and complex Gaussian free fields with covariance `G` and `2G`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::linalg::{chol_factor, Complex64};

/// Samples `L z` with `L L^T = G`.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    factor: DMatrix<f64>,
}

impl FieldSampler {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        Ok(Self {
            factor: chol_factor(g.green_function().matrix())?,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.factor.nrows()
    }

    /// Real field, covariance `G`.
    pub fn sample_real<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.vertex_count();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        self.apply(&z)
    }

    /// Complex field `u + iv` with `u`, `v` independent real fields, so that
    /// `E(phi_x conj(phi_y)) = 2 G_xy` and `E(phi phi) = 0`.
    pub fn sample_complex<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let re = self.sample_real(rng);
        let im = self.sample_real(rng);
        re.into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let n = self.vertex_count();
        (0..n)
            .map(|i| (0..=i).map(|j| self.factor[(i, j)] * z[j]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::{mc_covariance, McEstimate};

    #[test]
    fn real_covariance_is_green() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let f = FieldSampler::new(&g).unwrap();
        let mut rng = seeded(5, 0);
        let xs: Vec<Vec<f64>> = (0..100_000).map(|_| f.sample_real(&mut rng)).collect();
        let gm = g.green_function();
        for x in 0..3 {
            let mean = McEstimate::from_values(&xs.iter().map(|v| v[x]).collect::<Vec<_>>());
            assert!(mean.within(0.0, 4.0), "{mean:?}");
            for y in 0..3 {
                let a: Vec<f64> = xs.iter().map(|v| v[x]).collect();
                let b: Vec<f64> = xs.iter().map(|v| v[y]).collect();
                let c = mc_covariance(&a, &b);
                assert!(c.within(gm.get(x, y), 4.0), "{x}{y} {c:?}");
            }
        }
    }

    #[test]
    fn complex_modulus_mean_is_twice_green() {
        let g = WeightedGraph::two_vertex();
        let f = FieldSampler::new(&g).unwrap();
        let mut rng = seeded(6, 0);
        let v: Vec<f64> = (0..100_000)
            .map(|_| f.sample_complex(&mut rng)[0].norm_sqr())
            .collect();
        let e = McEstimate::from_values(&v);
        assert!(e.within(4.0 / 3.0, 4.0), "{e:?}");
        let pp: Vec<f64> = (0..100_000)
            .map(|_| {
                let p = f.sample_complex(&mut rng);
                (p[0] * p[1]).re
            })
            .collect();
        assert!(McEstimate::from_values(&pp).within(0.0, 4.0));
    }
}
