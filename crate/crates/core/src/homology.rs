//! Harmonic one-forms, the Jacobian torus, and the law of the random
//! homology class as a Fourier integral over the torus.
//!
//! The torus is parametrized by `t in [0,1)^n` through a basis of harmonic
//! forms dual to the fundamental cycles of a spanning tree, so that the
//! integrand is 1-periodic in every coordinate and the torus volume is 1.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{log_det_spd, twisted_det_ratio, Complex64};
use crate::networks::HomologyClass;

/// Real antisymmetric function on oriented edges.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    n: usize,
    values: DMatrix<f64>,
}

impl OneForm {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            values: DMatrix::zeros(n, n),
        }
    }

    /// `omega^{x,y} = f_y - f_x` on the edges of `g`.
    pub fn exact(g: &WeightedGraph, f: &[f64]) -> Self {
        let mut w = Self::zero(g.vertex_count());
        for e in g.edges() {
            w.set(e.u, e.v, f[e.v] - f[e.u]);
        }
        w
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }

    /// Sets `omega^{x,y} = v` and `omega^{y,x} = -v`.
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[(x, y)] = v;
        self.values[(y, x)] = -v;
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            n: self.n,
            values: &self.values * a,
        }
    }

    pub fn add_assign_scaled(&mut self, other: &OneForm, a: f64) {
        self.values += &other.values * a;
    }

    /// Sum of the form along the closed vertex sequence `cycle`.
    pub fn holonomy(&self, cycle: &[usize]) -> f64 {
        let k = cycle.len();
        (0..k).map(|i| self.get(cycle[i], cycle[(i + 1) % k])).sum()
    }

    /// `sum_y C_xy omega^{x,y}` at every vertex.
    pub fn divergence(&self, g: &WeightedGraph) -> Vec<f64> {
        (0..self.n)
            .map(|x| {
                g.neighbors(x)
                    .iter()
                    .map(|&y| g.conductance(x, y) * self.get(x, y))
                    .sum()
            })
            .collect()
    }
}

/// `<h, omega> = (1/2) sum_{x,y} h_xy omega^{x,y}`.
pub fn pairing(h: &HomologyClass, omega: &OneForm) -> f64 {
    let n = h.vertex_count();
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            let v = h.get(x, y);
            if v != 0 {
                s += v as f64 * omega.get(x, y);
            }
        }
    }
    0.5 * s
}

#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub vertex_count: usize,
    /// Tree edges as `(parent, child)`.
    pub tree: Vec<(usize, usize)>,
    /// Co-tree edges, oriented `(a, b)`; cycle `i` crosses edge `i` from `a` to `b`.
    pub cotree: Vec<(usize, usize)>,
    /// Fundamental cycles as closed vertex sequences starting `a, b, ...`.
    pub cycles: Vec<Vec<usize>>,
    pub forms: Vec<OneForm>,
}

impl HarmonicBasis {
    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    /// `omega(t) = sum_i t_i omega_i`.
    pub fn form_at(&self, t: &[f64]) -> OneForm {
        let mut w = OneForm::zero(self.vertex_count);
        for (form, &ti) in self.forms.iter().zip(t) {
            w.add_assign_scaled(form, ti);
        }
        w
    }

    /// Coordinates of a class in the cycle basis: the values on co-tree edges.
    pub fn coordinates(&self, h: &HomologyClass) -> Vec<i64> {
        self.cotree.iter().map(|&(a, b)| h.get(a, b)).collect()
    }

    /// The class `sum_i n_i gamma_i`.
    pub fn class_from_coordinates(&self, n_vertices: usize, coords: &[i64]) -> HomologyClass {
        let mut h = HomologyClass::zeros(n_vertices);
        for (cycle, &c) in self.cycles.iter().zip(coords) {
            let k = cycle.len();
            for i in 0..k {
                let (x, y) = (cycle[i], cycle[(i + 1) % k]);
                h.set(x, y, h.get(x, y) + c);
            }
        }
        h
    }
}

/// Breadth-first spanning tree from vertex 0, fundamental cycles of the
/// co-tree edges, and the harmonic forms dual to those cycles.
///
/// Each form is the indicator of a co-tree edge minus the exact form `df`
/// that makes it divergence free; `f` solves the weighted Laplace equation
/// with `f_0 = 0`.
pub fn harmonic_basis(g: &WeightedGraph) -> HarmonicBasis {
    let n = g.vertex_count();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut tree = Vec::new();
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                depth[y] = depth[x] + 1;
                tree.push((x, y));
                queue.push_back(y);
            }
        }
    }
    let is_tree = |x: usize, y: usize| parent[y] == x || parent[x] == y;
    let cotree: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|e| !is_tree(e.u, e.v))
        .map(|e| (e.u, e.v))
        .collect();

    let tree_path = |from: usize, to: usize| -> Vec<usize> {
        // Vertices from `from` to `to` along the tree, both ends included.
        let (mut a, mut b) = (from, to);
        let mut up = vec![a];
        let mut down = vec![b];
        while depth[a] > depth[b] {
            a = parent[a];
            up.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b];
            down.push(b);
        }
        while a != b {
            a = parent[a];
            b = parent[b];
            up.push(a);
            down.push(b);
        }
        down.pop();
        up.extend(down.into_iter().rev());
        up
    };

    let cycles: Vec<Vec<usize>> = cotree
        .iter()
        .map(|&(a, b)| {
            let mut cyc = vec![a];
            let path = tree_path(b, a);
            cyc.extend(&path[..path.len() - 1]);
            cyc
        })
        .collect();

    // Reduced weighted Laplacian with vertex 0 grounded.
    let forms = if cotree.is_empty() {
        Vec::new()
    } else {
        let m = n - 1;
        let lap = DMatrix::from_fn(m, m, |i, j| {
            let (x, y) = (i + 1, j + 1);
            if x == y {
                g.conductance_matrix().row(x).sum()
            } else {
                -g.conductance(x, y)
            }
        });
        let chol = lap
            .cholesky()
            .expect("reduced Laplacian of a connected graph is positive definite");
        cotree
            .iter()
            .map(|&(a, b)| {
                let mut ind = OneForm::zero(n);
                ind.set(a, b, 1.0);
                // L f = -div(ind)
                let div = ind.divergence(g);
                let rhs = DVector::from_fn(m, |i, _| -div[i + 1]);
                let sol = chol.solve(&rhs);
                let f: Vec<f64> = std::iter::once(0.0).chain(sol.iter().copied()).collect();
                let exact = OneForm::exact(g, &f);
                let mut w = ind;
                w.add_assign_scaled(&exact, -1.0);
                w
            })
            .collect()
    };

    HarmonicBasis {
        vertex_count: g.vertex_count(),
        tree,
        cotree,
        cycles,
        forms,
    }
}

/// Value of `P(class = j)` with quadrature diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct HomologyPmf {
    pub value: f64,
    pub imag_residue: f64,
    /// `|value(m) - value(2m)|`.
    pub grid_difference: f64,
}

pub const MAX_TORUS_DIM: usize = 3;

/// Characteristic function of the class on a uniform torus grid. Holds
/// `[det G^(2 pi i omega(t)) / det G]^alpha` at every grid point.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    pub m: usize,
    pub dim: usize,
    values: Vec<f64>,
}

impl TorusGrid {
    pub fn new(g: &WeightedGraph, basis: &HarmonicBasis, alpha: f64, m: usize) -> Result<Self> {
        let dim = basis.dimension();
        if dim > MAX_TORUS_DIM {
            return Err(Error::DimensionTooLarge {
                n: dim,
                max: MAX_TORUS_DIM,
            });
        }
        if m == 0 {
            return Err(Error::InvalidInput("torus grid needs m >= 1".into()));
        }
        let log_det_energy = log_det_spd(&g.energy_matrix())?;
        let points = m.pow(dim as u32);
        let values = (0..points)
            .into_par_iter()
            .map(|idx| {
                let t = grid_point(idx, m, dim);
                let w = basis.form_at(&t);
                twisted_det_ratio(g, &w, log_det_energy).map(|r| r.powf(alpha))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { m, dim, values })
    }

    /// Trapezoid rule for `int [ratio]^alpha e^{-2 pi i <j, omega(t)>} dt`.
    pub fn fourier_coefficient(&self, coords: &[i64]) -> Complex64 {
        let terms: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                let t = grid_point(idx, self.m, self.dim);
                let phase: f64 = t.iter().zip(coords).map(|(ti, &c)| ti * c as f64).sum();
                Complex64::from_polar(v, -2.0 * PI * phase)
            })
            .collect();
        pairwise_sum(&terms) / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn grid_point(mut idx: usize, m: usize, dim: usize) -> Vec<f64> {
    let mut t = vec![0.0; dim];
    for ti in t.iter_mut() {
        *ti = (idx % m) as f64 / m as f64;
        idx /= m;
    }
    t
}

fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 0.5 || alpha == 1.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedAlpha(alpha))
    }
}

/// `P(N^(alpha) - N^(alpha)T = j)` by torus quadrature on `m^n` and `(2m)^n`
/// grids.
pub fn homology_pmf(
    g: &WeightedGraph,
    alpha: f64,
    j: &HomologyClass,
    m: usize,
) -> Result<HomologyPmf> {
    check_alpha(alpha)?;
    let basis = harmonic_basis(g);
    let coords = basis.coordinates(j);
    if basis.class_from_coordinates(g.vertex_count(), &coords) != *j {
        return Err(Error::InvalidInput(
            "class is not a cycle of the graph".into(),
        ));
    }
    let coarse = TorusGrid::new(g, &basis, alpha, m)?.fourier_coefficient(&coords);
    let fine = TorusGrid::new(g, &basis, alpha, 2 * m)?.fourier_coefficient(&coords);
    Ok(HomologyPmf {
        value: fine.re,
        imag_residue: fine.im,
        grid_difference: (fine.re - coarse.re).abs(),
    })
}

/// All coordinate vectors with every entry in `-radius..=radius`.
pub fn coordinate_box(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-radius..=radius).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}
