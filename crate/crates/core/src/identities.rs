//! Loop-side versus field-side checks: generating functionals, Wick moments,
//! the determinant/permanent identity, the occupation-field isomorphism,
//! edge covariances and the Markov property across a cut.
//!
//! Field sides are closed forms (determinants and Wick pairings); loop sides
//! are Monte Carlo over the bridge sampler.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldSampler;
use crate::graph::WeightedGraph;
use crate::linalg::{permanent, Complex64};
use crate::networks::EulerianNetwork;
use crate::rng::try_par_samples;
use crate::soup::{occupation_field, LoopSoup};
use crate::stats::{independence_test, ks_two_sample, GofReport, KsReport, McEstimate};
use crate::wick::{complex_moment, loop_moment_alpha_half, loop_moment_alpha_one, real_moment};

/// Field samples use their own seed so they never share a stream with the
/// loop samples of the same check.
const FIELD_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

pub const MAX_DET_PERM_VERTICES: usize = 6;

/// One network with its occupation field.
#[derive(Debug, Clone)]
pub struct SoupSample {
    pub network: EulerianNetwork,
    pub occupation: Vec<f64>,
}

/// `n` draws of `(N^(alpha), occupation field)`.
pub fn sample_with_occupation(
    g: &WeightedGraph,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<SoupSample>> {
    let soup = LoopSoup::with_default_truncation(g)?;
    try_par_samples(seed, n, |rng| {
        let network = soup.sample_network(alpha, rng)?;
        let occupation = occupation_field(g, &network.vertex_totals(), alpha, rng)?.0;
        Ok(SoupSample {
            network,
            occupation,
        })
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LoopFieldCheck {
    pub alpha: f64,
    pub loop_re: McEstimate,
    pub loop_im: McEstimate,
    pub field_re: f64,
    pub field_im: f64,
}

impl LoopFieldCheck {
    pub fn max_z(&self) -> f64 {
        self.loop_re
            .z_score(self.field_re)
            .max(self.loop_im.z_score(self.field_im))
    }
}

/// `[det(M_lambda - C) / det(M_{lambda+chi} - C o s)]^alpha`.
///
/// For `alpha = 1/2` the matrix must be real symmetric, so the ratio is a
/// positive real and the principal root is the right one.
pub fn field_side(
    g: &WeightedGraph,
    s: &DMatrix<Complex64>,
    chi: &[f64],
    alpha: f64,
) -> Result<Complex64> {
    let n = g.vertex_count();
    let twisted = DMatrix::from_fn(n, n, |x, y| {
        if x == y {
            Complex64::new(g.lambda(x) + chi[x], 0.0)
        } else {
            -s[(x, y)] * g.conductance(x, y)
        }
    });
    let det_twisted = twisted.lu().determinant();
    if det_twisted.norm() == 0.0 {
        return Err(Error::Singular);
    }
    let det_energy = g.energy_matrix().determinant();
    let ratio = Complex64::new(det_energy, 0.0) / det_twisted;
    if alpha == 1.0 {
        Ok(ratio)
    } else if alpha == 0.5 {
        if ratio.re <= 0.0 || ratio.im.abs() > 1e-12 * ratio.re {
            return Err(Error::InvalidInput(format!(
                "determinant ratio {ratio} is not a positive real"
            )));
        }
        Ok(Complex64::new(ratio.re.sqrt(), 0.0))
    } else {
        Err(Error::UnsupportedAlpha(alpha))
    }
}

fn check_instance(g: &WeightedGraph, s: &DMatrix<Complex64>, chi: &[f64]) -> Result<()> {
    let n = g.vertex_count();
    if s.nrows() != n || s.ncols() != n || chi.len() != n {
        return Err(Error::InvalidInput(
            "s and chi must match the vertex count".into(),
        ));
    }
    if let Some(x) = (0..n).find(|&x| !(chi[x] >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "chi[{x}] = {} is negative",
            chi[x]
        )));
    }
    for x in 0..n {
        for y in 0..n {
            if x != y && g.is_edge(x, y) && s[(x, y)].norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidInput(format!("|s[{x}][{y}]| > 1")));
            }
        }
    }
    Ok(())
}

/// `E prod s_xy^{N_xy} exp(-<chi, L>)` for the `alpha = 1` ensemble against
/// its determinant closed form. `s` is read on oriented edges only.
pub fn complex_twist_check(
    g: &WeightedGraph,
    s: &DMatrix<Complex64>,
    chi: &[f64],
    n: usize,
    seed: u64,
) -> Result<LoopFieldCheck> {
    check_instance(g, s, chi)?;
    let exact = field_side(g, s, chi, 1.0)?;
    let samples = sample_with_occupation(g, 1.0, n, seed)?;
    Ok(loop_side(g, &samples, s, chi, 1.0, exact))
}

/// `E prod s_{x,y}^{N_{x,y}} exp(-<chi, L>)` for the `alpha = 1/2` ensemble,
/// with symmetrized counts and `s` real symmetric in `[0, 1)`.
pub fn real_twist_check(
    g: &WeightedGraph,
    s: &DMatrix<f64>,
    chi: &[f64],
    n: usize,
    seed: u64,
) -> Result<LoopFieldCheck> {
    let k = g.vertex_count();
    for x in 0..k {
        for y in 0..k {
            if x != y && g.is_edge(x, y) {
                let v = s[(x, y)];
                if v != s[(y, x)] || !(0.0..1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "s[{x}][{y}] must be symmetric in [0, 1)"
                    )));
                }
            }
        }
    }
    let sc = s.map(|v| Complex64::new(v, 0.0));
    check_instance(g, &sc, chi)?;
    let exact = field_side(g, &sc, chi, 0.5)?;
    let samples = sample_with_occupation(g, 0.5, n, seed)?;
    Ok(loop_side(g, &samples, &sc, chi, 0.5, exact))
}

fn loop_side(
    g: &WeightedGraph,
    samples: &[SoupSample],
    s: &DMatrix<Complex64>,
    chi: &[f64],
    alpha: f64,
    exact: Complex64,
) -> LoopFieldCheck {
    let edges = g.oriented_edges();
    let values: Vec<Complex64> = samples
        .iter()
        .map(|smp| {
            let damping: f64 = chi.iter().zip(&smp.occupation).map(|(c, r)| c * r).sum();
            // Over ordered pairs; for symmetric s this is the product over
            // unordered edges of s^{N_{x,y}}.
            let mut v = Complex64::new((-damping).exp(), 0.0);
            for &(x, y) in &edges {
                let k = smp.network.get(x, y);
                if k > 0 {
                    v *= s[(x, y)].powu(k);
                }
            }
            v
        })
        .collect();
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    LoopFieldCheck {
        alpha,
        loop_re: McEstimate::from_values(&re),
        loop_im: McEstimate::from_values(&im),
        field_re: exact.re,
        field_im: exact.im,
    }
}

/// Random `s` with modulus in `[0.3, 1]` and uniform phase on every oriented
/// edge, and `chi` uniform in `[0, 1]`.
pub fn random_complex_twist<R: Rng + ?Sized>(
    g: &WeightedGraph,
    rng: &mut R,
) -> (DMatrix<Complex64>, Vec<f64>) {
    let n = g.vertex_count();
    let mut s = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (x, y) in g.oriented_edges() {
        let r = rng.random_range(0.3..=1.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        s[(x, y)] = Complex64::from_polar(r, theta);
    }
    let chi = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    (s, chi)
}

/// Random symmetric `s` uniform in `[0, 1)` on edges, `chi` uniform in `[0, 1]`.
pub fn random_real_twist<R: Rng + ?Sized>(
    g: &WeightedGraph,
    rng: &mut R,
) -> (DMatrix<f64>, Vec<f64>) {
    let n = g.vertex_count();
    let mut s = DMatrix::zeros(n, n);
    for e in g.edges() {
        let v = rng.random_range(0.0..1.0);
        s[(e.u, e.v)] = v;
        s[(e.v, e.u)] = v;
    }
    let chi = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    (s, chi)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentCheck {
    pub alpha: f64,
    pub mc: McEstimate,
    pub wick: f64,
}

/// For `alpha = 1`: `E prod_i N_{x_i y_i} prod_l (N_{z_l} + 1)` over distinct
/// oriented edges and distinct vertices, against the complex Wick value.
///
/// For `alpha = 1/2`: `E prod_i N_{x_i,y_i} prod_l (N_{z_l} + 1/2)` over
/// distinct unordered edges (symmetrized counts), against the real Wick
/// value. The vertex term is `N_z + 1/2`, not `N_z + 1`: already for a single
/// vertex the field side is `lambda_z G_zz / 2 = E N_z + 1/2`.
pub fn moment_identity_check(
    g: &WeightedGraph,
    alpha: f64,
    edges: &[(usize, usize)],
    vertices: &[usize],
    n: usize,
    seed: u64,
) -> Result<MomentCheck> {
    for &(x, y) in edges {
        if !g.is_edge(x, y) {
            return Err(Error::OffGraph(x, y));
        }
    }
    let same = |a: &(usize, usize), b: &(usize, usize)| {
        if alpha == 1.0 {
            a == b
        } else {
            a == b || (a.0 == b.1 && a.1 == b.0)
        }
    };
    for (i, a) in edges.iter().enumerate() {
        if edges[i + 1..].iter().any(|b| same(a, b)) {
            return Err(Error::InvalidInput(format!("edge {a:?} repeated")));
        }
    }
    for (i, z) in vertices.iter().enumerate() {
        if *z >= g.vertex_count() || vertices[i + 1..].contains(z) {
            return Err(Error::InvalidInput(format!(
                "vertex {z} repeated or out of range"
            )));
        }
    }
    let lam = g.duality_measure().as_slice();
    let (c, gm) = (g.conductance_matrix(), g.green_function().matrix());
    let (wick, shift) = if alpha == 1.0 {
        (loop_moment_alpha_one(c, lam, gm, edges, vertices), 1.0)
    } else if alpha == 0.5 {
        (loop_moment_alpha_half(c, lam, gm, edges, vertices), 0.5)
    } else {
        return Err(Error::UnsupportedAlpha(alpha));
    };
    let soup = LoopSoup::with_default_truncation(g)?;
    let values = try_par_samples(seed, n, |rng| {
        let net = soup.sample_network(alpha, rng)?;
        let mut v = 1.0;
        for &(x, y) in edges {
            v *= if alpha == 1.0 {
                net.get(x, y) as f64
            } else {
                (net.get(x, y) + net.get(y, x)) as f64
            };
        }
        for &z in vertices {
            v *= net.vertex_total(z) as f64 + shift;
        }
        Ok::<_, Error>(v)
    })?;
    Ok(MomentCheck {
        alpha,
        mc: McEstimate::from_values(&values),
        wick,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DetPermCheck {
    /// `E det(M_chi M_lambda^-1 D - N)` with `D = diag(1 + N_x)`.
    pub normalized: McEstimate,
    /// `E det(M_chi D - N)`, the form without `M_lambda^-1`.
    pub literal: McEstimate,
    /// `det(M_chi - C) Per(G)`.
    pub rhs: f64,
    /// Even analogue by permutation expansion: fixed points weigh
    /// `2 chi_x / lambda_x (N_x + 1/2)`, an edge traversed by a 2-cycle gives
    /// `N_e (N_e - 1)`, longer cycles give products of `N_e`.
    pub even_expansion: McEstimate,
    /// `det(M_chi - C) E prod_x phi_x^2`, the field side of the even form.
    pub even_rhs: f64,
    /// `E det(2 M_chi D - N_sym)` with `D = diag(1 + N_x)` for the `1/2` ensemble.
    pub even_literal: McEstimate,
}

impl DetPermCheck {
    pub fn normalized_z(&self) -> f64 {
        self.normalized.z_score(self.rhs)
    }

    pub fn even_z(&self) -> f64 {
        self.even_expansion.z_score(self.even_rhs)
    }
}

/// Permutations of `0..n` with their sign.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                rec(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let mut seen = vec![false; n];
            let mut sign = 1.0;
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                let mut len = 0;
                let mut x = s;
                while !seen[x] {
                    seen[x] = true;
                    x = p[x];
                    len += 1;
                }
                if len % 2 == 0 {
                    sign = -sign;
                }
            }
            (p, sign)
        })
        .collect()
}

fn even_expansion(perms: &[(Vec<usize>, f64)], ratio: &[f64], net: &EulerianNetwork) -> f64 {
    let sym = |x: usize, y: usize| (net.get(x, y) + net.get(y, x)) as f64;
    let mut total = 0.0;
    for (p, sign) in perms {
        let mut term = *sign;
        for x in 0..p.len() {
            let y = p[x];
            if y == x {
                term *= 2.0 * ratio[x] * (net.vertex_total(x) as f64 + 0.5);
            } else if p[y] == x {
                // 2-cycle: counted once, from its smaller end.
                if x < y {
                    let k = sym(x, y);
                    term *= k * (k - 1.0);
                }
            } else {
                term *= -sym(x, y);
            }
            if term == 0.0 {
                break;
            }
        }
        total += term;
    }
    total
}

/// Determinant/permanent identity at a given `chi`.
pub fn det_perm_identity_check(
    g: &WeightedGraph,
    chi: &[f64],
    n: usize,
    seed: u64,
) -> Result<DetPermCheck> {
    let k = g.vertex_count();
    if k > MAX_DET_PERM_VERTICES {
        return Err(Error::DimensionTooLarge {
            n: k,
            max: MAX_DET_PERM_VERTICES,
        });
    }
    if chi.len() != k {
        return Err(Error::InvalidInput(
            "chi must match the vertex count".into(),
        ));
    }
    let gm = g.green_function().matrix();
    let a =
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(chi)) - g.conductance_matrix();
    let det_a = a.determinant();
    let rhs = det_a * permanent(gm)?;
    let doubled: Vec<usize> = (0..k).flat_map(|x| [x, x]).collect();
    let even_rhs = det_a * real_moment(gm, &doubled);
    let ratio: Vec<f64> = (0..k).map(|x| chi[x] / g.lambda(x)).collect();
    let perms = permutations(k);

    let soup = LoopSoup::with_default_truncation(g)?;
    let one = try_par_samples(seed, n, |rng| {
        let net = soup.sample_network(1.0, rng)?;
        let norm = DMatrix::from_fn(k, k, |x, y| {
            if x == y {
                ratio[x] * (1.0 + net.vertex_total(x) as f64)
            } else {
                -(net.get(x, y) as f64)
            }
        });
        let lit = DMatrix::from_fn(k, k, |x, y| {
            if x == y {
                chi[x] * (1.0 + net.vertex_total(x) as f64)
            } else {
                -(net.get(x, y) as f64)
            }
        });
        Ok::<_, Error>((norm.determinant(), lit.determinant()))
    })?;
    let half = try_par_samples(seed ^ FIELD_SEED_MIX, n, |rng| {
        let net = soup.sample_network(0.5, rng)?;
        let lit = DMatrix::from_fn(k, k, |x, y| {
            if x == y {
                2.0 * chi[x] * (1.0 + net.vertex_total(x) as f64)
            } else {
                -((net.get(x, y) + net.get(y, x)) as f64)
            }
        });
        Ok::<_, Error>((even_expansion(&perms, &ratio, &net), lit.determinant()))
    })?;
    let col = |v: &[(f64, f64)], first: bool| -> McEstimate {
        McEstimate::from_values(
            &v.iter()
                .map(|p| if first { p.0 } else { p.1 })
                .collect::<Vec<_>>(),
        )
    };
    Ok(DetPermCheck {
        normalized: col(&one, true),
        literal: col(&one, false),
        rhs,
        even_expansion: col(&half, true),
        even_rhs,
        even_literal: col(&half, false),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexIsomorphism {
    pub vertex: usize,
    pub ks: KsReport,
    pub mean: McEstimate,
    pub mean_exact: f64,
    pub second_moment: McEstimate,
    pub second_moment_exact: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsomorphismCheck {
    pub alpha: f64,
    pub vertices: Vec<VertexIsomorphism>,
    /// `E L_x L_y` for the first pair of vertices, with its Wick value.
    pub pair: Option<(usize, usize, McEstimate, f64)>,
}

impl IsomorphismCheck {
    pub fn min_p(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.ks.p_value)
            .fold(1.0, f64::min)
    }

    pub fn max_z(&self) -> f64 {
        let mut z: f64 = 0.0;
        for v in &self.vertices {
            z = z
                .max(v.mean.z_score(v.mean_exact))
                .max(v.second_moment.z_score(v.second_moment_exact));
        }
        if let Some((_, _, est, exact)) = &self.pair {
            z = z.max(est.z_score(*exact));
        }
        z
    }
}

/// Occupation field of the `alpha` ensemble against `|phi|^2 / 2`
/// (`alpha = 1`) or `(phi^R)^2 / 2` (`alpha = 1/2`), vertex by vertex.
pub fn isomorphism_check(
    g: &WeightedGraph,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<IsomorphismCheck> {
    let k = g.vertex_count();
    let samples = sample_with_occupation(g, alpha, n, seed)?;
    let sampler = FieldSampler::new(g)?;
    let fields: Vec<Vec<f64>> = if alpha == 1.0 {
        crate::rng::par_samples(seed ^ FIELD_SEED_MIX, n, |rng| {
            sampler
                .sample_complex(rng)
                .iter()
                .map(|z| 0.5 * z.norm_sqr())
                .collect()
        })
    } else {
        crate::rng::par_samples(seed ^ FIELD_SEED_MIX, n, |rng| {
            sampler
                .sample_real(rng)
                .iter()
                .map(|v| 0.5 * v * v)
                .collect()
        })
    };
    let gm = g.green_function().matrix();
    // E prod of |phi|^2/2 or phi^2/2 over a multiset of vertices.
    let wick = |xs: &[usize]| -> f64 {
        let scale = 0.5f64.powi(xs.len() as i32);
        if alpha == 1.0 {
            scale * complex_moment(gm, xs, xs)
        } else {
            let doubled: Vec<usize> = xs.iter().flat_map(|&x| [x, x]).collect();
            scale * real_moment(gm, &doubled)
        }
    };
    let mut vertices = Vec::with_capacity(k);
    for x in 0..k {
        let loops: Vec<f64> = samples.iter().map(|s| s.occupation[x]).collect();
        let field: Vec<f64> = fields.iter().map(|f| f[x]).collect();
        let sq: Vec<f64> = loops.iter().map(|v| v * v).collect();
        vertices.push(VertexIsomorphism {
            vertex: x,
            ks: ks_two_sample(&loops, &field)?,
            mean: McEstimate::from_values(&loops),
            mean_exact: alpha * gm[(x, x)],
            second_moment: McEstimate::from_values(&sq),
            second_moment_exact: wick(&[x, x]),
        });
    }
    let pair = (k >= 2).then(|| {
        let prods: Vec<f64> = samples
            .iter()
            .map(|s| s.occupation[0] * s.occupation[1])
            .collect();
        (0, 1, McEstimate::from_values(&prods), wick(&[0, 1]))
    });
    Ok(IsomorphismCheck {
        alpha,
        vertices,
        pair,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceCheck {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub mc: McEstimate,
    /// Value from the complex Wick oracle, conductances included.
    pub wick: f64,
    /// The same combination of Green function entries without conductance
    /// prefactors.
    pub without_conductances: f64,
    /// `wick / without_conductances`.
    pub ratio: f64,
}

/// `E N_a N_b` for oriented edges `a`, `b`; a repeated edge adds the mean to
/// its factorial moment.
fn second_moment(g: &WeightedGraph, a: (usize, usize), b: (usize, usize)) -> f64 {
    let lam = g.duality_measure().as_slice();
    let (c, gm) = (g.conductance_matrix(), g.green_function().matrix());
    let mut v = loop_moment_alpha_one(c, lam, gm, &[a, b], &[]);
    if a == b {
        v += loop_moment_alpha_one(c, lam, gm, &[a], &[]);
    }
    v
}

fn oriented_covariance(g: &WeightedGraph, a: (usize, usize), b: (usize, usize)) -> f64 {
    let lam = g.duality_measure().as_slice();
    let (c, gm) = (g.conductance_matrix(), g.green_function().matrix());
    let mean = |e: (usize, usize)| loop_moment_alpha_one(c, lam, gm, &[e], &[]);
    second_moment(g, a, b) - mean(a) * mean(b)
}

fn check_edge(g: &WeightedGraph, e: (usize, usize)) -> Result<()> {
    if g.is_edge(e.0, e.1) {
        Ok(())
    } else {
        Err(Error::OffGraph(e.0, e.1))
    }
}

/// `Cov(N_{x,y}, N_{u,v})` of the `alpha = 1` ensemble for oriented edges.
/// The Wick value is `C_xy C_uv G_xv G_yu` for distinct edges.
pub fn edge_covariance_check(
    g: &WeightedGraph,
    first: (usize, usize),
    second: (usize, usize),
    samples: &[EulerianNetwork],
) -> Result<CovarianceCheck> {
    check_edge(g, first)?;
    check_edge(g, second)?;
    let a: Vec<f64> = samples
        .iter()
        .map(|k| k.get(first.0, first.1) as f64)
        .collect();
    let b: Vec<f64> = samples
        .iter()
        .map(|k| k.get(second.0, second.1) as f64)
        .collect();
    let wick = oriented_covariance(g, first, second);
    let gm = g.green_function();
    let bare = gm.get(first.0, second.1) * gm.get(first.1, second.0);
    Ok(CovarianceCheck {
        first,
        second,
        mc: crate::stats::mc_covariance(&a, &b),
        wick,
        without_conductances: bare,
        ratio: wick / bare,
    })
}

/// `Cov(N_xy - N_yx, N_uv - N_vu)` of the `alpha = 1` ensemble.
pub fn homology_covariance_check(
    g: &WeightedGraph,
    first: (usize, usize),
    second: (usize, usize),
    samples: &[EulerianNetwork],
) -> Result<CovarianceCheck> {
    check_edge(g, first)?;
    check_edge(g, second)?;
    let flux =
        |k: &EulerianNetwork, (x, y): (usize, usize)| k.get(x, y) as f64 - k.get(y, x) as f64;
    let a: Vec<f64> = samples.iter().map(|k| flux(k, first)).collect();
    let b: Vec<f64> = samples.iter().map(|k| flux(k, second)).collect();
    let (x, y) = first;
    let (u, v) = second;
    let wick = oriented_covariance(g, (x, y), (u, v))
        - oriented_covariance(g, (x, y), (v, u))
        - oriented_covariance(g, (y, x), (u, v))
        + oriented_covariance(g, (y, x), (v, u));
    let gm = g.green_function();
    let bare = 2.0 * (gm.get(x, v) * gm.get(y, u) - gm.get(x, u) * gm.get(y, v));
    Ok(CovarianceCheck {
        first,
        second,
        mc: crate::stats::mc_covariance(&a, &b),
        wick,
        without_conductances: bare,
        ratio: if bare == 0.0 { f64::NAN } else { wick / bare },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovCell {
    /// Counts on the crossing oriented edges, in `crossing` order.
    pub key: Vec<u32>,
    pub hits: usize,
    pub report: GofReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovCheck {
    pub alpha: f64,
    pub crossing: Vec<(usize, usize)>,
    pub cells: Vec<MarkovCell>,
    /// Samples in conditioning cells below the hit threshold.
    pub skipped: usize,
}

impl MarkovCheck {
    pub fn min_p(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.report.p_value)
            .fold(1.0, f64::min)
    }
}

/// Conditional independence of the two sides of a cut given the crossing
/// counts. `side[x]` says which part `x` lies in.
///
/// Each side is summarized by a categorical statistic: its internal jump
/// count (capped at 2; for `alpha = 1/2` the symmetrized count) crossed with
/// whether its occupation mass exceeds the overall median. Every
/// conditioning cell with at least `min_hits` samples gets a chi-square
/// independence test.
pub fn markov_property_check(
    g: &WeightedGraph,
    side: &[bool],
    alpha: f64,
    samples: &[SoupSample],
    min_hits: usize,
) -> Result<MarkovCheck> {
    let n = g.vertex_count();
    if side.len() != n || side.iter().all(|&s| s) || side.iter().all(|&s| !s) {
        return Err(Error::InvalidInput(
            "cut must split the vertices into two nonempty parts".into(),
        ));
    }
    let crossing: Vec<(usize, usize)> = if alpha == 1.0 {
        g.oriented_edges()
            .into_iter()
            .filter(|&(x, y)| side[x] != side[y])
            .collect()
    } else {
        g.edges()
            .iter()
            .filter(|e| side[e.u] != side[e.v])
            .map(|e| (e.u, e.v))
            .collect()
    };
    let count = |k: &EulerianNetwork, (x, y): (usize, usize)| {
        if alpha == 1.0 {
            k.get(x, y)
        } else {
            k.get(x, y) + k.get(y, x)
        }
    };
    let mass = |s: &SoupSample, part: bool| -> f64 {
        (0..n)
            .filter(|&x| side[x] == part)
            .map(|x| s.occupation[x])
            .sum()
    };
    let median = |part: bool| -> f64 {
        let mut v: Vec<f64> = samples.iter().map(|s| mass(s, part)).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let medians = [median(false), median(true)];
    let category = |s: &SoupSample, part: bool| -> usize {
        let internal: u32 = g
            .oriented_edges()
            .into_iter()
            .filter(|&(x, y)| side[x] == part && side[y] == part)
            .map(|(x, y)| s.network.get(x, y))
            .sum();
        let jumps = internal.min(2) as usize;
        let heavy = (mass(s, part) > medians[part as usize]) as usize;
        2 * jumps + heavy
    };
    let mut tables: std::collections::BTreeMap<Vec<u32>, (usize, Vec<Vec<u64>>)> =
        Default::default();
    for s in samples {
        let key: Vec<u32> = crossing.iter().map(|&e| count(&s.network, e)).collect();
        let entry = tables
            .entry(key)
            .or_insert_with(|| (0, vec![vec![0; 6]; 6]));
        entry.0 += 1;
        entry.1[category(s, false)][category(s, true)] += 1;
    }
    let mut cells = Vec::new();
    let mut skipped = 0;
    for (key, (hits, table)) in tables {
        if hits < min_hits {
            skipped += hits;
            continue;
        }
        cells.push(MarkovCell {
            key,
            hits,
            report: independence_test(&table)?,
        });
    }
    Ok(MarkovCheck {
        alpha,
        crossing,
        cells,
        skipped,
    })
}
