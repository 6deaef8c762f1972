//! Exact multivariate power series for the configuration-counting generating
//! functions, compared against enumeration.
//!
//! With unit conductances, `Q` summing to one says that the exponential
//! generating function `sum_c |C_c| prod s_x^{c_x} / c_x!` equals
//! `1 / det(I - S A)`, `S = diag(s)`. For even configurations, with `c_x`
//! half the number of slots at `x`, the same argument gives
//! `sum_c |C^ev_c| prod s_x^{c_x} / c_x! = det(I - 2 S A)^{-1/2}`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::configs::{
    degree_vectors, factorial, for_each_configuration, for_each_even_configuration,
    MAX_ENUMERATED_PAIRS,
};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub const MAX_SERIES_DEGREE: u32 = MAX_ENUMERATED_PAIRS;

/// Polynomial truncated at a total degree, with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    vars: usize,
    max_degree: u32,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Series {
    pub fn constant(vars: usize, max_degree: u32, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; vars], c);
        }
        Self {
            vars,
            max_degree,
            terms,
        }
    }

    pub fn one(vars: usize, max_degree: u32) -> Self {
        Self::constant(vars, max_degree, BigRational::one())
    }

    /// `c * s_x`.
    pub fn monomial(vars: usize, max_degree: u32, x: usize, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() && max_degree >= 1 {
            let mut e = vec![0; vars];
            e[x] = 1;
            terms.insert(e, c);
        }
        Self {
            vars,
            max_degree,
            terms,
        }
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms
            .get(exponents)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let v = terms.entry(e.clone()).or_insert_with(BigRational::zero);
            *v += c;
            if v.is_zero() {
                terms.remove(e);
            }
        }
        Self {
            vars: self.vars,
            max_degree: self.max_degree,
            terms,
        }
    }

    pub fn scale(&self, a: &BigRational) -> Self {
        if a.is_zero() {
            return Self::constant(self.vars, self.max_degree, BigRational::zero());
        }
        Self {
            vars: self.vars,
            max_degree: self.max_degree,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * a)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            let da: u32 = ea.iter().sum();
            for (eb, cb) in &other.terms {
                if da + eb.iter().sum::<u32>() > self.max_degree {
                    continue;
                }
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *terms.entry(e).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self {
            vars: self.vars,
            max_degree: self.max_degree,
            terms,
        }
    }

    /// `sum_m a_m (self - 1)^m`, valid when the constant term is one.
    fn compose_around_one(&self, coeff: impl Fn(u32) -> BigRational) -> Self {
        let minus_one = BigRational::from_integer(BigInt::from(-1));
        let h = self.add(&Self::one(self.vars, self.max_degree).scale(&minus_one));
        let mut power = Self::one(self.vars, self.max_degree);
        let mut out = Self::one(self.vars, self.max_degree).scale(&coeff(0));
        for m in 1..=self.max_degree {
            power = power.mul(&h);
            out = out.add(&power.scale(&coeff(m)));
        }
        out
    }

    /// Multiplicative inverse of a series with constant term one.
    pub fn inverse(&self) -> Self {
        self.compose_around_one(|m| {
            BigRational::from_integer(BigInt::from(if m % 2 == 0 { 1 } else { -1 }))
        })
    }

    /// `self^{-1/2}` for a series with constant term one, from the binomial
    /// series `sum_m binom(-1/2, m) h^m`.
    pub fn inverse_sqrt(&self) -> Self {
        self.compose_around_one(|m| {
            let mut c = BigRational::one();
            for i in 0..m {
                // binom(-1/2, m) = prod_{i<m} (-1/2 - i) / (i + 1)
                c *= BigRational::new(
                    BigInt::from(-1 - 2 * i as i64),
                    BigInt::from(2 * (i as i64 + 1)),
                );
            }
            c
        })
    }
}

/// `det(I - scale * S A)` with `A` the adjacency matrix, by expansion over
/// permutations.
pub fn det_series(g: &WeightedGraph, scale: &BigRational, max_degree: u32) -> Result<Series> {
    let n = g.vertex_count();
    if n > 8 {
        return Err(Error::DimensionTooLarge { n, max: 8 });
    }
    let entry = |x: usize, y: usize| -> Series {
        if x == y {
            Series::one(n, max_degree)
        } else if g.is_edge(x, y) {
            Series::monomial(n, max_degree, x, -scale.clone())
        } else {
            Series::constant(n, max_degree, BigRational::zero())
        }
    };
    let mut total = Series::constant(n, max_degree, BigRational::zero());
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        let sign = permutation_sign(p);
        let mut term = Series::one(n, max_degree);
        for (x, &y) in p.iter().enumerate() {
            term = term.mul(&entry(x, y));
            if term.terms.is_empty() {
                return;
            }
        }
        total = total.add(&term.scale(&BigRational::from_integer(BigInt::from(sign))));
    });
    Ok(total)
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn permutation_sign(p: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratingRow {
    pub degrees: Vec<u32>,
    /// Enumerated number of configurations.
    pub count: String,
    /// Series coefficient times `prod c_x!`.
    pub series_count: String,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratingCheck {
    pub rows: Vec<GeneratingRow>,
    pub all_match: bool,
    /// Coefficients that also match when the series variable is scaled by
    /// `alt_scale` instead (used to test alternative normalizations).
    pub alt_scale: Option<String>,
    pub alt_all_match: Option<bool>,
}

fn rational_times_factorials(c: &BigRational, degrees: &[u32]) -> BigRational {
    let f: BigUint = degrees.iter().map(|&d| factorial(d)).product();
    c * BigRational::from_integer(BigInt::from(f))
}

fn to_string_exact(r: &BigRational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        r.to_string()
    }
}

fn build_check(
    degrees_list: Vec<Vec<u32>>,
    counts: Vec<BigUint>,
    series: &Series,
    alt: Option<(String, &Series)>,
) -> GeneratingCheck {
    let mut rows = Vec::with_capacity(degrees_list.len());
    let mut alt_ok = true;
    for (d, count) in degrees_list.into_iter().zip(counts) {
        let sc = rational_times_factorials(&series.coefficient(&d), &d);
        let exact = BigRational::from_integer(BigInt::from(count.clone()));
        if let Some((_, alt_series)) = &alt {
            alt_ok &= rational_times_factorials(&alt_series.coefficient(&d), &d) == exact;
        }
        rows.push(GeneratingRow {
            matches: sc == exact,
            degrees: d,
            count: count.to_string(),
            series_count: to_string_exact(&sc),
        });
    }
    let all_match = rows.iter().all(|r| r.matches);
    GeneratingCheck {
        rows,
        all_match,
        alt_all_match: alt.as_ref().map(|_| alt_ok),
        alt_scale: alt.map(|(s, _)| s),
    }
}

fn degree_list(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    degree_vectors(&vec![max_degree as usize; n])
        .into_iter()
        .filter(|d| d.iter().sum::<usize>() <= max_degree as usize)
        .map(|d| d.into_iter().map(|x| x as u32).collect())
        .collect()
}

/// Coefficients of `1/det(I - S A)` against enumerated configuration counts,
/// for every degree vector of total at most `max_degree`.
pub fn config_generating_check(g: &WeightedGraph, max_degree: u32) -> Result<GeneratingCheck> {
    if max_degree > MAX_SERIES_DEGREE {
        return Err(Error::TooLarge(format!(
            "series degree {max_degree} exceeds {MAX_SERIES_DEGREE}"
        )));
    }
    let series = det_series(g, &BigRational::one(), max_degree)?.inverse();
    let degrees = degree_list(g.vertex_count(), max_degree);
    let counts = degrees
        .iter()
        .map(|d| {
            let d: Vec<usize> = d.iter().map(|&x| x as usize).collect();
            let mut count = 0u64;
            for_each_configuration(g, &d, |_| count += 1)?;
            Ok(BigUint::from(count))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_check(degrees, counts, &series, None))
}

/// Coefficients of `det(I - 2 S A)^{-1/2}` against enumerated even
/// configuration counts. The check also reports whether the scaling
/// `det(I - S A / 2)^{-1/2}` would match.
pub fn even_generating_check(g: &WeightedGraph, max_degree: u32) -> Result<GeneratingCheck> {
    if max_degree > MAX_SERIES_DEGREE {
        return Err(Error::TooLarge(format!(
            "series degree {max_degree} exceeds {MAX_SERIES_DEGREE}"
        )));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let series = det_series(g, &two, max_degree)?.inverse_sqrt();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let alt = det_series(g, &half, max_degree)?.inverse_sqrt();
    let degrees = degree_list(g.vertex_count(), max_degree);
    let counts = degrees
        .iter()
        .map(|d| {
            let d: Vec<usize> = d.iter().map(|&x| x as usize).collect();
            let mut count = 0u64;
            for_each_even_configuration(g, &d, |_| count += 1)?;
            Ok(BigUint::from(count))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_check(
        degrees,
        counts,
        &series,
        Some(("1/2".into(), &alt)),
    ))
}

/// True when every coefficient is a nonnegative rational.
pub fn is_nonnegative(s: &Series) -> bool {
    s.terms.values().all(|c| !c.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn two_vertex_series() {
        let g = WeightedGraph::two_vertex();
        let d = det_series(&g, &BigRational::one(), 6).unwrap();
        assert_eq!(d.coefficient(&[0, 0]), rat(1, 1));
        assert_eq!(d.coefficient(&[1, 1]), rat(-1, 1));
        assert_eq!(d.terms().len(), 2);
        let inv = d.inverse();
        for m in 0..=3 {
            assert_eq!(inv.coefficient(&[m, m]), rat(1, 1));
        }
        let isq = d.inverse_sqrt();
        // (1 - t)^{-1/2} = 1 + t/2 + 3t^2/8 + ...
        assert_eq!(isq.coefficient(&[1, 1]), rat(1, 2));
        assert_eq!(isq.coefficient(&[2, 2]), rat(3, 8));
        assert!(is_nonnegative(&isq));
        assert_eq!(isq.mul(&isq).mul(&d), Series::one(2, 6));
    }

    #[test]
    fn triangle_coefficients() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let check = config_generating_check(&g, 4).unwrap();
        assert!(check.all_match);
        let ab = check
            .rows
            .iter()
            .find(|r| r.degrees == vec![1, 1, 0])
            .unwrap();
        assert_eq!(ab.count, "1");
        let abc = check
            .rows
            .iter()
            .find(|r| r.degrees == vec![1, 1, 1])
            .unwrap();
        assert_eq!(abc.count, "2");
        let zero = check
            .rows
            .iter()
            .find(|r| r.degrees == vec![0, 0, 0])
            .unwrap();
        assert_eq!(zero.count, "1");
    }

    #[test]
    fn even_two_vertex_scaling() {
        let g = WeightedGraph::two_vertex();
        let check = even_generating_check(&g, 6).unwrap();
        assert!(check.all_match);
        assert_eq!(check.alt_all_match, Some(false));
        let row = check.rows.iter().find(|r| r.degrees == vec![1, 1]).unwrap();
        assert_eq!(row.count, "2");
    }

    #[test]
    fn degree_guard() {
        let g = WeightedGraph::two_vertex();
        assert!(config_generating_check(&g, 9).is_err());
    }
}
