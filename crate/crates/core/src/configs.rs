//! Configurations: numbered entering and exiting half-edges at each vertex,
//! coupled along oriented edges of the graph, and their even analogue.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::networks::{EulerianNetwork, EvenNetwork};

/// Refuses exhaustive enumeration beyond this many half-edge pairs.
pub const MAX_ENUMERATED_PAIRS: u32 = 8;

/// `coupling[x][i] = (y, j)`: the `i`-th exiting half-edge at `x` is coupled
/// to the `j`-th entering half-edge at `y`. Both numberings start at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    coupling: Vec<Vec<(usize, usize)>>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self {
            coupling: vec![Vec::new(); n],
        }
    }

    pub fn new(g: &WeightedGraph, coupling: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let c = Self { coupling };
        c.validate(g)?;
        Ok(c)
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        let n = g.vertex_count();
        if self.coupling.len() != n {
            return Err(Error::InvalidInput(
                "configuration size does not match graph".into(),
            ));
        }
        let mut hit: Vec<Vec<bool>> = self.coupling.iter().map(|v| vec![false; v.len()]).collect();
        for (x, row) in self.coupling.iter().enumerate() {
            for &(y, j) in row {
                if !g.is_edge(x, y) {
                    return Err(Error::OffGraph(x, y));
                }
                match hit.get_mut(y).and_then(|h| h.get_mut(j)) {
                    Some(h) if !*h => *h = true,
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "entering half-edge {j} at {y} coupled twice or out of range"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.coupling.len()
    }

    pub fn coupling(&self) -> &[Vec<(usize, usize)>] {
        &self.coupling
    }

    pub fn degree(&self, x: usize) -> usize {
        self.coupling[x].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.coupling.iter().map(Vec::len).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.coupling.iter().all(Vec::is_empty)
    }

    /// `inverse[y][j] = (x, i)` for the exiting half-edge coupled to entry
    /// `j` at `y`.
    pub fn inverse(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inv: Vec<Vec<(usize, usize)>> = self
            .coupling
            .iter()
            .map(|v| vec![(usize::MAX, 0); v.len()])
            .collect();
        for (x, row) in self.coupling.iter().enumerate() {
            for (i, &(y, j)) in row.iter().enumerate() {
                inv[y][j] = (x, i);
            }
        }
        inv
    }

    /// The induced Eulerian network `c~`.
    pub fn network(&self) -> EulerianNetwork {
        let mut net = EulerianNetwork::zeros(self.vertex_count());
        for (x, row) in self.coupling.iter().enumerate() {
            for &(y, _) in row {
                net.increment(x, y);
            }
        }
        net
    }

    /// Simultaneous cyclic shift `i -> i + shift_x mod c_x` of the exiting
    /// and entering numbering at every vertex.
    pub fn shifted(&self, shift: &[usize]) -> Self {
        let mut coupling = self.coupling.clone();
        for (x, row) in self.coupling.iter().enumerate() {
            let cx = row.len();
            for (i, &(y, j)) in row.iter().enumerate() {
                let cy = self.coupling[y].len();
                coupling[x][(i + shift[x]) % cx] = (y, (j + shift[y]) % cy);
            }
        }
        Self { coupling }
    }

    /// Whether the two configurations differ by a simultaneous circular
    /// permutation at each vertex.
    pub fn is_equivalent(&self, other: &Self) -> bool {
        if self.degrees() != other.degrees() {
            return false;
        }
        let n = self.vertex_count();
        let inv = self.inverse();
        let mut shift: Vec<Option<usize>> = vec![None; n];
        for start in 0..n {
            let cs = self.degree(start);
            if cs == 0 || shift[start].is_some() {
                continue;
            }
            let found = (0..cs).any(|r| {
                let mut trial = shift.clone();
                if self.propagate_shift(other, &inv, start, r, &mut trial) {
                    shift = trial;
                    true
                } else {
                    false
                }
            });
            if !found {
                return false;
            }
        }
        true
    }

    fn propagate_shift(
        &self,
        other: &Self,
        inv: &[Vec<(usize, usize)>],
        start: usize,
        r: usize,
        shift: &mut [Option<usize>],
    ) -> bool {
        shift[start] = Some(r);
        let mut stack = vec![start];
        let other_inv = other.inverse();
        let assign = |v: usize, s: usize, shift: &mut [Option<usize>], stack: &mut Vec<usize>| {
            match shift[v] {
                Some(t) => t == s,
                None => {
                    shift[v] = Some(s);
                    stack.push(v);
                    true
                }
            }
        };
        while let Some(x) = stack.pop() {
            let cx = self.degree(x);
            let rx = shift[x].unwrap();
            for i in 0..cx {
                // exit i at x goes to (y, j); in `other`, exit i + rx must go to (y, j + ry).
                let (y, j) = self.coupling[x][i];
                let (y2, j2) = other.coupling[x][(i + rx) % cx];
                if y2 != y {
                    return false;
                }
                let cy = self.degree(y);
                if !assign(y, (j2 + cy - j) % cy, shift, &mut stack) {
                    return false;
                }
                // entry i at x comes from (w, l); in `other`, entry i + rx comes from (w, l + rw).
                let (w, l) = inv[x][i];
                let (w2, l2) = other_inv[x][(i + rx) % cx];
                if w2 != w {
                    return false;
                }
                let cw = self.degree(w);
                if !assign(w, (l2 + cw - l) % cw, shift, &mut stack) {
                    return false;
                }
            }
        }
        true
    }

    /// The configuration with all half-edges reversed.
    pub fn opposite(&self) -> Self {
        Self {
            coupling: self.inverse(),
        }
    }
}

/// `det(I-P) prod P_xy^{c_xy} / prod_x c_x!`.
pub fn q_probability(g: &WeightedGraph, c: &Configuration) -> Result<f64> {
    c.validate(g)?;
    let p = g.transition_matrix();
    let mut acc = g.det_i_minus_p().ln();
    for (x, row) in c.coupling().iter().enumerate() {
        acc -= ln_factorial(row.len() as u64);
        for &(y, _) in row {
            acc += p.get(x, y).ln();
        }
    }
    Ok(acc.exp())
}

/// Number of configurations projecting on `k`: `prod_x (k_x!)^2 / prod k_xy!`.
pub fn multiplicity(k: &EulerianNetwork) -> Result<BigUint> {
    if let Some(v) = k.first_non_eulerian_vertex() {
        return Err(Error::NotEulerian { vertex: v });
    }
    let n = k.vertex_count();
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for x in 0..n {
        let f = factorial(k.vertex_total(x));
        num *= &f * &f;
        for y in 0..n {
            den *= factorial(k.get(x, y));
        }
    }
    Ok(num / den)
}

pub(crate) fn factorial(m: u32) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, i| acc * i)
}

/// A configuration drawn uniformly among the preimages of `k`.
pub fn uniform_preimage<R: Rng + ?Sized>(k: &EulerianNetwork, rng: &mut R) -> Configuration {
    let n = k.vertex_count();
    // Exit slots at x labelled by their target, entry slots at y by source.
    let mut exit_slots: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut entry_slots: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for x in 0..n {
        let mut targets: Vec<usize> = (0..n)
            .flat_map(|y| std::iter::repeat_n(y, k.get(x, y) as usize))
            .collect();
        targets.shuffle(rng);
        for (i, y) in targets.into_iter().enumerate() {
            exit_slots.entry((x, y)).or_default().push(i);
        }
        let mut sources: Vec<usize> = (0..n)
            .flat_map(|w| std::iter::repeat_n(w, k.get(w, x) as usize))
            .collect();
        sources.shuffle(rng);
        for (j, w) in sources.into_iter().enumerate() {
            entry_slots.entry((w, x)).or_default().push(j);
        }
    }
    let mut coupling: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|x| vec![(0, 0); k.vertex_total(x) as usize])
        .collect();
    for x in 0..n {
        for y in 0..n {
            if k.get(x, y) == 0 {
                continue;
            }
            let exits = &exit_slots[&(x, y)];
            let mut entries = entry_slots[&(x, y)].clone();
            entries.shuffle(rng);
            for (&i, &j) in exits.iter().zip(&entries) {
                coupling[x][i] = (y, j);
            }
        }
    }
    Configuration { coupling }
}

/// Visits every configuration with the given vertex degrees, in a fixed
/// order: exits are coupled in vertex-then-index order, each to the smallest
/// free entry first.
pub fn for_each_configuration<F: FnMut(&Configuration)>(
    g: &WeightedGraph,
    degrees: &[usize],
    mut f: F,
) -> Result<()> {
    let n = g.vertex_count();
    if degrees.len() != n {
        return Err(Error::InvalidInput(
            "degree vector size does not match graph".into(),
        ));
    }
    let total: usize = degrees.iter().sum();
    if total > MAX_ENUMERATED_PAIRS as usize {
        return Err(Error::TooLarge(format!(
            "{total} half-edge pairs exceed {MAX_ENUMERATED_PAIRS}"
        )));
    }
    let exits: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (0..degrees[x]).map(move |i| (x, i)))
        .collect();
    let mut used: Vec<Vec<bool>> = degrees.iter().map(|&d| vec![false; d]).collect();
    let mut c = Configuration {
        coupling: degrees.iter().map(|&d| vec![(0, 0); d]).collect(),
    };
    fn rec<F: FnMut(&Configuration)>(
        g: &WeightedGraph,
        exits: &[(usize, usize)],
        idx: usize,
        used: &mut Vec<Vec<bool>>,
        c: &mut Configuration,
        f: &mut F,
    ) {
        if idx == exits.len() {
            f(c);
            return;
        }
        let (x, i) = exits[idx];
        for &y in g.neighbors(x) {
            for j in 0..used[y].len() {
                if !used[y][j] {
                    used[y][j] = true;
                    c.coupling[x][i] = (y, j);
                    rec(g, exits, idx + 1, used, c, f);
                    used[y][j] = false;
                }
            }
        }
    }
    rec(g, &exits, 0, &mut used, &mut c, &mut f);
    Ok(())
}

/// All configurations with `c_x <= caps[x]`, sorted.
pub fn enumerate_configurations(g: &WeightedGraph, caps: &[usize]) -> Result<Vec<Configuration>> {
    let total: usize = caps.iter().sum();
    if total > MAX_ENUMERATED_PAIRS as usize {
        return Err(Error::TooLarge(format!(
            "{total} half-edge pairs exceed {MAX_ENUMERATED_PAIRS}"
        )));
    }
    let mut out = Vec::new();
    for degrees in degree_vectors(caps) {
        for_each_configuration(g, &degrees, |c| out.push(c.clone()))?;
    }
    out.sort();
    Ok(out)
}

/// All vectors `d` with `0 <= d_x <= caps[x]`, lexicographically.
pub fn degree_vectors(caps: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &cap in caps {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=cap).map(move |d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

/// Brute-force count of configurations projecting on `k`.
pub fn preimage_count(g: &WeightedGraph, k: &EulerianNetwork) -> Result<u64> {
    k.validate(g)?;
    let degrees: Vec<usize> = k.vertex_totals().iter().map(|&d| d as usize).collect();
    let mut count = 0;
    for_each_configuration(g, &degrees, |c| {
        if c.network() == *k {
            count += 1;
        }
    })?;
    Ok(count)
}

/// Number of configurations with given degrees, by recursion on the number
/// of free half-edges left at each vertex.
pub fn count_configurations(g: &WeightedGraph, degrees: &[usize]) -> BigUint {
    let mut memo = HashMap::new();
    count_rec(g, degrees.to_vec(), degrees.to_vec(), &mut memo)
}

fn count_rec(
    g: &WeightedGraph,
    exits: Vec<usize>,
    entries: Vec<usize>,
    memo: &mut HashMap<(Vec<usize>, Vec<usize>), BigUint>,
) -> BigUint {
    let Some(x) = exits.iter().position(|&e| e > 0) else {
        return BigUint::one();
    };
    if let Some(v) = memo.get(&(exits.clone(), entries.clone())) {
        return v.clone();
    }
    let mut total = BigUint::default();
    let mut ex = exits.clone();
    ex[x] -= 1;
    for &y in g.neighbors(x) {
        if entries[y] > 0 {
            let mut en = entries.clone();
            en[y] -= 1;
            total += count_rec(g, ex.clone(), en, memo) * entries[y];
        }
    }
    memo.insert((exits, entries), total.clone());
    total
}

/// `pairing[x][i] = (y, j)`: slot `i` among the `2 k_x` slots at `x` is
/// paired with slot `j` at `y`. The pairing is an involution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvenConfiguration {
    pairing: Vec<Vec<(usize, usize)>>,
}

impl EvenConfiguration {
    pub fn new(g: &WeightedGraph, pairing: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let c = Self { pairing };
        c.validate(g)?;
        Ok(c)
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.pairing.len() != g.vertex_count() {
            return Err(Error::InvalidInput(
                "configuration size does not match graph".into(),
            ));
        }
        for (x, row) in self.pairing.iter().enumerate() {
            if row.len() % 2 != 0 {
                return Err(Error::NotEven { vertex: x });
            }
            for (i, &(y, j)) in row.iter().enumerate() {
                if !g.is_edge(x, y) {
                    return Err(Error::OffGraph(x, y));
                }
                if self.pairing.get(y).and_then(|r| r.get(j)) != Some(&(x, i)) {
                    return Err(Error::InvalidInput(format!(
                        "slot {i} at {x} is not paired back"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn pairing(&self) -> &[Vec<(usize, usize)>] {
        &self.pairing
    }

    /// Half the number of slots at each vertex.
    pub fn half_degrees(&self) -> Vec<usize> {
        self.pairing.iter().map(|r| r.len() / 2).collect()
    }

    pub fn network(&self) -> EvenNetwork {
        let n = self.pairing.len();
        let mut net = EvenNetwork::zeros(n);
        for (x, row) in self.pairing.iter().enumerate() {
            for &(y, _) in row {
                if x < y {
                    net.set(x, y, net.get(x, y) + 1);
                }
            }
        }
        net
    }
}

/// `sqrt(det(I-P)) prod_e w_e^{k_e} / prod_x 2^{k_x} k_x!` with
/// `w_e = C_xy / sqrt(lambda_x lambda_y)` and `k_x` half the slot count.
pub fn q_even_probability(g: &WeightedGraph, c: &EvenConfiguration) -> Result<f64> {
    c.validate(g)?;
    let mut acc = 0.5 * g.det_i_minus_p().ln();
    for (x, row) in c.pairing().iter().enumerate() {
        let kx = (row.len() / 2) as u64;
        acc -= kx as f64 * std::f64::consts::LN_2 + ln_factorial(kx);
        for &(y, _) in row {
            if x < y {
                acc += (g.conductance(x, y) / (g.lambda(x) * g.lambda(y)).sqrt()).ln();
            }
        }
    }
    Ok(acc.exp())
}

/// `prod_x (2k_x)! / prod_e k_e!`.
pub fn even_multiplicity(k: &EvenNetwork) -> Result<BigUint> {
    let n = k.vertex_count();
    if let Some(x) = (0..n).find(|&x| !k.degree(x).is_multiple_of(2)) {
        return Err(Error::NotEven { vertex: x });
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for x in 0..n {
        num *= factorial(k.degree(x));
        for y in x + 1..n {
            den *= factorial(k.get(x, y));
        }
    }
    Ok(num / den)
}

/// An even configuration drawn uniformly among the preimages of `k`.
pub fn uniform_even_preimage<R: Rng + ?Sized>(k: &EvenNetwork, rng: &mut R) -> EvenConfiguration {
    let n = k.vertex_count();
    let mut slots: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for x in 0..n {
        let mut labels: Vec<usize> = (0..n)
            .flat_map(|y| std::iter::repeat_n(y, k.get(x, y) as usize))
            .collect();
        labels.shuffle(rng);
        for (i, y) in labels.into_iter().enumerate() {
            slots.entry((x, y)).or_default().push(i);
        }
    }
    let mut pairing: Vec<Vec<(usize, usize)>> =
        (0..n).map(|x| vec![(0, 0); k.degree(x) as usize]).collect();
    for x in 0..n {
        for y in x + 1..n {
            if k.get(x, y) == 0 {
                continue;
            }
            let mine = &slots[&(x, y)];
            let mut theirs = slots[&(y, x)].clone();
            theirs.shuffle(rng);
            for (&i, &j) in mine.iter().zip(&theirs) {
                pairing[x][i] = (y, j);
                pairing[y][j] = (x, i);
            }
        }
    }
    EvenConfiguration { pairing }
}

/// Visits every even configuration with `2 * half_degrees[x]` slots at `x`.
pub fn for_each_even_configuration<F: FnMut(&EvenConfiguration)>(
    g: &WeightedGraph,
    half_degrees: &[usize],
    mut f: F,
) -> Result<()> {
    let n = g.vertex_count();
    if half_degrees.len() != n {
        return Err(Error::InvalidInput(
            "degree vector size does not match graph".into(),
        ));
    }
    let total: usize = half_degrees.iter().sum();
    if total > MAX_ENUMERATED_PAIRS as usize {
        return Err(Error::TooLarge(format!(
            "{total} half-degrees exceed {MAX_ENUMERATED_PAIRS}"
        )));
    }
    let mut c = EvenConfiguration {
        pairing: half_degrees
            .iter()
            .map(|&d| vec![(usize::MAX, 0); 2 * d])
            .collect(),
    };
    fn rec<F: FnMut(&EvenConfiguration)>(g: &WeightedGraph, c: &mut EvenConfiguration, f: &mut F) {
        let first = c
            .pairing
            .iter()
            .enumerate()
            .find_map(|(x, r)| r.iter().position(|p| p.0 == usize::MAX).map(|i| (x, i)));
        let Some((x, i)) = first else {
            f(c);
            return;
        };
        for &y in g.neighbors(x) {
            for j in 0..c.pairing[y].len() {
                if c.pairing[y][j].0 == usize::MAX {
                    c.pairing[x][i] = (y, j);
                    c.pairing[y][j] = (x, i);
                    rec(g, c, f);
                    c.pairing[x][i] = (usize::MAX, 0);
                    c.pairing[y][j] = (usize::MAX, 0);
                }
            }
        }
    }
    rec(g, &mut c, &mut f);
    Ok(())
}

pub fn enumerate_even_configurations(
    g: &WeightedGraph,
    caps: &[usize],
) -> Result<Vec<EvenConfiguration>> {
    let mut out = Vec::new();
    for degrees in degree_vectors(caps) {
        for_each_even_configuration(g, &degrees, |c| out.push(c.clone()))?;
    }
    out.sort();
    Ok(out)
}

/// Number of even configurations with given half-degrees, by recursion on
/// free slot counts.
pub fn count_even_configurations(g: &WeightedGraph, half_degrees: &[usize]) -> BigUint {
    let mut memo = HashMap::new();
    count_even_rec(g, half_degrees.iter().map(|d| 2 * d).collect(), &mut memo)
}

fn count_even_rec(
    g: &WeightedGraph,
    free: Vec<usize>,
    memo: &mut HashMap<Vec<usize>, BigUint>,
) -> BigUint {
    let Some(x) = free.iter().position(|&e| e > 0) else {
        return BigUint::one();
    };
    if let Some(v) = memo.get(&free) {
        return v.clone();
    }
    let mut total = BigUint::default();
    for &y in g.neighbors(x) {
        if free[y] > 0 {
            let mut next = free.clone();
            next[x] -= 1;
            next[y] -= 1;
            total += count_even_rec(g, next, memo) * free[y];
        }
    }
    memo.insert(free, total.clone());
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_eulerian, enumerate_even};
    use crate::networks::{pmf_eulerian, pmf_even};
    use crate::rng::seeded;
    use num_traits::ToPrimitive;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn q_examples() {
        let g = WeightedGraph::two_vertex();
        assert!((q_probability(&g, &Configuration::empty(2)).unwrap() - 0.75).abs() < 1e-15);
        let c = Configuration::new(&g, vec![vec![(1, 0)], vec![(0, 0)]]).unwrap();
        assert!((q_probability(&g, &c).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        assert!(Configuration::new(&g, vec![vec![(1, 0)], vec![(0, 1)]]).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        let g = WeightedGraph::two_vertex();
        assert_eq!(multiplicity(&EulerianNetwork::zeros(2)).unwrap(), big(1));
        let k1 = EulerianNetwork::from_triples(&g, &[(0, 1, 1), (1, 0, 1)]).unwrap();
        assert_eq!(multiplicity(&k1).unwrap(), big(1));
        let k2 = EulerianNetwork::from_triples(&g, &[(0, 1, 2), (1, 0, 2)]).unwrap();
        assert_eq!(multiplicity(&k2).unwrap(), big(4));
        assert_eq!(preimage_count(&g, &k2).unwrap(), 4);
    }

    #[test]
    fn multiplicity_matches_preimages_and_pmf() {
        for g in [
            WeightedGraph::complete(3, 1.0).unwrap(),
            WeightedGraph::complete(4, 0.5).unwrap(),
        ] {
            for k in enumerate_eulerian(&g, 4) {
                let m = multiplicity(&k).unwrap();
                assert_eq!(m, big(preimage_count(&g, &k).unwrap()), "{k:?}");
                let mut rng = seeded(1, 0);
                let c = uniform_preimage(&k, &mut rng);
                c.validate(&g).unwrap();
                assert_eq!(c.network(), k);
                let lhs = m.to_f64().unwrap() * q_probability(&g, &c).unwrap();
                let rhs = pmf_eulerian(&g, &k).unwrap();
                assert!((lhs - rhs).abs() < 1e-13 * rhs.max(1e-300));
            }
        }
    }

    #[test]
    fn uniform_preimage_is_uniform() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let k = EulerianNetwork::from_triples(&g, &[(0, 1, 2), (1, 0, 1), (1, 2, 1), (2, 0, 1)])
            .unwrap();
        let m = multiplicity(&k).unwrap().to_u64().unwrap();
        let mut rng = seeded(2, 0);
        let draws = 40_000u64;
        let mut freq: HashMap<Configuration, u64> = HashMap::new();
        for _ in 0..draws {
            *freq.entry(uniform_preimage(&k, &mut rng)).or_default() += 1;
        }
        assert_eq!(freq.len() as u64, m);
        let counts: Vec<u64> = freq.values().copied().collect();
        let probs = vec![1.0 / m as f64; m as usize];
        let report = crate::stats::chi_square_gof(&counts, &probs, draws).unwrap();
        assert!(report.p_value > 1e-3, "{report:?}");
    }

    #[test]
    fn enumeration_counts() {
        let g = WeightedGraph::two_vertex();
        assert_eq!(enumerate_configurations(&g, &[1, 1]).unwrap().len(), 2);
        assert_eq!(enumerate_configurations(&g, &[0, 0]).unwrap().len(), 1);
        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        // c = (1,1,1): the two 3-cycles
        let mut n = 0;
        for_each_configuration(&k3, &[1, 1, 1], |_| n += 1).unwrap();
        assert_eq!(n, 2);
        assert!(enumerate_configurations(&k3, &[3, 3, 3]).is_err());
        for d in degree_vectors(&[2, 2, 2]) {
            let mut n = 0u64;
            for_each_configuration(&k3, &d, |_| n += 1).unwrap();
            assert_eq!(count_configurations(&k3, &d), big(n));
        }
    }

    #[test]
    fn equivalence_and_opposite() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        let mut rng = seeded(3, 0);
        for k in enumerate_eulerian(&g, 6)
            .into_iter()
            .filter(|k| !k.is_zero())
            .take(60)
        {
            let c = uniform_preimage(&k, &mut rng);
            let shift: Vec<usize> = c
                .degrees()
                .iter()
                .map(|&d| if d == 0 { 0 } else { rng.random_range(0..d) })
                .collect();
            let s = c.shifted(&shift);
            assert!(c.is_equivalent(&s));
            assert!(s.is_equivalent(&c));
            assert_eq!(c.opposite().network(), k.transpose());
            assert_eq!(c.opposite().opposite(), c);
        }
        // Two distinct couplings with one half-edge each are never equivalent.
        let k3 = WeightedGraph::complete(3, 1.0).unwrap();
        let mut all = Vec::new();
        for_each_configuration(&k3, &[1, 1, 1], |c| all.push(c.clone())).unwrap();
        assert!(!all[0].is_equivalent(&all[1]));
    }

    #[test]
    fn q_sums_to_one_on_two_vertices() {
        let g = WeightedGraph::two_vertex();
        let m = 4;
        let total: f64 = enumerate_configurations(&g, &[m, m])
            .unwrap()
            .iter()
            .map(|c| q_probability(&g, c).unwrap())
            .sum();
        let tail = 0.25f64.powi(m as i32 + 1);
        assert!((total + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_examples() {
        let g = WeightedGraph::two_vertex();
        let empty = EvenConfiguration::new(&g, vec![vec![], vec![]]).unwrap();
        assert!((q_even_probability(&g, &empty).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        let k = EvenNetwork::from_triples(&g, &[(0, 1, 2)]).unwrap();
        let m = even_multiplicity(&k).unwrap();
        assert_eq!(m, big(2));
        let mut rng = seeded(4, 0);
        let c = uniform_even_preimage(&k, &mut rng);
        c.validate(&g).unwrap();
        assert_eq!(c.network(), k);
        let lhs = m.to_f64().unwrap() * q_even_probability(&g, &c).unwrap();
        assert!((lhs - pmf_even(&g, &k).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn even_multiplicity_matches_enumeration() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        for k in enumerate_even(&g, 4) {
            let half: Vec<usize> = k.vertex_totals().iter().map(|&t| t as usize).collect();
            let mut n = 0u64;
            for_each_even_configuration(&g, &half, |c| {
                if c.network() == k {
                    n += 1;
                }
            })
            .unwrap();
            assert_eq!(even_multiplicity(&k).unwrap(), big(n));
            let c = uniform_even_preimage(&k, &mut seeded(5, 0));
            let lhs = even_multiplicity(&k).unwrap().to_f64().unwrap()
                * q_even_probability(&g, &c).unwrap();
            let rhs = pmf_even(&g, &k).unwrap();
            assert!((lhs - rhs).abs() < 1e-13 * rhs);
        }
        for d in degree_vectors(&[1, 1, 2, 1]) {
            let mut n = 0u64;
            for_each_even_configuration(&g, &d, |_| n += 1).unwrap();
            assert_eq!(count_even_configurations(&g, &d), big(n));
        }
    }

    #[test]
    fn q_even_sums_to_one_on_two_vertices() {
        let g = WeightedGraph::two_vertex();
        let m = 4;
        let total: f64 = enumerate_even_configurations(&g, &[m, m])
            .unwrap()
            .iter()
            .map(|c| q_even_probability(&g, c).unwrap())
            .sum();
        // remaining mass: sqrt(3/4) sum_{j > m} C(2j, j) 16^-j
        let mut tail = 0.0;
        let mut term = 1.0f64;
        for j in 1..200u32 {
            term *= (2 * j - 1) as f64 * (2 * j) as f64 / (j as f64 * j as f64) / 16.0;
            if j as usize > m {
                tail += term;
            }
        }
        assert!(
            (total + 0.75f64.sqrt() * tail - 1.0).abs() < 1e-10,
            "{total} {tail}"
        );
    }
}
