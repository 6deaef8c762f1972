//! The Wilson-algorithm variant: based loops at successive vertices, each
//! avoiding the earlier ones, and the exit configuration they determine.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::networks::EulerianNetwork;
use crate::soup::DiscreteLoop;

/// A loop based at `base`, stored as its visit sequence starting at `base`.
/// It returns to `base` exactly `excursions` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasedLoop {
    pub base: usize,
    pub vertices: Vec<usize>,
}

impl BasedLoop {
    pub fn excursions(&self) -> Vec<&[usize]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.vertices.len() {
            if i == self.vertices.len() || self.vertices[i] == self.base {
                out.push(&self.vertices[start..i]);
                start = i;
            }
        }
        out
    }

    pub fn visits(&self) -> usize {
        self.vertices.iter().filter(|&&v| v == self.base).count()
    }
}

/// For every vertex, the targets of its exiting half-edges in order of use.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExitConfiguration {
    pub exits: Vec<Vec<usize>>,
}

impl ExitConfiguration {
    pub fn network(&self) -> EulerianNetwork {
        let mut net = EulerianNetwork::zeros(self.exits.len());
        for (x, targets) in self.exits.iter().enumerate() {
            for &y in targets {
                net.increment(x, y);
            }
        }
        net
    }
}

#[derive(Debug, Clone)]
pub struct WilsonSample {
    pub loops: Vec<BasedLoop>,
    pub exit_configuration: ExitConfiguration,
}

fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidInput(
            "vertex order must be a permutation".into(),
        ));
    }
    for &x in order {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return Err(Error::InvalidInput(
                "vertex order must be a permutation".into(),
            ));
        }
    }
    Ok(())
}

/// Runs the chain from each `x_i` in turn, with `x_1..x_{i-1}` absorbing.
/// Completed excursions back to `x_i` are kept; the final, absorbed one is
/// discarded.
pub fn wilson_sample<R: Rng + ?Sized>(
    g: &WeightedGraph,
    order: &[usize],
    rng: &mut R,
) -> Result<WilsonSample> {
    let n = g.vertex_count();
    check_order(n, order)?;
    let p = g.transition_matrix();
    let mut removed = vec![false; n];
    let mut exits = vec![Vec::new(); n];
    let mut loops = Vec::new();
    for &base in order {
        let mut vertices = Vec::new();
        'excursions: loop {
            let mut path = vec![base];
            let mut cur = base;
            loop {
                let mut u = rng.random::<f64>();
                let mut next = None;
                for &w in g.neighbors(cur) {
                    u -= p.get(cur, w);
                    if u < 0.0 {
                        next = Some(w);
                        break;
                    }
                }
                match next {
                    Some(w) if !removed[w] => {
                        if w == base {
                            break;
                        }
                        path.push(w);
                        cur = w;
                    }
                    _ => break 'excursions,
                }
            }
            for i in 0..path.len() {
                let to = path.get(i + 1).copied().unwrap_or(base);
                exits[path[i]].push(to);
            }
            vertices.extend(path);
        }
        if !vertices.is_empty() {
            loops.push(BasedLoop { base, vertices });
        }
        removed[base] = true;
    }
    Ok(WilsonSample {
        loops,
        exit_configuration: ExitConfiguration { exits },
    })
}

/// Rebuilds the based loops from an exit configuration: starting at the
/// first vertex (in `order`) with unused exits, follow unused exits in
/// increasing order until the base point has none left.
pub fn based_loops_from_exits(
    exits: &ExitConfiguration,
    order: &[usize],
) -> Result<Vec<BasedLoop>> {
    let n = exits.exits.len();
    check_order(n, order)?;
    if let Some(v) = exits.network().first_non_eulerian_vertex() {
        return Err(Error::NotEulerian { vertex: v });
    }
    let mut next = vec![0usize; n];
    let mut loops = Vec::new();
    for &base in order {
        let mut vertices = Vec::new();
        while next[base] < exits.exits[base].len() {
            let mut cur = base;
            loop {
                vertices.push(cur);
                let to = exits.exits[cur][next[cur]];
                next[cur] += 1;
                if to == base {
                    break;
                }
                if next[to] >= exits.exits[to].len() {
                    return Err(Error::InvalidInput(format!(
                        "exits at vertex {to} exhausted"
                    )));
                }
                cur = to;
            }
        }
        if !vertices.is_empty() {
            loops.push(BasedLoop { base, vertices });
        }
    }
    Ok(loops)
}

/// Chinese restaurant partition of `n` items: the probability of a partition
/// with block sizes `n_i` is `prod (n_i - 1)! / n!`. Blocks are returned as
/// increasing index lists, ordered by their smallest element.
pub fn crp_partition<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        // Item i joins an existing block with probability size / (i + 1), or
        // opens a new block with probability 1 / (i + 1).
        let r = rng.random_range(0..=i);
        if r == i {
            blocks.push(vec![i]);
        } else {
            let mut acc = 0;
            for b in blocks.iter_mut() {
                acc += b.len();
                if r < acc {
                    b.push(i);
                    break;
                }
            }
        }
    }
    blocks
}

/// Splits a based loop at its base point: its excursions are partitioned by
/// [`crp_partition`], each block concatenated into one unbased loop.
pub fn eppf_split<R: Rng + ?Sized>(l: &BasedLoop, rng: &mut R) -> Vec<DiscreteLoop> {
    let exc = l.excursions();
    crp_partition(exc.len(), rng)
        .into_iter()
        .map(|block| {
            let seq: Vec<usize> = block.iter().flat_map(|&i| exc[i].iter().copied()).collect();
            DiscreteLoop::new(&seq)
        })
        .collect()
}

/// Unbased loops from one Wilson sample, split by [`eppf_split`].
pub fn wilson_loops<R: Rng + ?Sized>(sample: &WilsonSample, rng: &mut R) -> Vec<DiscreteLoop> {
    sample
        .loops
        .iter()
        .flat_map(|l| eppf_split(l, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::McEstimate;
    use std::collections::HashMap;

    #[test]
    fn forced_two_vertex_loop() {
        let exits = ExitConfiguration {
            exits: vec![vec![1], vec![0]],
        };
        let loops = based_loops_from_exits(&exits, &[0, 1]).unwrap();
        assert_eq!(
            loops,
            vec![BasedLoop {
                base: 0,
                vertices: vec![0, 1]
            }]
        );
    }

    #[test]
    fn exits_round_trip() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        let mut rng = seeded(8, 0);
        for order in [[0, 1, 2, 3], [2, 0, 3, 1]] {
            for _ in 0..500 {
                let s = wilson_sample(&g, &order, &mut rng).unwrap();
                assert!(s.exit_configuration.network().is_eulerian());
                let rebuilt = based_loops_from_exits(&s.exit_configuration, &order).unwrap();
                assert_eq!(rebuilt, s.loops);
            }
        }
    }

    #[test]
    fn bad_order_rejected() {
        let g = WeightedGraph::two_vertex();
        let mut rng = seeded(0, 0);
        assert!(wilson_sample(&g, &[0, 0], &mut rng).is_err());
        assert!(wilson_sample(&g, &[0], &mut rng).is_err());
    }

    #[test]
    fn no_loop_at_first_vertex() {
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let mut rng = seeded(4, 0);
        let hits: Vec<f64> = (0..100_000)
            .map(|_| {
                let s = wilson_sample(&g, &[0, 1, 2], &mut rng).unwrap();
                f64::from(s.loops.first().is_none_or(|l| l.base != 0))
            })
            .collect();
        let target = 1.0 / (g.lambda(0) * g.green_function().get(0, 0));
        assert!(McEstimate::from_values(&hits).within(target, 3.0));
    }

    #[test]
    fn crp_small_partitions() {
        let mut rng = seeded(6, 0);
        assert_eq!(crp_partition(1, &mut rng), vec![vec![0]]);
        let draws = 100_000;
        let mut freq: HashMap<Vec<Vec<usize>>, usize> = HashMap::new();
        for _ in 0..draws {
            *freq.entry(crp_partition(3, &mut rng)).or_default() += 1;
        }
        // EPPF: {012} -> 2!/3!, {0}{12} etc -> 1!/3!, singletons -> 1/3!.
        assert_eq!(freq.len(), 5);
        for (blocks, &count) in &freq {
            let fact = |k: usize| (1..=k).product::<usize>() as f64;
            let p: f64 = blocks.iter().map(|b| fact(b.len() - 1)).product::<f64>() / 6.0;
            let f = count as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() < 3.5 * se, "{blocks:?}: {f} vs {p}");
        }
    }
}
