//! Combinatorial maps built from configurations, their faces, and the
//! Euler–Poincaré characteristic.
//!
//! Darts are numbered vertex by vertex: at a vertex with `c` coupled pairs
//! the darts occupy `2c` consecutive slots, exit `i` at slot `2i` and entry
//! `i` at slot `2i + 1`. The rotation visits the slots in increasing order,
//! so exits and entries alternate. Faces are the cycles of
//! `rotation ∘ involution`; those through exits form `L+`, those through
//! entries form `L-`.

use serde::Serialize;

use crate::configs::Configuration;
use crate::soup::DiscreteLoop;

/// Which half-edge opens the alternating rotation at each vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationStart {
    #[default]
    ExitFirst,
    EnterFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialMap {
    /// `(vertex, position in rotation)` per dart.
    pub darts: Vec<(usize, usize)>,
    /// Next dart around the same vertex.
    pub rotation: Vec<usize>,
    /// The other end of the same edge.
    pub involution: Vec<usize>,
    /// Whether the dart is an exiting half-edge.
    pub is_exit: Vec<bool>,
    /// First dart (numbering) at each vertex carrying darts.
    pub first_dart: Vec<Option<usize>>,
}

pub fn build_map(c: &Configuration) -> CombinatorialMap {
    build_map_with(c, RotationStart::ExitFirst)
}

pub fn build_map_with(c: &Configuration, start: RotationStart) -> CombinatorialMap {
    let n = c.vertex_count();
    let mut offset = vec![0; n + 1];
    for x in 0..n {
        offset[x + 1] = offset[x] + 2 * c.degree(x);
    }
    let total = offset[n];
    let (exit_slot, entry_slot) = match start {
        RotationStart::ExitFirst => (0, 1),
        RotationStart::EnterFirst => (1, 0),
    };
    let exit_dart = |x: usize, i: usize| offset[x] + 2 * i + exit_slot;
    let entry_dart = |y: usize, j: usize| offset[y] + 2 * j + entry_slot;

    let mut darts = vec![(0, 0); total];
    let mut rotation = vec![0; total];
    let mut involution = vec![0; total];
    let mut is_exit = vec![false; total];
    let mut first_dart = vec![None; n];
    for x in 0..n {
        let len = 2 * c.degree(x);
        if len > 0 {
            first_dart[x] = Some(exit_dart(x, 0));
        }
        for p in 0..len {
            let d = offset[x] + p;
            darts[d] = (x, p);
            rotation[d] = offset[x] + (p + 1) % len;
            is_exit[d] = p % 2 == exit_slot;
        }
        for (i, &(y, j)) in c.coupling()[x].iter().enumerate() {
            let (a, b) = (exit_dart(x, i), entry_dart(y, j));
            involution[a] = b;
            involution[b] = a;
        }
    }
    CombinatorialMap {
        darts,
        rotation,
        involution,
        is_exit,
        first_dart,
    }
}

impl CombinatorialMap {
    pub fn dart_count(&self) -> usize {
        self.darts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.darts.len() / 2
    }

    /// Vertices carrying at least one dart.
    pub fn vertex_count(&self) -> usize {
        self.first_dart.iter().filter(|d| d.is_some()).count()
    }

    /// Next dart along the face: `rotation(involution(d))`.
    pub fn face_successor(&self, d: usize) -> usize {
        self.rotation[self.involution[d]]
    }

    /// Cycles of the face permutation, each starting at its smallest dart,
    /// in increasing order of that dart.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.dart_count()];
        let mut out = Vec::new();
        for d0 in 0..self.dart_count() {
            if seen[d0] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut d = d0;
            while !seen[d] {
                seen[d] = true;
                cycle.push(d);
                d = self.face_successor(d);
            }
            out.push(cycle);
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 + self.faces().len() as i64 - self.edge_count() as i64
    }

    /// Component label per dart, components numbered by smallest dart.
    pub fn components(&self) -> Vec<usize> {
        let m = self.dart_count();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for d in 0..m {
            for e in [self.rotation[d], self.involution[d]] {
                let (a, b) = (find(&mut parent, d), find(&mut parent, e));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut label = vec![usize::MAX; m];
        let mut next = 0;
        let mut out = vec![0; m];
        for d in 0..m {
            let r = find(&mut parent, d);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out[d] = label[r];
        }
        out
    }

    /// `(2 - chi_i) / 2` for each connected component `i`.
    pub fn genus_per_component(&self) -> Vec<i64> {
        let comp = self.components();
        let k = comp.iter().max().map_or(0, |&c| c + 1);
        let mut chi = vec![0i64; k];
        for d in 0..self.dart_count() {
            // Each dart contributes -1/2 edge; count edges at the smaller end.
            if d < self.involution[d] {
                chi[comp[d]] -= 1;
            }
        }
        for d in self.first_dart.iter().flatten() {
            chi[comp[*d]] += 1;
        }
        for face in self.faces() {
            chi[comp[face[0]]] += 1;
        }
        chi.into_iter().map(|c| (2 - c) / 2).collect()
    }

    /// Whether `other` is the same unnumbered map up to rotating the dart
    /// labels at each vertex.
    pub fn same_unnumbered_map(&self, other: &Self) -> bool {
        if self.dart_count() != other.dart_count() {
            return false;
        }
        let n = self.first_dart.len();
        if other.first_dart.len() != n {
            return false;
        }
        let mut offset = vec![0usize; n];
        let mut degree = vec![0usize; n];
        for (d, &(x, p)) in self.darts.iter().enumerate() {
            if p == 0 {
                offset[x] = d;
            }
            degree[x] += 1;
        }
        let mut other_degree = vec![0usize; n];
        for &(x, _) in &other.darts {
            other_degree[x] += 1;
        }
        if degree != other_degree {
            return false;
        }
        let mut shift: Vec<Option<usize>> = vec![None; n];
        for start in 0..n {
            if degree[start] == 0 || shift[start].is_some() {
                continue;
            }
            let ok = (0..degree[start]).any(|r| {
                let mut trial = shift.clone();
                trial[start] = Some(r);
                let mut stack = vec![start];
                let mut good = true;
                'outer: while let Some(x) = stack.pop() {
                    let rx = trial[x].unwrap();
                    for p in 0..degree[x] {
                        let d = offset[x] + p;
                        let e = self.involution[d];
                        let (y, q) = self.darts[e];
                        let image = offset[x] + (p + rx) % degree[x];
                        let (y2, q2) = other.darts[other.involution[image]];
                        if y2 != y {
                            good = false;
                            break 'outer;
                        }
                        let ry = (q2 + degree[y] - q) % degree[y];
                        match trial[y] {
                            Some(t) if t != ry => {
                                good = false;
                                break 'outer;
                            }
                            Some(_) => {}
                            None => {
                                trial[y] = Some(ry);
                                stack.push(y);
                            }
                        }
                    }
                }
                if good {
                    shift = trial;
                }
                good
            });
            if !ok {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceSets {
    /// Faces through exiting half-edges, projected to vertex loops.
    pub plus: Vec<DiscreteLoop>,
    /// Faces through entering half-edges; they run against the coupling.
    pub minus: Vec<DiscreteLoop>,
}

pub fn face_sets(c: &Configuration) -> FaceSets {
    face_sets_of(&build_map(c))
}

pub fn face_sets_of(map: &CombinatorialMap) -> FaceSets {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for face in map.faces() {
        let seq: Vec<usize> = face.iter().map(|&d| map.darts[d].0).collect();
        let l = DiscreteLoop::new(&seq);
        if map.is_exit[face[0]] {
            plus.push(l);
        } else {
            minus.push(l);
        }
    }
    plus.sort();
    minus.sort();
    FaceSets { plus, minus }
}

/// `|{x: c_x > 0}| + |L+| + |L-| - N(c)`.
pub fn euler_characteristic(c: &Configuration) -> i64 {
    build_map(c).euler_characteristic()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceReport {
    pub faces_plus: usize,
    pub faces_minus: usize,
    pub chi: i64,
    pub genus_per_component: Vec<i64>,
}

pub fn face_report(c: &Configuration) -> FaceReport {
    let map = build_map(c);
    let faces = face_sets_of(&map);
    FaceReport {
        faces_plus: faces.plus.len(),
        faces_minus: faces.minus.len(),
        chi: map.euler_characteristic(),
        genus_per_component: map.genus_per_component(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::{for_each_configuration, uniform_preimage};
    use crate::enumerate::enumerate_eulerian;
    use crate::graph::WeightedGraph;
    use crate::rng::seeded;
    use crate::soup::edge_network;
    use rand::Rng;

    #[test]
    fn two_vertex_cycle() {
        let g = WeightedGraph::two_vertex();
        let c = Configuration::new(&g, vec![vec![(1, 0)], vec![(0, 0)]]).unwrap();
        let map = build_map(&c);
        assert_eq!((map.vertex_count(), map.edge_count()), (2, 2));
        let f = face_sets(&c);
        assert_eq!(f.plus, vec![DiscreteLoop::new(&[0, 1])]);
        assert_eq!(f.minus, vec![DiscreteLoop::new(&[1, 0])]);
        assert_eq!(euler_characteristic(&c), 2);
        assert_eq!(map.genus_per_component(), vec![0]);
    }

    #[test]
    fn empty_and_triangle() {
        let empty = Configuration::empty(3);
        let map = build_map(&empty);
        assert_eq!(map.dart_count(), 0);
        assert_eq!(euler_characteristic(&empty), 0);
        assert!(map.genus_per_component().is_empty());
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let c = Configuration::new(&g, vec![vec![(1, 0)], vec![(2, 0)], vec![(0, 0)]]).unwrap();
        assert_eq!(euler_characteristic(&c), 2);
    }

    #[test]
    fn face_networks_and_invariants() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        let mut rng = seeded(9, 0);
        for k in enumerate_eulerian(&g, 7) {
            let c = uniform_preimage(&k, &mut rng);
            let map = build_map(&c);
            let f = face_sets_of(&map);
            assert_eq!(edge_network(&f.plus, 4), k);
            assert_eq!(edge_network(&f.minus, 4), k.transpose());
            let chi = map.euler_characteristic();
            assert_eq!(chi % 2, 0);
            let genus = map.genus_per_component();
            assert!(genus.iter().all(|&g| g >= 0));
            assert_eq!(chi, genus.iter().map(|g| 2 - 2 * g).sum::<i64>());
            assert!(chi <= 2 * genus.len() as i64);
            assert_eq!(
                chi,
                (0..4).filter(|&x| c.degree(x) > 0).count() as i64
                    + f.plus.len() as i64
                    + f.minus.len() as i64
                    - k.total() as i64
            );
        }
    }

    #[test]
    fn equivalent_configurations_give_the_same_map() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        let mut rng = seeded(10, 0);
        for k in enumerate_eulerian(&g, 6) {
            let c = uniform_preimage(&k, &mut rng);
            let shift: Vec<usize> = c
                .degrees()
                .iter()
                .map(|&d| if d == 0 { 0 } else { rng.random_range(0..d) })
                .collect();
            let s = c.shifted(&shift);
            assert!(build_map(&c).same_unnumbered_map(&build_map(&s)));
            assert_eq!(face_sets(&c), face_sets(&s));
        }
    }

    #[test]
    fn distinct_maps_are_told_apart() {
        // On K3 with c = (2,2,2) some configurations give genus 0, others 1.
        let g = WeightedGraph::complete(3, 1.0).unwrap();
        let mut by_chi = std::collections::BTreeMap::new();
        for_each_configuration(&g, &[2, 2, 2], |c| {
            by_chi
                .entry(euler_characteristic(c))
                .or_insert_with(|| c.clone());
        })
        .unwrap();
        assert!(by_chi.len() >= 2);
        let maps: Vec<_> = by_chi.values().map(build_map).collect();
        assert!(!maps[0].same_unnumbered_map(&maps[1]));
    }

    #[test]
    fn rotation_convention_does_not_change_the_law_of_faces() {
        // Per configuration the two conventions can differ; the law of the
        // face count under Q cannot, since reversal preserves Q.
        use crate::configs::{degree_vectors, q_probability};
        use std::collections::BTreeMap;
        let g = WeightedGraph::complete(3, 0.5).unwrap();
        let mut exit_law: BTreeMap<usize, f64> = BTreeMap::new();
        let mut enter_law: BTreeMap<usize, f64> = BTreeMap::new();
        let mut differs = 0;
        for d in degree_vectors(&[3, 3, 2]) {
            for_each_configuration(&g, &d, |c| {
                let q = q_probability(&g, c).unwrap();
                let a = build_map(c).faces().len();
                let b = build_map_with(c, RotationStart::EnterFirst).faces().len();
                differs += usize::from(a != b);
                *exit_law.entry(a).or_default() += q;
                *enter_law.entry(b).or_default() += q;
            })
            .unwrap();
        }
        assert!(differs > 0);
        assert_eq!(exit_law.len(), enter_law.len());
        for (f, p) in &exit_law {
            assert!((p - enter_law[f]).abs() < 1e-15, "faces {f}");
        }
    }

    #[test]
    fn enter_first_is_the_opposite_configuration() {
        let g = WeightedGraph::complete(4, 0.5).unwrap();
        let mut rng = seeded(11, 0);
        for k in enumerate_eulerian(&g, 6) {
            let c = uniform_preimage(&k, &mut rng);
            let a = build_map_with(&c, RotationStart::EnterFirst);
            let b = build_map(&c.opposite());
            assert_eq!(a.euler_characteristic(), b.euler_characteristic());
            assert_eq!(a.faces().len(), b.faces().len());
        }
    }
}
