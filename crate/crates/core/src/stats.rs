//! Monte Carlo summaries and the goodness-of-fit tests used by the checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Expected count below which cells are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

/// Sample mean with its standard error `s / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self {
                mean,
                se: f64::INFINITY,
                n,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Standardized distance to `target`; zero when both mean and SE vanish
    /// exactly on target.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            d / self.se
        }
    }

    /// `|mean - target| <= k * se`, up to rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        self.z_score(target) <= k
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &McEstimate) -> McEstimate {
        McEstimate {
            mean: self.mean - other.mean,
            se: self.se.hypot(other.se),
            n: self.n.min(other.n),
        }
    }
}

pub fn mc_mean<I: IntoIterator<Item = f64>>(stream: I) -> McEstimate {
    let values: Vec<f64> = stream.into_iter().collect();
    McEstimate::from_values(&values)
}

/// Sample covariance; the SE is that of the centered products.
pub fn mc_covariance(xs: &[f64], ys: &[f64]) -> McEstimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let mut est = McEstimate::from_values(&prods);
    est.mean *= n / (n - 1.0);
    est
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofCell {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub cells: Vec<GofCell>,
    /// How many original cells were merged into pooled cells.
    pub pooled: usize,
    pub policy: String,
}

impl GofReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.p_value > threshold
    }
}

fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// Goodness of fit of `observed[i]` against `total * probs[i]`. The
/// remainder `total - sum(observed)` forms a tail cell with probability
/// `1 - sum(probs)`. Cells expecting fewer than five counts are pooled into
/// one cell; if that is still too small it is merged into the smallest
/// retained cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], total: u64) -> Result<GofReport> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidInput(
            "observed and probs lengths differ".into(),
        ));
    }
    let seen: u64 = observed.iter().sum();
    if seen > total {
        return Err(Error::InvalidInput(
            "observed counts exceed the total".into(),
        ));
    }
    if probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
        return Err(Error::InvalidInput(
            "cell probabilities must lie in [0, 1]".into(),
        ));
    }
    let n = total as f64;
    let mut cells: Vec<GofCell> = observed
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(i, (&o, &p))| GofCell {
            label: i.to_string(),
            observed: o as f64,
            expected: n * p,
        })
        .collect();
    let tail_p = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    let tail_o = total - seen;
    if tail_o > 0 || tail_p * n > 1e-9 {
        cells.push(GofCell {
            label: "tail".into(),
            observed: tail_o as f64,
            expected: n * tail_p,
        });
    }
    Ok(pool_and_test(cells, 1))
}

fn pool_and_test(cells: Vec<GofCell>, constraints: usize) -> GofReport {
    let (mut kept, small): (Vec<_>, Vec<_>) =
        cells.into_iter().partition(|c| c.expected >= MIN_EXPECTED);
    let pooled = small.len();
    if !small.is_empty() {
        let mut pool = GofCell {
            label: "pooled".into(),
            observed: small.iter().map(|c| c.observed).sum(),
            expected: small.iter().map(|c| c.expected).sum(),
        };
        if pool.expected < MIN_EXPECTED && !kept.is_empty() {
            let idx = (0..kept.len())
                .min_by(|&a, &b| kept[a].expected.total_cmp(&kept[b].expected))
                .unwrap();
            let other = kept.remove(idx);
            pool.label = format!("pooled+{}", other.label);
            pool.observed += other.observed;
            pool.expected += other.expected;
        }
        kept.push(pool);
    }
    let statistic: f64 = kept
        .iter()
        .filter(|c| c.expected > 0.0)
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum();
    let impossible = kept.iter().any(|c| c.expected == 0.0 && c.observed > 0.0);
    let df = kept.len().saturating_sub(constraints);
    let p_value = if impossible {
        0.0
    } else {
        chi_square_sf(statistic, df)
    };
    GofReport {
        statistic: if impossible { f64::INFINITY } else { statistic },
        df,
        p_value,
        cells: kept,
        pooled,
        policy: format!("cells with expected count < {MIN_EXPECTED} pooled"),
    }
}

/// Pearson independence test on a contingency table. Columns (then rows)
/// with expected counts below five are merged, smallest totals first.
pub fn independence_test(table: &[Vec<u64>]) -> Result<GofReport> {
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged contingency table".into()));
    }
    let mut t: Vec<Vec<f64>> = table
        .iter()
        .filter(|r| r.iter().any(|&v| v > 0))
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let mut pooled = 0;
    // Drop empty columns, then merge small ones.
    let keep: Vec<usize> = (0..cols)
        .filter(|&j| t.iter().any(|r| r[j] > 0.0))
        .collect();
    t = t
        .into_iter()
        .map(|r| keep.iter().map(|&j| r[j]).collect())
        .collect();
    loop {
        let changed = merge_smallest_column(&mut t);
        let transposed = transpose(&t);
        let mut tt = transposed;
        let changed_rows = merge_smallest_column(&mut tt);
        t = transpose(&tt);
        if !changed && !changed_rows {
            break;
        }
        pooled += 1;
    }
    let r = t.len();
    let c = t.first().map_or(0, Vec::len);
    let n: f64 = t.iter().flatten().sum();
    let row: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..c).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let mut cells = Vec::with_capacity(r * c);
    let mut statistic = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row[i] * col[j] / n;
            statistic += (t[i][j] - e).powi(2) / e;
            cells.push(GofCell {
                label: format!("{i},{j}"),
                observed: t[i][j],
                expected: e,
            });
        }
    }
    let df = r.saturating_sub(1) * c.saturating_sub(1);
    Ok(GofReport {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        cells,
        pooled,
        policy: format!("rows/columns with expected count < {MIN_EXPECTED} merged"),
    })
}

fn transpose(t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = t.first().map_or(0, Vec::len);
    (0..c).map(|j| t.iter().map(|r| r[j]).collect()).collect()
}

/// Merges the smallest-total column into the next smallest if any expected
/// count in it is below the threshold. Returns whether a merge happened.
fn merge_smallest_column(t: &mut [Vec<f64>]) -> bool {
    let c = t.first().map_or(0, Vec::len);
    if c < 2 {
        return false;
    }
    let n: f64 = t.iter().flatten().sum();
    let min_row = t
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let col: Vec<f64> = (0..c).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let smallest = order[0];
    if min_row * col[smallest] / n >= MIN_EXPECTED {
        return false;
    }
    let target = order[1];
    for r in t.iter_mut() {
        r[target] += r[smallest];
        r.remove(smallest);
    }
    true
}

/// Homogeneity of two count vectors over the same cells.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<GofReport> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(
            "samples have different cell counts".into(),
        ));
    }
    independence_test(&[a.to_vec(), b.to_vec()])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS test needs nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    Ok(KsReport {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    })
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_sf(t: f64) -> f64 {
    if t < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64 * t).powi(2)).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::{Distribution, Gamma, StandardNormal};

    #[test]
    fn mean_examples() {
        let c = McEstimate::from_values(&[2.5; 100]);
        assert_eq!((c.mean, c.se), (2.5, 0.0));
        assert!(c.within(2.5, 3.0));
        let mut rng = seeded(1, 0);
        let pm: Vec<f64> = (0..100_000)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        assert!(McEstimate::from_values(&pm).within(0.0, 3.0));
        let gamma = Gamma::new(2.0, 1.0).unwrap();
        let est = mc_mean((0..100_000).map(|_| gamma.sample(&mut rng)));
        assert!(est.within(2.0, 3.0));
    }

    #[test]
    fn gof_examples() {
        let probs = [1.0 / 6.0; 6];
        let exact = chi_square_gof(&[1000; 6], &probs, 6000).unwrap();
        assert!(exact.statistic < 1e-9 && exact.p_value > 0.999);
        assert_eq!(exact.df, 5);

        let mut rng = seeded(2, 0);
        let mut fair = [0u64; 6];
        for _ in 0..100_000 {
            fair[rng.random_range(0..6)] += 1;
        }
        assert!(chi_square_gof(&fair, &probs, 100_000).unwrap().p_value > 1e-3);

        let mut biased = [0u64; 6];
        for _ in 0..100_000 {
            let v = if rng.random::<f64>() < 0.2 {
                5
            } else {
                rng.random_range(0..6)
            };
            biased[v] += 1;
        }
        assert!(chi_square_gof(&biased, &probs, 100_000).unwrap().p_value < 1e-6);
    }

    #[test]
    fn gof_pools_small_cells_and_tail() {
        let report = chi_square_gof(&[90, 8, 1], &[0.9, 0.08, 0.01], 100).unwrap();
        // the 0.01 cell and the empty 0.01 tail pool, then merge into the 0.08 cell
        assert_eq!(report.cells.len(), 2);
        assert_eq!(report.pooled, 2);
        let total: f64 = report.cells.iter().map(|c| c.expected).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn independence_examples() {
        let product = vec![vec![100, 200], vec![300, 600]];
        assert!(independence_test(&product).unwrap().p_value > 0.999);
        let correlated = vec![vec![500, 0], vec![0, 500]];
        assert!(independence_test(&correlated).unwrap().p_value < 1e-12);
        let same = two_sample_chi_square(&[10, 20, 30], &[10, 20, 30]).unwrap();
        assert!(same.p_value > 0.999);
    }

    #[test]
    fn ks_examples() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        let mut rng = seeded(3, 0);
        let x: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y: Vec<f64> = (0..2000)
            .map(|_| 3.0 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(ks_two_sample(&x, &y).unwrap().p_value < 1e-6);
        let z: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(ks_two_sample(&x, &z).unwrap().p_value > 1e-3);
    }
}
