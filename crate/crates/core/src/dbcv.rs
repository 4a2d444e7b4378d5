//! Density-based clustering validation index and proportional sampling.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, pow, sqrt};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Label of points that belong to no cluster.
pub const NOISE: i64 = -1;

/// Distances below this are raised to it before inversion.
pub const MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| fabs(x - y)).sum(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euclidean" => Some(Metric::Euclidean),
            "manhattan" => Some(Metric::Manhattan),
            _ => None,
        }
    }
}

/// Row-major `n x dim` points with one label each; negative labels are noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointSet {
    points: Vec<f64>,
    labels: Vec<i64>,
    dim: usize,
}

impl LabeledPointSet {
    pub fn new(points: Vec<f64>, labels: Vec<i64>, dim: usize) -> Result<Self> {
        if dim == 0 || points.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch {
                rows: points.len().checked_div(dim).unwrap_or(0),
                dim,
                labels: labels.len(),
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("point coordinates must be finite"));
        }
        let labels = labels.into_iter().map(|l| if l < 0 { NOISE } else { l }).collect();
        Ok(LabeledPointSet { points, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Point indices per label, noise included under [`NOISE`].
    pub fn groups(&self) -> BTreeMap<i64, Vec<usize>> {
        let mut g: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            g.entry(l).or_default().push(i);
        }
        g
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> LabeledPointSet {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            points.extend_from_slice(self.point(i));
            labels.push(self.labels[i]);
        }
        LabeledPointSet { points, labels, dim: self.dim }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterValidity {
    pub size: usize,
    pub sparseness: f64,
    /// Infinite when there is no other cluster.
    pub separation: f64,
    pub validity: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DbcvScore {
    pub overall: f64,
    pub per_cluster: BTreeMap<i64, ClusterValidity>,
    pub noise_fraction: f64,
}

/// All-points core distance of every member of one cluster, computed as
/// `m * S^(-1/d)` where `m` is the smallest distance to another member and
/// `S` the mean of `(m / dist)^d`, which avoids overflow for tiny distances.
fn core_distances(data: &LabeledPointSet, members: &[usize], metric: Metric) -> Vec<f64> {
    let d = data.dim as f64;
    let k = members.len();
    let mut row = vec![0.0; k];
    members
        .iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut m = f64::INFINITY;
            for (b, &j) in members.iter().enumerate() {
                if a != b {
                    let dist = metric.distance(data.point(i), data.point(j)).max(MIN_DISTANCE);
                    row[b] = dist;
                    m = m.min(dist);
                }
            }
            let s: f64 = (0..k).filter(|&b| b != a).map(|b| pow(m / row[b], d)).sum::<f64>() / (k - 1) as f64;
            m * pow(s, -1.0 / d)
        })
        .collect()
}

fn mutual_reachability(core_a: f64, core_b: f64, dist: f64) -> f64 {
    core_a.max(core_b).max(dist)
}

/// Largest edge of the minimum spanning tree over mutual-reachability
/// distances (Prim on the dense graph).
fn mst_max_edge(data: &LabeledPointSet, members: &[usize], core: &[f64], metric: Metric) -> f64 {
    let k = members.len();
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    best[0] = 0.0;
    let mut max_edge = 0.0_f64;
    for _ in 0..k {
        let mut next = usize::MAX;
        for v in 0..k {
            if !in_tree[v] && (next == usize::MAX || best[v] < best[next]) {
                next = v;
            }
        }
        in_tree[next] = true;
        max_edge = max_edge.max(best[next]);
        for v in 0..k {
            if !in_tree[v] {
                let dist = metric.distance(data.point(members[next]), data.point(members[v]));
                let w = mutual_reachability(core[next], core[v], dist);
                if w < best[v] {
                    best[v] = w;
                }
            }
        }
    }
    max_edge
}

/// Scores a labeled clustering. Noise points weigh in the total but form no
/// cluster. A clustering with a single cluster has infinite separation and
/// validity 1 for that cluster.
pub fn dbcv_score(data: &LabeledPointSet, metric: Metric) -> Result<DbcvScore> {
    let groups = data.groups();
    let clusters: Vec<(i64, &Vec<usize>)> = groups.iter().filter(|(l, _)| **l != NOISE).map(|(l, m)| (*l, m)).collect();
    if clusters.is_empty() {
        return Err(Error::AllNoise);
    }
    for (label, members) in &clusters {
        if members.len() < 2 {
            return Err(Error::ClusterTooSmall { label: *label, size: members.len() });
        }
    }
    let cores: Vec<Vec<f64>> = clusters.iter().map(|(_, m)| core_distances(data, m, metric)).collect();
    let sparseness: Vec<f64> = clusters
        .iter()
        .zip(&cores)
        .map(|((_, m), c)| mst_max_edge(data, m, c, metric))
        .collect();

    let mut separation = vec![f64::INFINITY; clusters.len()];
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            let mut best = f64::INFINITY;
            for (x, &i) in clusters[a].1.iter().enumerate() {
                for (y, &j) in clusters[b].1.iter().enumerate() {
                    let dist = metric.distance(data.point(i), data.point(j));
                    best = best.min(mutual_reachability(cores[a][x], cores[b][y], dist));
                }
            }
            separation[a] = separation[a].min(best);
            separation[b] = separation[b].min(best);
        }
    }

    let n = data.len() as f64;
    let mut overall = 0.0;
    let mut per_cluster = BTreeMap::new();
    for (c, (label, members)) in clusters.iter().enumerate() {
        let (sep, sparse) = (separation[c], sparseness[c]);
        let validity = if sep.is_infinite() {
            1.0
        } else {
            let denom = sep.max(sparse);
            if denom > 0.0 { (sep - sparse) / denom } else { 0.0 }
        };
        overall += members.len() as f64 / n * validity;
        per_cluster.insert(
            *label,
            ClusterValidity { size: members.len(), sparseness: sparse, separation: sep, validity },
        );
    }
    let noise = groups.get(&NOISE).map_or(0, Vec::len);
    Ok(DbcvScore {
        overall,
        per_cluster,
        noise_fraction: noise as f64 / n,
    })
}

/// Per-group sample sizes proportional to `sizes`, rounded by largest
/// remainder (ties to the earlier group) so they sum to `target`.
pub fn proportional_allocation(sizes: &[usize], target: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut alloc: Vec<usize> = Vec::with_capacity(sizes.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(sizes.len());
    for (g, &s) in sizes.iter().enumerate() {
        let exact = s as u128 * target as u128;
        alloc.push((exact / total as u128) as usize);
        remainders.push((exact % total as u128, g));
    }
    let mut left = target - alloc.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, g) in remainders {
        if left == 0 {
            break;
        }
        alloc[g] += 1;
        left -= 1;
    }
    alloc
}

/// Seeded subsample with per-label counts proportional to label sizes. Noise
/// is sampled as its own group. Sampled points keep their original order.
pub fn proportional_sample(data: &LabeledPointSet, target: usize, seed: u64) -> Result<LabeledPointSet> {
    let groups = data.groups();
    let clusters = groups.keys().filter(|l| **l != NOISE).count();
    if target > data.len() || target < 2 * clusters {
        return Err(Error::InvalidSampleTarget { target, available: data.len(), clusters });
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let quotas = proportional_allocation(&sizes, target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    for (members, &q) in groups.values().zip(&quotas) {
        for k in index::sample(&mut rng, members.len(), q) {
            chosen.push(members[k]);
        }
    }
    chosen.sort_unstable();
    Ok(data.select(&chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        assert_eq!(proportional_allocation(&[90, 10], 10), vec![9, 1]);
        assert_eq!(proportional_allocation(&[1, 1, 1], 2), vec![1, 1, 0]);
        assert_eq!(proportional_allocation(&[5, 7], 12), vec![5, 7]);
    }

    #[test]
    fn shape_is_checked() {
        assert!(LabeledPointSet::new(vec![0.0; 5], vec![0, 0], 2).is_err());
        assert!(LabeledPointSet::new(vec![0.0; 4], vec![0, 0], 2).is_ok());
    }

    #[test]
    fn degenerate_inputs() {
        let all_noise = LabeledPointSet::new(vec![0.0, 1.0], vec![-1, -1], 1).unwrap();
        assert_eq!(dbcv_score(&all_noise, Metric::Euclidean), Err(Error::AllNoise));
        let singleton = LabeledPointSet::new(vec![0.0, 1.0, 2.0], vec![0, 0, 1], 1).unwrap();
        assert!(matches!(dbcv_score(&singleton, Metric::Euclidean), Err(Error::ClusterTooSmall { label: 1, size: 1 })));
        // Two identical points: one cluster, finite core distances.
        let twins = LabeledPointSet::new(vec![3.0, 3.0, 3.0, 3.0], vec![0, 0], 2).unwrap();
        let s = dbcv_score(&twins, Metric::Euclidean).unwrap();
        assert_eq!(s.overall, 1.0);
        assert_eq!(s.per_cluster[&0].sparseness, MIN_DISTANCE);
    }

    #[test]
    fn noise_dilutes_weight() {
        let d = LabeledPointSet::new(vec![0.0, 0.1, 10.0, 10.1, 5.0, 6.0], vec![0, 0, 1, 1, -1, -1], 1).unwrap();
        let s = dbcv_score(&d, Metric::Euclidean).unwrap();
        assert!((s.noise_fraction - 1.0 / 3.0).abs() < 1e-15);
        let weighted: f64 = s.per_cluster.values().map(|c| c.size as f64 / 6.0 * c.validity).sum();
        assert!((s.overall - weighted).abs() < 1e-15);
        assert!(s.overall < 2.0 / 3.0 + 1e-12);
    }

    #[test]
    fn sample_of_full_size_is_identity() {
        let d = LabeledPointSet::new((0..20).map(f64::from).collect(), (0..20).map(|i| i % 3 - 1).collect(), 1).unwrap();
        assert_eq!(proportional_sample(&d, 20, 7).unwrap(), d);
        assert!(proportional_sample(&d, 3, 7).is_err());
    }
}
