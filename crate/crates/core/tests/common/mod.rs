//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

/// `P(T <= t)` for integer degrees of freedom from the finite trigonometric
/// series of the t distribution.
pub fn t_cdf_series(t: f64, dof: u64) -> f64 {
    assert!(dof >= 1);
    let theta = (t / (dof as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    // a = P(|T| < |t|), signed by t.
    let a = if dof % 2 == 1 {
        let mut sum = 0.0;
        if dof > 1 {
            let mut term = c;
            sum = term;
            let mut k = 1;
            while 2 * k + 1 < dof {
                term *= c2 * (2 * k) as f64 / (2 * k + 1) as f64;
                sum += term;
                k += 1;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k < dof {
            term *= c2 * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    };
    0.5 + 0.5 * a
}

/// Type-7 sample quantile written in one-based order-statistic form.
pub fn reference_quantile(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len();
    let pos = 1.0 + (n as f64 - 1.0) * p;
    let j = pos.floor() as usize;
    let g = pos - j as f64;
    if j >= n {
        return x[n - 1];
    }
    (1.0 - g) * x[j - 1] + g * x[j]
}

pub fn reference_fences(values: &[f64], k: f64) -> (f64, f64) {
    let q1 = reference_quantile(values, 0.25);
    let q3 = reference_quantile(values, 0.75);
    (q1 - k * (q3 - q1), q3 + k * (q3 - q1))
}

fn dist(a: &[f64], b: &[f64], manhattan: bool) -> f64 {
    if manhattan {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// DBCV straight from its definition: all-points core distances, a Kruskal
/// MST per cluster over mutual reachability, sparseness as its largest edge,
/// separation as the smallest cross-cluster mutual reachability.
pub fn brute_dbcv(points: &[Vec<f64>], labels: &[i64], manhattan: bool) -> f64 {
    let dim = points[0].len() as f64;
    let mut clusters: Vec<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
    clusters.sort();
    clusters.dedup();
    let members: Vec<Vec<usize>> = clusters
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let mut core = vec![0.0; points.len()];
    for m in &members {
        for &i in m {
            let s: f64 = m
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (1.0 / dist(&points[i], &points[j], manhattan).max(1e-12)).powf(dim))
                .sum();
            core[i] = (s / (m.len() - 1) as f64).powf(-1.0 / dim);
        }
    }
    let mreach = |i: usize, j: usize| core[i].max(core[j]).max(dist(&points[i], &points[j], manhattan));
    let mut sparse = Vec::new();
    for m in &members {
        let mut edges = Vec::new();
        for a in 0..m.len() {
            for b in a + 1..m.len() {
                edges.push((mreach(m[a], m[b]), a, b));
            }
        }
        edges.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut parent: Vec<usize> = (0..m.len()).collect();
        let mut largest = 0.0_f64;
        for (w, a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                largest = largest.max(w);
            }
        }
        sparse.push(largest);
    }
    let mut total = 0.0;
    for (c, m) in members.iter().enumerate() {
        let mut sep = f64::INFINITY;
        for (o, other) in members.iter().enumerate() {
            if o != c {
                for &i in m {
                    for &j in other {
                        sep = sep.min(mreach(i, j));
                    }
                }
            }
        }
        let v = if sep.is_infinite() { 1.0 } else { (sep - sparse[c]) / sep.max(sparse[c]) };
        total += m.len() as f64 * v;
    }
    total / points.len() as f64
}

/// Flat-kernel Mean Shift computed naively: per-value neighbour sorting for
/// the bandwidth, direct window sums, the same merge rule and nearest-mode
/// assignment. Returns labels over ascending modes and the modes.
pub fn brute_mean_shift(values: &[f64], quantile: f64, merge_fraction: f64, tolerance: f64) -> (Vec<usize>, Vec<f64>) {
    let n = values.len();
    let h = if n < 2 {
        0.0
    } else {
        let k = ((n as f64 * quantile).ceil() as usize).clamp(1, n - 1);
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut d: Vec<f64> = values.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &w)| (w - v).abs()).collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[k - 1]
            })
            .sum::<f64>()
            / n as f64
    };
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return (vec![0; n], vec![lo]);
    }
    let mut seeds = values.to_vec();
    seeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    seeds.dedup();
    let mut candidates = Vec::new();
    for s in seeds {
        let mut m = s;
        let mut count = 0;
        for _ in 0..300 {
            let inside: Vec<f64> = values.iter().copied().filter(|v| (v - m).abs() <= h).collect();
            count = inside.len();
            let next = inside.iter().sum::<f64>() / count as f64;
            let moved = (next - m).abs();
            m = next;
            if moved < tolerance * (hi - lo) {
                break;
            }
        }
        candidates.push((m, count));
    }
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(b.0.partial_cmp(&a.0).unwrap()));
    let mut kept: Vec<f64> = Vec::new();
    for (m, _) in candidates {
        if kept.iter().all(|&k| (k - m).abs() >= merge_fraction * h && k != m) {
            kept.push(m);
        }
    }
    kept.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let raw: Vec<usize> = values
        .iter()
        .map(|&v| {
            let mut best = 0;
            for (i, &m) in kept.iter().enumerate() {
                if (v - m).abs() <= (v - kept[best]).abs() {
                    best = i;
                }
            }
            best
        })
        .collect();
    let mut used: Vec<usize> = raw.clone();
    used.sort();
    used.dedup();
    let labels = raw.iter().map(|l| used.binary_search(l).unwrap()).collect();
    (labels, used.iter().map(|&i| kept[i]).collect())
}
