//! k-means over rating distribution vectors, plus agreement and projection
//! helpers for inspecting the partition.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 3,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
            seed: 42,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.max_iter < 1 || self.n_init < 1 {
            return Err(Error::InvalidArgument("max_iter and n_init must be >= 1".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument("tol must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster of each input vector, in input order.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step of the chosen run.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
    /// Inertia trace of every restart, in restart order.
    pub restart_traces: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            inertia += d;
            c
        })
        .collect();
    (labels, inertia)
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        // Rounding can run past the end; fall back to the last point with
        // positive weight.
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
        }
        let c = points[pick].clone();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], config: &ClusterConfig, seed: u64) -> ClusterResult {
    let k = config.k;
    let mut rng = rng_for(seed, stream::KMEANS, 0);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let (mut labels, mut inertia) = assign(points, &centroids);
    let mut trace = vec![inertia];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let updated = means(points, &labels, k);
        let mut taken = Vec::new();
        for c in 0..k {
            match &updated[c] {
                Some(m) => centroids[c] = m.clone(),
                None => {
                    // Reseed with the point farthest from its own centroid.
                    let far = (0..points.len())
                        .filter(|i| !taken.contains(i))
                        .map(|i| (i, sq_dist(&points[i], &centroids[labels[i]])))
                        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                    taken.push(far.0);
                    centroids[c] = points[far.0].clone();
                }
            }
        }
        let (next, next_inertia) = assign(points, &centroids);
        trace.push(next_inertia);
        let unchanged = next == labels;
        let small = (inertia - next_inertia).abs() <= config.tol;
        labels = next;
        inertia = next_inertia;
        if unchanged || small {
            converged = true;
            break;
        }
    }
    for (c, m) in means(points, &labels, k).into_iter().enumerate() {
        if let Some(m) = m {
            centroids[c] = m;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    let mut sizes = vec![0; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    ClusterResult {
        labels,
        centroids,
        sizes,
        inertia,
        inertia_trace: trace,
        iterations,
        converged,
        restart_inertias: Vec::new(),
        restart_traces: Vec::new(),
    }
}

/// Relabels clusters by descending centroid mass at the middle category,
/// then by centroid in lexicographic order.
fn canonicalize(mut r: ClusterResult) -> ClusterResult {
    let k = r.centroids.len();
    let mid = r.centroids[0].len() / 2;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&r.centroids[a], &r.centroids[b]);
        cb[mid].total_cmp(&ca[mid]).then_with(|| {
            ca.iter()
                .zip(cb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut new_of = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_of[old] = new;
    }
    for l in r.labels.iter_mut() {
        *l = new_of[*l];
    }
    r.centroids = order.iter().map(|&o| r.centroids[o].clone()).collect();
    r.sizes = order.iter().map(|&o| r.sizes[o]).collect();
    r
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    let cmp = |a: &&Vec<f64>, b: &&Vec<f64>| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    sorted.sort_by(cmp);
    sorted.dedup_by(|a, b| cmp(&&**a, &&**b).is_eq());
    sorted.len()
}

/// Best of `n_init` seeded k-means++ runs by inertia; ties go to the
/// earliest restart.
pub fn kmeans(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterResult> {
    config.validate()?;
    if points.len() < config.k {
        return Err(Error::InsufficientData(format!(
            "{} vectors for k = {}",
            points.len(),
            config.k
        )));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("vectors must share a non-zero length".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in input vectors".into()));
    }
    let distinct = distinct_count(points);
    if config.k > 1 && distinct == 1 {
        return Err(Error::Degenerate("all vectors are identical".into()));
    }
    if distinct < config.k {
        return Err(Error::Degenerate(format!(
            "only {distinct} distinct vectors for k = {}",
            config.k
        )));
    }
    let runs: Vec<ClusterResult> = (0..config.n_init)
        .into_par_iter()
        .map(|r| lloyd(points, config, derive_seed(config.seed, stream::KMEANS, r as u64)))
        .collect();
    let restart_inertias: Vec<f64> = runs.iter().map(|r| r.inertia).collect();
    let restart_traces: Vec<Vec<f64>> = runs.iter().map(|r| r.inertia_trace.clone()).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| restart_inertias[a].total_cmp(&restart_inertias[b]).then(a.cmp(&b)))
        .expect("n_init >= 1");
    let mut result = canonicalize(runs.into_iter().nth(best).expect("index in range"));
    result.restart_inertias = restart_inertias;
    result.restart_traces = restart_traces;
    Ok(result)
}

/// k-means on vectors keyed by id. Inputs are ordered by id before
/// clustering so the outcome does not depend on input order; labels are
/// returned in input order.
pub fn kmeans_labeled<S: AsRef<str>>(
    ids: &[S],
    points: &[Vec<f64>],
    config: &ClusterConfig,
) -> Result<ClusterResult> {
    if ids.len() != points.len() {
        return Err(Error::InvalidArgument("ids and vectors differ in length".into()));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].as_ref().cmp(ids[b].as_ref()));
    if order.windows(2).any(|w| ids[w[0]].as_ref() == ids[w[1]].as_ref()) {
        return Err(Error::InvalidArgument("duplicate ids".into()));
    }
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
    let mut r = kmeans(&sorted, config)?;
    let mut labels = vec![0; ids.len()];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = r.labels[pos];
    }
    r.labels = labels;
    Ok(r)
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two partitions of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument("partitions must be non-empty and equal length".into()));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&n| choose2(n)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / choose2(a.len()).max(1.0);
    let max = (rows + cols) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Cluster-by-category matrix of centroids, in canonical cluster order.
pub fn centroid_heatmap(result: &ClusterResult) -> Vec<Vec<f64>> {
    result.centroids.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Share of total variance along each of the two axes.
    pub explained_variance: [f64; 2],
}

/// Projection onto the first two principal components. Each component's
/// sign makes its largest-magnitude loading positive. Input without
/// variance projects to the origin.
pub fn pca_2d(points: &[Vec<f64>]) -> Result<Projection> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "projection needs at least 3 vectors, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("vectors must share a non-zero length".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in input vectors".into()));
    }
    let n = points.len();
    let mean: Vec<f64> = (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, dim, |i, j| points[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let total = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut comps = Vec::new();
    let mut explained_variance = [0.0; 2];
    for (slot, &c) in idx.iter().take(2).enumerate() {
        let value = eig.eigenvalues[c];
        if total <= 1e-15 || value <= 1e-12 * total {
            comps.push(vec![0.0; dim]);
            continue;
        }
        explained_variance[slot] = value / total;
        let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let lead = (0..dim)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap();
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        comps.push(v);
    }
    while comps.len() < 2 {
        comps.push(vec![0.0; dim]);
    }
    let coords = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let proj = |c: &[f64]| row.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
            [proj(&comps[0]), proj(&comps[1])]
        })
        .collect();
    Ok(Projection {
        coords,
        explained_variance,
    })
}
