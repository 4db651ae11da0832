//! Bootstrap clustering: Lloyd's k-means on one chunk, then reduction of each
//! cluster to a [`ClusterSummary`].
//!
//! Seeding is greedy farthest-point: the first center is a seeded random
//! record, every further center is the record farthest from the centers chosen
//! so far (ties toward the lower record index). Empty clusters met during the
//! iteration are re-seeded with the record farthest from its current centroid;
//! clusters still empty at the end are dropped from the summary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{distance, squared_distance};
use crate::record::check_uniform;
use crate::summary::{Assignment, ClusterSummary, ClusteringResult};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Selects an independent random stream for the same seed (the engine uses the chunk timestamp).
    pub stream: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, max_iterations: DEFAULT_MAX_ITERATIONS, seed, stream: 0 }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Output of [`kmeans`]: `k` centroids and the nearest-centroid index of every record.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// SSE of each assignment pass, in order.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    /// Record indices belonging to each centroid.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.centroids.len()];
        for (i, &c) in self.assignments.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(0.0)
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn farthest_point_init<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = rng.random_range(0..points.len());
    let mut centroids = vec![points[first].as_ref().to_vec()];
    let mut min_d: Vec<f64> = points.iter().map(|p| squared_distance(p.as_ref(), &centroids[0])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[pick] {
                pick = i;
            }
        }
        let center = points[pick].as_ref().to_vec();
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(squared_distance(p.as_ref(), &center));
        }
        centroids.push(center);
    }
    centroids
}

/// Lloyd's k-means. Stops when an assignment pass changes nothing or after
/// `max_iterations` passes; the returned assignment is always nearest-centroid
/// with respect to the returned centroids.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], params: &KMeansParams) -> Result<KMeansFit> {
    let dim = check_uniform(points)?;
    let k = params.k;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if params.max_iterations == 0 {
        return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::TooFewRecords { k, records: points.len() });
    }

    let mut rng = params.rng();
    let mut centroids = farthest_point_init(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut sse_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        let mut changed = false;
        let mut sse = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (c, d) = nearest(p.as_ref(), &centroids);
            sse += d;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        sse_history.push(sse);
        if !changed {
            converged = true;
            break;
        }
        update_centroids(points, &assignments, &mut centroids, dim);
    }

    if !converged {
        // Centroids moved after the last pass; re-assign so membership is nearest.
        let mut sse = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (c, d) = nearest(p.as_ref(), &centroids);
            *a = c;
            sse += d;
        }
        sse_history.push(sse);
    }

    Ok(KMeansFit { centroids, assignments, sse_history, iterations, converged })
}

fn update_centroids<P: AsRef<[f64]>>(points: &[P], assignments: &[usize], centroids: &mut [Vec<f64>], dim: usize) {
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    let old = centroids.to_vec();
    let mut reseeded: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            centroids[c] = sums[c].iter().map(|s| s / n).collect();
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            // Farthest record from its own (pre-update) centroid, not already used.
            let mut pick: Option<(usize, f64)> = None;
            for (i, (p, &a)) in points.iter().zip(assignments).enumerate() {
                if reseeded.contains(&i) {
                    continue;
                }
                let d = squared_distance(p.as_ref(), &old[a]);
                if pick.is_none_or(|(_, best)| d > best) {
                    pick = Some((i, d));
                }
            }
            if let Some((i, _)) = pick {
                reseeded.push(i);
                centroids[c] = points[i].as_ref().to_vec();
            }
        }
    }
}

/// Distance from `centroid` to its farthest member; this becomes the cluster radius.
pub fn get_max_dist<P: AsRef<[f64]>>(centroid: &[f64], members: &[P]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::Empty("cluster member set"));
    }
    let mut max = 0.0f64;
    for m in members {
        let m = m.as_ref();
        if m.len() != centroid.len() {
            return Err(Error::DimensionMismatch { expected: centroid.len(), found: m.len() });
        }
        max = max.max(distance(centroid, m));
    }
    Ok(max)
}

/// Bootstrap summary plus the per-record assignment it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    pub result: ClusteringResult,
    pub assignments: Vec<Assignment>,
}

/// Runs k-means on a chunk's points and reduces every non-empty cluster to a
/// summary with `lifetime_count = chunk_count = |members|`.
pub fn summarize_detailed<P: AsRef<[f64]>>(points: &[P], timestamp: u64, params: &KMeansParams) -> Result<Bootstrap> {
    let fit = kmeans(points, params)?;
    let members = fit.members();

    let mut clusters = Vec::with_capacity(fit.centroids.len());
    let mut remap = vec![None; fit.centroids.len()];
    for (c, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let centroid = fit.centroids[c].clone();
        let member_points: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_ref()).collect();
        let radius = get_max_dist(&centroid, &member_points)?;
        remap[c] = Some(clusters.len());
        clusters.push(ClusterSummary {
            centroid,
            radius,
            lifetime_count: idx.len() as u64,
            chunk_count: idx.len() as u64,
        });
    }

    let assignments = fit
        .assignments
        .iter()
        .zip(points)
        .map(|(&c, p)| Assignment { cluster: remap[c], distance: distance(p.as_ref(), &fit.centroids[c]) })
        .collect();

    Ok(Bootstrap { result: ClusteringResult { clusters, outliers: 0, timestamp }, assignments })
}

pub fn summarize<P: AsRef<[f64]>>(points: &[P], timestamp: u64, params: &KMeansParams) -> Result<ClusteringResult> {
    summarize_detailed(points, timestamp, params).map(|b| b.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn pts(raw: &[[f64; 2]]) -> Vec<Vec<f64>> {
        raw.iter().map(|p| p.to_vec()).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn one_point_per_cluster() {
        let data = pts(&[[0.1, 0.2], [0.9, 0.1], [0.5, 0.5]]);
        let fit = kmeans(&data, &KMeansParams::new(3, 1)).unwrap();
        assert_eq!(fit.sse(), 0.0);
        let mut cents = fit.centroids.clone();
        cents.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = data.clone();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cents, want);
    }

    #[test]
    fn separated_pairs() {
        let data = pts(&[[0.0, 0.0], [0.01, 0.0], [1.0, 1.0], [0.99, 1.0]]);
        for seed in 0..10 {
            let fit = kmeans(&data, &KMeansParams::new(2, seed)).unwrap();
            let mut cents = fit.centroids.clone();
            cents.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(close(&cents[0], &[0.005, 0.0], 1e-15), "{cents:?}");
            assert!(close(&cents[1], &[0.995, 1.0], 1e-15), "{cents:?}");
        }
    }

    #[test]
    fn recovers_blob_means() {
        let anchors = [[0.117, 0.884], [0.885, 0.885], [0.527, 0.635], [0.117, 0.111], [0.877, 0.117]];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut data = Vec::new();
        for a in &anchors {
            for _ in 0..30 {
                data.push(vec![a[0] + noise.sample(&mut rng), a[1] + noise.sample(&mut rng)]);
            }
        }
        // Oracle: per-blob sample means, computed straight from the generated blocks.
        let blob_means: Vec<Vec<f64>> = data
            .chunks(30)
            .map(|b| {
                let n = b.len() as f64;
                vec![b.iter().map(|p| p[0]).sum::<f64>() / n, b.iter().map(|p| p[1]).sum::<f64>() / n]
            })
            .collect();
        let fit = kmeans(&data, &KMeansParams::new(5, 3)).unwrap();
        for m in &blob_means {
            let best = fit.centroids.iter().map(|c| distance(c, m)).fold(f64::INFINITY, f64::min);
            assert!(best <= 0.02, "blob mean {m:?} missed by {best}");
        }
    }

    #[test]
    fn kmeans_errors() {
        let data = pts(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(kmeans(&data, &KMeansParams::new(3, 0)), Err(Error::TooFewRecords { k: 3, records: 2 })));
        assert!(kmeans(&data, &KMeansParams::new(0, 0)).is_err());
        let mut p = KMeansParams::new(1, 0);
        p.max_iterations = 0;
        assert!(kmeans(&data, &p).is_err());
        assert!(kmeans::<Vec<f64>>(&[], &KMeansParams::new(1, 0)).is_err());
    }

    #[test]
    fn duplicate_points_drop_empty_clusters() {
        let data = pts(&[[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]);
        let b = summarize_detailed(&data, 1, &KMeansParams::new(3, 0)).unwrap();
        let total: u64 = b.result.clusters.iter().map(|c| c.chunk_count).sum();
        assert_eq!(total, 3);
        assert!(b.result.clusters.iter().all(|c| c.chunk_count > 0));
        assert!(b.assignments.iter().all(|a| a.cluster.is_some()));
    }

    #[test]
    fn max_dist_examples() {
        assert_eq!(get_max_dist(&[0.0, 0.0], &[[0.0, 0.0]]).unwrap(), 0.0);
        let d = get_max_dist(&[0.0, 0.0], &[[0.3, 0.4], [0.1, 0.0]]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!(get_max_dist::<Vec<f64>>(&[0.0], &[]).is_err());
    }

    #[test]
    fn max_dist_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let members: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let centroid = vec![0.4, 0.5, 0.6];
        let mut oracle = 0.0f64;
        for m in &members {
            let d = ((m[0] - 0.4f64).powi(2) + (m[1] - 0.5f64).powi(2) + (m[2] - 0.6f64).powi(2)).sqrt();
            if d > oracle {
                oracle = d;
            }
        }
        assert!((get_max_dist(&centroid, &members).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn summarize_pairs_and_single_cluster() {
        let data = pts(&[[0.0, 0.0], [0.01, 0.0], [1.0, 1.0], [0.99, 1.0]]);
        let r = summarize(&data, 1, &KMeansParams::new(2, 4)).unwrap();
        assert_eq!(r.outliers, 0);
        for c in &r.clusters {
            assert_eq!((c.lifetime_count, c.chunk_count), (2, 2));
        }

        let r = summarize(&data, 1, &KMeansParams::new(1, 4)).unwrap();
        let c = &r.clusters[0];
        assert_eq!((c.lifetime_count, c.chunk_count), (4, 4));
        assert!(close(&c.centroid, &[0.5, 0.5], 1e-15));
        let far = data.iter().map(|p| distance(p, &[0.5, 0.5])).fold(0.0, f64::max);
        assert!((c.radius - far).abs() < 1e-15);
    }

    #[test]
    fn toy_table_is_class_pure() {
        let rows = [
            ([0.052, 0.153], 1),
            ([0.061, 0.252], 1),
            ([0.046, 0.175], 1),
            ([0.055, 0.183], 1),
            ([0.957, 0.858], 2),
            ([0.965, 0.752], 2),
            ([0.957, 0.858], 2),
            ([0.965, 0.752], 2),
        ];
        let data: Vec<Vec<f64>> = rows.iter().map(|(p, _)| p.to_vec()).collect();
        let b = summarize_detailed(&data, 1, &KMeansParams::new(2, 9)).unwrap();
        // Oracle: per-class attribute means of rows R1-R4 and R5-R8.
        let class1 = [(0.052 + 0.061 + 0.046 + 0.055) / 4.0, (0.153 + 0.252 + 0.175 + 0.183) / 4.0];
        let class2 = [(0.957 + 0.965 + 0.957 + 0.965) / 4.0, (0.858 + 0.752 + 0.858 + 0.752) / 4.0];
        let c_of = |i: usize| b.assignments[i].cluster.unwrap();
        assert!((0..4).all(|i| c_of(i) == c_of(0)));
        assert!((4..8).all(|i| c_of(i) == c_of(4)));
        assert_ne!(c_of(0), c_of(4));
        assert!(close(&b.result.clusters[c_of(0)].centroid, &class1, 1e-12));
        assert!(close(&b.result.clusters[c_of(4)].centroid, &class2, 1e-12));
    }

    fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
        (prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..60), 1usize..6, any::<u64>()).prop_map(
            |(p, k, s)| {
                let k = k.min(p.len());
                (p, k, s)
            },
        )
    }

    proptest! {
        #[test]
        fn summary_invariants((data, k, seed) in cloud()) {
            let b = summarize_detailed(&data, 1, &KMeansParams::new(k, seed)).unwrap();
            let total: u64 = b.result.clusters.iter().map(|c| c.chunk_count).sum();
            prop_assert_eq!(total as usize, data.len());
            prop_assert_eq!(b.result.outliers, 0);
            for (p, a) in data.iter().zip(&b.assignments) {
                let c = &b.result.clusters[a.cluster.unwrap()];
                prop_assert!(distance(p, &c.centroid) <= c.radius);
                prop_assert!(c.lifetime_count >= c.chunk_count && c.lifetime_count >= 1);
            }
        }

        #[test]
        fn sse_never_increases((data, k, seed) in cloud()) {
            let fit = kmeans(&data, &KMeansParams::new(k, seed)).unwrap();
            for w in fit.sse_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.sse_history);
            }
        }

        #[test]
        fn deterministic_for_seed((data, k, seed) in cloud()) {
            let a = kmeans(&data, &KMeansParams::new(k, seed)).unwrap();
            let b = kmeans(&data, &KMeansParams::new(k, seed)).unwrap();
            let bits = |f: &KMeansFit| -> Vec<u64> { f.centroids.iter().flatten().map(|v| v.to_bits()).collect() };
            prop_assert_eq!(bits(&a), bits(&b));
            prop_assert_eq!(a.assignments, b.assignments);
        }
    }
}
