//! Single-pass incremental assignment of a chunk onto an existing clustering.
//!
//! Each record goes to its nearest centroid if it lies within that cluster's
//! radius; the centroid then moves by the running-mean rule
//! `x <- (1 - 1/psi) * x + (1/psi) * a` with `psi` already incremented.
//! Records outside every radius are counted as outliers and dropped.

use crate::error::{Error, Result};
use crate::numeric::squared_distance;
use crate::summary::{Assignment, ClusterSummary, ClusteringResult};

/// Index and distance of the nearest centroid. Ties go to the lower index.
pub fn closest_cluster(point: &[f64], result: &ClusteringResult) -> Result<(usize, f64)> {
    let first = result.clusters.first().ok_or(Error::Empty("cluster list"))?;
    if first.dim() != point.len() {
        return Err(Error::DimensionMismatch { expected: first.dim(), found: point.len() });
    }
    Ok(nearest(point, &result.clusters))
}

fn nearest(point: &[f64], clusters: &[ClusterSummary]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in clusters.iter().enumerate() {
        let d = squared_distance(point, &c.centroid);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

impl ClusterSummary {
    /// Absorbs one record in place; the radius is left unchanged.
    pub fn absorb(&mut self, point: &[f64]) {
        self.lifetime_count += 1;
        self.chunk_count += 1;
        let rate = 1.0 / self.lifetime_count as f64;
        for (x, a) in self.centroid.iter_mut().zip(point) {
            *x = (1.0 - rate) * *x + rate * a;
        }
    }
}

/// Returns `summary` after absorbing `point`.
pub fn update_centroid(summary: &ClusterSummary, point: &[f64]) -> Result<ClusterSummary> {
    if summary.dim() != point.len() {
        return Err(Error::DimensionMismatch { expected: summary.dim(), found: point.len() });
    }
    let mut next = summary.clone();
    next.absorb(point);
    Ok(next)
}

/// Updated result plus where each record of the chunk went.
#[derive(Debug, Clone, PartialEq)]
pub struct Incremental {
    pub result: ClusteringResult,
    pub assignments: Vec<Assignment>,
}

/// Runs one incremental pass of `points` (the chunk stamped `timestamp`) over `prev`.
///
/// Per-chunk counts and the outlier counter start from zero; `prev` is not modified.
pub fn dist_clust_detailed<P: AsRef<[f64]>>(
    points: &[P],
    timestamp: u64,
    prev: &ClusteringResult,
) -> Result<Incremental> {
    let dim = prev.dim().ok_or(Error::Empty("cluster list"))?;
    if points.is_empty() {
        return Err(Error::Empty("chunk"));
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: p.as_ref().len() });
    }

    let mut clusters = prev.clusters.clone();
    for c in &mut clusters {
        c.chunk_count = 0;
    }
    let mut outliers = 0u64;
    let mut assignments = Vec::with_capacity(points.len());
    for p in points {
        let p = p.as_ref();
        let (k, d) = nearest(p, &clusters);
        if d <= clusters[k].radius {
            clusters[k].absorb(p);
            assignments.push(Assignment { cluster: Some(k), distance: d });
        } else {
            outliers += 1;
            assignments.push(Assignment { cluster: None, distance: d });
        }
    }

    Ok(Incremental { result: ClusteringResult { clusters, outliers, timestamp }, assignments })
}

pub fn dist_clust<P: AsRef<[f64]>>(points: &[P], timestamp: u64, prev: &ClusteringResult) -> Result<ClusteringResult> {
    dist_clust_detailed(points, timestamp, prev).map(|i| i.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::{summarize, KMeansParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn summary(centroid: &[f64], radius: f64, count: u64) -> ClusterSummary {
        ClusterSummary { centroid: centroid.to_vec(), radius, lifetime_count: count, chunk_count: count }
    }

    fn result(centroids: &[&[f64]]) -> ClusteringResult {
        ClusteringResult { clusters: centroids.iter().map(|c| summary(c, 0.1, 1)).collect(), outliers: 0, timestamp: 1 }
    }

    #[test]
    fn closest_examples() {
        let r = result(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(closest_cluster(&[0.0, 0.0], &r).unwrap(), (0, 0.0));
        let (i, d) = closest_cluster(&[0.6, 0.6], &r).unwrap();
        assert_eq!(i, 1);
        assert!((d - 0.32f64.sqrt()).abs() < 1e-15);
        // Equidistant: lower index wins.
        assert_eq!(closest_cluster(&[0.5, 0.5], &r).unwrap().0, 0);
        assert!(closest_cluster(&[0.0], &r).is_err());
        let empty = ClusteringResult { clusters: vec![], outliers: 0, timestamp: 1 };
        assert!(matches!(closest_cluster(&[0.0], &empty), Err(Error::Empty(_))));
    }

    #[test]
    fn closest_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let cents: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
            let r = ClusteringResult {
                clusters: cents.iter().map(|c| summary(c, 0.1, 1)).collect(),
                outliers: 0,
                timestamp: 1,
            };
            let q = [rng.random::<f64>(), rng.random(), rng.random()];
            let mut oracle = (0usize, f64::INFINITY);
            for (i, c) in cents.iter().enumerate() {
                let d = ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) + (q[2] - c[2]).powi(2)).sqrt();
                if d < oracle.1 {
                    oracle = (i, d);
                }
            }
            let (i, d) = closest_cluster(&q, &r).unwrap();
            assert_eq!(i, oracle.0);
            assert!((d - oracle.1).abs() < 1e-12);
        }
    }

    #[test]
    fn update_examples() {
        let s = summary(&[0.5], 0.2, 1);
        let u = update_centroid(&s, &[0.7]).unwrap();
        assert!((u.centroid[0] - 0.6).abs() < 1e-15);
        assert_eq!((u.lifetime_count, u.chunk_count, u.radius), (2, 2, 0.2));

        let s = summary(&[0.25, 0.75], 0.2, 6);
        let u = update_centroid(&s, &[0.25, 0.75]).unwrap();
        assert_eq!(u.centroid, s.centroid);
        assert_eq!(u.lifetime_count, 7);
        assert!(update_centroid(&s, &[0.1]).is_err());
    }

    #[test]
    fn absorbing_matches_batch_mean() {
        let boot = vec![vec![0.40, 0.50], vec![0.42, 0.48], vec![0.41, 0.53]];
        let r = summarize(&boot, 1, &KMeansParams::new(1, 0)).unwrap();
        let mut s = r.clusters[0].clone();
        let more = [[0.39, 0.51], [0.44, 0.47], [0.40, 0.52], [0.43, 0.49], [0.41, 0.50]];
        for p in &more {
            s = update_centroid(&s, p).unwrap();
        }
        let all: Vec<&[f64]> = boot.iter().map(|v| v.as_slice()).chain(more.iter().map(|v| v.as_slice())).collect();
        for i in 0..2 {
            let mean = all.iter().map(|p| p[i]).sum::<f64>() / 8.0;
            assert!((s.centroid[i] - mean).abs() < 1e-12);
        }
        assert_eq!(s.lifetime_count, 8);
    }

    #[test]
    fn self_absorption_and_total_outliers() {
        let chunk = vec![vec![0.2, 0.3], vec![0.2, 0.3], vec![0.2, 0.3], vec![0.7, 0.6], vec![0.7, 0.6]];
        let boot = summarize(&chunk, 1, &KMeansParams::new(2, 1)).unwrap();
        let next = dist_clust(&chunk, 2, &boot).unwrap();
        assert_eq!(next.outliers, 0);
        assert_eq!(next.chunk_counts().iter().sum::<u64>(), 5);

        // Radii are checked against the moving centroid, so a replayed extreme
        // record can fall outside once the centroid has drifted away from it.
        let line = vec![vec![0.4], vec![0.5], vec![0.6]];
        let boot = summarize(&line, 1, &KMeansParams::new(1, 1)).unwrap();
        let next = dist_clust(&line, 2, &boot).unwrap();
        assert_eq!((next.outliers, next.chunk_counts()), (1, vec![2]));

        let tight = ClusteringResult {
            clusters: vec![summary(&[0.1, 0.1], 0.01, 5), summary(&[0.9, 0.9], 0.01, 5)],
            outliers: 0,
            timestamp: 1,
        };
        let far = vec![vec![0.5, 0.5], vec![0.3, 0.7], vec![0.6, 0.2]];
        let next = dist_clust(&far, 2, &tight).unwrap();
        assert_eq!(next.outliers, 3);
        assert_eq!(next.centroids(), tight.centroids());
        assert_eq!(next.chunk_counts(), vec![0, 0]);
    }

    #[test]
    fn dist_clust_errors() {
        let r = result(&[&[0.0, 0.0]]);
        assert!(dist_clust::<Vec<f64>>(&[], 2, &r).is_err());
        assert!(matches!(
            dist_clust(&[vec![0.0, 0.0, 0.0]], 2, &r),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    proptest! {
        #[test]
        fn conservation_and_monotone_counts(
            seed in any::<u64>(),
            n in 1usize..80,
            radius in 0.0f64..0.6,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prev = ClusteringResult {
                clusters: (0..3).map(|_| summary(&[rng.random(), rng.random()], radius, 4)).collect(),
                outliers: 2,
                timestamp: 1,
            };
            let chunk: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
            let inc = dist_clust_detailed(&chunk, 2, &prev).unwrap();
            prop_assert_eq!(inc.result.accounted() as usize, n);
            prop_assert_eq!(inc.assignments.iter().filter(|a| a.is_outlier()).count() as u64, inc.result.outliers);
            for (a, b) in prev.clusters.iter().zip(&inc.result.clusters) {
                prop_assert!(b.lifetime_count >= a.lifetime_count);
                prop_assert_eq!(a.radius, b.radius);
            }
            let again = dist_clust_detailed(&chunk, 2, &prev).unwrap();
            prop_assert_eq!(inc, again);
        }
    }
}
