//! Weighted DBSCAN over 3D points with a uniform-grid neighbor index.
//!
//! Core condition: the weight sum over the closed `radius_m` ball around a
//! point (including the point itself) reaches `min_weight`. Every weight sum
//! runs over ascending point indices, so results are bitwise reproducible and
//! match a naive reference exactly.

use super::ClusterParams;
use nalgebra::Point3;
use std::collections::{HashMap, VecDeque};

/// One cluster: member indices in ascending order plus their weight sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub indices: Vec<usize>,
    pub total_weight: f64,
}

const UNLABELED: usize = usize::MAX;

struct GridIndex {
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    inv_cell: f64,
}

impl GridIndex {
    fn build(points: &[Point3<f64>], cell: f64) -> Self {
        let inv_cell = 1.0 / cell;
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, inv_cell)).or_default().push(i);
        }
        GridIndex { cells, inv_cell }
    }

    fn key(p: &Point3<f64>, inv_cell: f64) -> (i64, i64, i64) {
        (
            (p.x * inv_cell).floor() as i64,
            (p.y * inv_cell).floor() as i64,
            (p.z * inv_cell).floor() as i64,
        )
    }

    /// Indices within the closed radius around `p`, ascending.
    fn neighbors(&self, points: &[Point3<f64>], p: &Point3<f64>, r2: f64) -> Vec<usize> {
        let (kx, ky, kz) = Self::key(p, self.inv_cell);
        let mut out = Vec::new();
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(cell) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &j in cell {
                            if (points[j] - p).norm_squared() <= r2 {
                                out.push(j);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Density clustering with per-point weights.
///
/// Expansion scans seeds in index order; border points keep the label of the
/// first core point whose neighborhood reaches them (FIFO, ascending
/// neighbors), and noise points appear in no cluster.
pub fn weighted_dbscan(
    points: &[Point3<f64>],
    weights: &[f64],
    params: &ClusterParams,
) -> Vec<Cluster> {
    assert_eq!(points.len(), weights.len(), "one weight per point");
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let r2 = params.radius_m * params.radius_m;
    let index = GridIndex::build(points, params.radius_m);
    let wsum_of =
        |nbrs: &[usize]| -> f64 { nbrs.iter().map(|&j| weights[j]).sum() };

    let mut label = vec![UNLABELED; n];
    let mut expanded = vec![false; n];
    let mut n_clusters = 0usize;
    let mut queue = VecDeque::new();

    for i in 0..n {
        if expanded[i] || label[i] != UNLABELED {
            continue;
        }
        expanded[i] = true;
        let nbrs = index.neighbors(points, &points[i], r2);
        if wsum_of(&nbrs) < params.min_weight {
            continue;
        }
        let cid = n_clusters;
        n_clusters += 1;
        label[i] = cid;
        queue.extend(nbrs);
        while let Some(q) = queue.pop_front() {
            if label[q] == UNLABELED {
                label[q] = cid;
            }
            if expanded[q] {
                continue;
            }
            expanded[q] = true;
            let qn = index.neighbors(points, &points[q], r2);
            if wsum_of(&qn) >= params.min_weight {
                queue.extend(qn);
            }
        }
    }

    let mut members = vec![Vec::new(); n_clusters];
    for (i, &l) in label.iter().enumerate() {
        if l != UNLABELED {
            members[l].push(i);
        }
    }
    members
        .into_iter()
        .map(|indices| {
            let total_weight = indices.iter().map(|&i| weights[i]).sum();
            Cluster { indices, total_weight }
        })
        .collect()
}

/// Cluster with the largest total weight; exact ties go to the cluster whose
/// smallest member index is lowest.
pub fn select_cluster(clusters: &[Cluster]) -> Option<&Cluster> {
    let mut best: Option<&Cluster> = None;
    for c in clusters {
        best = match best {
            None => Some(c),
            Some(b)
                if c.total_weight > b.total_weight
                    || (c.total_weight == b.total_weight && c.indices[0] < b.indices[0]) =>
            {
                Some(c)
            }
            keep => keep,
        };
    }
    best
}
