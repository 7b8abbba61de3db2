//! Post-processing: attractor/cluster extraction, reconstruction error,
//! grid histograms and communication block structure.

use std::collections::HashMap;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::dynamics::CommunicationRecord;
use crate::geometry::PointSet;
use crate::model::{pairwise_sum, Ensemble};
use crate::vecmath::dist_sq;
use crate::{Error, Result};

/// The limit configuration of a run: cluster centers `V_1..V_n`, the
/// agent-to-cluster assignment, and per-cluster counts. Clusters are ordered
/// by descending count, ties by smallest member index.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AttractorSummary {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    pub merge_radius: f64,
}

impl AttractorSummary {
    /// Number of concentration points.
    pub fn n_clusters(&self) -> usize {
        self.counts.len()
    }
}

impl Serialize for AttractorSummary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AttractorSummary", 5)?;
        st.serialize_field("centers", &self.centers)?;
        st.serialize_field("counts", &self.counts)?;
        st.serialize_field("assignment", &self.assignment)?;
        st.serialize_field("merge_radius", &self.merge_radius)?;
        st.serialize_field("n_infinity", &self.n_clusters())?;
        st.end()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Single-linkage clustering at `merge_radius`: agents chained by pairwise
/// distances within the radius form one cluster; the center is the cluster
/// mean.
pub fn extract_attractor(e: &Ensemble, merge_radius: f64) -> Result<AttractorSummary> {
    if !(merge_radius.is_finite() && merge_radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "merge_radius must be positive and finite, got {merge_radius}"
        )));
    }
    let n = e.len();
    let dim = e.dim();
    let r_sq = merge_radius * merge_radius;
    let mut uf = UnionFind::new(n);

    if n <= 2048 {
        for i in 0..n {
            for j in i + 1..n {
                if uf.find(i) != uf.find(j) && dist_sq(e.point(i), e.point(j)) <= r_sq {
                    uf.union(i, j);
                }
            }
        }
    } else {
        // bucket by merge_radius cells and test only neighboring cells
        let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let cell_of = |p: &[f64]| -> Vec<i64> {
            p.iter().map(|&x| (x / merge_radius).floor() as i64).collect()
        };
        for i in 0..n {
            grid.entry(cell_of(e.point(i))).or_default().push(i);
        }
        let mut offsets: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::with_capacity(offsets.len() * 3);
            for base in &offsets {
                for step in [-1i64, 0, 1] {
                    let mut o = base.clone();
                    o.push(step);
                    next.push(o);
                }
            }
            offsets = next;
        }
        for i in 0..n {
            let cell = cell_of(e.point(i));
            for off in &offsets {
                let neighbor: Vec<i64> = cell.iter().zip(off).map(|(c, o)| c + o).collect();
                if let Some(members) = grid.get(&neighbor) {
                    for &j in members {
                        if j > i
                            && uf.find(i) != uf.find(j)
                            && dist_sq(e.point(i), e.point(j)) <= r_sq
                        {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }

    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let root = uf.find(i);
        members.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = members.into_values().collect();
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut centers = Vec::with_capacity(clusters.len());
    let mut counts = Vec::with_capacity(clusters.len());
    let mut assignment = vec![0usize; n];
    for (label, cluster) in clusters.iter().enumerate() {
        let mut center = vec![0.0; dim];
        for &i in cluster {
            for d in 0..dim {
                center[d] += e.point(i)[d];
            }
            assignment[i] = label;
        }
        for c in center.iter_mut() {
            *c /= cluster.len() as f64;
        }
        centers.push(center);
        counts.push(cluster.len());
    }

    Ok(AttractorSummary {
        centers,
        assignment,
        counts,
        merge_radius,
    })
}

/// Index-matched mean squared error between two ensembles evolved from the
/// same initial condition: `(1/N) sum_k |z_k^a - z_k^b|^2`.
pub fn attractor_mse(a: &Ensemble, b: &Ensemble) -> Result<f64> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.len() * a.dim(),
            found: b.len() * b.dim(),
        });
    }
    let per_agent: Vec<f64> = (0..a.len())
        .map(|k| dist_sq(a.point(k), b.point(k)))
        .collect();
    Ok(pairwise_sum(&per_agent) / a.len() as f64)
}

/// Axis-aligned 2D box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds2 {
    /// Bounding box of a point set expanded by `pad_fraction` per axis (with
    /// a small absolute floor so degenerate boxes stay usable).
    pub fn padded(ps: &PointSet, pad_fraction: f64) -> Result<Self> {
        if ps.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: ps.dim(),
            });
        }
        let (lo, hi) = ps.bounding_box();
        let mut min = [0.0; 2];
        let mut max = [0.0; 2];
        for d in 0..2 {
            let pad = (hi[d] - lo[d]) * pad_fraction + 1e-9;
            min[d] = lo[d] - pad;
            max[d] = hi[d] + pad;
        }
        Ok(Bounds2 { min, max })
    }
}

/// Agent counts on a uniform `grid_size x grid_size` 2D grid, stored row
/// major (`counts[iy * grid_size + ix]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHistogram {
    pub grid_size: usize,
    pub bounds: Bounds2,
    pub counts: Vec<u64>,
}

impl GridHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count_at(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.grid_size + ix]
    }
}

/// Bins 2D agent positions. Bins are half-open with the last bin closed on
/// the right/top edge; out-of-bounds agents are clamped to the edge bins, so
/// the total always equals `N`.
pub fn grid_histogram(e: &Ensemble, grid_size: usize, bounds: &Bounds2) -> Result<GridHistogram> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: e.dim(),
        });
    }
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid_size must be >= 1".into()));
    }
    for d in 0..2 {
        if !(bounds.max[d] > bounds.min[d]) {
            return Err(Error::InvalidParameter(
                "histogram bounds must have positive extent".into(),
            ));
        }
    }
    let g = grid_size as f64;
    let mut counts = vec![0u64; grid_size * grid_size];
    for p in e.positions().iter() {
        let mut idx = [0usize; 2];
        for d in 0..2 {
            let t = (p[d] - bounds.min[d]) / (bounds.max[d] - bounds.min[d]);
            idx[d] = ((t * g).floor() as i64).clamp(0, grid_size as i64 - 1) as usize;
        }
        counts[idx[1] * grid_size + idx[0]] += 1;
    }
    Ok(GridHistogram {
        grid_size,
        bounds: *bounds,
        counts,
    })
}

/// Finds the earliest epoch `t*` from which on every recorded friend edge
/// stays inside one cluster of `summary`. Returns `(true, t*)` when such an
/// epoch exists in the recorded horizon, `(false, last epoch + 1)` otherwise.
pub fn verify_block_structure(
    records: &[CommunicationRecord],
    summary: &AttractorSummary,
) -> (bool, usize) {
    assert!(!records.is_empty(), "no communication records");
    let mut t_star = records[0].epoch;
    let mut last_violation: Option<usize> = None;
    for rec in records {
        assert_eq!(
            rec.friends.len(),
            summary.assignment.len(),
            "record does not match attractor summary"
        );
        let crossing = rec
            .friends
            .iter()
            .enumerate()
            .any(|(k, &f)| summary.assignment[k] != summary.assignment[f]);
        if crossing {
            last_violation = Some(rec.epoch);
        }
    }
    let last_epoch = records.last().unwrap().epoch;
    match last_violation {
        None => (true, t_star),
        Some(v) if v < last_epoch => {
            t_star = v + 1;
            (true, t_star)
        }
        Some(_) => (false, last_epoch + 1),
    }
}
