//! Point sets, convex hulls and containment tests.
//!
//! The friend search only ever needs the extreme points of the current
//! configuration (a linear objective is maximized at a vertex), so the hull
//! is the one geometric primitive the solver leans on. Hulls are exact for
//! `D <= 3`; for `D > 3` the operation returns the full index set, a
//! degenerate but correct superset, and the search falls back to a full scan.

use std::collections::HashMap;

use crate::vecmath::{dist, dist_sq, dot, norm_sq};
use crate::{Error, Result};

/// `N` points of identical dimension `D`, stored agent-major in one flat
/// buffer. All coordinates are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    dim: usize,
}

impl PointSet {
    /// Builds a point set from a flat agent-major buffer (`n * dim` values).
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: bad / dim });
        }
        Ok(PointSet { data, dim })
    }

    /// Builds a point set from one row per agent.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    #[inline]
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter().skip(1) {
            for d in 0..self.dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Largest pairwise distance. Computed over hull vertices, where the
    /// maximum is attained, so it stays cheap for big point sets.
    pub fn diameter(&self) -> f64 {
        let hull = convex_hull(self);
        let vs = hull.indices();
        let mut best = 0.0f64;
        for (a, &i) in vs.iter().enumerate() {
            for &j in &vs[a + 1..] {
                best = best.max(dist_sq(self.point(i), self.point(j)));
            }
        }
        best.sqrt()
    }
}

/// Indices of the extreme points of a [`PointSet`], strictly increasing.
/// Duplicated coordinates contribute their smallest index only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullIndex {
    vertices: Vec<usize>,
}

impl HullIndex {
    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Computes the convex hull of a point set as a set of vertex indices.
///
/// Exact for `D <= 3` (monotone chain in 2D, incremental quickhull in 3D,
/// both with degenerate-input fallbacks). For `D > 3` the full index set is
/// returned: every later consumer treats the hull as a candidate superset,
/// so this trades speed for correctness.
pub fn convex_hull(ps: &PointSet) -> HullIndex {
    let mut vertices = match ps.dim() {
        1 => hull_1d(ps),
        2 => hull_2d(ps),
        3 => hull_3d(ps),
        _ => (0..ps.len()).collect(),
    };
    vertices.sort_unstable();
    vertices.dedup();
    HullIndex { vertices }
}

/// Tests whether `p` lies within distance `tol` of the convex hull spanned
/// by the indexed vertices. Exact half-plane tests in 2D; min-norm-point
/// distance for `D >= 3`.
pub fn point_in_hull(p: &[f64], ps: &PointSet, hull: &HullIndex, tol: f64) -> Result<bool> {
    if p.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            found: p.len(),
        });
    }
    if hull.is_empty() {
        return Err(Error::InvalidParameter("empty hull".into()));
    }
    let verts = hull.indices();
    Ok(match ps.dim() {
        1 => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &i in verts {
                lo = lo.min(ps.point(i)[0]);
                hi = hi.max(ps.point(i)[0]);
            }
            p[0] >= lo - tol && p[0] <= hi + tol
        }
        2 => point_in_hull_2d(p, ps, verts, tol),
        _ => distance_to_hull(p, ps, verts) <= tol,
    })
}

// ---------------------------------------------------------------------------
// 1D
// ---------------------------------------------------------------------------

fn hull_1d(ps: &PointSet) -> Vec<usize> {
    let mut min_i = 0;
    let mut max_i = 0;
    for i in 1..ps.len() {
        let x = ps.point(i)[0];
        if x < ps.point(min_i)[0] {
            min_i = i;
        }
        if x > ps.point(max_i)[0] {
            max_i = i;
        }
    }
    if ps.point(min_i)[0] == ps.point(max_i)[0] {
        vec![min_i.min(max_i)]
    } else {
        vec![min_i, max_i]
    }
}

// ---------------------------------------------------------------------------
// 2D: Andrew's monotone chain over deduplicated points
// ---------------------------------------------------------------------------

#[inline]
fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices sorted lexicographically by coordinates (index as final key), with
/// exact coordinate duplicates collapsed to their smallest index.
fn dedup_sorted_indices(ps: &PointSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ps.len()).collect();
    idx.sort_unstable_by(|&a, &b| {
        ps.point(a)
            .partial_cmp(ps.point(b))
            .expect("finite coordinates compare")
            .then(a.cmp(&b))
    });
    idx.dedup_by(|a, b| ps.point(*a) == ps.point(*b));
    idx
}

fn hull_2d(ps: &PointSet) -> Vec<usize> {
    let pts = dedup_sorted_indices(ps);
    if pts.len() <= 2 {
        return pts;
    }
    // Strict turns only: collinear boundary-interior points are not vertices.
    let chain = |iter: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for i in iter {
            while out.len() >= 2 {
                let o = ps.point(out[out.len() - 2]);
                let a = ps.point(out[out.len() - 1]);
                if cross2(o, a, ps.point(i)) <= 0.0 {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(i);
        }
        out
    };
    let mut lower = chain(&mut pts.iter().copied());
    let mut upper = chain(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

fn point_in_hull_2d(p: &[f64], ps: &PointSet, verts: &[usize], tol: f64) -> bool {
    match verts.len() {
        1 => dist(p, ps.point(verts[0])) <= tol,
        2 => dist_to_segment(p, ps.point(verts[0]), ps.point(verts[1])) <= tol,
        _ => {
            let ordered = cyclic_order_2d(ps, verts);
            // CCW polygon: inside iff no edge sees the point on its right by
            // more than tol (signed distance per edge).
            for e in 0..ordered.len() {
                let a = ps.point(ordered[e]);
                let b = ps.point(ordered[(e + 1) % ordered.len()]);
                let len = dist(a, b);
                if len == 0.0 {
                    continue;
                }
                if cross2(a, b, p) / len < -tol {
                    return false;
                }
            }
            true
        }
    }
}

/// Orders hull vertex indices counter-clockwise around their centroid.
/// Valid because vertices of a convex polygon are angularly sorted as seen
/// from any interior point.
fn cyclic_order_2d(ps: &PointSet, verts: &[usize]) -> Vec<usize> {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for &i in verts {
        cx += ps.point(i)[0];
        cy += ps.point(i)[1];
    }
    cx /= verts.len() as f64;
    cy /= verts.len() as f64;
    let mut ordered = verts.to_vec();
    ordered.sort_by(|&a, &b| {
        let pa = ps.point(a);
        let pb = ps.point(b);
        let ta = (pa[1] - cy).atan2(pa[0] - cx);
        let tb = (pb[1] - cy).atan2(pb[0] - cx);
        ta.partial_cmp(&tb).expect("finite angles")
    });
    ordered
}

fn dist_to_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let len_sq = dist_sq(a, b);
    if len_sq == 0.0 {
        return dist(p, a);
    }
    let mut t = 0.0;
    for d in 0..p.len() {
        t += (p[d] - a[d]) * (b[d] - a[d]);
    }
    t = (t / len_sq).clamp(0.0, 1.0);
    let mut acc = 0.0;
    for d in 0..p.len() {
        let proj = a[d] + t * (b[d] - a[d]);
        let diff = p[d] - proj;
        acc += diff * diff;
    }
    acc.sqrt()
}

// ---------------------------------------------------------------------------
// 3D: incremental quickhull with flat-case fallbacks
// ---------------------------------------------------------------------------

#[inline]
fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[derive(Clone)]
struct Face {
    v: [usize; 3],
    normal: [f64; 3], // unit outward
    offset: f64,      // plane: normal . x = offset
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn signed_dist(&self, p: &[f64]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] - self.offset
    }
}

fn make_face(ps: &PointSet, mut v: [usize; 3], interior: &[f64; 3]) -> Option<Face> {
    let a = ps.point(v[0]);
    let e1 = sub3(ps.point(v[1]), a);
    let e2 = sub3(ps.point(v[2]), a);
    let n = cross3(e1, e2);
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if nn == 0.0 {
        return None;
    }
    let mut normal = [n[0] / nn, n[1] / nn, n[2] / nn];
    let mut offset = normal[0] * a[0] + normal[1] * a[1] + normal[2] * a[2];
    // Orient outward w.r.t. an interior reference point converting the mesh
    // into a consistent winding: adjacent faces then traverse their shared
    // edge in opposite directions, which horizon detection relies on.
    if normal[0] * interior[0] + normal[1] * interior[1] + normal[2] * interior[2] - offset > 0.0 {
        normal = [-normal[0], -normal[1], -normal[2]];
        offset = -offset;
        v.swap(1, 2);
    }
    Some(Face {
        v,
        normal,
        offset,
        outside: Vec::new(),
        alive: true,
    })
}

fn hull_3d(ps: &PointSet) -> Vec<usize> {
    let pts = dedup_sorted_indices(ps);
    if pts.len() <= 2 {
        return pts;
    }

    let (lo, hi) = ps.bounding_box();
    let diag = dist(&lo, &hi);
    if diag == 0.0 {
        return vec![pts[0]];
    }
    let eps = 1e-12 * diag;

    // Initial extremes: farthest pair among the 6 axis extremes.
    let mut extremes: Vec<usize> = Vec::with_capacity(6);
    for d in 0..3 {
        let mut min_i = pts[0];
        let mut max_i = pts[0];
        for &i in &pts {
            if ps.point(i)[d] < ps.point(min_i)[d] {
                min_i = i;
            }
            if ps.point(i)[d] > ps.point(max_i)[d] {
                max_i = i;
            }
        }
        extremes.push(min_i);
        extremes.push(max_i);
    }
    let (mut ia, mut ib) = (extremes[0], extremes[1]);
    let mut best = -1.0;
    for (u, &a) in extremes.iter().enumerate() {
        for &b in &extremes[u + 1..] {
            let d = dist_sq(ps.point(a), ps.point(b));
            if d > best {
                best = d;
                ia = a;
                ib = b;
            }
        }
    }

    // Farthest point from the line (ia, ib).
    let ab = sub3(ps.point(ib), ps.point(ia));
    let ab_len = norm_sq(&ab).sqrt();
    let mut ic = pts[0];
    let mut best_line = -1.0;
    for &i in &pts {
        let ap = sub3(ps.point(i), ps.point(ia));
        let c = cross3(ab, ap);
        let d = norm_sq(&c).sqrt() / ab_len;
        if d > best_line {
            best_line = d;
            ic = i;
        }
    }
    if best_line <= eps {
        // collinear set: the farthest pair are the two endpoints
        return vec![ia, ib];
    }

    // Farthest point from the plane (ia, ib, ic).
    let n = cross3(ab, sub3(ps.point(ic), ps.point(ia)));
    let n_len = norm_sq(&n).sqrt();
    let plane_off = dot(&n, ps.point(ia)) / n_len;
    let mut id = pts[0];
    let mut best_plane = -1.0;
    for &i in &pts {
        let d = (dot(&n, ps.point(i)) / n_len - plane_off).abs();
        if d > best_plane {
            best_plane = d;
            id = i;
        }
    }
    if best_plane <= eps {
        return hull_coplanar(ps, &pts, ia, ib, ic);
    }

    // Interior reference = centroid of the initial tetrahedron.
    let mut interior = [0.0f64; 3];
    for &i in &[ia, ib, ic, id] {
        for d in 0..3 {
            interior[d] += ps.point(i)[d] / 4.0;
        }
    }

    let mut faces: Vec<Face> = Vec::new();
    for v in [[ia, ib, ic], [ia, ib, id], [ia, ic, id], [ib, ic, id]] {
        if let Some(f) = make_face(ps, v, &interior) {
            faces.push(f);
        }
    }

    // Assign every remaining point to the first face that sees it.
    for &i in &pts {
        if i == ia || i == ib || i == ic || i == id {
            continue;
        }
        for f in faces.iter_mut() {
            if f.signed_dist(ps.point(i)) > eps {
                f.outside.push(i);
                break;
            }
        }
    }

    loop {
        let Some(fi) = faces
            .iter()
            .position(|f| f.alive && !f.outside.is_empty())
        else {
            break;
        };
        // farthest outside point of that face
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                faces[fi]
                    .signed_dist(ps.point(a))
                    .partial_cmp(&faces[fi].signed_dist(ps.point(b)))
                    .expect("finite distances")
            })
            .expect("nonempty outside set");
        let p = ps.point(apex);

        let visible: Vec<usize> = (0..faces.len())
            .filter(|&i| faces[i].alive && faces[i].signed_dist(p) > eps)
            .collect();

        // Horizon = directed edges of visible faces whose reverse edge is not
        // shared with another visible face.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for &i in &visible {
            let [a, b, c] = faces[i].v;
            for e in [(a, b), (b, c), (c, a)] {
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        let horizon: Vec<(usize, usize)> = edges
            .keys()
            .filter(|&&(u, w)| !edges.contains_key(&(w, u)))
            .copied()
            .collect();

        let mut orphans: Vec<usize> = Vec::new();
        for &i in &visible {
            faces[i].alive = false;
            orphans.append(&mut faces[i].outside);
        }
        orphans.sort_unstable();
        orphans.dedup();

        for (u, w) in horizon {
            if let Some(mut f) = make_face(ps, [u, w, apex], &interior) {
                f.outside = orphans
                    .iter()
                    .copied()
                    .filter(|&q| q != apex && f.signed_dist(ps.point(q)) > eps)
                    .collect();
                orphans.retain(|&q| !f.outside.contains(&q));
                faces.push(f);
            }
        }
        // points not claimed by any new face are interior: dropped
    }

    let mut verts: Vec<usize> = faces
        .iter()
        .filter(|f| f.alive)
        .flat_map(|f| f.v.into_iter())
        .collect();
    verts.sort_unstable();
    verts.dedup();
    verts
}

/// All unique points lie in one plane: run the planar hull in an orthonormal
/// in-plane basis.
fn hull_coplanar(ps: &PointSet, pts: &[usize], ia: usize, ib: usize, ic: usize) -> Vec<usize> {
    let origin = ps.point(ia);
    let mut e1 = sub3(ps.point(ib), origin);
    let l1 = norm_sq(&e1).sqrt();
    for v in e1.iter_mut() {
        *v /= l1;
    }
    let n = cross3(e1, sub3(ps.point(ic), origin));
    let mut e2 = cross3(n, e1);
    let l2 = norm_sq(&e2).sqrt();
    for v in e2.iter_mut() {
        *v /= l2;
    }
    let mut flat = Vec::with_capacity(pts.len() * 2);
    for &i in pts {
        let w = sub3(ps.point(i), origin);
        flat.push(dot(&w, &e1));
        flat.push(dot(&w, &e2));
    }
    let planar = PointSet::from_flat(flat, 2).expect("projected points are finite");
    hull_2d(&planar).into_iter().map(|j| pts[j]).collect()
}

// ---------------------------------------------------------------------------
// Distance from a point to the hull of selected vertices (any dimension):
// Wolfe's min-norm-point algorithm on the shifted vertex set.
// ---------------------------------------------------------------------------

fn distance_to_hull(p: &[f64], ps: &PointSet, verts: &[usize]) -> f64 {
    let dim = p.len();
    // shifted vertex set: u_i = v_i - p, flat row-major
    let mut us = Vec::with_capacity(verts.len() * dim);
    for &v in verts {
        us.extend(ps.point(v).iter().zip(p).map(|(a, b)| a - b));
    }
    let u = |i: usize| -> &[f64] { &us[i * dim..(i + 1) * dim] };

    // start from the vertex closest to p
    let mut start = 0;
    let mut best = f64::INFINITY;
    for i in 0..verts.len() {
        let d = norm_sq(u(i));
        if d < best {
            best = d;
            start = i;
        }
    }
    let mut corral: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = u(start).to_vec();

    let eta = 1e-14 * (1.0 + best);

    for _ in 0..64 * (dim + 2) {
        let xx = norm_sq(&x);
        if xx == 0.0 {
            return 0.0;
        }
        // linear minimization step
        let mut min_i = 0;
        let mut min_v = f64::INFINITY;
        for i in 0..verts.len() {
            let v = dot(&x, u(i));
            if v < min_v {
                min_v = v;
                min_i = i;
            }
        }
        if xx - min_v <= eta {
            break;
        }
        if corral.contains(&min_i) {
            break; // no progress possible
        }
        corral.push(min_i);
        lambda.push(0.0);

        // minor cycle: pull x to the affine min-norm point of the corral,
        // dropping vertices whose weight would go negative
        loop {
            let m = corral.len();
            let cols: Vec<&[f64]> = corral.iter().map(|&i| u(i)).collect();
            let Some(alpha) = affine_min_norm(&cols) else {
                return xx.sqrt();
            };
            if alpha.iter().all(|&a| a > 1e-12) {
                lambda = alpha;
                break;
            }
            // step from lambda toward alpha until the first weight hits zero
            let mut theta = 1.0f64;
            for j in 0..m {
                if alpha[j] <= 1e-12 {
                    let denom = lambda[j] - alpha[j];
                    if denom > 0.0 {
                        theta = theta.min(lambda[j] / denom);
                    }
                }
            }
            for j in 0..m {
                lambda[j] = (1.0 - theta) * lambda[j] + theta * alpha[j];
            }
            let keep: Vec<usize> = (0..m).filter(|&j| lambda[j] > 1e-12).collect();
            if keep.len() == m {
                break;
            }
            corral = keep.iter().map(|&j| corral[j]).collect();
            lambda = keep.iter().map(|&j| lambda[j]).collect();
            let total: f64 = lambda.iter().sum();
            for l in lambda.iter_mut() {
                *l /= total;
            }
        }
        x = vec![0.0; dim];
        for (j, &i) in corral.iter().enumerate() {
            let ui = u(i);
            for d in 0..dim {
                x[d] += lambda[j] * ui[d];
            }
        }
    }
    norm_sq(&x).sqrt()
}

/// Minimizes `|sum_j alpha_j c_j|^2` subject to `sum alpha = 1` for a small
/// affinely independent column set. Returns `None` when the KKT system is
/// numerically singular.
fn affine_min_norm(cols: &[&[f64]]) -> Option<Vec<f64>> {
    let m = cols.len();
    let n = m + 1;
    // KKT system: [G 1; 1^T 0] [alpha; mu] = [0; 1]
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = dot(cols[i], cols[j]);
        }
        a[i][m] = 1.0;
        a[i][n] = 0.0;
    }
    for j in 0..m {
        a[m][j] = 1.0;
    }
    a[m][n] = 1.0;

    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut sol = vec![0.0f64; n];
    for r in (0..n).rev() {
        let mut acc = a[r][n];
        for c in r + 1..n {
            acc -= a[r][c] * sol[c];
        }
        sol[r] = acc / a[r][r];
    }
    sol.truncate(m);
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn square_plus_center() -> PointSet {
        PointSet::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn square_center_excluded() {
        let ps = square_plus_center();
        let h = convex_hull(&ps);
        assert_eq!(h.indices(), &[0, 1, 2, 3]);
    }

    #[test]
    fn single_point_hull() {
        let ps = PointSet::from_points(&[vec![3.0, -1.0]]).unwrap();
        assert_eq!(convex_hull(&ps).indices(), &[0]);
    }

    #[test]
    fn duplicates_keep_smallest_index() {
        let ps = PointSet::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 0.0], // duplicate of 0
            vec![0.0, 1.0],
            vec![1.0, 0.0], // duplicate of 1
        ])
        .unwrap();
        assert_eq!(convex_hull(&ps).indices(), &[0, 1, 3]);
    }

    #[test]
    fn collinear_yields_endpoints() {
        let ps = PointSet::from_points(&[
            vec![0.0, 0.0],
            vec![0.25, 0.25],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        ])
        .unwrap();
        assert_eq!(convex_hull(&ps).indices(), &[0, 2]);
    }

    #[test]
    fn hull_1d_min_max() {
        let ps =
            PointSet::from_points(&[vec![0.3], vec![-1.0], vec![0.9], vec![0.9], vec![0.0]])
                .unwrap();
        assert_eq!(convex_hull(&ps).indices(), &[1, 2]);
        let coincident = PointSet::from_points(&[vec![2.0], vec![2.0]]).unwrap();
        assert_eq!(convex_hull(&coincident).indices(), &[0]);
    }

    #[test]
    fn disc_points_all_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        while pts.len() < 100 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            if x * x + y * y <= 1.0 {
                pts.push(vec![x, y]);
            }
        }
        let ps = PointSet::from_points(&pts).unwrap();
        let h = convex_hull(&ps);
        for p in ps.iter() {
            assert!(point_in_hull(p, &ps, &h, 1e-9).unwrap());
        }
    }

    #[test]
    fn point_in_hull_square_cases() {
        let ps = square_plus_center();
        let h = convex_hull(&ps);
        assert!(point_in_hull(&[0.5, 0.5], &ps, &h, 0.0).unwrap());
        assert!(!point_in_hull(&[2.0, 0.0], &ps, &h, 0.0).unwrap());
        assert!(point_in_hull(&[1.0 + 1e-12, 0.5], &ps, &h, 1e-9).unwrap());
    }

    #[test]
    fn point_in_hull_dimension_mismatch() {
        let ps = square_plus_center();
        let h = convex_hull(&ps);
        assert!(point_in_hull(&[0.5], &ps, &h, 0.0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            PointSet::from_points(&[vec![0.0, f64::NAN]]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            PointSet::from_points(&[vec![0.0, 1.0], vec![2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cube_corners_exact() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push(vec![x, y, z]);
                }
            }
        }
        pts.push(vec![0.5, 0.5, 0.5]);
        pts.push(vec![0.5, 0.5, 0.0]); // face-interior point: not a vertex
        let ps = PointSet::from_points(&pts).unwrap();
        let h = convex_hull(&ps);
        assert_eq!(h.indices(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn ball_3d_contains_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        while pts.len() < 200 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            if norm_sq(&v) <= 1.0 {
                pts.push(v);
            }
        }
        let ps = PointSet::from_points(&pts).unwrap();
        let h = convex_hull(&ps);
        assert!(h.len() < ps.len());
        for p in ps.iter() {
            assert!(point_in_hull(p, &ps, &h, 1e-9).unwrap());
        }
        // distinctly outside
        assert!(!point_in_hull(&[1.5, 0.0, 0.0], &ps, &h, 1e-9).unwrap());
    }

    #[test]
    fn coplanar_3d_reduces_to_planar_hull() {
        let ps = PointSet::from_points(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![0.5, 0.5, 1.0],
        ])
        .unwrap();
        let h = convex_hull(&ps);
        assert_eq!(h.indices(), &[0, 1, 2, 3]);
        assert!(point_in_hull(&[0.5, 0.5, 1.0], &ps, &h, 1e-9).unwrap());
        assert!(!point_in_hull(&[0.5, 0.5, 1.1], &ps, &h, 1e-9).unwrap());
    }

    #[test]
    fn idempotent_on_own_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2usize, 3] {
            let pts: Vec<Vec<f64>> = (0..120)
                .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let ps = PointSet::from_points(&pts).unwrap();
            let h = convex_hull(&ps);
            let sub: Vec<Vec<f64>> = h.indices().iter().map(|&i| pts[i].clone()).collect();
            let ps2 = PointSet::from_points(&sub).unwrap();
            let h2 = convex_hull(&ps2);
            assert_eq!(h2.len(), h.len(), "dim {dim}");
        }
    }

    #[test]
    fn maximizer_on_hull_matches_full_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [1usize, 2, 3] {
            for _ in 0..20 {
                let n = rng.random_range(4..80);
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
                    .collect();
                let ps = PointSet::from_points(&pts).unwrap();
                let h = convex_hull(&ps);
                let theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let full = ps
                    .iter()
                    .map(|p| dot(&theta, p))
                    .fold(f64::NEG_INFINITY, f64::max);
                let on_hull = h
                    .indices()
                    .iter()
                    .map(|&i| dot(&theta, ps.point(i)))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    (full - on_hull).abs() <= 1e-12 * (1.0 + full.abs()),
                    "dim {dim}: {full} vs {on_hull}"
                );
            }
        }
    }

    #[test]
    fn permutation_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let ps = PointSet::from_points(&pts).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let ps_p = PointSet::from_points(&permuted).unwrap();

        let mut orig: Vec<Vec<f64>> = convex_hull(&ps)
            .indices()
            .iter()
            .map(|&i| pts[i].clone())
            .collect();
        let mut perm_sel: Vec<Vec<f64>> = convex_hull(&ps_p)
            .indices()
            .iter()
            .map(|&i| permuted[i].clone())
            .collect();
        let key = |v: &Vec<f64>| (v[0].to_bits(), v[1].to_bits());
        orig.sort_by_key(key);
        perm_sel.sort_by_key(key);
        assert_eq!(orig, perm_sel);
    }

    #[test]
    fn high_dimensions_return_full_superset() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ps = PointSet::from_points(&pts).unwrap();
        let h = convex_hull(&ps);
        assert_eq!(h.indices(), (0..30).collect::<Vec<_>>());
        // the min-norm-point containment still works above 3 dimensions
        let mut center = vec![0.0; 4];
        for p in ps.iter() {
            for d in 0..4 {
                center[d] += p[d] / 30.0;
            }
        }
        assert!(point_in_hull(&center, &ps, &h, 1e-9).unwrap());
        assert!(!point_in_hull(&[5.0, 5.0, 5.0, 5.0], &ps, &h, 1e-9).unwrap());
    }

    #[test]
    fn diameter_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
            .collect();
        let ps = PointSet::from_points(&pts).unwrap();
        let mut brute = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                brute = brute.max(dist(&pts[i], &pts[j]));
            }
        }
        assert!((ps.diameter() - brute).abs() <= 1e-12 * (1.0 + brute));
    }
}
