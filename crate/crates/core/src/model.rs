//! The mathematical core: the pairwise metric family `g(w) = |w|^p`, the
//! polarization functionals, the steering vector `theta` (exact and
//! subsampled), and greedy friend selection with smallest-index tie-breaking.

use serde::{Deserialize, Serialize};

use crate::geometry::PointSet;
use crate::vecmath::norm_sq;
use crate::{Error, Result};

/// Below this separation the gradient of `|w|^p` is taken to be zero: a valid
/// subgradient at the kink for p = 1, the true limit for p > 1, and a guard
/// against overflow of `|w|^(p-2)` for p < 2. Coincident agents exert no pull.
pub const GRAD_CUTOFF: f64 = 1e-12;

/// Sequential-summation block size; larger reductions combine blocks
/// pairwise so rounding error stays bounded and the summation order is a
/// documented part of the numeric contract.
const PAIRWISE_LEAF: usize = 4096;

#[derive(Clone, Copy, Debug)]
enum PowKind {
    Int(i32),
    Frac(f64),
}

#[inline]
fn pow_by(s: f64, kind: PowKind) -> f64 {
    match kind {
        PowKind::Int(e) => s.powi(e),
        PowKind::Frac(e) => s.powf(e),
    }
}

fn classify(e: f64) -> PowKind {
    if e == e.trunc() && e.abs() <= 32.0 {
        PowKind::Int(e as i32)
    } else {
        PowKind::Frac(e)
    }
}

/// The radial distance family `g(w) = |w|^p` with exponent `p > 0`,
/// together with its gradient `p |w|^(p-2) w`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MetricFamily {
    p: f64,
    value_pow: PowKind, // |w|^p      = (|w|^2)^(p/2)
    grad_pow: PowKind,  // |w|^(p-2)  = (|w|^2)^((p-2)/2)
}

impl MetricFamily {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "metric exponent must be a positive finite number, got {p}"
            )));
        }
        Ok(MetricFamily {
            p,
            value_pow: classify(p * 0.5),
            grad_pow: classify((p - 2.0) * 0.5),
        })
    }

    #[inline]
    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `g(w) = |w|^p`.
    #[inline]
    pub fn value(&self, w: &[f64]) -> f64 {
        self.value_from_norm_sq(norm_sq(w))
    }

    #[inline]
    pub(crate) fn value_from_norm_sq(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            s
        } else if self.p == 1.0 {
            s.sqrt()
        } else {
            pow_by(s, self.value_pow)
        }
    }

    /// Scalar factor `c` with `grad g(w) = c * w`, given `s = |w|^2`.
    #[inline]
    pub(crate) fn grad_coeff(&self, s: f64) -> f64 {
        if s <= GRAD_CUTOFF * GRAD_CUTOFF {
            0.0
        } else if self.p == 2.0 {
            2.0
        } else if self.p == 1.0 {
            1.0 / s.sqrt()
        } else {
            self.p * pow_by(s, self.grad_pow)
        }
    }
}

impl TryFrom<f64> for MetricFamily {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        MetricFamily::new(p)
    }
}

impl From<MetricFamily> for f64 {
    fn from(m: MetricFamily) -> f64 {
        m.p
    }
}

/// Gradient of `g` at `w` (zero vector within [`GRAD_CUTOFF`] of the origin).
pub fn grad_g(w: &[f64], m: &MetricFamily) -> Result<Vec<f64>> {
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    let c = m.grad_coeff(norm_sq(w));
    Ok(w.iter().map(|v| c * v).collect())
}

/// The full agent state: `N` positions in `R^D` plus the simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: PointSet,
    time: f64,
}

impl Ensemble {
    pub fn new(positions: PointSet) -> Self {
        Ensemble {
            positions,
            time: 0.0,
        }
    }

    pub fn with_time(positions: PointSet, time: f64) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time must be finite and nonnegative, got {time}"
            )));
        }
        Ok(Ensemble { positions, time })
    }

    #[inline]
    pub fn positions(&self) -> &PointSet {
        &self.positions
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.positions.dim()
    }

    #[inline]
    pub fn point(&self, k: usize) -> &[f64] {
        self.positions.point(k)
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn positions_mut(&mut self) -> &mut PointSet {
        &mut self.positions
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        Ok(())
    }
}

/// A steering direction for one agent: the (sub)sampled average gradient of
/// `g` over pairwise differences, with the sample size it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub vector: Vec<f64>,
    pub sample_size: usize,
}

/// Sums `f(i)`-style vector terms for `i in 0..count` with blockwise pairwise
/// combination (sequential within [`PAIRWISE_LEAF`]-sized blocks, in index
/// order).
fn pairwise_accumulate<F>(count: usize, dim: usize, f: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]),
{
    fn rec<F>(lo: usize, hi: usize, dim: usize, f: &F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]),
    {
        if hi - lo <= PAIRWISE_LEAF {
            let mut acc = vec![0.0; dim];
            for i in lo..hi {
                f(i, &mut acc);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            let mut left = rec(lo, mid, dim, f);
            let right = rec(mid, hi, dim, f);
            crate::vecmath::add_assign(&mut left, &right);
            left
        }
    }
    rec(0, count, dim, f)
}

/// Pairwise sum of a scalar slice (same blocking as the vector variant).
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[inline]
fn add_grad_term(zk: &[f64], zm: &[f64], m: &MetricFamily, acc: &mut [f64]) {
    let mut s = 0.0;
    for d in 0..zk.len() {
        let w = zk[d] - zm[d];
        s += w * w;
    }
    let c = m.grad_coeff(s);
    if c != 0.0 {
        for d in 0..zk.len() {
            acc[d] += c * (zk[d] - zm[d]);
        }
    }
}

/// Sum of `grad g(z_k - z_m)` over `m` drawn from `sample` (or over all
/// agents when `sample` is `None`), in listed/index order. The planar case
/// dominates real workloads, so it gets a dedicated loop.
fn grad_sum(e: &Ensemble, k: usize, sample: Option<&[usize]>, m: &MetricFamily) -> Vec<f64> {
    let count = sample.map_or(e.len(), |s| s.len());
    let zk = e.point(k);
    if e.dim() == 2 {
        let flat = e.positions().as_flat();
        let (zx, zy) = (zk[0], zk[1]);
        return pairwise_accumulate(count, 2, &|i, acc: &mut [f64]| {
            let mi = sample.map_or(i, |s| s[i]);
            let wx = zx - flat[2 * mi];
            let wy = zy - flat[2 * mi + 1];
            let c = m.grad_coeff(wx * wx + wy * wy);
            acc[0] += c * wx;
            acc[1] += c * wy;
        });
    }
    pairwise_accumulate(count, e.dim(), &|i, acc: &mut [f64]| {
        let mi = sample.map_or(i, |s| s[i]);
        add_grad_term(zk, e.point(mi), m, acc);
    })
}

/// Global polarization `L = (1/N^2) sum_{k,l} g(z_k - z_l)`.
///
/// For p = 2 the double sum collapses algebraically to twice the mean squared
/// deviation from the mass center, which keeps per-epoch loss traces O(N)
/// instead of O(N^2); the centered form is used so the value is stable under
/// translation.
pub fn polarization(e: &Ensemble, m: &MetricFamily) -> f64 {
    let n = e.len();
    if m.exponent() == 2.0 {
        let center = mass_center(e);
        let dev = pairwise_accumulate(n, 1, &|k, acc: &mut [f64]| {
            acc[0] += crate::vecmath::dist_sq(e.point(k), &center);
        });
        return 2.0 * dev[0] / n as f64;
    }
    // one row per agent over the pairs above the diagonal, doubled
    let rows: Vec<f64> = (0..n)
        .map(|k| {
            let zk = e.point(k);
            let mut acc = 0.0;
            for l in k + 1..n {
                acc += m.value_from_norm_sq(crate::vecmath::dist_sq(zk, e.point(l)));
            }
            acc
        })
        .collect();
    2.0 * pairwise_sum(&rows) / (n * n) as f64
}

/// Per-agent polarization factor `L^k = (1/N) sum_l g(z_k - z_l)`.
pub fn agent_polarization(e: &Ensemble, k: usize, m: &MetricFamily) -> Result<f64> {
    e.check_index(k)?;
    let zk = e.point(k);
    let sums = pairwise_accumulate(e.len(), 1, &|l, acc: &mut [f64]| {
        acc[0] += m.value_from_norm_sq(crate::vecmath::dist_sq(zk, e.point(l)));
    });
    Ok(sums[0] / e.len() as f64)
}

/// Exact steering vector `theta[k] = (1/N) sum_m grad g(z_k - z_m)`.
pub fn theta_exact(e: &Ensemble, k: usize, m: &MetricFamily) -> Result<Theta> {
    e.check_index(k)?;
    let mut v = grad_sum(e, k, None, m);
    let n = e.len() as f64;
    for x in v.iter_mut() {
        *x /= n;
    }
    debug_assert!(v.iter().all(|x| x.is_finite()));
    Ok(Theta {
        vector: v,
        sample_size: e.len(),
    })
}

/// Subsampled steering vector over an explicit index sample `A_S`:
/// `theta_S[k] = (1/S) sum_{m in A_S} grad g(z_k - z_m)`.
///
/// Terms are accumulated in the order the sample lists them; passing the full
/// index set `0..N` reproduces [`theta_exact`] bitwise.
pub fn theta_sampled(
    e: &Ensemble,
    k: usize,
    sample: &[usize],
    m: &MetricFamily,
) -> Result<Theta> {
    e.check_index(k)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&bad) = sample.iter().find(|&&i| i >= e.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: e.len(),
        });
    }
    let mut v = grad_sum(e, k, Some(sample), m);
    let s = sample.len() as f64;
    for x in v.iter_mut() {
        *x /= s;
    }
    debug_assert!(v.iter().all(|x| x.is_finite()));
    Ok(Theta {
        vector: v,
        sample_size: sample.len(),
    })
}

/// Greedy friend choice `l(k) = arg*max_j theta . (z_j - z_k)` over the given
/// candidate indices.
///
/// The agent itself always competes with objective exactly zero, so no friend
/// with a strictly negative first-order gain is ever selected. Ties are
/// compared with exact floating-point equality and resolved toward the
/// smallest index.
pub fn select_friend(e: &Ensemble, k: usize, theta: &Theta, candidates: &[usize]) -> Result<usize> {
    e.check_index(k)?;
    if theta.vector.len() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: theta.vector.len(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::EmptySample);
    }
    let zk = e.point(k);
    let th = &theta.vector;
    let mut best_idx = k;
    let mut best_obj = 0.0f64;
    for &j in candidates {
        if j >= e.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: e.len(),
            });
        }
        let zj = e.point(j);
        let mut obj = 0.0;
        for d in 0..zk.len() {
            obj += th[d] * (zj[d] - zk[d]);
        }
        if obj > best_obj || (obj == best_obj && j < best_idx) {
            best_obj = obj;
            best_idx = j;
        }
    }
    Ok(best_idx)
}

/// Arithmetic mean of the agent positions.
pub fn mass_center(e: &Ensemble) -> Vec<f64> {
    let mut c = pairwise_accumulate(e.len(), e.dim(), &|k, acc: &mut [f64]| {
        let p = e.point(k);
        for d in 0..p.len() {
            acc[d] += p[d];
        }
    });
    let n = e.len() as f64;
    for x in c.iter_mut() {
        *x /= n;
    }
    c
}
