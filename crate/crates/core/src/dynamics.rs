//! Time stepping: the deterministic (full-information) and stochastic
//! (subsampled) epoch steppers, run drivers, and the per-epoch communication
//! record.
//!
//! One epoch computes every agent's friend against the frozen time-`t`
//! positions, then applies the attraction update synchronously. Randomness is
//! drawn from counter-based substreams keyed by `(seed, epoch, agent)`, so
//! trajectories are bitwise reproducible whatever the thread schedule.

use rand::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::convex_hull;
use crate::model::{polarization, select_friend, theta_exact, theta_sampled, MetricFamily};
use crate::model::Ensemble;
use crate::seeding::substream;
use crate::vecmath::dist;
use crate::{Error, Result};

const TAG_EPOCH: u64 = 1;
const TAG_AGENT_SAMPLE: u64 = 2;

/// How friend candidates are enumerated each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FriendSearch {
    /// Restrict to convex-hull vertices (exact for D <= 3; falls back to a
    /// full scan above that).
    Hull,
    /// Scan all agents.
    Full,
}

/// How the stochastic stepper draws the sample behind `theta_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One shuffle per epoch, split into consecutive batches of `S`; each
    /// batch doubles as the sample for its own members (cost O(N S) per
    /// epoch).
    SharedBatch,
    /// Every agent draws its own `S`-subset without replacement.
    PerAgent,
}

/// All solver knobs for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_agents: usize,
    pub dim: usize,
    pub exponent: f64,
    pub dt: f64,
    pub sample_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub friend_search: FriendSearch,
    pub sampling: Sampling,
    /// Convergence threshold in units of the initial diameter; 0 disables
    /// convergence tracking.
    pub convergence_tol: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter(
                "n_agents and dim must be >= 1".into(),
            ));
        }
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must lie in (0, 1), got {}",
                self.dt
            )));
        }
        if self.sample_size == 0 || self.sample_size > self.n_agents {
            return Err(Error::InvalidParameter(format!(
                "sample_size must lie in [1, n_agents], got {}",
                self.sample_size
            )));
        }
        if !self.convergence_tol.is_finite() || self.convergence_tol < 0.0 {
            return Err(Error::InvalidParameter(
                "convergence_tol must be finite and nonnegative".into(),
            ));
        }
        MetricFamily::new(self.exponent).map(|_| ())
    }

    pub fn metric(&self) -> Result<MetricFamily> {
        MetricFamily::new(self.exponent)
    }

    fn check_ensemble(&self, e: &Ensemble) -> Result<()> {
        if e.len() != self.n_agents {
            return Err(Error::InvalidParameter(format!(
                "config expects {} agents, ensemble has {}",
                self.n_agents,
                e.len()
            )));
        }
        if e.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: e.dim(),
            });
        }
        Ok(())
    }
}

/// The directed friend map of one epoch: `friends[k] = l(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationRecord {
    pub epoch: usize,
    pub friends: Vec<usize>,
}

/// Polarization values along a run, one per epoch plus the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub values: Vec<f64>,
}

impl LossTrace {
    /// True when every step loses at most `rel * (1 + L)` of the running
    /// value (the deterministic solver with convex `g` must satisfy this).
    pub fn nondecreasing_within(&self, rel: f64) -> bool {
        self.values
            .windows(2)
            .all(|w| w[1] >= w[0] - rel * (1.0 + w[0]))
    }

    /// Relative spread (max-min over max) of the last `fraction` of the
    /// trace; small values indicate the documented apparent stabilization.
    pub fn tail_relative_variation(&self, fraction: f64) -> f64 {
        let n = self.values.len();
        let tail = ((n as f64 * fraction).ceil() as usize).clamp(2.min(n), n);
        let slice = &self.values[n - tail..];
        let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
        if max <= 0.0 {
            0.0
        } else {
            (max - min) / max
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: Ensemble,
    pub trace: LossTrace,
    pub records: Vec<CommunicationRecord>,
    /// First epoch (0-based step index) at which the convergence criterion
    /// held, if convergence tracking was enabled and reached.
    pub converged_at: Option<usize>,
}

fn candidate_indices(e: &Ensemble, mode: FriendSearch) -> Vec<usize> {
    match mode {
        FriendSearch::Hull => convex_hull(e.positions()).indices().to_vec(),
        FriendSearch::Full => (0..e.len()).collect(),
    }
}

fn epoch_index(e: &Ensemble, dt: f64) -> usize {
    (e.time() / dt).round() as usize
}

/// Applies the synchronous attraction update. Agents whose friend coincides
/// with their own position (including self-friends) stay bitwise unchanged,
/// so converged configurations are exact fixed points.
fn apply_update(e: &Ensemble, friends: &[usize], dt: f64) -> Ensemble {
    let dim = e.dim();
    let mut next = e.clone();
    {
        let data = next.positions_mut().as_flat_mut();
        for (k, &f) in friends.iter().enumerate() {
            if f == k || e.point(f) == e.point(k) {
                continue;
            }
            let zk = e.point(k);
            let zf = e.point(f);
            for d in 0..dim {
                data[k * dim + d] = (1.0 - dt) * zk[d] + dt * zf[d];
            }
        }
    }
    next.advance_time(dt);
    next
}

/// One deterministic epoch: friends via the exact steering vector, then the
/// synchronous update.
pub fn step_deterministic(
    e: &Ensemble,
    cfg: &RunConfig,
    m: &MetricFamily,
) -> Result<(Ensemble, CommunicationRecord)> {
    cfg.validate()?;
    cfg.check_ensemble(e)?;
    let candidates = candidate_indices(e, cfg.friend_search);
    let friends: Vec<usize> = (0..e.len())
        .into_par_iter()
        .with_min_len(16)
        .map(|k| {
            let th = theta_exact(e, k, m).expect("index in range");
            select_friend(e, k, &th, &candidates).expect("valid candidates")
        })
        .collect();
    let record = CommunicationRecord {
        epoch: epoch_index(e, cfg.dt),
        friends: friends.clone(),
    };
    Ok((apply_update(e, &friends, cfg.dt), record))
}

/// One stochastic epoch driven by `rng`: shuffle, batch, estimate `theta_S`,
/// select over the epoch-frozen candidate set, update synchronously.
pub fn step_stochastic(
    e: &Ensemble,
    cfg: &RunConfig,
    m: &MetricFamily,
    rng: &mut impl Rng,
) -> Result<(Ensemble, CommunicationRecord)> {
    cfg.validate()?;
    cfg.check_ensemble(e)?;
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.shuffle(rng);
    let agent_sample_key: u64 = rng.next_u64();

    // Batches are sorted so that theta accumulation runs in index order; with
    // S = N the single batch then reproduces the deterministic sum bitwise.
    let partition: Vec<Vec<usize>> = order
        .chunks(cfg.sample_size)
        .map(|c| {
            let mut b = c.to_vec();
            b.sort_unstable();
            b
        })
        .collect();

    match cfg.sampling {
        Sampling::SharedBatch => step_with_partition(e, cfg, m, &partition),
        Sampling::PerAgent => {
            let candidates = candidate_indices(e, cfg.friend_search);
            let friends: Vec<usize> = (0..e.len())
                .into_par_iter()
                .with_min_len(16)
                .map(|k| {
                    let mut sub = substream(agent_sample_key, &[TAG_AGENT_SAMPLE, k as u64]);
                    let mut sample =
                        rand::seq::index::sample(&mut sub, e.len(), cfg.sample_size).into_vec();
                    sample.sort_unstable();
                    let th = theta_sampled(e, k, &sample, m).expect("valid sample");
                    select_friend(e, k, &th, &candidates).expect("valid candidates")
                })
                .collect();
            let record = CommunicationRecord {
                epoch: epoch_index(e, cfg.dt),
                friends: friends.clone(),
            };
            Ok((apply_update(e, &friends, cfg.dt), record))
        }
    }
}

/// Shared-batch epoch over an explicit batch partition: every agent in a
/// batch uses that batch as its sample `A_S`. The partition must list each
/// agent exactly once. Friend selection reads only the frozen time-`t`
/// positions, so the batch processing order cannot affect the result.
pub fn step_with_partition(
    e: &Ensemble,
    cfg: &RunConfig,
    m: &MetricFamily,
    partition: &[Vec<usize>],
) -> Result<(Ensemble, CommunicationRecord)> {
    cfg.check_ensemble(e)?;
    let mut seen = vec![false; e.len()];
    for batch in partition {
        if batch.is_empty() {
            return Err(Error::EmptySample);
        }
        for &k in batch {
            if k >= e.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: e.len(),
                });
            }
            if seen[k] {
                return Err(Error::InvalidParameter(format!(
                    "agent {k} appears in more than one batch"
                )));
            }
            seen[k] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter(
            "partition does not cover all agents".into(),
        ));
    }

    let candidates = candidate_indices(e, cfg.friend_search);
    let per_batch: Vec<Vec<(usize, usize)>> = partition
        .par_iter()
        .map(|batch| {
            batch
                .iter()
                .map(|&k| {
                    let th = theta_sampled(e, k, batch, m).expect("valid sample");
                    let friend =
                        select_friend(e, k, &th, &candidates).expect("valid candidates");
                    (k, friend)
                })
                .collect()
        })
        .collect();
    let mut friends = vec![0usize; e.len()];
    for pairs in &per_batch {
        for &(k, f) in pairs {
            friends[k] = f;
        }
    }
    let record = CommunicationRecord {
        epoch: epoch_index(e, cfg.dt),
        friends: friends.clone(),
    };
    Ok((apply_update(e, &friends, cfg.dt), record))
}

/// True when every agent sits within `tol` of its recorded friend.
pub fn detect_convergence(e: &Ensemble, rec: &CommunicationRecord, tol: f64) -> bool {
    assert_eq!(rec.friends.len(), e.len(), "record does not match ensemble");
    rec.friends
        .iter()
        .enumerate()
        .all(|(k, &f)| dist(e.point(k), e.point(f)) <= tol)
}

fn run_impl(cfg: &RunConfig, init: &Ensemble, stop_on_convergence: bool) -> Result<RunResult> {
    cfg.validate()?;
    cfg.check_ensemble(init)?;
    let m = cfg.metric()?;
    let deterministic = cfg.sample_size == cfg.n_agents;
    let conv_tol = if cfg.convergence_tol > 0.0 {
        Some(cfg.convergence_tol * init.positions().diameter())
    } else {
        None
    };

    let mut state = init.clone();
    let mut values = Vec::with_capacity(cfg.epochs + 1);
    values.push(polarization(&state, &m));
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut converged_at = None;

    for epoch in 0..cfg.epochs {
        let (next, mut rec) = if deterministic {
            step_deterministic(&state, cfg, &m)?
        } else {
            let mut rng = substream(cfg.seed, &[TAG_EPOCH, epoch as u64]);
            step_stochastic(&state, cfg, &m, &mut rng)?
        };
        rec.epoch = epoch;
        state = next;
        values.push(polarization(&state, &m));
        if converged_at.is_none() {
            if let Some(tol) = conv_tol {
                if detect_convergence(&state, &rec, tol) {
                    converged_at = Some(epoch);
                }
            }
        }
        records.push(rec);
        if stop_on_convergence && converged_at.is_some() {
            break;
        }
    }

    Ok(RunResult {
        final_state: state,
        trace: LossTrace { values },
        records,
        converged_at,
    })
}

/// Runs the full epoch budget (stochastic when `S < N`, deterministic when
/// `S = N`). Records the loss before the first step and after every step.
pub fn run(cfg: &RunConfig, init: &Ensemble) -> Result<RunResult> {
    run_impl(cfg, init, false)
}

/// Like [`run`] but stops at the first epoch whose friend map is within the
/// convergence tolerance; the epoch budget still bounds the run.
pub fn run_to_convergence(cfg: &RunConfig, init: &Ensemble) -> Result<RunResult> {
    run_impl(cfg, init, true)
}
