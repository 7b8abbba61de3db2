//! Run configuration files: TOML with `[model]`, `[init]`, `[solver]` and
//! `[output]` sections, plus command-specific `[sweep]`, `[bench]` and
//! `[dataset]` sections. Unknown keys are hard errors so that archived
//! configs keep meaning exactly what they meant.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use polsim_core::dynamics::{FriendSearch, RunConfig, Sampling};
use polsim_core::init::{InitKind, InitSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ModelSection>,
    pub init: Option<InitSection>,
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
    pub bench: Option<BenchSection>,
    pub dataset: Option<DatasetSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Exponent of the pairwise distance function `g(w) = |w|^p`.
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitKind,
    pub n_agents: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_components")]
    pub n_components: usize,
    #[serde(default = "default_component_std")]
    pub component_std: f64,
    #[serde(default = "default_halfwidth")]
    pub mean_box_halfwidth: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Defaults to the solver seed when omitted.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub sample_size: usize,
    pub epochs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_friend_search")]
    pub friend_search: FriendSearch,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// Cluster merge radius for the attractor summary; defaults to
    /// `1e-3 x initial diameter`.
    pub merge_radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Agent counts to sweep; defaults to the `[init]` count.
    pub n_values: Option<Vec<usize>>,
    pub dt_values: Vec<f64>,
    pub s_values: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub n_values: Vec<usize>,
    pub s_values: Vec<usize>,
    #[serde(default = "default_bench_epochs")]
    pub epochs: usize,
}

/// Dataset export protocol: fresh ball inits evolved with the deterministic
/// solver; inputs and labels are the flattened initial and final positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub count: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_pair_agents")]
    pub n_agents: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_pair_epochs")]
    pub epochs: usize,
    #[serde(default = "default_pair_dt")]
    pub dt: f64,
    #[serde(default = "default_pair_p")]
    pub p: f64,
    #[serde(default)]
    pub emit_histograms: bool,
    #[serde(default = "default_grid_sizes")]
    pub grid_sizes: Vec<usize>,
}

fn default_dim() -> usize {
    2
}
fn default_components() -> usize {
    1
}
fn default_component_std() -> f64 {
    polsim_core::init::DEFAULT_COMPONENT_STD
}
fn default_halfwidth() -> f64 {
    polsim_core::init::DEFAULT_MEAN_BOX_HALFWIDTH
}
fn default_radius() -> f64 {
    polsim_core::init::DEFAULT_BALL_RADIUS
}
fn default_seed() -> u64 {
    42
}
fn default_friend_search() -> FriendSearch {
    FriendSearch::Hull
}
fn default_sampling() -> Sampling {
    Sampling::SharedBatch
}
fn default_convergence_tol() -> f64 {
    1e-6
}
fn default_bench_epochs() -> usize {
    150
}
fn default_test_fraction() -> f64 {
    0.1
}
fn default_pair_agents() -> usize {
    100
}
fn default_pair_epochs() -> usize {
    200
}
fn default_pair_dt() -> f64 {
    0.05
}
fn default_pair_p() -> f64 {
    2.0
}
fn default_grid_sizes() -> Vec<usize> {
    vec![64, 32]
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ConfigFile = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<&ModelSection> {
        self.model
            .as_ref()
            .context("config is missing the [model] section")
    }

    pub fn init(&self) -> Result<&InitSection> {
        self.init
            .as_ref()
            .context("config is missing the [init] section")
    }

    pub fn solver(&self) -> Result<&SolverSection> {
        self.solver
            .as_ref()
            .context("config is missing the [solver] section")
    }

    /// Resolves the `[model]`/`[init]`/`[solver]` sections into validated
    /// core types. `seed_override` (the `--seed` flag) replaces the solver
    /// seed, and the init seed when the file leaves it implicit.
    pub fn resolve_run(&self, seed_override: Option<u64>) -> Result<(RunConfig, InitSpec)> {
        let model = self.model()?;
        let init = self.init()?;
        let solver = self.solver()?;
        let solver_seed = seed_override.unwrap_or(solver.seed);
        let init_seed = match (seed_override, init.seed) {
            (Some(s), _) => s,
            (None, Some(s)) => s,
            (None, None) => solver.seed,
        };
        let spec = InitSpec {
            kind: init.kind,
            n_agents: init.n_agents,
            dim: init.dim,
            n_components: init.n_components,
            component_std: init.component_std,
            mean_box_halfwidth: init.mean_box_halfwidth,
            radius: init.radius,
            seed: init_seed,
        };
        spec.validate()?;
        let run = RunConfig {
            n_agents: init.n_agents,
            dim: init.dim,
            exponent: model.p,
            dt: solver.dt,
            sample_size: solver.sample_size,
            epochs: solver.epochs,
            seed: solver_seed,
            friend_search: solver.friend_search,
            sampling: solver.sampling,
            convergence_tol: solver.convergence_tol,
        };
        run.validate()?;
        Ok((run, spec))
    }

    pub fn sweep(&self) -> Result<&SweepSection> {
        let sweep = self
            .sweep
            .as_ref()
            .context("config is missing the [sweep] section")?;
        if sweep.dt_values.is_empty() || sweep.s_values.is_empty() || sweep.seeds.is_empty() {
            bail!("[sweep] needs nonempty dt_values, s_values and seeds");
        }
        Ok(sweep)
    }

    pub fn bench(&self) -> Result<&BenchSection> {
        let bench = self
            .bench
            .as_ref()
            .context("config is missing the [bench] section")?;
        if bench.n_values.is_empty() || bench.s_values.is_empty() {
            bail!("[bench] needs nonempty n_values and s_values");
        }
        Ok(bench)
    }

    pub fn dataset(&self) -> Result<&DatasetSection> {
        let ds = self
            .dataset
            .as_ref()
            .context("config is missing the [dataset] section")?;
        if ds.count == 0 {
            bail!("[dataset] count must be >= 1");
        }
        if !(0.0..1.0).contains(&ds.test_fraction) {
            bail!("[dataset] test_fraction must lie in [0, 1)");
        }
        Ok(ds)
    }
}
