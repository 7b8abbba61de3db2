//! Command implementations: single runs, the accuracy sweep, the wall-time
//! benchmark and the dataset export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

use polsim_core::analysis::{attractor_mse, extract_attractor, grid_histogram, Bounds2};
use polsim_core::dynamics::{run, RunConfig, RunResult};
use polsim_core::geometry::convex_hull;
use polsim_core::init::{InitKind, InitSpec};
use polsim_core::model::Ensemble;
use polsim_core::seeding::derive_seed;

use crate::config::{ConfigFile, DatasetSection};
use crate::output::{
    ensure_dir, write_attractor, write_loss, write_meta, write_positions, write_table, RunMeta,
    ATTRACTOR_FILE, LOSS_FILE, META_FILE, POSITIONS_FILE,
};

const TAG_DATASET_PAIR: u64 = 11;

fn pkg_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Outcome of `simulate`, kept around for tests and chained tooling.
pub struct SimulateSummary {
    pub out_dir: PathBuf,
    pub result: RunResult,
    pub merge_radius: f64,
}

/// Runs one configured simulation and writes the run directory.
pub fn simulate(
    cfg: &ConfigFile,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<SimulateSummary> {
    let (run_cfg, init_spec) = cfg.resolve_run(seed_override)?;
    let init = init_spec.generate()?;
    let start = Instant::now();
    let result = run(&run_cfg, &init)?;
    let wall = start.elapsed().as_secs_f64();

    let merge_radius = cfg
        .output
        .merge_radius
        .unwrap_or_else(|| 1e-3 * init.positions().diameter())
        .max(f64::MIN_POSITIVE);
    let summary = extract_attractor(&result.final_state, merge_radius)?;

    ensure_dir(out_dir)?;
    write_positions(&out_dir.join(POSITIONS_FILE), result.final_state.positions())?;
    write_loss(&out_dir.join(LOSS_FILE), &result.trace)?;
    write_attractor(&out_dir.join(ATTRACTOR_FILE), &summary)?;
    write_meta(
        &out_dir.join(META_FILE),
        &RunMeta {
            run_config: run_cfg.clone(),
            init_spec: init_spec.clone(),
            merge_radius,
            converged_at: result.converged_at,
            wall_seconds: wall,
            threads: rayon::current_num_threads(),
            version: pkg_version(),
        },
    )?;
    if !quiet {
        let l = &result.trace.values;
        eprintln!(
            "run: N={} S={} epochs={} | L {:.6} -> {:.6} | clusters {} | {:.2}s -> {}",
            run_cfg.n_agents,
            run_cfg.sample_size,
            run_cfg.epochs,
            l.first().copied().unwrap_or(0.0),
            l.last().copied().unwrap_or(0.0),
            summary.n_clusters(),
            wall,
            out_dir.display()
        );
    }
    Ok(SimulateSummary {
        out_dir: out_dir.to_path_buf(),
        result,
        merge_radius,
    })
}

/// One sweep measurement: reconstruction error of a subsampled run against
/// the `S = N` ground truth from the same initial ensemble.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub dt: f64,
    pub s: usize,
    pub seed: u64,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `(n, dt) -> per-S medians`, in the order of the configured S values.
    pub medians: Vec<(usize, f64, Vec<f64>)>,
    pub s_values: Vec<usize>,
}

impl SweepReport {
    pub fn median_for(&self, n: usize, dt: f64, s: usize) -> Option<f64> {
        let si = self.s_values.iter().position(|&v| v == s)?;
        self.medians
            .iter()
            .find(|(rn, rdt, _)| *rn == n && *rdt == dt)
            .map(|(_, _, m)| m[si])
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite MSE"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Accuracy sweep over `(N, dt, S, seed)`: per `(N, dt)` a ground-truth run
/// at `S = N`, then one stochastic run per `(S, seed)` from the identical
/// initial ensemble.
pub fn sweep_accuracy(
    cfg: &ConfigFile,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<SweepReport> {
    let (base_run, base_init) = cfg.resolve_run(seed_override)?;
    let sweep = cfg.sweep()?;
    let n_values = sweep
        .n_values
        .clone()
        .unwrap_or_else(|| vec![base_init.n_agents]);

    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &n in &n_values {
        for &dt in &sweep.dt_values {
            let mut init_spec = base_init.clone();
            init_spec.n_agents = n;
            let init = init_spec.generate()?;

            let truth_cfg = RunConfig {
                n_agents: n,
                dt,
                sample_size: n,
                ..base_run.clone()
            };
            let start = Instant::now();
            let truth = run(&truth_cfg, &init)?;
            if !quiet {
                eprintln!(
                    "sweep: ground truth N={n} dt={dt} done in {:.1}s",
                    start.elapsed().as_secs_f64()
                );
            }

            let mut cell_medians = Vec::with_capacity(sweep.s_values.len());
            for &s in &sweep.s_values {
                let mut cell = Vec::with_capacity(sweep.seeds.len());
                for &seed in &sweep.seeds {
                    let stoch_cfg = RunConfig {
                        n_agents: n,
                        dt,
                        sample_size: s,
                        seed,
                        ..base_run.clone()
                    };
                    let out = run(&stoch_cfg, &init)?;
                    let mse = attractor_mse(&out.final_state, &truth.final_state)?;
                    if !quiet {
                        eprintln!("sweep: N={n} dt={dt} S={s} seed={seed} mse={mse:.6}");
                    }
                    cell.push(mse);
                    rows.push(SweepRow {
                        n,
                        dt,
                        s,
                        seed,
                        mse,
                    });
                }
                cell_medians.push(median(&mut cell));
            }
            medians.push((n, dt, cell_medians));
        }
    }

    ensure_dir(out_dir)?;
    write_table(
        &out_dir.join("sweep.csv"),
        &["n", "dt", "s", "seed", "mse"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>(),
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.dt.to_string(),
                    r.s.to_string(),
                    r.seed.to_string(),
                    r.mse.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    // per-cell medians, one row per (N, dt), one column per S
    let mut header = vec!["n".to_string(), "dt".to_string()];
    header.extend(sweep.s_values.iter().map(|s| format!("s{s}")));
    write_table(
        &out_dir.join("sweep_medians.csv"),
        &header,
        &medians
            .iter()
            .map(|(n, dt, cells)| {
                let mut row = vec![n.to_string(), dt.to_string()];
                row.extend(cells.iter().map(|m| m.to_string()));
                row
            })
            .collect::<Vec<_>>(),
    )?;

    Ok(SweepReport {
        rows,
        medians,
        s_values: sweep.s_values.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub s: usize,
    pub n: usize,
    pub wall_seconds: f64,
}

/// Wall-time benchmark: one stochastic run per `(S, N)`. Absolute numbers are
/// machine-local; the point is the scaling with `S` and `N`.
pub fn bench(
    cfg: &ConfigFile,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<Vec<BenchRow>> {
    let (base_run, base_init) = cfg.resolve_run(seed_override)?;
    let bench = cfg.bench()?;
    let mut rows = Vec::new();
    for &n in &bench.n_values {
        for &s in &bench.s_values {
            let mut init_spec = base_init.clone();
            init_spec.n_agents = n;
            let init = init_spec.generate()?;
            let run_cfg = RunConfig {
                n_agents: n,
                sample_size: s,
                epochs: bench.epochs,
                convergence_tol: 0.0,
                ..base_run.clone()
            };
            let start = Instant::now();
            let _ = run(&run_cfg, &init)?;
            let wall = start.elapsed().as_secs_f64();
            if !quiet {
                eprintln!("bench: S={s} N={n} epochs={} -> {wall:.2}s", bench.epochs);
            }
            rows.push(BenchRow {
                s,
                n,
                wall_seconds: wall,
            });
        }
    }
    ensure_dir(out_dir)?;
    write_table(
        &out_dir.join("bench.csv"),
        &["s", "n", "wall_seconds"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>(),
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.s.to_string(),
                    r.n.to_string(),
                    r.wall_seconds.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    Ok(rows)
}

/// One input/label pair of the dataset: flattened (agent-major) initial and
/// final positions.
pub struct DatasetPair {
    pub input: Ensemble,
    pub label: Ensemble,
}

/// Generates the dataset pair with the given index: a fresh ball init evolved
/// by the deterministic solver under the section's protocol.
pub fn generate_pair(ds: &DatasetSection, index: usize) -> Result<DatasetPair> {
    let pair_seed = derive_seed(ds.seed, &[TAG_DATASET_PAIR, index as u64]);
    let spec = InitSpec {
        kind: InitKind::Ball,
        n_agents: ds.n_agents,
        dim: ds.dim,
        n_components: 1,
        component_std: polsim_core::init::DEFAULT_COMPONENT_STD,
        mean_box_halfwidth: polsim_core::init::DEFAULT_MEAN_BOX_HALFWIDTH,
        radius: ds.radius,
        seed: pair_seed,
    };
    let input = spec.generate()?;
    let run_cfg = RunConfig {
        n_agents: ds.n_agents,
        dim: ds.dim,
        exponent: ds.p,
        dt: ds.dt,
        sample_size: ds.n_agents,
        epochs: ds.epochs,
        seed: pair_seed,
        friend_search: polsim_core::dynamics::FriendSearch::Hull,
        sampling: polsim_core::dynamics::Sampling::SharedBatch,
        convergence_tol: 0.0,
    };
    let out = run(&run_cfg, &input)?;
    Ok(DatasetPair {
        input,
        label: out.final_state,
    })
}

fn flat_header(n_agents: usize, dim: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(n_agents * dim);
    for a in 0..n_agents {
        for d in 0..dim {
            h.push(format!("a{a}_{d}"));
        }
    }
    h
}

fn flat_row(e: &Ensemble) -> Vec<String> {
    e.positions().as_flat().iter().map(|v| format!("{v}")).collect()
}

/// Writes the train/test dataset files plus `dataset_meta.json`.
pub fn make_dataset(
    cfg: &ConfigFile,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<Vec<PathBuf>> {
    let mut ds = cfg.dataset()?.clone();
    if let Some(seed) = seed_override {
        ds.seed = seed;
    }
    let n_test = ((ds.count as f64) * ds.test_fraction).round() as usize;
    let n_train = ds.count - n_test;

    let pairs: Vec<DatasetPair> = (0..ds.count)
        .map(|i| {
            let pair = generate_pair(&ds, i)?;
            if !quiet && (i + 1) % 50 == 0 {
                eprintln!("dataset: {}/{} pairs", i + 1, ds.count);
            }
            Ok(pair)
        })
        .collect::<Result<_>>()?;

    ensure_dir(out_dir)?;
    let header = flat_header(ds.n_agents, ds.dim);
    let mut written = Vec::new();
    let splits: [(&str, &[DatasetPair]); 2] =
        [("train", &pairs[..n_train]), ("test", &pairs[n_train..])];
    for (name, split) in splits {
        let inputs: Vec<Vec<String>> = split.iter().map(|p| flat_row(&p.input)).collect();
        let labels: Vec<Vec<String>> = split.iter().map(|p| flat_row(&p.label)).collect();
        written.push(write_table(
            &out_dir.join(format!("{name}_inputs.csv")),
            &header,
            &inputs,
        )?);
        written.push(write_table(
            &out_dir.join(format!("{name}_labels.csv")),
            &header,
            &labels,
        )?);
    }

    // positions live in the initial ball, so one fixed grid frame serves
    // every pair; labels stay inside the input hull by the nesting property
    let pad = 0.05 * ds.radius;
    let bounds = Bounds2 {
        min: [-ds.radius - pad, -ds.radius - pad],
        max: [ds.radius + pad, ds.radius + pad],
    };
    if ds.emit_histograms {
        for &g in &ds.grid_sizes {
            let hist_header: Vec<String> = (0..g * g).map(|i| format!("h{i}")).collect();
            for (name, split) in [
                ("train", &pairs[..n_train]),
                ("test", &pairs[n_train..]),
            ] {
                let mut in_rows = Vec::with_capacity(split.len());
                let mut out_rows = Vec::with_capacity(split.len());
                for p in split.iter() {
                    let hi = grid_histogram(&p.input, g, &bounds)?;
                    let hl = grid_histogram(&p.label, g, &bounds)?;
                    in_rows.push(hi.counts.iter().map(|c| c.to_string()).collect());
                    out_rows.push(hl.counts.iter().map(|c| c.to_string()).collect());
                }
                written.push(write_table(
                    &out_dir.join(format!("{name}_input_hist{g}.csv")),
                    &hist_header,
                    &in_rows,
                )?);
                written.push(write_table(
                    &out_dir.join(format!("{name}_label_hist{g}.csv")),
                    &hist_header,
                    &out_rows,
                )?);
            }
        }
    }

    let meta = serde_json::json!({
        "protocol": "ball init, deterministic solver (S = N), flattened agent-major pairs",
        "count": ds.count,
        "n_train": n_train,
        "n_test": n_test,
        "n_agents": ds.n_agents,
        "dim": ds.dim,
        "radius": ds.radius,
        "epochs": ds.epochs,
        "dt": ds.dt,
        "p": ds.p,
        "seed": ds.seed,
        "flattening": "agent_major",
        "grid_sizes": ds.grid_sizes,
        "histogram_bounds": bounds,
        "emit_histograms": ds.emit_histograms,
        "version": pkg_version(),
    });
    let meta_path = out_dir.join("dataset_meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("cannot write {}", meta_path.display()))?;
    written.push(meta_path);
    if !quiet {
        eprintln!(
            "dataset: {} train + {} test pairs -> {}",
            n_train,
            n_test,
            out_dir.display()
        );
    }
    Ok(written)
}

/// Debug helper: hull vertex indices of a positions file.
pub fn hull_indices(positions: &Path) -> Result<Vec<usize>> {
    let ps = crate::output::read_positions(positions)?;
    Ok(convex_hull(&ps).indices().to_vec())
}
