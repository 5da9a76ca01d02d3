//! Figure-reproduction presets.
//!
//! Each preset is a list of [`Job`]s, each producing one data table. Running
//! a preset writes `<file>.<csv|json>` per job plus `<id>.manifest.json`,
//! which records every parameter and the crate version; [`replay`] re-runs
//! a manifest and reproduces the data files byte for byte.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{density_with, Cache, CACHE_SCHEMA};
use crate::channels::ChannelSpec;
use crate::metrics::{
    optimal_chsh, optimal_wineland, probability_distribution, ChshSearch, Metric,
    WinelandConvention,
};
use crate::qnd::SystemConfig;
use crate::spin::Axis;
use crate::sweep::{run_sweep, SweepRequest, TauGrid};
use crate::table::{write_atomic, Cell, Format, Table};
use crate::{Error, Result};

/// Identifiers of all presets, in display order.
pub const FIGURE_IDS: [&str; 14] = [
    "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig6", "fig7a", "fig7b",
    "fig7c", "fig8a", "fig8b",
];

/// Straight line `intercept + slope / N` reported next to computed optima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseNFit {
    pub intercept: f64,
    pub slope: f64,
}

impl InverseNFit {
    pub fn at(&self, n: usize) -> f64 {
        self.intercept + self.slope / n as f64
    }
}

/// Fit of the squeezing-optimal interaction time without decoherence.
pub const WINELAND_TAU_FIT: InverseNFit = InverseNFit {
    intercept: 0.104,
    slope: 0.0413,
};

/// One data table of a figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Job {
    /// Metrics against `τ`; see [`run_sweep`].
    Sweep { file: String, request: SweepRequest },
    /// Joint label distributions in each basis at a fixed configuration.
    Distributions {
        file: String,
        cfg: SystemConfig,
        channels: Vec<ChannelSpec>,
        bases: Vec<Axis>,
    },
    /// Squeezing-optimal `τ` and value against `N`, for both normalisations.
    WinelandOptimum {
        file: String,
        n_atoms: Vec<usize>,
        alpha: f64,
        n_c: u32,
        n_d: u32,
        channels: Vec<ChannelSpec>,
        tau_lo: f64,
        tau_hi: f64,
        points: usize,
        fit: Option<InverseNFit>,
    },
    /// CHSH maximised over `τ` and `θ_B` against `N`.
    ChshOptimum {
        file: String,
        n_atoms: Vec<usize>,
        alpha: f64,
        n_c: u32,
        n_d: u32,
        channels: Vec<ChannelSpec>,
        search: ChshSearch,
    },
}

impl Job {
    pub fn file(&self) -> &str {
        match self {
            Job::Sweep { file, .. }
            | Job::Distributions { file, .. }
            | Job::WinelandOptimum { file, .. }
            | Job::ChshOptimum { file, .. } => file,
        }
    }
}

/// Everything needed to regenerate a figure's data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub figure: String,
    pub description: String,
    pub version: String,
    pub format: Format,
    pub jobs: Vec<Job>,
}

const RATE_COLUMNS: [&str; 5] = ["channel", "kappa", "gamma", "gain", "Gamma"];

fn rate_cells(ch: &ChannelSpec) -> Vec<Cell> {
    let [k, g, gn, d] = ch.rates();
    vec![ch.kind().into(), k.into(), g.into(), gn.into(), d.into()]
}

fn columns(lead: &[&str], tail: &[&str]) -> Vec<String> {
    lead.iter()
        .chain(RATE_COLUMNS.iter())
        .chain(tail)
        .map(|s| s.to_string())
        .collect()
}

fn phase(kappa: f64) -> ChannelSpec {
    ChannelSpec::PhaseDiffusion { kappa }
}

fn loss_gain(gamma: f64) -> ChannelSpec {
    ChannelSpec::LossGain { gamma, gain: 0.1 }
}

fn dephase(rate: f64) -> ChannelSpec {
    ChannelSpec::Dephasing { rate }
}

fn grid(start: f64, stop: f64, count: usize) -> TauGrid {
    TauGrid { start, stop, count }
}

const ALPHA: f64 = 10.0;
const N_C: u32 = 100;
const KAPPAS: [f64; 3] = [0.0, 1.0, 20.0];
const GAMMAS: [f64; 3] = [0.2, 1.0, 10.0];
const DEPHASING: [f64; 3] = [0.0, 0.01, 0.1];
const CHSH_N: [usize; 7] = [3, 5, 7, 9, 11, 13, 15];
const WINELAND_N: [usize; 6] = [5, 10, 15, 20, 25, 30];

const CRITERIA: [Metric; 7] = [
    Metric::VarXMinus,
    Metric::VarYPlus,
    Metric::VarZMinus,
    Metric::WinelandLiteral,
    Metric::WinelandStandard,
    Metric::HofmannTakeuchi,
    Metric::EprSteering,
];

fn sweep_job(
    file: &str,
    n: usize,
    tau: TauGrid,
    channels: Vec<ChannelSpec>,
    metrics: &[Metric],
    theta_b: Option<f64>,
) -> Job {
    Job::Sweep {
        file: file.into(),
        request: SweepRequest {
            n_atoms: vec![n],
            alpha: ALPHA,
            n_c: N_C,
            n_d: 0,
            tau,
            channels,
            metrics: metrics.to_vec(),
            theta_b,
        },
    }
}

fn chsh_opt_job(file: &str, channels: Vec<ChannelSpec>) -> Job {
    Job::ChshOptimum {
        file: file.into(),
        n_atoms: CHSH_N.to_vec(),
        alpha: ALPHA,
        n_c: N_C,
        n_d: 0,
        channels,
        search: ChshSearch::default(),
    }
}

fn wineland_opt_job(file: &str) -> Job {
    Job::WinelandOptimum {
        file: file.into(),
        n_atoms: WINELAND_N.to_vec(),
        alpha: ALPHA,
        n_c: N_C,
        n_d: 0,
        channels: DEPHASING.map(dephase).to_vec(),
        tau_lo: 0.005,
        tau_hi: 0.5,
        points: 100,
        fit: Some(WINELAND_TAU_FIT),
    }
}

/// The manifest of preset `id`, without running it.
pub fn preset(id: &str, format: Format) -> Result<Manifest> {
    let long = grid(0.0, PI, 200);
    let short = grid(0.0, 0.3, 200);
    let chsh_tau = grid(0.0, 1.0, 200);
    let (description, jobs): (&str, Vec<Job>) = match id {
        "fig2a" => (
            "log-negativity vs tau, phase diffusion, N=10, n_c=20, alpha=sqrt(20)",
            vec![Job::Sweep {
                file: "fig2a".into(),
                request: SweepRequest {
                    n_atoms: vec![10],
                    alpha: 20f64.sqrt(),
                    n_c: 20,
                    n_d: 0,
                    tau: long,
                    channels: [0.0, 0.1, 1.0, 10.0].map(phase).to_vec(),
                    metrics: vec![Metric::LogNegativityNormalized, Metric::LogNegativity],
                    theta_b: None,
                },
            }],
        ),
        "fig2b" => (
            "log-negativity vs tau, loss/gain with gain 0.1",
            vec![sweep_job(
                "fig2b",
                10,
                long,
                std::iter::once(ChannelSpec::NoDecoherence)
                    .chain(GAMMAS.map(loss_gain))
                    .collect(),
                &[Metric::LogNegativityNormalized, Metric::LogNegativity],
                None,
            )],
        ),
        "fig3" => {
            let cfg = SystemConfig::new(10, ALPHA, N_C, 0, 0.1)?;
            (
                "label distributions in x/y/z bases at tau=0.1 under phase diffusion (a) and loss/gain (b)",
                vec![
                    Job::Distributions {
                        file: "fig3a".into(),
                        cfg,
                        channels: KAPPAS.map(phase).to_vec(),
                        bases: Axis::ALL.to_vec(),
                    },
                    Job::Distributions {
                        file: "fig3b".into(),
                        cfg,
                        channels: GAMMAS.map(loss_gain).to_vec(),
                        bases: Axis::ALL.to_vec(),
                    },
                ],
            )
        }
        "fig4a" => (
            "CHSH vs tau, phase diffusion, N=5, theta_B=0.37",
            vec![sweep_job(
                "fig4a",
                5,
                chsh_tau,
                KAPPAS.map(phase).to_vec(),
                &[Metric::Chsh],
                Some(0.37),
            )],
        ),
        "fig4b" => (
            "CHSH optimised over tau and theta_B vs N, phase diffusion",
            vec![chsh_opt_job("fig4b", KAPPAS.map(phase).to_vec())],
        ),
        "fig4c" => (
            "CHSH vs tau, loss/gain with gain 0.1, N=5, theta_B=0.37",
            vec![sweep_job(
                "fig4c",
                5,
                chsh_tau,
                GAMMAS.map(loss_gain).to_vec(),
                &[Metric::Chsh],
                Some(0.37),
            )],
        ),
        "fig4d" => (
            "CHSH optimised over tau and theta_B vs N, loss/gain with gain 0.1",
            vec![chsh_opt_job("fig4d", GAMMAS.map(loss_gain).to_vec())],
        ),
        "fig5" => (
            "variances and correlation criteria vs tau, phase diffusion",
            vec![
                sweep_job(
                    "fig5_long",
                    10,
                    long,
                    KAPPAS.map(phase).to_vec(),
                    &CRITERIA,
                    None,
                ),
                sweep_job(
                    "fig5_short",
                    10,
                    short,
                    KAPPAS.map(phase).to_vec(),
                    &CRITERIA,
                    None,
                ),
            ],
        ),
        "fig6" => (
            "variances and correlation criteria vs tau, loss/gain with gain 0.1",
            vec![
                sweep_job(
                    "fig6_long",
                    10,
                    long,
                    GAMMAS.map(loss_gain).to_vec(),
                    &CRITERIA,
                    None,
                ),
                sweep_job(
                    "fig6_short",
                    10,
                    short,
                    GAMMAS.map(loss_gain).to_vec(),
                    &CRITERIA,
                    None,
                ),
            ],
        ),
        "fig7a" => (
            "Wineland parameter vs tau, atomic dephasing, N=20",
            vec![sweep_job(
                "fig7a",
                20,
                grid(0.0, 0.5, 200),
                DEPHASING.map(dephase).to_vec(),
                &[Metric::WinelandLiteral, Metric::WinelandStandard],
                None,
            )],
        ),
        "fig7b" => (
            "squeezing-optimal tau vs 1/N, atomic dephasing, with the zero-dephasing fit",
            vec![wineland_opt_job("fig7b")],
        ),
        "fig7c" => (
            "optimal Wineland parameter vs 1/N, atomic dephasing",
            vec![wineland_opt_job("fig7c")],
        ),
        "fig8a" => (
            "CHSH vs tau, atomic dephasing, N=11, theta_B=0.251",
            vec![sweep_job(
                "fig8a",
                11,
                chsh_tau,
                DEPHASING.map(dephase).to_vec(),
                &[Metric::Chsh],
                Some(0.251),
            )],
        ),
        "fig8b" => (
            "CHSH optimised over tau and theta_B vs N, atomic dephasing",
            vec![chsh_opt_job("fig8b", DEPHASING.map(dephase).to_vec())],
        ),
        other => {
            return Err(Error::Unknown {
                kind: "figure",
                name: other.into(),
            })
        }
    };
    Ok(Manifest {
        figure: id.into(),
        description: description.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        format,
        jobs,
    })
}

fn distributions(
    cfg: &SystemConfig,
    channels: &[ChannelSpec],
    bases: &[Axis],
    cache: Option<&Cache>,
) -> Result<Table> {
    let mut table = Table::new(columns(
        &["N", "tau"],
        &["basis", "k1", "k2", "probability"],
    ));
    let blocks: Vec<Vec<Vec<Cell>>> = channels
        .par_iter()
        .map(|ch| -> Result<Vec<Vec<Cell>>> {
            let rho = density_with(cache, cfg, ch)?;
            let mut rows = Vec::new();
            for &basis in bases {
                let p = probability_distribution(&rho, basis)?;
                for k1 in 0..=cfg.n_atoms {
                    for k2 in 0..=cfg.n_atoms {
                        let mut row: Vec<Cell> = vec![cfg.n_atoms.into(), cfg.tau.into()];
                        row.extend(rate_cells(ch));
                        row.extend([
                            basis.name().into(),
                            k1.into(),
                            k2.into(),
                            p[(k1, k2)].into(),
                        ]);
                        rows.push(row);
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    for row in blocks.into_iter().flatten() {
        table.push(row)?;
    }
    Ok(table)
}

#[allow(clippy::too_many_arguments)]
fn wineland_optima(
    n_atoms: &[usize],
    alpha: f64,
    n_c: u32,
    n_d: u32,
    channels: &[ChannelSpec],
    tau_lo: f64,
    tau_hi: f64,
    points: usize,
    fit: Option<InverseNFit>,
) -> Result<Table> {
    let mut table = Table::new(columns(
        &["N", "inv_N"],
        &["convention", "tau_opt", "xi_opt", "tau_fit"],
    ));
    let conventions = [WinelandConvention::Literal, WinelandConvention::Standard];
    for ch in channels {
        for &n in n_atoms {
            let cfg = SystemConfig::new(n, alpha, n_c, n_d, tau_lo)?;
            for conv in conventions {
                let opt = optimal_wineland(&cfg, ch, conv, tau_lo, tau_hi, points)?;
                let mut row: Vec<Cell> = vec![n.into(), (1.0 / n as f64).into()];
                row.extend(rate_cells(ch));
                let name = match conv {
                    WinelandConvention::Literal => "literal",
                    WinelandConvention::Standard => "standard",
                };
                row.extend([
                    name.into(),
                    opt.tau.into(),
                    opt.value.into(),
                    fit.map(|f| f.at(n)).into(),
                ]);
                table.push(row)?;
            }
        }
    }
    Ok(table)
}

fn chsh_optima(
    n_atoms: &[usize],
    alpha: f64,
    n_c: u32,
    n_d: u32,
    channels: &[ChannelSpec],
    search: &ChshSearch,
) -> Result<Table> {
    let mut table = Table::new(columns(&["N"], &["tau_opt", "theta_b_opt", "chsh_opt"]));
    for ch in channels {
        for &n in n_atoms {
            let cfg = SystemConfig::new(n, alpha, n_c, n_d, 0.0)?;
            let opt = optimal_chsh(&cfg, ch, search)?;
            let mut row: Vec<Cell> = vec![n.into()];
            row.extend(rate_cells(ch));
            row.extend([opt.tau.into(), opt.theta_b.into(), opt.value.into()]);
            table.push(row)?;
        }
    }
    Ok(table)
}

fn compute_job(job: &Job, cache: Option<&Cache>) -> Result<Table> {
    match job {
        Job::Sweep { request, .. } => run_sweep(request, cache),
        Job::Distributions {
            cfg,
            channels,
            bases,
            ..
        } => distributions(cfg, channels, bases, cache),
        Job::WinelandOptimum {
            n_atoms,
            alpha,
            n_c,
            n_d,
            channels,
            tau_lo,
            tau_hi,
            points,
            fit,
            ..
        } => wineland_optima(
            n_atoms, *alpha, *n_c, *n_d, channels, *tau_lo, *tau_hi, *points, *fit,
        ),
        Job::ChshOptimum {
            n_atoms,
            alpha,
            n_c,
            n_d,
            channels,
            search,
            ..
        } => chsh_optima(n_atoms, *alpha, *n_c, *n_d, channels, search),
    }
}

#[derive(Serialize)]
struct JobKey<'a> {
    kind: &'static str,
    schema: u32,
    version: &'static str,
    job: &'a Job,
}

/// Computes one job's table, through the cache when one is given.
pub fn run_job(job: &Job, cache: Option<&Cache>) -> Result<Table> {
    let Some(c) = cache else {
        return compute_job(job, None);
    };
    if matches!(job, Job::Sweep { .. }) {
        // sweeps cache their own tables
        return compute_job(job, cache);
    }
    let key = JobKey {
        kind: "figure_job",
        schema: CACHE_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        job,
    };
    let (stored, _) = c.get_or_compute(&key, || Ok(compute_job(job, cache)?.to_json_value()))?;
    Table::from_json_value(stored)
}

/// Runs every job of `manifest`, writing the data files and the manifest
/// into `out_dir`. Returns the written paths, manifest last.
pub fn run_manifest(
    manifest: &Manifest,
    out_dir: &Path,
    cache: Option<&Cache>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for job in &manifest.jobs {
        log::info!("{}: computing {}", manifest.figure, job.file());
        let table = run_job(job, cache)?;
        let path = out_dir.join(format!("{}.{}", job.file(), manifest.format.extension()));
        table.write(&path, manifest.format)?;
        written.push(path);
    }
    let path = out_dir.join(format!("{}.manifest.json", manifest.figure));
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Runs preset `id`.
pub fn run_figure(
    id: &str,
    out_dir: &Path,
    format: Format,
    cache: Option<&Cache>,
) -> Result<Vec<PathBuf>> {
    run_manifest(&preset(id, format)?, out_dir, cache)
}

/// Re-runs a manifest written by [`run_figure`].
pub fn replay(manifest_path: &Path, out_dir: &Path, cache: Option<&Cache>) -> Result<Vec<PathBuf>> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    run_manifest(&manifest, out_dir, cache)
}
