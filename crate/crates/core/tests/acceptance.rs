//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use qnd_core::channels::{
    apply_channel, apply_dephasing, apply_loss_gain, apply_loss_gain_double_sum,
    apply_phase_diffusion, apply_phase_diffusion_double_sum, attenuation_reference,
    brute_force_channel_oracle, completeness_error, loss_gain_kraus, AtomicDensityMatrix,
    ChannelSpec, LossGainCoefficients,
};
use qnd_core::figures::{preset, Job};
use qnd_core::metrics::{
    chsh, epr_steering, hofmann_takeuchi, log_negativity, optimal_wineland, wineland,
    WinelandConvention,
};
use qnd_core::qnd::{coherent_amplitudes, conditional_state};
use qnd_core::sweep::run_sweep;
use qnd_core::table::Format;
use qnd_core::SystemConfig;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cfg(n: usize, alpha: f64, n_c: u32, n_d: u32, tau: f64) -> SystemConfig {
    SystemConfig::new(n, alpha, n_c, n_d, tau).expect("valid config")
}

fn rel_diff(a: &AtomicDensityMatrix, b: &AtomicDensityMatrix) -> f64 {
    a.max_abs_diff(b)
        .max((a.outcome_weight / b.outcome_weight - 1.0).abs())
}

const ORACLE_OUTCOMES: [(u32, u32); 4] = [(0, 0), (1, 0), (2, 0), (1, 1)];

fn oracle_criterion(
    channels: &[ChannelSpec],
    closed: impl Fn(&SystemConfig, &ChannelSpec) -> AtomicDensityMatrix,
) -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (n_c, n_d) in ORACLE_OUTCOMES {
        let c = cfg(2, 1.0, n_c, n_d, 0.3);
        for ch in channels {
            let oracle =
                brute_force_channel_oracle(&c, ch, 12, 12).map_err(|e| format!("oracle: {e}"))?;
            let d = rel_diff(&closed(&c, ch), &oracle);
            if !(d <= 1e-8) {
                return Err(format!(
                    "(n_c,n_d)=({n_c},{n_d}) {ch:?}: discrepancy {d:.3e} > 1e-8"
                ));
            }
            worst = worst.max(d);
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!(
            "max discrepancy {worst:.2e} over {} instances in {elapsed:.2?} (limit 60 s)",
            ORACLE_OUTCOMES.len() * channels.len()
        ),
    )
}

fn criterion_1() -> Verdict {
    let channels: Vec<ChannelSpec> = [0.1, 0.5, 2.0]
        .map(|kappa| ChannelSpec::PhaseDiffusion { kappa })
        .to_vec();
    oracle_criterion(&channels, |c, ch| {
        let ChannelSpec::PhaseDiffusion { kappa } = *ch else {
            unreachable!()
        };
        apply_phase_diffusion(c, kappa).expect("closed form")
    })
}

fn criterion_2() -> Verdict {
    let channels: Vec<ChannelSpec> = [(0.4, 0.1), (0.4, 0.0), (0.2, 0.2)]
        .map(|(gamma, gain)| ChannelSpec::LossGain { gamma, gain })
        .to_vec();
    oracle_criterion(&channels, |c, ch| {
        let ChannelSpec::LossGain { gamma, gain } = *ch else {
            unreachable!()
        };
        apply_loss_gain(c, gamma, gain).expect("closed form")
    })
}

/// Pure loss acting on `|β⟩⟨β'|` through the explicit Kraus operators,
/// against `⟨β'|β⟩^{1-η} |√η β⟩⟨√η β'|`.
fn kraus_attenuation_error(gamma: f64, t: f64, beta: C64, beta_p: C64) -> f64 {
    let cutoff = 60;
    let dim = cutoff + 1;
    let ket = DMatrix::from_iterator(dim, 1, coherent_amplitudes(beta, cutoff));
    let ket_p = DMatrix::from_iterator(dim, 1, coherent_amplitudes(beta_p, cutoff));
    let input = &ket * ket_p.adjoint();
    let mut output = DMatrix::<C64>::zeros(dim, dim);
    for p in 0..=cutoff {
        let k = loss_gain_kraus(p, 0, gamma, 0.0, t, dim).map(|x| C64::new(x, 0.0));
        output += &k * &input * k.adjoint();
    }
    let eta = (-2.0 * gamma * t).exp();
    let overlap = (-(beta.norm_sqr() + beta_p.norm_sqr()) / 2.0 + beta * beta_p.conj()).exp();
    let s = eta.sqrt();
    let a = DMatrix::from_iterator(dim, 1, coherent_amplitudes(beta * s, cutoff));
    let b = DMatrix::from_iterator(dim, 1, coherent_amplitudes(beta_p * s, cutoff));
    let expected = (&a * b.adjoint()) * overlap.powf(1.0 - eta);
    let low = 12;
    (0..low)
        .flat_map(|i| (0..low).map(move |j| (i, j)))
        .map(|(i, j)| (output[(i, j)] - expected[(i, j)]).norm())
        .fold(0.0, f64::max)
}

fn criterion_3() -> Verdict {
    let mut worst_prob: f64 = 0.0;
    let mut worst_kraus: f64 = 0.0;
    let mut worst_state: f64 = 0.0;
    for (gamma, t) in [(0.1, 0.3), (0.4, 0.7), (1.0, 0.2), (2.5, 1.1)] {
        let p = LossGainCoefficients::new(gamma, 0.0, t).loss_probability();
        worst_prob = worst_prob.max((p - (1.0 - (-2.0 * gamma * t).exp())).abs());
        for (b, bp) in [
            (C64::new(1.2, 0.0), C64::new(0.0, -0.7)),
            (C64::new(0.3, 0.9), C64::new(-1.1, 0.4)),
        ] {
            worst_kraus = worst_kraus.max(kraus_attenuation_error(gamma, t, b, bp));
        }
    }
    for (c, gamma) in [
        (cfg(2, 1.0, 1, 0, 0.3), 0.4),
        (cfg(3, 2.0, 3, 1, 0.4), 0.5),
        (cfg(6, 3.0, 9, 2, 0.2), 1.5),
        (cfg(10, 10.0, 100, 0, 0.1), 1.0),
    ] {
        let closed = apply_loss_gain(&c, gamma, 0.0).map_err(|e| e.to_string())?;
        let reference = attenuation_reference(&c, gamma).map_err(|e| e.to_string())?;
        worst_state = worst_state.max(rel_diff(&closed, &reference));
    }
    let worst = worst_prob.max(worst_kraus).max(worst_state);
    check(
        worst <= 1e-9,
        format!(
            "loss probability {worst_prob:.1e}, Kraus action on coherent amplitudes {worst_kraus:.1e}, \
             conditional state vs attenuation {worst_state:.1e} (tol 1e-9)"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut e_max: f64 = 0.0;
    let mut ht_dev: f64 = 0.0;
    let mut epr_dev: f64 = 0.0;
    let mut xi_dev: f64 = 0.0;
    for (n, alpha, n_c) in [(1, 1.0, 1), (2, 2.0, 4), (5, 3.0, 9), (10, 10.0, 100)] {
        let rho = apply_channel(&cfg(n, alpha, n_c, 0, 0.0), &ChannelSpec::NoDecoherence)
            .map_err(|e| e.to_string())?;
        e_max = e_max.max(log_negativity(&rho).map_err(|e| e.to_string())?.value.abs());
        ht_dev = ht_dev.max((hofmann_takeuchi(&rho).map_err(|e| e.to_string())?.value - 1.0).abs());
        epr_dev = epr_dev.max((epr_steering(&rho).map_err(|e| e.to_string())?.value - 4.0).abs());
        xi_dev = xi_dev.max((wineland(&rho).map_err(|e| e.to_string())?.standard - 1.0).abs());
    }
    let mut pure_dev: f64 = 0.0;
    for c in [
        cfg(3, 2.0, 4, 1, 0.37),
        cfg(10, 10.0, 100, 0, 0.1),
        cfg(6, 3.0, 9, 0, 2.2),
    ] {
        let pure = conditional_state(&c)
            .map_err(|e| e.to_string())?
            .state
            .density_matrix();
        for ch in [
            ChannelSpec::NoDecoherence,
            ChannelSpec::PhaseDiffusion { kappa: 0.0 },
            ChannelSpec::LossGain {
                gamma: 0.0,
                gain: 0.0,
            },
            ChannelSpec::Dephasing { rate: 0.0 },
        ] {
            let rho = apply_channel(&c, &ch).map_err(|e| e.to_string())?;
            let d = (&rho.matrix - &pure)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            pure_dev = pure_dev.max(d);
        }
    }
    check(
        e_max < 1e-10 && ht_dev <= 1e-10 && epr_dev <= 1e-9 && xi_dev <= 1e-9 && pure_dev <= 1e-12,
        format!(
            "E {e_max:.1e}, |HT-1| {ht_dev:.1e}, |EPR-4| {epr_dev:.1e}, |xi_std-1| {xi_dev:.1e}, \
             rate-0 vs pure {pure_dev:.1e}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let manifest = preset("fig2a", Format::Csv).map_err(|e| e.to_string())?;
    let Job::Sweep { request, .. } = &manifest.jobs[0] else {
        return Err("fig2a preset is not a sweep".into());
    };
    let mut req = request.clone();
    req.channels = vec![ChannelSpec::PhaseDiffusion { kappa: 0.0 }];
    req.metrics = vec![qnd_core::metrics::Metric::LogNegativity];
    let table = run_sweep(&req, None).map_err(|e| e.to_string())?;
    let tau_col = table.column_index("tau").expect("tau column");
    let val_col = table.column_index("value").expect("value column");
    let points: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            (
                r[tau_col].as_f64().unwrap_or(f64::NAN),
                r[val_col].as_f64().unwrap_or(f64::NAN),
            )
        })
        .collect();
    let (t0, e0) = points[0];
    let (t1, e1) = *points.last().expect("non-empty");
    let e_max = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let inner = points
        .iter()
        .filter(|(t, _)| *t > 0.2 && *t < PI - 0.2)
        .map(|p| p.1 / e_max)
        .fold(0.0, f64::max);
    check(
        t0 == 0.0 && t1 == PI && e0 < 1e-6 && e1 < 1e-6 && inner > 0.3,
        format!("E(0) = {e0:.1e}, E(pi) = {e1:.1e}, max E/E_max in (0.2, pi-0.2) = {inner:.3} over {} points", points.len()),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let fit = |n: usize| 0.104 + 0.0413 / n as f64;
    let mut summary = Vec::new();
    let mut any_matches = false;
    for conv in [WinelandConvention::Literal, WinelandConvention::Standard] {
        let mut worst: f64 = 0.0;
        let mut taus = Vec::new();
        for n in [10, 15, 20] {
            let c = cfg(n, 10.0, 100, 0, 0.1);
            let opt = optimal_wineland(
                &c,
                &ChannelSpec::Dephasing { rate: 0.0 },
                conv,
                0.005,
                0.5,
                100,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max((opt.tau / fit(n) - 1.0).abs());
            taus.push(format!("{:.4}", opt.tau));
        }
        any_matches |= worst <= 0.05;
        summary.push(format!(
            "{conv:?} tau_opt [{}] worst rel. dev {:.1}%",
            taus.join(", "),
            100.0 * worst
        ));
    }
    let elapsed = start.elapsed();
    check(
        any_matches && elapsed < Duration::from_secs(300),
        format!(
            "{}; fit [0.1081, 0.1068, 0.1061]; {elapsed:.2?}",
            summary.join("; ")
        ),
    )
}

fn max_chsh_on_preset(id: &str, channel: ChannelSpec) -> Result<(f64, f64, usize), String> {
    let manifest = preset(id, Format::Csv).map_err(|e| e.to_string())?;
    let Job::Sweep { request, .. } = &manifest.jobs[0] else {
        return Err(format!("{id} preset is not a sweep"));
    };
    let theta = request.theta_b.ok_or("preset without theta_B")?;
    let n = request.n_atoms[0];
    let taus = request.tau.values();
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &tau in &taus {
        let rho = apply_channel(
            &cfg(n, request.alpha, request.n_c, request.n_d, tau),
            &channel,
        )
        .map_err(|e| e.to_string())?;
        let v = chsh(&rho, theta).map_err(|e| e.to_string())?;
        if v > best.1 {
            best = (tau, v);
        }
    }
    Ok((best.0, best.1, taus.len()))
}

fn criterion_7() -> Verdict {
    let cases = [
        ("fig4a", ChannelSpec::PhaseDiffusion { kappa: 0.0 }),
        ("fig4a", ChannelSpec::PhaseDiffusion { kappa: 1.0 }),
        ("fig8a", ChannelSpec::Dephasing { rate: 0.0 }),
        ("fig8a", ChannelSpec::Dephasing { rate: 0.01 }),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, ch) in cases {
        let (tau, v, points) = max_chsh_on_preset(id, ch)?;
        ok &= v > 2.0 && points == 200;
        let [k, _, _, g] = ch.rates();
        let rate = if id == "fig4a" {
            format!("kappa={k}")
        } else {
            format!("Gamma={g}")
        };
        parts.push(format!("{id} {rate}: max C = {v:.4} at tau {tau:.3}"));
    }
    check(ok, parts.join("; "))
}

fn criterion_8() -> Verdict {
    let c = cfg(4, 3.0, 9, 0, 0.37);
    let rate = 0.2;
    let pure = apply_dephasing(&c, 0.0).map_err(|e| e.to_string())?;
    let rho = apply_dephasing(&c, rate).map_err(|e| e.to_string())?;
    let dim = rho.dim();
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let i = rng.random_range(0..dim);
        let j = rng.random_range(0..dim);
        if i == j || pure.matrix[(i, j)].norm() < 1e-300 {
            continue;
        }
        let n = c.n_atoms + 1;
        let dk1 = (i / n) as f64 - (j / n) as f64;
        let dk2 = (i % n) as f64 - (j % n) as f64;
        let expected = (-2.0 * rate * c.tau * (dk1 * dk1 + dk2 * dk2)).exp();
        let ratio = rho.matrix[(i, j)] / pure.matrix[(i, j)];
        worst = worst.max((ratio - expected).norm() / expected);
        checked += 1;
    }
    let strong = apply_dephasing(&c, 1e9).map_err(|e| e.to_string())?;
    let amps = conditional_state(&c)
        .map_err(|e| e.to_string())?
        .state
        .amplitudes;
    let mut diag_dev: f64 = 0.0;
    let mut off_max: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let z = strong.matrix[(i, j)];
            if i == j {
                diag_dev = diag_dev.max((z.re - amps[i].norm_sqr()).abs());
            } else {
                off_max = off_max.max(z.norm());
            }
        }
    }
    let eps = f64::EPSILON;
    check(
        worst <= 4.0 * eps && diag_dev <= 1e-12 && off_max <= 1e-12,
        format!(
            "20 random elements: max rel. error of suppression factor {worst:.1e} ({:.1} ulp); \
             strong-rate diagonal vs p_z {diag_dev:.1e}, off-diagonal {off_max:.1e}",
            worst / eps
        ),
    )
}

fn channel_strategy() -> impl Strategy<Value = ChannelSpec> {
    prop_oneof![
        Just(ChannelSpec::NoDecoherence),
        (0.0..20.0f64).prop_map(|kappa| ChannelSpec::PhaseDiffusion { kappa }),
        (0.0..10.0f64, 0.0..2.0f64).prop_map(|(gamma, gain)| ChannelSpec::LossGain { gamma, gain }),
        (0.0..2.0f64).prop_map(|r| ChannelSpec::LossGain { gamma: r, gain: r }),
        (0.0..5.0f64).prop_map(|rate| ChannelSpec::Dephasing { rate }),
    ]
}

fn criterion_9() -> Verdict {
    let worst = RefCell::new((0.0f64, 0.0f64, 0.0f64));
    let config = Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = (
        1usize..=6,
        0.5..10.0f64,
        0u32..=120,
        0u32..=20,
        0.01..3.1f64,
        channel_strategy(),
    );
    let outcome = runner.run(&strategy, |(n, alpha, n_c, n_d, tau, ch)| {
        let c = SystemConfig::new(n, alpha, n_c, n_d, tau).expect("valid config");
        let rho = apply_channel(&c, &ch)
            .map_err(|e| TestCaseError::fail(format!("{c:?} {ch:?}: {e}")))?;
        let herm = rho.hermiticity_error();
        let trace = (rho.trace() - C64::new(1.0, 0.0)).norm();
        let min_eig = rho.min_eigenvalue();
        let mut w = worst.borrow_mut();
        *w = (w.0.max(herm), w.1.max(trace), w.2.min(min_eig));
        prop_assert!(herm <= 1e-10, "{c:?} {ch:?}: hermiticity {herm:e}");
        prop_assert!(trace <= 1e-10, "{c:?} {ch:?}: trace error {trace:e}");
        prop_assert!(min_eig >= -1e-9, "{c:?} {ch:?}: min eigenvalue {min_eig:e}");
        Ok(())
    });
    let (herm, trace, min_eig) = *worst.borrow();
    let mut completeness: f64 = 0.0;
    for (ch, t, cutoff) in [
        (ChannelSpec::PhaseDiffusion { kappa: 1.0 }, 0.3, 25),
        (ChannelSpec::PhaseDiffusion { kappa: 2.0 }, 0.3, 40),
        (
            ChannelSpec::LossGain {
                gamma: 0.4,
                gain: 0.1,
            },
            0.5,
            40,
        ),
        (
            ChannelSpec::LossGain {
                gamma: 0.3,
                gain: 0.3,
            },
            0.5,
            40,
        ),
        (
            ChannelSpec::LossGain {
                gamma: 1.0,
                gain: 0.0,
            },
            0.5,
            40,
        ),
    ] {
        completeness =
            completeness.max(completeness_error(&ch, t, cutoff, 8).map_err(|e| e.to_string())?);
    }
    let detail = format!(
        "200 random points (N<=6): max hermiticity {herm:.1e}, max trace error {trace:.1e}, \
         min eigenvalue {min_eig:.1e}; Kraus completeness {completeness:.1e}"
    );
    match outcome {
        Ok(()) => check(completeness <= 1e-8, detail),
        Err(e) => Err(format!("{detail}; failing case: {e}")),
    }
}

fn criterion_10() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (n_c, n_d) in ORACLE_OUTCOMES {
        let c = cfg(2, 1.0, n_c, n_d, 0.3);
        let pairs: Vec<(AtomicDensityMatrix, AtomicDensityMatrix)> = [0.1, 0.5, 2.0]
            .iter()
            .map(|&k| {
                Ok((
                    apply_phase_diffusion(&c, k)?,
                    apply_phase_diffusion_double_sum(&c, k)?,
                ))
            })
            .chain([(0.4, 0.1), (0.4, 0.0), (0.2, 0.2)].iter().map(|&(g, gn)| {
                Ok((
                    apply_loss_gain(&c, g, gn)?,
                    apply_loss_gain_double_sum(&c, g, gn)?,
                ))
            }))
            .collect::<qnd_core::Result<_>>()
            .map_err(|e| e.to_string())?;
        for (a, b) in pairs {
            let scale = b.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(a.max_abs_diff(&b) / scale);
            count += 1;
        }
    }
    check(
        worst <= 1e-10,
        format!("max relative deviation {worst:.1e} over {count} instances (tol 1e-10)"),
    )
}

fn run_cli(args: &[&str], cache: Option<&Path>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qnd"));
    cmd.args(args).env_remove(qnd_core::cache::CACHE_DIR_ENV);
    if let Some(dir) = cache {
        cmd.arg("--cache-dir").arg(dir);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "qnd {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let p = e.expect("entry").path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).expect("file"),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_11() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let cache = root.join("cache");
    let mut snapshots = Vec::new();
    // no cache twice, then cold and warm cache
    for (run, cache_dir) in [
        ("a", None),
        ("b", None),
        ("c", Some(cache.as_path())),
        ("d", Some(cache.as_path())),
    ] {
        let dir = root.join(run);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        for format in ["csv", "json"] {
            let out = dir.join(format!("sweep.{format}"));
            run_cli(
                &[
                    "sweep",
                    "--N",
                    "3,5",
                    "--nc",
                    "9",
                    "--tau",
                    "0:pi:7",
                    "--channel",
                    "lossgain",
                    "--gamma",
                    "0.2,1",
                    "--gain",
                    "0.1",
                    "--format",
                    format,
                    "--out",
                    out.to_str().unwrap(),
                ],
                cache_dir,
            )?;
        }
        for id in ["fig3", "fig8a"] {
            run_cli(&["figure", id, "--out", dir.to_str().unwrap()], cache_dir)?;
        }
        snapshots.push(tree_bytes(&dir));
    }
    let cached_entries = std::fs::read_dir(&cache).map(|d| d.count()).unwrap_or(0);
    let files = snapshots[0].len();
    let identical = snapshots.windows(2).all(|w| w[0] == w[1]);
    check(
        identical && files >= 7 && cached_entries > 0,
        format!("{files} output files byte-identical across 2 uncached, 1 cold-cache and 1 warm-cache runs ({cached_entries} cache entries)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("oracle equivalence, phase diffusion", criterion_1),
        ("oracle equivalence, loss/gain", criterion_2),
        ("loss-only reduction to attenuation", criterion_3),
        ("baselines at tau = 0 and zero rates", criterion_4),
        ("entanglement zeros at tau = 0, pi", criterion_5),
        ("Wineland optimum vs fit", criterion_6),
        ("CHSH violation", criterion_7),
        ("dephasing structure", criterion_8),
        ("state validity and Kraus completeness", criterion_9),
        ("Laguerre recurrence vs double sum", criterion_10),
        ("CLI determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag}: {name} -- {detail} [{:.2?}]",
            i + 1,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
