//! Oracle self-checks: every closed form against an independent evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channels::{
    apply_loss_gain_double_sum, apply_loss_gain_with, apply_phase_diffusion,
    apply_phase_diffusion_double_sum, attenuation_reference, brute_force_channel_oracle,
    completeness_error, AtomicDensityMatrix, ChannelSpec, LossGainCoefficients,
};
use crate::qnd::{mz_evolution_oracle, SystemConfig};
use crate::{Error, Result};

/// Elementwise tolerance for closed form vs truncated oracle.
pub const ORACLE_TOL: f64 = 1e-8;
/// Tolerance for Laguerre recurrence vs explicit double sum.
pub const DOUBLE_SUM_TOL: f64 = 1e-10;
/// Tolerance for pure loss vs the beamsplitter picture.
pub const ATTENUATION_TOL: f64 = 1e-9;
/// Tolerance for `Σ M†M = 1` on the low-photon block.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Tolerance for the explicit interferometer vs the closed-form state.
pub const INTERFEROMETER_TOL: f64 = 1e-10;

/// How many instances to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Single-atom instances; a few seconds.
    Fast,
    /// Two-atom instances over several outcomes and rates.
    Full,
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::Unknown {
                kind: "check level",
                name: other.into(),
            }),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fast => "fast",
            Level::Full => "full",
        })
    }
}

/// Deliberate corruption of the loss/gain closed form, used to confirm the
/// checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mutation {
    /// Multiplies the coefficient `T₂` by `1 + t2_relative_error`.
    pub t2_relative_error: f64,
}

/// Outcome of one comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub instance: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// All comparisons of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub level: Level,
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    /// Largest discrepancy per check kind, in first-seen order.
    pub fn worst_by_check(&self) -> Vec<(&'static str, f64, f64)> {
        let mut out: Vec<(&'static str, f64, f64)> = Vec::new();
        for r in &self.results {
            match out.iter_mut().find(|(c, _, _)| *c == r.check) {
                Some(e) => e.1 = e.1.max(r.discrepancy),
                None => out.push((r.check, r.discrepancy, r.tolerance)),
            }
        }
        out
    }

    /// Human-readable summary: worst discrepancy per check, then every
    /// failing instance.
    pub fn render(&self) -> String {
        let mut s = format!(
            "oracle check ({}): {} comparisons\n",
            self.level,
            self.results.len()
        );
        for (check, worst, tol) in self.worst_by_check() {
            let verdict = if self
                .results
                .iter()
                .filter(|r| r.check == check)
                .all(|r| r.passed)
            {
                "ok"
            } else {
                "FAIL"
            };
            s += &format!("  {check:<22} max discrepancy {worst:.3e} (tol {tol:.0e})  {verdict}\n");
        }
        for r in self.failures() {
            s += &format!(
                "  FAILED {} [{}]: {:.3e} > {:.0e}\n",
                r.check, r.instance, r.discrepancy, r.tolerance
            );
        }
        s += if self.passed() { "PASS\n" } else { "FAIL\n" };
        s
    }
}

fn result(check: &'static str, instance: String, discrepancy: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        check,
        instance,
        discrepancy,
        tolerance,
        // NaN discrepancies fail
        passed: discrepancy <= tolerance,
    }
}

fn matrix_discrepancy(a: &AtomicDensityMatrix, b: &AtomicDensityMatrix) -> f64 {
    a.max_abs_diff(b)
        .max((a.outcome_weight / b.outcome_weight - 1.0).abs())
}

/// Closed form under test, with the optional corruption applied.
fn closed_form(
    cfg: &SystemConfig,
    channel: &ChannelSpec,
    mutation: Mutation,
) -> Result<AtomicDensityMatrix> {
    match *channel {
        ChannelSpec::PhaseDiffusion { kappa } => apply_phase_diffusion(cfg, kappa),
        ChannelSpec::LossGain { gamma, gain } => {
            let mut coeffs = LossGainCoefficients::new(gamma, gain, cfg.tau);
            coeffs.t2 *= 1.0 + mutation.t2_relative_error;
            apply_loss_gain_with(cfg, gamma, gain, &coeffs)
        }
        _ => Err(Error::invalid("no oracle for this channel")),
    }
}

struct Plan {
    n_atoms: usize,
    outcomes: &'static [(u32, u32)],
    channels: Vec<ChannelSpec>,
    interferometer: Vec<(usize, f64, f64)>,
    attenuation: Vec<(SystemConfig, f64)>,
}

fn plan(level: Level) -> Result<Plan> {
    let pd = |kappa| ChannelSpec::PhaseDiffusion { kappa };
    let lg = |gamma, gain| ChannelSpec::LossGain { gamma, gain };
    Ok(match level {
        Level::Fast => Plan {
            n_atoms: 1,
            outcomes: &[(0, 0), (1, 0), (1, 1)],
            channels: vec![pd(0.5), lg(0.4, 0.1), lg(0.2, 0.2)],
            interferometer: vec![(1, 1.0, 0.3)],
            attenuation: vec![(SystemConfig::new(1, 1.0, 1, 0, 0.3)?, 0.4)],
        },
        Level::Full => Plan {
            n_atoms: 2,
            outcomes: &[(0, 0), (1, 0), (2, 0), (1, 1)],
            channels: vec![
                pd(0.1),
                pd(0.5),
                pd(2.0),
                lg(0.4, 0.1),
                lg(0.4, 0.0),
                lg(0.2, 0.2),
            ],
            interferometer: vec![(1, 1.0, 0.3), (2, 1.0, 0.3), (2, 0.7, 1.1), (2, 1.0, 2.5)],
            attenuation: vec![
                (SystemConfig::new(2, 1.0, 1, 0, 0.3)?, 0.4),
                (SystemConfig::new(3, 2.0, 3, 1, 0.4)?, 0.5),
                (SystemConfig::new(6, 3.0, 9, 2, 0.2)?, 1.5),
            ],
        },
    })
}

/// Runs every check of `level` on the unmodified closed forms.
pub fn run_oracle_check(level: Level) -> Result<Report> {
    run_oracle_check_with(level, Mutation::default())
}

/// [`run_oracle_check`] with a deliberate corruption of the closed form.
pub fn run_oracle_check_with(level: Level, mutation: Mutation) -> Result<Report> {
    let start = Instant::now();
    let plan = plan(level)?;
    let mut results = Vec::new();
    let alpha = 1.0;
    let tau = 0.3;

    for &(n_c, n_d) in plan.outcomes {
        let cfg = SystemConfig::new(plan.n_atoms, alpha, n_c, n_d, tau)?;
        for ch in &plan.channels {
            let instance = format!(
                "N={} alpha={alpha} tau={tau} n_c={n_c} n_d={n_d} {ch:?}",
                plan.n_atoms
            );
            let oracle = brute_force_channel_oracle(&cfg, ch, 12, 12)?;
            let closed = closed_form(&cfg, ch, mutation)?;
            results.push(result(
                "channel_oracle",
                instance.clone(),
                matrix_discrepancy(&closed, &oracle),
                ORACLE_TOL,
            ));
            let double = match *ch {
                ChannelSpec::PhaseDiffusion { kappa } => {
                    apply_phase_diffusion_double_sum(&cfg, kappa)?
                }
                ChannelSpec::LossGain { gamma, gain } => {
                    apply_loss_gain_double_sum(&cfg, gamma, gain)?
                }
                _ => unreachable!("plans hold optical channels only"),
            };
            results.push(result(
                "laguerre_double_sum",
                instance,
                closed.max_abs_diff(&double),
                DOUBLE_SUM_TOL,
            ));
        }
    }

    for (cfg, gamma) in &plan.attenuation {
        let reference = attenuation_reference(cfg, *gamma)?;
        let closed = closed_form(
            cfg,
            &ChannelSpec::LossGain {
                gamma: *gamma,
                gain: 0.0,
            },
            mutation,
        )?;
        results.push(result(
            "loss_attenuation",
            format!("{cfg:?} gamma={gamma}"),
            matrix_discrepancy(&closed, &reference),
            ATTENUATION_TOL,
        ));
    }

    for &(n, a, t) in &plan.interferometer {
        let worst = mz_evolution_oracle(n, a, t, 24)?;
        results.push(result(
            "interferometer",
            format!("N={n} alpha={a} tau={t}"),
            worst,
            INTERFEROMETER_TOL,
        ));
    }

    let completeness_cases: Vec<(ChannelSpec, f64, usize)> = match level {
        Level::Fast => vec![(ChannelSpec::PhaseDiffusion { kappa: 1.0 }, 0.3, 25)],
        Level::Full => vec![
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
        ],
    };
    for (ch, t, cutoff) in completeness_cases {
        let err = completeness_error(&ch, t, cutoff, 8)?;
        results.push(result(
            "kraus_completeness",
            format!("{ch:?} t={t}"),
            err,
            COMPLETENESS_TOL,
        ));
    }

    log::info!("oracle check ({level}) finished in {:.2?}", start.elapsed());
    Ok(Report { level, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_level_passes() {
        let report = run_oracle_check(Level::Fast).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert!(report.render().ends_with("PASS\n"));
    }

    #[test]
    fn corrupted_t2_is_caught() {
        let report = run_oracle_check_with(
            Level::Fast,
            Mutation {
                t2_relative_error: 1e-3,
            },
        )
        .unwrap();
        assert!(!report.passed());
        assert!(report
            .failures()
            .all(|r| r.instance.contains("LossGain") || r.check == "loss_attenuation"));
        assert!(report.render().contains("FAILED channel_oracle"));
    }

    #[test]
    fn level_names() {
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
        assert!("medium".parse::<Level>().is_err());
    }
}
