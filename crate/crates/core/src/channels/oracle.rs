//! Independent verification paths for the closed-form channel builders.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{loss_gain_kraus, phase_diffusion_kraus, AtomicDensityMatrix, ChannelSpec};
use crate::qnd::{pre_projection_state, AtomPhotonState, SystemConfig};
use crate::special::ln_factorial;
use crate::spin::max_abs_diff;
use crate::{Error, Result, C64};

/// Photon-space and Kraus-index truncation used by one oracle evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCutoffs {
    pub photon: usize,
    pub kraus: usize,
}

const CONVERGENCE_TOL: f64 = 1e-10;
const MAX_CUTOFF: usize = 80;

/// Row `n` of every Kraus operator of one mode, skipping rows that vanish.
fn kraus_rows(channel: &ChannelSpec, t: f64, n: usize, cut: OracleCutoffs) -> Vec<Vec<f64>> {
    let dim = cut.photon + 1;
    let mut rows = Vec::new();
    for a in 0..=cut.kraus {
        for b in 0..=cut.kraus {
            let k = match *channel {
                ChannelSpec::PhaseDiffusion { kappa } => {
                    phase_diffusion_kraus(a, b, kappa * t, dim)
                }
                ChannelSpec::LossGain { gamma, gain } => loss_gain_kraus(a, b, gamma, gain, t, dim),
                _ => unreachable!("validated by caller"),
            };
            let row: Vec<f64> = k.row(n).iter().copied().collect();
            if row.iter().any(|&x| x != 0.0) {
                rows.push(row);
            }
        }
    }
    rows
}

/// One oracle evaluation at fixed truncation, returning the unnormalised
/// conditional matrix.
fn oracle_at(cfg: &SystemConfig, channel: &ChannelSpec, cut: OracleCutoffs) -> DMatrix<C64> {
    let psi: AtomPhotonState = pre_projection_state(cfg, cut.photon).expect("validated config");
    let side = cut.photon + 1;
    let dim = cfg.dim();
    let rows_c = kraus_rows(channel, cfg.tau, cfg.n_c as usize, cut);
    let rows_d = kraus_rows(channel, cfg.tau, cfg.n_d as usize, cut);
    // w[l][atom * side + jc] = Σ_jd r_d[l][jd] ψ(atom, jc, jd)
    let w: Vec<Vec<C64>> = rows_d
        .par_iter()
        .map(|rd| {
            let mut out = vec![C64::new(0.0, 0.0); dim * side];
            for atom in 0..dim {
                let block = psi.photon_block(atom);
                for jc in 0..side {
                    out[atom * side + jc] =
                        (0..side).map(|jd| block[jc * side + jd] * rd[jd]).sum();
                }
            }
            out
        })
        .collect();
    rows_c
        .par_iter()
        .map(|rc| {
            let mut acc = DMatrix::<C64>::zeros(dim, dim);
            for wl in &w {
                let v = DVector::from_fn(dim, |atom, _| {
                    (0..side)
                        .map(|jc| wl[atom * side + jc] * rc[jc])
                        .sum::<C64>()
                });
                acc += &v * v.adjoint();
            }
            acc
        })
        .reduce(|| DMatrix::zeros(dim, dim), |a, b| a + b)
}

fn normalized(cfg: &SystemConfig, m: DMatrix<C64>) -> Result<AtomicDensityMatrix> {
    let tr = m.trace().re;
    if !(tr > 0.0) {
        return Err(Error::ImpossibleOutcome {
            n_c: cfg.n_c,
            n_d: cfg.n_d,
        });
    }
    AtomicDensityMatrix::from_matrix(cfg.n_atoms, m / C64::new(tr, 0.0), tr)
}

/// Applies the explicit Kraus double sums to the pre-detection atom-photon
/// state on a truncated Fock space, projects onto `⟨n_c|⟨n_d|` and
/// renormalises.
///
/// Starting from the given cutoffs, the truncation is accepted once raising
/// either cutoff by 2 moves no element by more than `1e-10`; otherwise both
/// grow by 4 up to 80 before giving up with [`Error::TailMass`].
pub fn brute_force_channel_oracle(
    cfg: &SystemConfig,
    channel: &ChannelSpec,
    photon_cutoff: usize,
    kraus_cutoff: usize,
) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    channel.validate()?;
    if cfg.n_atoms > 3 || cfg.alpha > 1.5 {
        return Err(Error::invalid(
            "channel oracle supports N ≤ 3 and alpha ≤ 1.5",
        ));
    }
    if !matches!(
        channel,
        ChannelSpec::PhaseDiffusion { .. } | ChannelSpec::LossGain { .. }
    ) {
        return Err(Error::invalid(
            "channel oracle supports phase diffusion and loss/gain only",
        ));
    }
    let min_photon = cfg.n_c.max(cfg.n_d) as usize;
    let mut cut = OracleCutoffs {
        photon: photon_cutoff.max(min_photon),
        kraus: kraus_cutoff,
    };
    loop {
        let base = oracle_at(cfg, channel, cut);
        let more_photons = oracle_at(
            cfg,
            channel,
            OracleCutoffs {
                photon: cut.photon + 2,
                ..cut
            },
        );
        let more_kraus = oracle_at(
            cfg,
            channel,
            OracleCutoffs {
                kraus: cut.kraus + 2,
                ..cut
            },
        );
        let change = max_abs_diff(&base, &more_photons).max(max_abs_diff(&base, &more_kraus));
        let scale = base.trace().re.abs().max(f64::MIN_POSITIVE);
        if change / scale <= CONVERGENCE_TOL {
            log::debug!("channel oracle converged at {cut:?}");
            return normalized(cfg, base);
        }
        if cut.photon >= MAX_CUTOFF || cut.kraus >= MAX_CUTOFF {
            return Err(Error::TailMass(format!(
                "channel oracle not converged at cutoffs {cut:?}: relative change {:e}",
                change / scale
            )));
        }
        cut.photon += 4;
        cut.kraus += 4;
    }
}

/// Pure photon loss (no gain) evaluated through the beamsplitter picture:
/// a coherence `|β⟩⟨β'|` becomes `⟨β'|β⟩^{1-η}`-weighted `|√η β⟩⟨√η β'|`
/// with transmission `η = e^{-2γτ}`, and the conditional matrix follows
/// from the resulting Fock amplitudes directly.
pub fn attenuation_reference(cfg: &SystemConfig, gamma: f64) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::LossGain { gamma, gain: 0.0 }.validate()?;
    let n = cfg.n_atoms;
    let eta = (-2.0 * gamma * cfg.tau).exp();
    let fock = |beta: C64, k: u32| -> C64 {
        let b = beta * eta.sqrt();
        (-0.5 * b.norm_sqr()).exp() * b.powu(k) / (0.5 * ln_factorial(k as u64)).exp()
    };
    let labels: Vec<(f64, C64, C64)> = (0..=n)
        .flat_map(|k1| (0..=n).map(move |k2| (k1, k2)))
        .map(|(k1, k2)| {
            let chi = cfg.chi(k1, k2);
            let pref = (cfg.ln_sqrt_binomials(k1, k2) - n as f64 * 2f64.ln()).exp();
            let bc = C64::new(cfg.alpha * chi.cos(), 0.0);
            let bd = C64::new(0.0, -cfg.alpha * chi.sin());
            (pref, bc, bd)
        })
        .collect();
    let ln_overlap =
        |b: C64, bp: C64| -> C64 { -(b.norm_sqr() + bp.norm_sqr()) / 2.0 + b * bp.conj() };
    let dim = cfg.dim();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let (p, bc, bd) = labels[i];
        let (q, bcp, bdp) = labels[j];
        let env = ((ln_overlap(bc, bcp) + ln_overlap(bd, bdp)) * (1.0 - eta)).exp();
        p * q
            * env
            * fock(bc, cfg.n_c)
            * fock(bcp, cfg.n_c).conj()
            * fock(bd, cfg.n_d)
            * fock(bdp, cfg.n_d).conj()
    });
    normalized(cfg, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_loss_gain, apply_phase_diffusion};

    fn cfg(nc: u32, nd: u32) -> SystemConfig {
        SystemConfig::new(2, 1.0, nc, nd, 0.3).unwrap()
    }

    #[test]
    fn oracle_matches_phase_diffusion() {
        for (nc, nd) in [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)] {
            let c = cfg(nc, nd);
            let o =
                brute_force_channel_oracle(&c, &ChannelSpec::PhaseDiffusion { kappa: 0.5 }, 12, 12)
                    .unwrap();
            let r = apply_phase_diffusion(&c, 0.5).unwrap();
            assert!(
                o.max_abs_diff(&r) < 1e-8,
                "({nc},{nd}): {}",
                o.max_abs_diff(&r)
            );
            assert!((o.outcome_weight / r.outcome_weight - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn oracle_matches_loss_gain() {
        for (nc, nd) in [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)] {
            let c = cfg(nc, nd);
            let ch = ChannelSpec::LossGain {
                gamma: 0.4,
                gain: 0.1,
            };
            let o = brute_force_channel_oracle(&c, &ch, 12, 12).unwrap();
            let r = apply_loss_gain(&c, 0.4, 0.1).unwrap();
            assert!(
                o.max_abs_diff(&r) < 1e-8,
                "({nc},{nd}): {}",
                o.max_abs_diff(&r)
            );
            assert!((o.outcome_weight / r.outcome_weight - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn oracle_without_noise_is_pure() {
        let c = cfg(1, 0);
        let o = brute_force_channel_oracle(&c, &ChannelSpec::PhaseDiffusion { kappa: 0.0 }, 12, 2)
            .unwrap();
        let r = apply_phase_diffusion(&c, 0.0).unwrap();
        assert!(o.max_abs_diff(&r) < 1e-10);
    }

    #[test]
    fn oracle_rejects_out_of_scope() {
        let big = SystemConfig::new(4, 1.0, 1, 0, 0.3).unwrap();
        assert!(brute_force_channel_oracle(
            &big,
            &ChannelSpec::PhaseDiffusion { kappa: 0.5 },
            10,
            10
        )
        .is_err());
        assert!(brute_force_channel_oracle(
            &cfg(1, 0),
            &ChannelSpec::Dephasing { rate: 0.5 },
            10,
            10
        )
        .is_err());
    }

    #[test]
    fn pure_loss_matches_attenuation() {
        let c = SystemConfig::new(3, 2.0, 3, 1, 0.4).unwrap();
        let a = attenuation_reference(&c, 0.5).unwrap();
        let r = apply_loss_gain(&c, 0.5, 0.0).unwrap();
        assert!(a.max_abs_diff(&r) < 1e-12, "{}", a.max_abs_diff(&r));
        assert!((a.outcome_weight / r.outcome_weight - 1.0).abs() < 1e-12);
    }
}
