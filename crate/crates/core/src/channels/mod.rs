//! Decoherence channels applied during the QND preparation and the resulting
//! conditional atomic density matrices.
//!
//! The optical channels act on modes `c` and `d` for the same duration as the
//! QND interaction, so with `Ω = 1` every rate enters through the products
//! `κ̃τ`, `γ̃τ`, `g̃τ` and `Γ̃τ`. Because the channels only touch light, each
//! element `ρ[(k1,k2),(k1',k2')]` factorises into a per-mode scalar
//! `⟨n|E(|β⟩⟨β'|)|n⟩` with `β = α cos χ` (mode c) or `-iα sin χ` (mode d).
//! For both Kraus families this scalar has the form
//!
//! ```text
//! A · exp(-(|β|²+|β'|²)/2 + b β β'*) · K_n(a, s β β'*)
//! ```
//!
//! with [`laguerre_kernel`](crate::special::laguerre_kernel) `K_n`:
//! `(A, b, a, s) = (z, u, u, z²)` for phase diffusion and
//! `(T₃, γT₁, gT₁, T₂²)` for loss/gain.

mod kraus;
mod oracle;

pub use kraus::{annihilation, completeness_error, loss_gain_kraus, phase_diffusion_kraus};
pub use oracle::{attenuation_reference, brute_force_channel_oracle, OracleCutoffs};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qnd::{conditional_state, SystemConfig};
use crate::special::{laguerre_kernel, ln_factorial, log_sum, LogWeight};
use crate::spin::{joint_index, max_abs_diff, PureAtomicState};
use crate::{Error, Result, C64};

/// Which decoherence acts during the preparation, with its dimensionless rate(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    NoDecoherence,
    /// Optical phase diffusion at rate `κ̃ = κ/Ω` on both output modes.
    PhaseDiffusion {
        kappa: f64,
    },
    /// Photon loss `γ̃` and incoherent gain `g̃`.
    LossGain {
        gamma: f64,
        gain: f64,
    },
    /// Collective `S^z` dephasing of both ensembles at rate `Γ̃`.
    Dephasing {
        rate: f64,
    },
}

impl ChannelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ChannelSpec::NoDecoherence => "none",
            ChannelSpec::PhaseDiffusion { .. } => "phase",
            ChannelSpec::LossGain { .. } => "lossgain",
            ChannelSpec::Dephasing { .. } => "dephase",
        }
    }

    /// `(κ̃, γ̃, g̃, Γ̃)` with unused entries zero.
    pub fn rates(&self) -> [f64; 4] {
        match *self {
            ChannelSpec::NoDecoherence => [0.0; 4],
            ChannelSpec::PhaseDiffusion { kappa } => [kappa, 0.0, 0.0, 0.0],
            ChannelSpec::LossGain { gamma, gain } => [0.0, gamma, gain, 0.0],
            ChannelSpec::Dephasing { rate } => [0.0, 0.0, 0.0, rate],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.rates().iter().any(|r| !r.is_finite() || *r < 0.0);
        if bad {
            return Err(Error::invalid(format!(
                "channel rates must be finite and non-negative: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Normalised conditional atomic state together with the Born probability of
/// the outcome it was conditioned on.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDensityMatrix {
    pub n_atoms: usize,
    pub matrix: DMatrix<C64>,
    /// Trace of the unnormalised conditional matrix.
    pub outcome_weight: f64,
}

impl AtomicDensityMatrix {
    pub fn from_pure(state: &PureAtomicState, outcome_weight: f64) -> Self {
        AtomicDensityMatrix {
            n_atoms: state.n_atoms,
            matrix: state.density_matrix(),
            outcome_weight,
        }
    }

    /// Wraps an arbitrary matrix, checking only its shape.
    pub fn from_matrix(n_atoms: usize, matrix: DMatrix<C64>, outcome_weight: f64) -> Result<Self> {
        let dim = (n_atoms + 1) * (n_atoms + 1);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        Ok(AtomicDensityMatrix {
            n_atoms,
            matrix,
            outcome_weight,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn elem(&self, k1: usize, k2: usize, k1p: usize, k2p: usize) -> C64 {
        let n = self.n_atoms;
        self.matrix[(joint_index(k1, k2, n), joint_index(k1p, k2p, n))]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &AtomicDensityMatrix) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// Diagonal in the z-Fock basis, indexed `[k1][k2]`.
    pub fn z_populations(&self) -> DMatrix<f64> {
        let d = self.n_atoms + 1;
        DMatrix::from_fn(d, d, |k1, k2| self.elem(k1, k2, k1, k2).re)
    }

    /// Checks Hermiticity, unit trace and positivity at the given tolerances.
    pub fn validate(&self, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
        let h = self.hermiticity_error();
        if h > herm_tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian: deviation {h:e}"
            )));
        }
        let t = self.trace();
        if (t.re - 1.0).abs() > trace_tol || t.im.abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {t} differs from 1")));
        }
        let m = self.min_eigenvalue();
        if m < -psd_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }
}

/// `z = 1/(1+κt)` and `u = κt/(1+κt)` for phase diffusion over `κt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiffusionCoefficients {
    pub z: f64,
    pub u: f64,
}

impl PhaseDiffusionCoefficients {
    pub fn new(kappa_t: f64) -> Self {
        PhaseDiffusionCoefficients {
            z: 1.0 / (1.0 + kappa_t),
            u: kappa_t / (1.0 + kappa_t),
        }
    }
}

/// Loss/gain coefficients after time `t` at loss `γ` and gain `g`.
///
/// With `d = γ - g` and `s = (1 - e^{-2dt})/d`:
/// `T₁ = s/(1+gs)`, `T₂ = e^{-dt}/(1+gs)`, `T₃ = 1/(1+gs) = 1 - gT₁`.
/// For `|d| t < 1e-6` the quotient `s` is replaced by its series
/// `2t(1 - dt + (2/3)(dt)²)`, which is exact to double precision there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGainCoefficients {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

/// Below this `|γ - g| t` the loss/gain coefficients use the series form.
pub const LOSS_GAIN_SERIES_THRESHOLD: f64 = 1e-6;

impl LossGainCoefficients {
    pub fn new(gamma: f64, gain: f64, t: f64) -> Self {
        let d = gamma - gain;
        let x = d * t;
        let s = if x.abs() < LOSS_GAIN_SERIES_THRESHOLD {
            2.0 * t * (1.0 - x + 2.0 * x * x / 3.0)
        } else {
            -(-2.0 * x).exp_m1() / d
        };
        let den = 1.0 + gain * s;
        LossGainCoefficients {
            t1: s / den,
            t2: (-x).exp() / den,
            t3: 1.0 / den,
        }
    }

    /// Loss probability `1 - T₂²` (equals `1 - e^{-2γt}` without gain).
    pub fn loss_probability(&self) -> f64 {
        1.0 - self.t2 * self.t2
    }
}

/// Per-label quantities shared by every element of a closed-form build.
struct LabelData {
    ln_pref: f64,
    cos: f64,
    sin: f64,
    /// `k1 - k2 + N`, the index of the label's phase `χ`.
    diff: usize,
}

fn label_data(cfg: &SystemConfig) -> Vec<LabelData> {
    let n = cfg.n_atoms;
    let ln_half_n = -(n as f64) * 2f64.ln();
    let mut out = Vec::with_capacity(cfg.dim());
    for k1 in 0..=n {
        for k2 in 0..=n {
            let (sin, cos) = cfg.chi(k1, k2).sin_cos();
            out.push(LabelData {
                ln_pref: cfg.ln_sqrt_binomials(k1, k2) + ln_half_n,
                cos,
                sin,
                diff: k1 + n - k2,
            });
        }
    }
    out
}

/// Assembles a Hermitian real-symmetric matrix from log-domain elements,
/// computing the upper triangle only, then normalises it.
fn assemble<F>(cfg: &SystemConfig, element: F) -> Result<AtomicDensityMatrix>
where
    F: Fn(usize, usize) -> LogWeight + Sync,
{
    let dim = cfg.dim();
    let rows: Vec<Vec<LogWeight>> = (0..dim)
        .into_par_iter()
        .map(|i| (i..dim).map(|j| element(i, j)).collect())
        .collect();
    let max = rows
        .iter()
        .flatten()
        .filter(|w| !w.is_zero())
        .map(|w| w.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    let impossible = Error::ImpossibleOutcome {
        n_c: cfg.n_c,
        n_d: cfg.n_d,
    };
    if max == f64::NEG_INFINITY {
        return Err(impossible);
    }
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        for (off, w) in row.iter().enumerate() {
            let v = C64::new(w.scaled_value(max), 0.0);
            m[(i, i + off)] = v;
            m[(i + off, i)] = v;
        }
    }
    let tr = m.trace().re;
    if !(tr > 0.0) {
        return Err(impossible);
    }
    m /= C64::new(tr, 0.0);
    Ok(AtomicDensityMatrix {
        n_atoms: cfg.n_atoms,
        matrix: m,
        outcome_weight: (max + tr.ln()).exp(),
    })
}

fn pure_density(cfg: &SystemConfig) -> Result<AtomicDensityMatrix> {
    let cs = conditional_state(cfg)?;
    Ok(AtomicDensityMatrix::from_pure(
        &cs.state,
        cs.outcome_probability(),
    ))
}

/// Shared closed form for the two optical Kraus families (see module docs).
fn optical_closed_form(
    cfg: &SystemConfig,
    ln_amp: f64,
    cross: f64,
    kernel_a: f64,
    kernel_scale: f64,
) -> Result<AtomicDensityMatrix> {
    let labels = label_data(cfg);
    let a2 = cfg.alpha * cfg.alpha;
    let (nc, nd) = (cfg.n_c, cfg.n_d);
    // the photonic factor depends on the labels only through χ and χ', so it
    // is tabulated over the 2N+1 distinct phases
    let side = 2 * cfg.n_atoms + 1;
    let phases: Vec<(f64, f64)> = (0..side)
        .map(|d| (cfg.tau * (d as f64 - cfg.n_atoms as f64)).sin_cos())
        .collect();
    let table: Vec<LogWeight> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let ((s, c), (sp, cp)) = (phases[idx / side], phases[idx % side]);
            let xc = a2 * c * cp;
            let xd = a2 * s * sp;
            LogWeight::new(2.0 * ln_amp - a2 + cross * (xc + xd), 1.0)
                * laguerre_kernel(nc, kernel_a, kernel_scale * xc)
                * laguerre_kernel(nd, kernel_a, kernel_scale * xd)
        })
        .collect();
    assemble(cfg, |i, j| {
        let (p, q) = (&labels[i], &labels[j]);
        LogWeight::new(p.ln_pref + q.ln_pref, 1.0) * table[p.diff * side + q.diff]
    })
}

/// Conditional state after optical phase diffusion at rate `κ̃`.
pub fn apply_phase_diffusion(cfg: &SystemConfig, kappa: f64) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::PhaseDiffusion { kappa }.validate()?;
    if kappa == 0.0 {
        return pure_density(cfg);
    }
    let PhaseDiffusionCoefficients { z, u } = PhaseDiffusionCoefficients::new(kappa * cfg.tau);
    optical_closed_form(cfg, z.ln(), u, u, z * z)
}

/// The optical closed form assembled from the explicit double sum over the
/// two kernel indices instead of the Laguerre recurrence. Slow; used as a
/// cross-check of the recurrence.
fn optical_double_sum(
    cfg: &SystemConfig,
    ln_amp: f64,
    cross: f64,
    kernel_a: f64,
    kernel_scale: f64,
) -> Result<AtomicDensityMatrix> {
    let labels = label_data(cfg);
    let a2 = cfg.alpha * cfg.alpha;
    let (nc, nd) = (cfg.n_c, cfg.n_d);
    let lf = |x: u32| ln_factorial(x as u64);
    // a = 0 leaves only the m = 0 terms
    let (mc_max, md_max) = if kernel_a == 0.0 { (0, 0) } else { (nc, nd) };
    let la = LogWeight::from_value(kernel_a);
    let ls = LogWeight::from_value(kernel_scale);
    assemble(cfg, |i, j| {
        let (p, q) = (&labels[i], &labels[j]);
        let xc = LogWeight::from_value(a2 * p.cos * q.cos);
        let xd = LogWeight::from_value(a2 * p.sin * q.sin);
        let mut terms = Vec::with_capacity(((mc_max + 1) * (md_max + 1)) as usize);
        for m in 0..=mc_max {
            for mp in 0..=md_max {
                let ln_coef =
                    lf(nc) + lf(nd) - lf(m) - lf(mp) - 2.0 * lf(nc - m) - 2.0 * lf(nd - mp);
                terms.push(
                    LogWeight::new(ln_coef, 1.0)
                        * ls.powi(nc - m + nd - mp)
                        * la.powi(m + mp)
                        * xc.powi(nc - m)
                        * xd.powi(nd - mp),
                );
            }
        }
        let ln_d = -a2 + cross * a2 * (p.cos * q.cos + p.sin * q.sin);
        LogWeight::new(p.ln_pref + q.ln_pref + 2.0 * ln_amp + ln_d, 1.0) * log_sum(&terms)
    })
}

/// [`apply_phase_diffusion`] through the explicit double sum.
pub fn apply_phase_diffusion_double_sum(
    cfg: &SystemConfig,
    kappa: f64,
) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::PhaseDiffusion { kappa }.validate()?;
    let PhaseDiffusionCoefficients { z, u } = PhaseDiffusionCoefficients::new(kappa * cfg.tau);
    optical_double_sum(cfg, z.ln(), u, u, z * z)
}

/// [`apply_loss_gain`] through the explicit double sum.
pub fn apply_loss_gain_double_sum(
    cfg: &SystemConfig,
    gamma: f64,
    gain: f64,
) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::LossGain { gamma, gain }.validate()?;
    let LossGainCoefficients { t1, t2, t3 } = LossGainCoefficients::new(gamma, gain, cfg.tau);
    optical_double_sum(cfg, t3.ln(), gamma * t1, gain * t1, t2 * t2)
}

/// Conditional state after photon loss `γ̃` and gain `g̃`.
pub fn apply_loss_gain(cfg: &SystemConfig, gamma: f64, gain: f64) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::LossGain { gamma, gain }.validate()?;
    if gamma == 0.0 && gain == 0.0 {
        return pure_density(cfg);
    }
    let coeffs = LossGainCoefficients::new(gamma, gain, cfg.tau);
    apply_loss_gain_with(cfg, gamma, gain, &coeffs)
}

/// [`apply_loss_gain`] with caller-supplied coefficients.
pub fn apply_loss_gain_with(
    cfg: &SystemConfig,
    gamma: f64,
    gain: f64,
    coeffs: &LossGainCoefficients,
) -> Result<AtomicDensityMatrix> {
    let LossGainCoefficients { t1, t2, t3 } = *coeffs;
    optical_closed_form(cfg, t3.ln(), gamma * t1, gain * t1, t2 * t2)
}

/// Conditional state under `S^z` dephasing of both ensembles at rate `Γ̃`.
pub fn apply_dephasing(cfg: &SystemConfig, rate: f64) -> Result<AtomicDensityMatrix> {
    cfg.validate()?;
    ChannelSpec::Dephasing { rate }.validate()?;
    let mut rho = pure_density(cfg)?;
    if rate == 0.0 {
        return Ok(rho);
    }
    let d = cfg.n_atoms + 1;
    let g = 2.0 * rate * cfg.tau;
    for i in 0..d * d {
        for j in 0..d * d {
            let (k1, k2) = (i / d, i % d);
            let (k1p, k2p) = (j / d, j % d);
            let dk1 = k1 as f64 - k1p as f64;
            let dk2 = k2 as f64 - k2p as f64;
            rho.matrix[(i, j)] *= (-g * (dk1 * dk1 + dk2 * dk2)).exp();
        }
    }
    Ok(rho)
}

/// Dispatches to the closed form for `channel`.
pub fn apply_channel(cfg: &SystemConfig, channel: &ChannelSpec) -> Result<AtomicDensityMatrix> {
    match *channel {
        ChannelSpec::NoDecoherence => {
            cfg.validate()?;
            pure_density(cfg)
        }
        ChannelSpec::PhaseDiffusion { kappa } => apply_phase_diffusion(cfg, kappa),
        ChannelSpec::LossGain { gamma, gain } => apply_loss_gain(cfg, gamma, gain),
        ChannelSpec::Dephasing { rate } => apply_dephasing(cfg, rate),
    }
}
