//! The atomic state conditioned on a photon-count outcome `(n_c, n_d)`.
//!
//! Light in a coherent state `|α⟩` passes a Mach-Zehnder interferometer
//! whose arms interact with ensemble 1 and 2 through `H ∝ (S^z_1 - S^z_2) J^z`.
//! Before detection the joint state is
//!
//! ```text
//! 2^-N Σ √(C(N,k1) C(N,k2)) |k1,k2⟩ |α cos χ⟩_c |-iα sin χ⟩_d,   χ = (k1-k2) τ
//! ```
//!
//! and projecting onto `⟨n_c|⟨n_d|` leaves amplitudes weighted by the
//! C-function [`c_function`].

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::special::{ln_factorial, log_binomial, log_poisson_amp, LogWeight};
use crate::spin::{joint_index, PureAtomicState};
use crate::{Error, Result, C64};

/// Parameters of one QND preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Atoms per ensemble.
    #[serde(rename = "N")]
    pub n_atoms: usize,
    /// Real coherent amplitude of the input light.
    pub alpha: f64,
    pub n_c: u32,
    pub n_d: u32,
    /// Dimensionless interaction time `τ = Ω t`.
    pub tau: f64,
}

impl SystemConfig {
    pub fn new(n_atoms: usize, alpha: f64, n_c: u32, n_d: u32, tau: f64) -> Result<Self> {
        let cfg = SystemConfig {
            n_atoms,
            alpha,
            n_c,
            n_d,
            tau,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(Error::invalid("atom number N must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::invalid(format!(
                "tau must be finite and non-negative, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn with_tau(self, tau: f64) -> Self {
        SystemConfig { tau, ..self }
    }

    pub fn dim(&self) -> usize {
        (self.n_atoms + 1) * (self.n_atoms + 1)
    }

    /// `χ = (k1 - k2) τ`.
    pub fn chi(&self, k1: usize, k2: usize) -> f64 {
        (k1 as f64 - k2 as f64) * self.tau
    }

    /// `½ ln(C(N,k1) C(N,k2))`.
    pub(crate) fn ln_sqrt_binomials(&self, k1: usize, k2: usize) -> f64 {
        let n = self.n_atoms as u64;
        // indices are always in range here
        let b1 = log_binomial(n, k1 as u64)
            .map(|w| w.ln_abs)
            .unwrap_or(f64::NAN);
        let b2 = log_binomial(n, k2 as u64)
            .map(|w| w.ln_abs)
            .unwrap_or(f64::NAN);
        0.5 * (b1 + b2)
    }
}

/// `C^α_{n_c n_d}(χ) = α^{n_c+n_d} e^{-α²/2} cos^{n_c}χ sin^{n_d}χ / √(n_c! n_d!)`.
pub fn c_function(cfg: &SystemConfig, chi: f64) -> LogWeight {
    let total = (cfg.n_c + cfg.n_d) as u64;
    let Ok(amp) = log_poisson_amp(cfg.alpha, total) else {
        return LogWeight::ZERO;
    };
    // log_poisson_amp carries 1/√((n_c+n_d)!); swap it for 1/√(n_c! n_d!).
    let fix =
        0.5 * (ln_factorial(total) - ln_factorial(cfg.n_c as u64) - ln_factorial(cfg.n_d as u64));
    let (s, c) = chi.sin_cos();
    amp * LogWeight::new(fix, 1.0)
        * LogWeight::from_value(c).powi(cfg.n_c)
        * LogWeight::from_value(s).powi(cfg.n_d)
}

/// The normalised conditional state together with its normalisation `𝒩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub state: PureAtomicState,
    /// `ln 𝒩`, where `𝒩 = Σ C(N,k1) C(N,k2) |C(χ)|²`.
    pub ln_norm: f64,
}

impl ConditionalState {
    pub fn norm(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// Born probability of the outcome, `𝒩 / 4^N`.
    pub fn outcome_probability(&self) -> f64 {
        (self.ln_norm - self.state.n_atoms as f64 * 4f64.ln()).exp()
    }
}

/// Unnormalised log-domain amplitudes `√(C C) C(χ)` of the conditional state.
pub(crate) fn conditional_log_amplitudes(cfg: &SystemConfig) -> Vec<LogWeight> {
    let n = cfg.n_atoms;
    let mut out = Vec::with_capacity(cfg.dim());
    for k1 in 0..=n {
        for k2 in 0..=n {
            let w = LogWeight::new(cfg.ln_sqrt_binomials(k1, k2), 1.0)
                * c_function(cfg, cfg.chi(k1, k2));
            out.push(w);
        }
    }
    out
}

/// The atomic state after detecting `(n_c, n_d)` photons.
pub fn conditional_state(cfg: &SystemConfig) -> Result<ConditionalState> {
    cfg.validate()?;
    let logs = conditional_log_amplitudes(cfg);
    let max = logs
        .iter()
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
    let amps = DVector::from_iterator(
        logs.len(),
        logs.iter().map(|w| C64::new(w.scaled_value(max), 0.0)),
    );
    let scaled_norm_sqr = amps.norm_squared();
    if scaled_norm_sqr == 0.0 {
        return Err(impossible);
    }
    let ln_norm = 2.0 * max + scaled_norm_sqr.ln();
    let state = PureAtomicState::from_unnormalized(cfg.n_atoms, amps)?;
    Ok(ConditionalState { state, ln_norm })
}

/// Probability of detecting `(n_c, n_d)`, zero for impossible outcomes.
pub fn outcome_probability(cfg: &SystemConfig) -> Result<f64> {
    match conditional_state(cfg) {
        Ok(s) => Ok(s.outcome_probability()),
        Err(Error::ImpossibleOutcome { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Gaussian shape of `|C(χ)|` for short times: peak at
/// `½ arccos((n_c-n_d)/(n_c+n_d))`, width `1/√(n_c+n_d)`. Unnormalised.
pub fn gaussian_c_approx(n_c: u32, n_d: u32, chi: f64) -> Result<f64> {
    let total = n_c + n_d;
    if total == 0 {
        return Err(Error::invalid("gaussian approximation needs n_c + n_d > 0"));
    }
    let t = total as f64;
    let peak = 0.5 * ((n_c as f64 - n_d as f64) / t).acos();
    let sigma2 = 1.0 / t;
    Ok((-(chi.abs() - peak).powi(2) / (2.0 * sigma2)).exp())
}

/// Diagonal approximation `Σ_k exp(-(2/N)(k - N/2)²) |k⟩|k⟩`, normalised.
pub fn short_time_approx_state(n_atoms: usize) -> Result<PureAtomicState> {
    if n_atoms < 1 {
        return Err(Error::invalid("atom number N must be at least 1"));
    }
    let n = n_atoms as f64;
    let dim = n_atoms + 1;
    let amps = DVector::from_fn(dim * dim, |i, _| {
        let (k1, k2) = (i / dim, i % dim);
        if k1 == k2 {
            C64::new((-(2.0 / n) * (k1 as f64 - n / 2.0).powi(2)).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    PureAtomicState::from_unnormalized(n_atoms, amps)
}

/// Atom-photon amplitudes on a truncated two-mode Fock space, indexed by
/// joint atomic label and photon numbers `(j_c, j_d)`, each `≤ cutoff`.
#[derive(Debug, Clone)]
pub struct AtomPhotonState {
    pub n_atoms: usize,
    pub cutoff: usize,
    data: Vec<C64>,
}

impl AtomPhotonState {
    fn zeros(n_atoms: usize, cutoff: usize) -> Self {
        let side = cutoff + 1;
        AtomPhotonState {
            n_atoms,
            cutoff,
            data: vec![C64::new(0.0, 0.0); (n_atoms + 1) * (n_atoms + 1) * side * side],
        }
    }

    #[inline]
    fn idx(&self, atom: usize, jc: usize, jd: usize) -> usize {
        let side = self.cutoff + 1;
        (atom * side + jc) * side + jd
    }

    pub fn amp(&self, atom: usize, jc: usize, jd: usize) -> C64 {
        self.data[self.idx(atom, jc, jd)]
    }

    /// Photon block `[j_c][j_d]` for one atomic label, row-major.
    pub fn photon_block(&self, atom: usize) -> &[C64] {
        let side = self.cutoff + 1;
        let start = atom * side * side;
        &self.data[start..start + side * side]
    }

    pub fn max_abs_diff(&self, other: &AtomPhotonState) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Truncated coherent-state amplitudes `⟨j|β⟩`, `j ≤ cutoff`.
pub fn coherent_amplitudes(beta: C64, cutoff: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut a = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for j in 0..=cutoff {
        out.push(a);
        a = a * beta / ((j + 1) as f64).sqrt();
    }
    out
}

/// Poisson(`mean`) mass above `cutoff`.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut p = (-mean).exp();
    for j in 0..=cutoff {
        p *= mean / (j + 1) as f64;
    }
    // summed directly; 1 - head would cancel
    let mut tail = 0.0;
    let mut j = cutoff + 1;
    while p > 1e-300 && j < cutoff + 10_000 {
        tail += p;
        p *= mean / (j + 1) as f64;
        j += 1;
    }
    tail
}

/// Pre-detection atom-photon state written out in the photon Fock basis.
pub fn pre_projection_state(cfg: &SystemConfig, cutoff: usize) -> Result<AtomPhotonState> {
    cfg.validate()?;
    let n = cfg.n_atoms;
    let mut st = AtomPhotonState::zeros(n, cutoff);
    let ln_quarter = -(n as f64) * 2f64.ln();
    for k1 in 0..=n {
        for k2 in 0..=n {
            let atom = joint_index(k1, k2, n);
            let pref = (cfg.ln_sqrt_binomials(k1, k2) + ln_quarter).exp();
            let chi = cfg.chi(k1, k2);
            let c = coherent_amplitudes(C64::new(cfg.alpha * chi.cos(), 0.0), cutoff);
            let d = coherent_amplitudes(C64::new(0.0, -cfg.alpha * chi.sin()), cutoff);
            for jc in 0..=cutoff {
                for jd in 0..=cutoff {
                    let i = st.idx(atom, jc, jd);
                    st.data[i] = c[jc] * d[jd] * pref;
                }
            }
        }
    }
    Ok(st)
}

/// 50:50 beamsplitter `x† → (u† + v†)/√2`, `y† → (u† - v†)/√2` on a two-mode
/// block truncated to total photon number `≤ cutoff` (which it preserves).
fn beamsplitter(input: &[C64], cutoff: usize) -> Vec<C64> {
    let side = cutoff + 1;
    let mut out = vec![C64::new(0.0, 0.0); side * side];
    let lf = |x: usize| ln_factorial(x as u64);
    for n1 in 0..=cutoff {
        for n2 in 0..=(cutoff - n1) {
            let a = input[n1 * side + n2];
            if a.norm() == 0.0 {
                continue;
            }
            let tot = n1 + n2;
            let ln_pref = -0.5 * tot as f64 * 2f64.ln() - 0.5 * (lf(n1) + lf(n2));
            for i in 0..=n1 {
                for j in 0..=n2 {
                    let nu = i + j;
                    let nv = tot - nu;
                    let ln_c = lf(n1) - lf(i) - lf(n1 - i) + lf(n2) - lf(j) - lf(n2 - j)
                        + 0.5 * (lf(nu) + lf(nv));
                    let sign = if (n2 - j) % 2 == 0 { 1.0 } else { -1.0 };
                    out[nu * side + nv] += a * (sign * (ln_pref + ln_c).exp());
                }
            }
        }
    }
    out
}

/// The interferometer run explicitly: coherent input, first beamsplitter,
/// QND phase `exp(-i (k1-k2) τ (n_1 - n_2))`, second beamsplitter.
pub fn mz_interferometer_state(
    n_atoms: usize,
    alpha: f64,
    tau: f64,
    cutoff: usize,
) -> Result<AtomPhotonState> {
    if !(1..=2).contains(&n_atoms) {
        return Err(Error::invalid("interferometer oracle supports N in 1..=2"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "interferometer oracle supports 0 ≤ alpha ≤ 1",
        ));
    }
    let tail = poisson_tail(alpha * alpha, cutoff);
    if tail >= 1e-12 {
        return Err(Error::TailMass(format!(
            "photon cutoff {cutoff} leaves tail mass {tail:e} for alpha={alpha}"
        )));
    }
    let side = cutoff + 1;
    let mut input = vec![C64::new(0.0, 0.0); side * side];
    for (j, a) in coherent_amplitudes(C64::new(alpha, 0.0), cutoff)
        .into_iter()
        .enumerate()
    {
        input[j * side] = a;
    }
    let arms = beamsplitter(&input, cutoff);
    let atoms = crate::spin::spin_coherent_state(std::f64::consts::FRAC_PI_2, 0.0, n_atoms)?;
    let mut st = AtomPhotonState::zeros(n_atoms, cutoff);
    for k1 in 0..=n_atoms {
        for k2 in 0..=n_atoms {
            let atom = joint_index(k1, k2, n_atoms);
            let chi = (k1 as f64 - k2 as f64) * tau;
            let mut phased = arms.clone();
            for n1 in 0..=cutoff {
                for n2 in 0..=cutoff {
                    let ph = C64::from_polar(1.0, -chi * (n1 as f64 - n2 as f64));
                    phased[n1 * side + n2] *= ph;
                }
            }
            let out = beamsplitter(&phased, cutoff);
            let a = atoms[k1] * atoms[k2];
            for jc in 0..=cutoff {
                for jd in 0..=cutoff {
                    let i = st.idx(atom, jc, jd);
                    st.data[i] = a * out[jc * side + jd];
                }
            }
        }
    }
    Ok(st)
}

/// Runs the explicit interferometer and returns the largest elementwise
/// deviation from the closed-form pre-detection state, restricted to
/// `j_c + j_d ≤ cutoff` where the truncation is exact.
pub fn mz_evolution_oracle(n_atoms: usize, alpha: f64, tau: f64, cutoff: usize) -> Result<f64> {
    let explicit = mz_interferometer_state(n_atoms, alpha, tau, cutoff)?;
    let cfg = SystemConfig::new(n_atoms, alpha, 0, 0, tau)?;
    let closed = pre_projection_state(&cfg, cutoff)?;
    let mut worst = 0.0f64;
    for atom in 0..cfg.dim() {
        for jc in 0..=cutoff {
            for jd in 0..=(cutoff - jc) {
                worst = worst.max((explicit.amp(atom, jc, jd) - closed.amp(atom, jc, jd)).norm());
            }
        }
    }
    Ok(worst)
}
