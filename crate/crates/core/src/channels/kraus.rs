//! Explicit single-mode Kraus operators on a truncated Fock space.

use nalgebra::DMatrix;

use super::{ChannelSpec, LossGainCoefficients, PhaseDiffusionCoefficients};
use crate::special::ln_factorial;
use crate::{Error, Result};

/// Annihilation operator on Fock states `0..dim`.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        dim,
        dim,
        |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 },
    )
}

/// Fills `⟨j - lower + raise| M |j⟩ = exp(ln_pref) · w^{exponent(j)} · √(j! (j-lower+raise)!) / (j-lower)!`
/// for the normally ordered product `c†^raise w^{c†c} c^lower` (or with the
/// number-operator weight applied after raising, via `weight_after`).
fn ordered_product(
    dim: usize,
    raise: usize,
    lower: usize,
    ln_pref: f64,
    ln_w: f64,
    weight_after: bool,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    if ln_pref == f64::NEG_INFINITY {
        return m;
    }
    let lf = |x: usize| ln_factorial(x as u64);
    for j in lower..dim {
        let out = j - lower + raise;
        if out >= dim {
            continue;
        }
        let photons = if weight_after { out } else { j - lower };
        let w = if photons == 0 {
            0.0
        } else {
            photons as f64 * ln_w
        };
        let ln = ln_pref + w + 0.5 * (lf(j) + lf(out)) - lf(j - lower);
        m[(out, j)] = ln.exp();
    }
    m
}

fn ln_pow(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.ln()
    }
}

/// Phase-diffusion Kraus operator
/// `√((κt)^{m+n} / ((κt+1)^{m+n+1} m! n!)) · c†^m z^{c†c} c^n`, `z = 1/(1+κt)`.
pub fn phase_diffusion_kraus(m: usize, n: usize, kappa_t: f64, dim: usize) -> DMatrix<f64> {
    let PhaseDiffusionCoefficients { z, .. } = PhaseDiffusionCoefficients::new(kappa_t);
    let ln_pref = 0.5
        * (ln_pow(kappa_t, m + n)
            - (m + n + 1) as f64 * (1.0 + kappa_t).ln()
            - ln_factorial(m as u64)
            - ln_factorial(n as u64));
    ordered_product(dim, m, n, ln_pref, z.ln(), false)
}

/// Loss/gain Kraus operator
/// `√(γ^p g^q T₁^{p+q} T₃ / (p! q! T₂^{2q})) · T₂^{c†c} c†^q c^p`.
pub fn loss_gain_kraus(
    p: usize,
    q: usize,
    gamma: f64,
    gain: f64,
    t: f64,
    dim: usize,
) -> DMatrix<f64> {
    let LossGainCoefficients { t1, t2, t3 } = LossGainCoefficients::new(gamma, gain, t);
    let ln_pref = 0.5
        * (ln_pow(gamma, p) + ln_pow(gain, q) + ln_pow(t1, p + q) + t3.ln()
            - ln_factorial(p as u64)
            - ln_factorial(q as u64)
            - 2.0 * ln_pow(t2, q));
    ordered_product(dim, q, p, ln_pref, t2.ln(), true)
}

/// Largest deviation of `Σ M†M` from the identity on Fock states
/// `0..=low`, summing both Kraus indices up to `kraus_cutoff` on a space
/// large enough that every contributing row is kept.
pub fn completeness_error(
    channel: &ChannelSpec,
    t: f64,
    kraus_cutoff: usize,
    low: usize,
) -> Result<f64> {
    channel.validate()?;
    let dim = low + kraus_cutoff + 1;
    let kraus = |a: usize, b: usize| -> Result<DMatrix<f64>> {
        match *channel {
            ChannelSpec::PhaseDiffusion { kappa } => {
                Ok(phase_diffusion_kraus(a, b, kappa * t, dim))
            }
            ChannelSpec::LossGain { gamma, gain } => Ok(loss_gain_kraus(a, b, gamma, gain, t, dim)),
            _ => Err(Error::invalid(
                "Kraus families exist for phase diffusion and loss/gain only",
            )),
        }
    };
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..=kraus_cutoff {
        for b in 0..=kraus_cutoff {
            let k = kraus(a, b)?;
            s += k.transpose() * &k;
        }
    }
    let block = s.view((0, 0), (low + 1, low + 1)).into_owned();
    Ok((block - DMatrix::identity(low + 1, low + 1)).abs().max())
}
