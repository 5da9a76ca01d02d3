//! Log-domain combinatorics and polynomial kernels.
//!
//! Amplitudes such as `α^n e^{-|α|²/2} / √(n!)` or `C(N, k)` overflow double
//! precision long before the parameter ranges of interest (`n_c = 100`,
//! `α = 10`) are reached, so they are carried as a signed logarithm and only
//! exponentiated once a common scale has been removed.

use std::ops::{Div, Mul};

use statrs::function::factorial;

use crate::{Error, Result};

/// A signed real number stored as `sign * exp(ln_abs)`.
///
/// Zero is represented by `ln_abs = -inf`; its sign is kept at `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeight {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight {
        ln_abs: f64::NEG_INFINITY,
        sign: 1.0,
    };
    pub const ONE: LogWeight = LogWeight {
        ln_abs: 0.0,
        sign: 1.0,
    };

    pub fn new(ln_abs: f64, sign: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY || sign == 0.0 {
            Self::ZERO
        } else {
            LogWeight {
                ln_abs,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogWeight {
                ln_abs: x.abs().ln(),
                sign: x.signum(),
            }
        }
    }

    pub fn value(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    /// Value after dividing by `exp(ln_scale)`.
    pub fn scaled_value(self, ln_scale: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * (self.ln_abs - ln_scale).exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn powi(self, n: u32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        let sign = if n.is_multiple_of(2) { 1.0 } else { self.sign };
        LogWeight::new(self.ln_abs * n as f64, sign)
    }

    pub fn sqrt_abs(self) -> Self {
        LogWeight::new(0.5 * self.ln_abs, 1.0)
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight::new(self.ln_abs + rhs.ln_abs, self.sign * rhs.sign)
    }
}

impl Div for LogWeight {
    type Output = LogWeight;
    fn div(self, rhs: LogWeight) -> LogWeight {
        assert!(!rhs.is_zero(), "division by a zero LogWeight");
        if self.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight::new(self.ln_abs - rhs.ln_abs, self.sign * rhs.sign)
    }
}

/// Sum of signed log-domain terms, returned in log-domain.
pub fn log_sum(terms: &[LogWeight]) -> LogWeight {
    let max = terms
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| t.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogWeight::ZERO;
    }
    let s: f64 = terms.iter().map(|t| t.scaled_value(max)).sum();
    let w = LogWeight::from_value(s);
    LogWeight::new(w.ln_abs + max, w.sign)
}

pub fn ln_factorial(n: u64) -> f64 {
    factorial::ln_factorial(n)
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<LogWeight> {
    if k > n {
        return Err(Error::invalid(format!(
            "binomial index k={k} exceeds n={n}"
        )));
    }
    Ok(LogWeight::new(factorial::ln_binomial(n, k), 1.0))
}

/// Coherent-state Fock amplitude `α^n e^{-α²/2} / √(n!)` for real `α`.
pub fn log_poisson_amp(alpha: f64, n: u64) -> Result<LogWeight> {
    if !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be finite, got {alpha}")));
    }
    let base = -0.5 * alpha * alpha - 0.5 * ln_factorial(n);
    if n == 0 {
        return Ok(LogWeight::new(base, 1.0));
    }
    if alpha == 0.0 {
        return Ok(LogWeight::ZERO);
    }
    let sign = if n % 2 == 1 { alpha.signum() } else { 1.0 };
    Ok(LogWeight::new(n as f64 * alpha.abs().ln() + base, sign))
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Confluent hypergeometric function of the second kind at a non-positive
/// integer first argument, `U(-n, 1, x) = (-1)^n n! L_n(x)`.
pub fn hyperu_neg_int(n: u32, x: f64) -> LogWeight {
    let l = LogWeight::from_value(laguerre(n, x));
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    l * LogWeight::new(ln_factorial(n as u64), sign)
}

/// The kernel `K_n(a, y) = Σ_j n! / ((n-j)! (j!)²) · a^{n-j} y^j`.
///
/// This equals `a^n L_n(-y/a) = (-a)^n U(-n, 1, -y/a) / n!` and is what the
/// phase-diffusion (`a = u`, `y = z² X`) and loss/gain (`a = g T₁`,
/// `y = T₂² X`) closed forms need per photon mode. The scaled recurrence
///
/// ```text
/// (k+1) K_{k+1} = ((2k+1) a + y) K_k - k a² K_{k-1}
/// ```
///
/// stays finite at `a = 0` (where `K_n = y^n / n!`) and is rescaled on the
/// fly so that large `n` cannot overflow.
pub fn laguerre_kernel(n: u32, a: f64, y: f64) -> LogWeight {
    if n == 0 {
        return LogWeight::ONE;
    }
    let mut ln_scale = 0.0;
    let mut prev = 1.0_f64;
    let mut cur = a + y;
    for k in 1..n {
        let kf = k as f64;
        let next = (((2.0 * kf + 1.0) * a + y) * cur - kf * a * a * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let m = cur.abs();
        if m > 1e150 || (m < 1e-150 && m > 0.0) {
            prev /= m;
            cur /= m;
            ln_scale += m.ln();
        }
    }
    let w = LogWeight::from_value(cur);
    LogWeight::new(w.ln_abs + ln_scale, w.sign)
}

/// Direct summation of [`laguerre_kernel`], used as an independent check.
pub fn laguerre_kernel_sum(n: u32, a: f64, y: f64) -> LogWeight {
    let la = LogWeight::from_value(a);
    let ly = LogWeight::from_value(y);
    let ln_nf = ln_factorial(n as u64);
    let terms: Vec<LogWeight> = (0..=n)
        .map(|j| {
            let coef = ln_nf - ln_factorial((n - j) as u64) - 2.0 * ln_factorial(j as u64);
            LogWeight::new(coef, 1.0) * la.powi(n - j) * ly.powi(j)
        })
        .collect();
    log_sum(&terms)
}
