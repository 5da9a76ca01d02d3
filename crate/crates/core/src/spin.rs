//! Schwinger-boson spin operators on the symmetric sector of `N` two-level
//! atoms.
//!
//! The single-ensemble basis is the z-Fock basis `|k⟩`, `k = 0..=N`, with `k`
//! atoms in the upper level, so `S^z |k⟩ = (2k - N) |k⟩`. The operators have
//! eigenvalue spacing 2 and obey `[S^a, S^b] = 2i ε_abc S^c`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::special::ln_factorial;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::Unknown {
                kind: "axis",
                name: s.to_string(),
            }),
        }
    }
}

/// Flattened index of the joint label `(k1, k2)`.
#[inline]
pub fn joint_index(k1: usize, k2: usize, n_atoms: usize) -> usize {
    k1 * (n_atoms + 1) + k2
}

/// A labelled Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub label: String,
    pub matrix: DMatrix<C64>,
}

impl Observable {
    pub fn new(label: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(Observable {
            label: label.into(),
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Observable {
            label: "I".into(),
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn check_n(n_atoms: usize) -> Result<()> {
    if n_atoms < 1 {
        return Err(Error::invalid("atom number N must be at least 1"));
    }
    Ok(())
}

/// `S^axis` for one ensemble of `n_atoms` atoms.
pub fn spin_operator(axis: Axis, n_atoms: usize) -> Result<Observable> {
    check_n(n_atoms)?;
    let dim = n_atoms + 1;
    let n = n_atoms as f64;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        match axis {
            Axis::Z => m[(k, k)] = C64::new(2.0 * kf - n, 0.0),
            Axis::X | Axis::Y => {
                if k < n_atoms {
                    // e†g |k⟩ = √((k+1)(N-k)) |k+1⟩
                    let up = ((kf + 1.0) * (n - kf)).sqrt();
                    let (raise, lower) = match axis {
                        Axis::X => (C64::new(up, 0.0), C64::new(up, 0.0)),
                        // S^y = -i e†g + i g†e
                        _ => (C64::new(0.0, -up), C64::new(0.0, up)),
                    };
                    m[(k + 1, k)] = raise;
                    m[(k, k + 1)] = lower;
                }
            }
        }
    }
    Ok(Observable {
        label: format!("S{axis}"),
        matrix: m,
    })
}

/// Spin coherent state `|θ, φ⟩⟩` as an amplitude vector over `|k⟩`.
pub fn spin_coherent_state(theta: f64, phi: f64, n_atoms: usize) -> Result<DVector<C64>> {
    check_n(n_atoms)?;
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::invalid(format!("theta={theta} outside [0, π]")));
    }
    if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&phi) {
        return Err(Error::invalid(format!("phi={phi} outside [-π, π]")));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let nf = n_atoms as u64;
    let v = DVector::from_fn(n_atoms + 1, |k, _| {
        let k64 = k as u64;
        let binom = (0.5 * (ln_factorial(nf) - ln_factorial(k64) - ln_factorial(nf - k64))).exp();
        let mag = binom * c.powi(k as i32) * s.powi((n_atoms - k) as i32);
        C64::from_polar(1.0, (n_atoms - k) as f64 * phi) * mag
    });
    let norm = v.norm();
    Ok(v / C64::new(norm, 0.0))
}

/// Matrix of `exp(-i S^axis θ/2)` in the z-Fock basis.
///
/// The y rotation is evaluated from the closed-form finite sum for its
/// matrix elements. It is the active rotation by angle `θ` about y, so that
/// `U† S^z U = cos θ S^z - sin θ S^x` and `U |N⟩` points along `+x` at
/// `θ = π/2`. The x rotation follows from `S^x = V† S^y V` with
/// `V = exp(i S^z π/4)`, which multiplies each y element by `i^(k-k')`.
/// z rotations are diagonal phases.
pub fn rotation_matrix(axis: Axis, theta: f64, n_atoms: usize) -> Result<DMatrix<C64>> {
    check_n(n_atoms)?;
    let dim = n_atoms + 1;
    match axis {
        Axis::Z => Ok(DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                C64::from_polar(1.0, -(2.0 * r as f64 - n_atoms as f64) * theta / 2.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })),
        Axis::Y => Ok(DMatrix::from_fn(dim, dim, |k, kp| {
            C64::new(y_rotation_element(k, kp, theta, n_atoms), 0.0)
        })),
        Axis::X => Ok(DMatrix::from_fn(dim, dim, |k, kp| {
            let phase = i_pow(k as i64 - kp as i64);
            phase * y_rotation_element(k, kp, theta, n_atoms)
        })),
    }
}

fn i_pow(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn y_rotation_element(k: usize, kp: usize, theta: f64, n_atoms: usize) -> f64 {
    let (s, c) = (theta / 2.0).sin_cos();
    let lf = |x: usize| ln_factorial(x as u64);
    let ln_pref = 0.5 * (lf(kp) + lf(n_atoms - kp) + lf(k) + lf(n_atoms - k));
    let lo = k.saturating_sub(kp);
    let hi = k.min(n_atoms - kp);
    let mut sum = 0.0;
    for j in lo..=hi {
        let ln_den = lf(k - j) + lf(n_atoms - kp - j) + lf(j) + lf(kp + j - k);
        let cos_pow = (k + n_atoms) as i32 - kp as i32 - 2 * j as i32;
        let sin_pow = (2 * j + kp) as i32 - k as i32;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (ln_pref - ln_den).exp() * c.powi(cos_pow) * s.powi(sin_pow);
    }
    sum
}

/// A normalised state of the two ensembles over joint labels `(k1, k2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureAtomicState {
    pub n_atoms: usize,
    pub amplitudes: DVector<C64>,
}

impl PureAtomicState {
    /// Builds a state from unnormalised amplitudes.
    pub fn from_unnormalized(n_atoms: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let dim = (n_atoms + 1) * (n_atoms + 1);
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState(format!(
                "cannot normalise, norm={norm}"
            )));
        }
        Ok(PureAtomicState {
            n_atoms,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    /// Product state `a ⊗ b` of two single-ensemble vectors.
    pub fn product(a: &DVector<C64>, b: &DVector<C64>) -> Result<Self> {
        if a.len() != b.len() || a.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        let n = a.len() - 1;
        let amps = DVector::from_fn(a.len() * b.len(), |i, _| a[i / (n + 1)] * b[i % (n + 1)]);
        Self::from_unnormalized(n, amps)
    }

    /// `Σ_k |k⟩|k⟩ / √(N+1)`.
    pub fn maximally_correlated(n_atoms: usize) -> Self {
        let dim = n_atoms + 1;
        let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        let amplitudes = DVector::from_fn(dim * dim, |i, _| {
            if i / dim == i % dim {
                amp
            } else {
                C64::new(0.0, 0.0)
            }
        });
        PureAtomicState {
            n_atoms,
            amplitudes,
        }
    }

    pub fn amplitude(&self, k1: usize, k2: usize) -> C64 {
        self.amplitudes[joint_index(k1, k2, self.n_atoms)]
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn overlap(&self, other: &PureAtomicState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}
