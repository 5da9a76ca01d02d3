//! Observables and entanglement/nonlocality criteria on conditional states.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, AtomicDensityMatrix, ChannelSpec};
use crate::qnd::SystemConfig;
use crate::spin::{rotation_matrix, spin_operator, Axis, Observable};
use crate::{Error, Result, C64};

/// Hermiticity tolerance for inputs to spectral metrics.
const HERMITICITY_TOL: f64 = 1e-8;
/// Eigenvalues of magnitude below this count as zero, with `sgn(0) = +1`.
pub const SIGN_ZERO_TOL: f64 = 1e-9;

fn check_dim(rho: &AtomicDensityMatrix, a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<()> {
    let d = rho.n_atoms + 1;
    for m in [a, b] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
    }
    if rho.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: rho.dim(),
        });
    }
    Ok(())
}

/// `Tr[ρ (A ⊗ B)]` for arbitrary (not necessarily Hermitian) factors.
fn expect_complex(rho: &AtomicDensityMatrix, a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<C64> {
    check_dim(rho, a, b)?;
    let d = rho.n_atoms + 1;
    let m = &rho.matrix;
    let mut acc = C64::new(0.0, 0.0);
    for k1 in 0..d {
        for k1p in 0..d {
            let a_el = a[(k1p, k1)];
            if a_el == C64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for k2 in 0..d {
                for k2p in 0..d {
                    let b_el = b[(k2p, k2)];
                    if b_el != C64::new(0.0, 0.0) {
                        inner += m[(k1 * d + k2, k1p * d + k2p)] * b_el;
                    }
                }
            }
            acc += inner * a_el;
        }
    }
    Ok(acc)
}

/// `Tr[ρ (A ⊗ B)]` with `A` on ensemble 1 and `B` on ensemble 2.
pub fn expect(rho: &AtomicDensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    Ok(expect_complex(rho, &a.matrix, &b.matrix)?.re)
}

/// Which ensemble a single-ensemble observable acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    First,
    Second,
}

/// Expectation of an observable on one ensemble (identity on the other).
pub fn expect_local(rho: &AtomicDensityMatrix, which: Ensemble, a: &Observable) -> Result<f64> {
    let id = Observable::identity(rho.n_atoms + 1);
    match which {
        Ensemble::First => expect(rho, a, &id),
        Ensemble::Second => expect(rho, &id, a),
    }
}

/// Relative sign in the two-ensemble combination `S₁^a ± S₂^a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combo {
    Plus,
    Minus,
}

impl Combo {
    fn sign(self) -> f64 {
        match self {
            Combo::Plus => 1.0,
            Combo::Minus => -1.0,
        }
    }
}

/// `Var(S₁^a ± S₂^a)`.
pub fn variance_of_combo(rho: &AtomicDensityMatrix, axis: Axis, combo: Combo) -> Result<f64> {
    let n = rho.n_atoms;
    let s = spin_operator(axis, n)?.matrix;
    let id = DMatrix::<C64>::identity(n + 1, n + 1);
    let s2 = &s * &s;
    let sign = combo.sign();
    let m1 = expect_complex(rho, &s, &id)?.re;
    let m2 = expect_complex(rho, &id, &s)?.re;
    let sq = expect_complex(rho, &s2, &id)?.re
        + expect_complex(rho, &id, &s2)?.re
        + 2.0 * sign * expect_complex(rho, &s, &s)?.re;
    let mean = m1 + sign * m2;
    Ok(sq - mean * mean)
}

/// Single-ensemble change of basis whose columns are `|k⟩^{(l)}`.
pub fn basis_rotation(axis: Axis, n_atoms: usize) -> Result<DMatrix<C64>> {
    match axis {
        Axis::Z => Ok(DMatrix::identity(n_atoms + 1, n_atoms + 1)),
        Axis::X => rotation_matrix(Axis::Y, FRAC_PI_2, n_atoms),
        Axis::Y => Ok(rotation_matrix(Axis::Z, FRAC_PI_2, n_atoms)?
            * rotation_matrix(Axis::Y, FRAC_PI_2, n_atoms)?),
    }
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// `p_l(k₁, k₂) = ⟨k₁ k₂|^{(l)} ρ |k₁ k₂⟩^{(l)}`, indexed `[k1][k2]`.
pub fn probability_distribution(rho: &AtomicDensityMatrix, basis: Axis) -> Result<DMatrix<f64>> {
    let n = rho.n_atoms;
    let d = n + 1;
    if basis == Axis::Z {
        return Ok(rho.z_populations());
    }
    let u = basis_rotation(basis, n)?;
    let uu = kron(&u, &u);
    let rotated = uu.adjoint() * &rho.matrix * uu;
    Ok(DMatrix::from_fn(d, d, |k1, k2| {
        rotated[(k1 * d + k2, k1 * d + k2)].re
    }))
}

/// Pearson correlation of `(k₁, k₂)` under a joint distribution.
pub fn label_correlation(p: &DMatrix<f64>) -> f64 {
    let d = p.nrows();
    let (mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k1 in 0..d {
        for k2 in 0..d {
            let w = p[(k1, k2)];
            let (x, y) = (k1 as f64, k2 as f64);
            m1 += w * x;
            m2 += w * y;
            s11 += w * x * x;
            s22 += w * y * y;
            s12 += w * x * y;
        }
    }
    let cov = s12 - m1 * m2;
    cov / ((s11 - m1 * m1) * (s22 - m2 * m2)).sqrt()
}

/// Partial transpose on ensemble 2.
pub fn partial_transpose(rho: &AtomicDensityMatrix) -> DMatrix<C64> {
    let d = rho.n_atoms + 1;
    DMatrix::from_fn(d * d, d * d, |i, j| {
        let (k1, k2) = (i / d, i % d);
        let (k1p, k2p) = (j / d, j % d);
        rho.matrix[(k1 * d + k2p, k1p * d + k2)]
    })
}

fn require_hermitian(rho: &AtomicDensityMatrix) -> Result<()> {
    let h = rho.hermiticity_error();
    if h > HERMITICITY_TOL {
        return Err(Error::InvalidState(format!(
            "density matrix not Hermitian: deviation {h:e}"
        )));
    }
    Ok(())
}

/// Logarithmic negativity and its ratio to the maximum `log₂(N+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNegativity {
    pub value: f64,
    pub normalized: f64,
}

pub fn log_negativity(rho: &AtomicDensityMatrix) -> Result<LogNegativity> {
    require_hermitian(rho)?;
    let pt = partial_transpose(rho);
    let h = (&pt + pt.adjoint()) * C64::new(0.5, 0.0);
    let trace_norm: f64 = h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum();
    let value = trace_norm.log2().max(0.0);
    Ok(LogNegativity {
        value,
        normalized: value / ((rho.n_atoms + 1) as f64).log2(),
    })
}

/// Mean vector and symmetrised covariance of the total spin `S₁ + S₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalSpinMoments {
    pub mean: Vector3<f64>,
    pub covariance: nalgebra::Matrix3<f64>,
}

pub fn total_spin_moments(rho: &AtomicDensityMatrix) -> Result<TotalSpinMoments> {
    let n = rho.n_atoms;
    let id = DMatrix::<C64>::identity(n + 1, n + 1);
    let ops: Vec<DMatrix<C64>> = Axis::ALL
        .iter()
        .map(|&a| spin_operator(a, n).map(|o| o.matrix))
        .collect::<Result<_>>()?;
    let mut mean = Vector3::zeros();
    for a in 0..3 {
        mean[a] = expect_complex(rho, &ops[a], &id)?.re + expect_complex(rho, &id, &ops[a])?.re;
    }
    let mut cov = nalgebra::Matrix3::zeros();
    for a in 0..3 {
        for b in a..3 {
            let local = &ops[a] * &ops[b];
            // Re⟨S^a S^b⟩ is the symmetrised second moment
            let second = expect_complex(rho, &local, &id)?.re
                + expect_complex(rho, &id, &local)?.re
                + expect_complex(rho, &ops[a], &ops[b])?.re
                + expect_complex(rho, &ops[b], &ops[a])?.re;
            let c = second - mean[a] * mean[b];
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    Ok(TotalSpinMoments {
        mean,
        covariance: cov,
    })
}

/// Wineland squeezing of the total spin in two normalisations: the literal
/// `2 (ΔS_⊥²)_min / |⟨S⟩|` (separable baseline 2 at the coherent state) and
/// the standard `2N (ΔS_⊥²)_min / |⟨S⟩|²` (baseline 1, total atom number 2N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wineland {
    pub literal: f64,
    pub standard: f64,
    pub min_perp_variance: f64,
    pub mean_length: f64,
}

pub fn wineland(rho: &AtomicDensityMatrix) -> Result<Wineland> {
    let n = rho.n_atoms as f64;
    let TotalSpinMoments { mean, covariance } = total_spin_moments(rho)?;
    let len = mean.norm();
    if len <= 1e-12 * n {
        return Err(Error::UndefinedDirection(format!(
            "mean total spin vanishes (|<S>| = {len:e})"
        )));
    }
    let dir = mean / len;
    // reference axis least aligned with the mean direction
    let mut reference = Vector3::zeros();
    let imin = (0..3)
        .min_by(|&i, &j| dir[i].abs().total_cmp(&dir[j].abs()))
        .expect("three components");
    reference[imin] = 1.0;
    let e1 = dir.cross(&reference).normalize();
    let e2 = dir.cross(&e1);
    let c = |u: &Vector3<f64>, v: &Vector3<f64>| (u.transpose() * covariance * v)[(0, 0)];
    let perp = Matrix2::new(c(&e1, &e1), c(&e1, &e2), c(&e2, &e1), c(&e2, &e2));
    let vmin = perp.symmetric_eigenvalues().min();
    Ok(Wineland {
        literal: 2.0 * vmin / len,
        standard: 2.0 * n * vmin / (len * len),
        min_perp_variance: vmin,
        mean_length: len,
    })
}

/// Outcome of a separability or locality criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub violated: bool,
}

impl CriterionResult {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        CriterionResult {
            name: name.into(),
            value,
            threshold,
            violated: value < threshold,
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        CriterionResult {
            name: name.into(),
            value,
            threshold,
            violated: value > threshold,
        }
    }
}

/// `[Var(S₁ˣ-S₂ˣ) + Var(S₁ʸ+S₂ʸ) + Var(S₁ᶻ-S₂ᶻ)] / 4N`, entangled below 1.
pub fn hofmann_takeuchi(rho: &AtomicDensityMatrix) -> Result<CriterionResult> {
    let sum = variance_of_combo(rho, Axis::X, Combo::Minus)?
        + variance_of_combo(rho, Axis::Y, Combo::Plus)?
        + variance_of_combo(rho, Axis::Z, Combo::Minus)?;
    Ok(CriterionResult::below(
        "hofmann_takeuchi",
        sum / (4.0 * rho.n_atoms as f64),
        1.0,
    ))
}

/// `Var(S₁ʸ+S₂ʸ) Var(S₁ᶻ-S₂ᶻ) / ⟨S₁ˣ⟩²`, steering from ensemble 1 to 2 below 1.
pub fn epr_steering(rho: &AtomicDensityMatrix) -> Result<CriterionResult> {
    let sx = expect_local(rho, Ensemble::First, &spin_operator(Axis::X, rho.n_atoms)?)?;
    if sx.abs() <= 1e-12 * rho.n_atoms as f64 {
        return Err(Error::UndefinedDirection(format!(
            "<S1^x> vanishes ({sx:e})"
        )));
    }
    let value = variance_of_combo(rho, Axis::Y, Combo::Plus)?
        * variance_of_combo(rho, Axis::Z, Combo::Minus)?
        / (sx * sx);
    Ok(CriterionResult::below("epr_steering", value, 1.0))
}

/// A Hermitian operator with spectrum in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignObservable {
    pub matrix: DMatrix<C64>,
}

impl SignObservable {
    pub fn square_error(&self) -> f64 {
        let d = self.matrix.nrows();
        crate::spin::max_abs_diff(&(&self.matrix * &self.matrix), &DMatrix::identity(d, d))
    }
}

/// Replaces every eigenvalue of `a` by its sign, with `sgn(0) = +1`.
pub fn sign_operator(a: &Observable) -> Result<SignObservable> {
    if a.hermiticity_error() > HERMITICITY_TOL {
        return Err(Error::InvalidState(format!("{} is not Hermitian", a.label)));
    }
    let eig = a.matrix.clone().symmetric_eigen();
    let signs = eig
        .eigenvalues
        .map(|l| C64::new(if l < -SIGN_ZERO_TOL { -1.0 } else { 1.0 }, 0.0));
    let v = &eig.eigenvectors;
    Ok(SignObservable {
        matrix: v * DMatrix::from_diagonal(&signs) * v.adjoint(),
    })
}

/// The four sign observables of the CHSH test at angle `θ_B`:
/// `[M₁⁽¹⁾, M₁⁽²⁾, M₂⁽¹⁾, M₂⁽²⁾]`.
pub fn chsh_operators(n_atoms: usize, theta_b: f64) -> Result<[SignObservable; 4]> {
    let sz = spin_operator(Axis::Z, n_atoms)?.matrix;
    let sy = spin_operator(Axis::Y, n_atoms)?.matrix;
    let combo = |c: f64, s: f64, label: &str| {
        Observable::new(label, &sz * C64::new(c, 0.0) + &sy * C64::new(s, 0.0))
            .and_then(|o| sign_operator(&o))
    };
    let (s, c) = theta_b.sin_cos();
    let (sh, ch) = (theta_b / 2.0).sin_cos();
    Ok([
        combo(1.0, 0.0, "M1(1)")?,
        combo(c, s, "M1(2)")?,
        combo(ch, sh, "M2(1)")?,
        combo(ch, -sh, "M2(2)")?,
    ])
}

/// `|⟨M₁⁽¹⁾M₂⁽¹⁾⟩ + ⟨M₁⁽¹⁾M₂⁽²⁾⟩ − ⟨M₁⁽²⁾M₂⁽¹⁾⟩ + ⟨M₁⁽²⁾M₂⁽²⁾⟩|`, local bound 2.
pub fn chsh(rho: &AtomicDensityMatrix, theta_b: f64) -> Result<f64> {
    let ops = chsh_operators(rho.n_atoms, theta_b)?;
    chsh_with(rho, &ops)
}

fn chsh_with(rho: &AtomicDensityMatrix, ops: &[SignObservable; 4]) -> Result<f64> {
    let e = |a: &SignObservable, b: &SignObservable| -> Result<f64> {
        Ok(expect_complex(rho, &a.matrix, &b.matrix)?.re)
    };
    let [m11, m12, m21, m22] = ops;
    Ok((e(m11, m21)? + e(m11, m22)? - e(m12, m21)? + e(m12, m22)?).abs())
}

pub fn chsh_criterion(rho: &AtomicDensityMatrix, theta_b: f64) -> Result<CriterionResult> {
    Ok(CriterionResult::above("chsh", chsh(rho, theta_b)?, 2.0))
}

/// Empirical optimal CHSH angle `(3.2/N + 1.7/N²) / (1 + 2.1/N)`.
pub fn empirical_theta_b(n_atoms: usize) -> f64 {
    let n = n_atoms as f64;
    (3.2 / n + 1.7 / (n * n)) / (1.0 + 2.1 / n)
}

/// Minimises `f` on `[a, b]` by golden-section search to tolerance `tol`.
pub fn golden_section_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Grid sizes for [`optimal_chsh`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSearch {
    pub tau_points: usize,
    pub theta_points: usize,
    /// Number of best grid cells (distinct `τ`) refined locally.
    pub starts: usize,
    pub rounds: usize,
    pub tol: f64,
}

impl Default for ChshSearch {
    fn default() -> Self {
        ChshSearch {
            tau_points: 200,
            theta_points: 32,
            starts: 6,
            rounds: 3,
            tol: 1e-6,
        }
    }
}

/// Location and value of the largest CHSH correlator found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshOptimum {
    pub tau: f64,
    pub theta_b: f64,
    pub value: f64,
}

/// Maximises CHSH over `τ ∈ (0, π]` and `θ_B ∈ (0, π/2]` for the
/// configuration family `cfg` (its `tau` is ignored) under `channel`.
///
/// A coarse grid, which always contains the empirical angle, ranks the
/// `τ` points by their best `θ_B`. From each of the `starts` best points,
/// golden-section searches on `τ` and `θ_B` alternate for `rounds` rounds
/// within one grid cell on either side; a refinement is only accepted if it
/// improves the value, so the result never falls below the grid maximum.
/// The correlator is piecewise smooth in `τ` (the sign observables are
/// fixed, but populations shift between their eigenspaces), hence the
/// multi-start. Fully deterministic.
pub fn optimal_chsh(
    cfg: &SystemConfig,
    channel: &ChannelSpec,
    search: &ChshSearch,
) -> Result<ChshOptimum> {
    use rayon::prelude::*;
    if search.tau_points < 1 || search.theta_points < 1 {
        return Err(Error::invalid(
            "CHSH search needs at least one grid point per axis",
        ));
    }
    let n = cfg.n_atoms;
    let taus: Vec<f64> = (1..=search.tau_points)
        .map(|i| PI * i as f64 / search.tau_points as f64)
        .collect();
    let mut thetas: Vec<f64> = (1..=search.theta_points)
        .map(|i| FRAC_PI_2 * i as f64 / search.theta_points as f64)
        .collect();
    thetas.push(empirical_theta_b(n).clamp(1e-6, FRAC_PI_2));
    let ops: Vec<[SignObservable; 4]> = thetas
        .iter()
        .map(|&t| chsh_operators(n, t))
        .collect::<Result<_>>()?;
    let mut ranked: Vec<ChshOptimum> = taus
        .par_iter()
        .map(|&tau| -> Result<Option<ChshOptimum>> {
            let rho = match apply_channel(&cfg.with_tau(tau), channel) {
                Ok(r) => r,
                Err(Error::ImpossibleOutcome { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut best: Option<ChshOptimum> = None;
            for (theta, op) in thetas.iter().zip(&ops) {
                let value = chsh_with(&rho, op)?;
                if best.is_none_or(|b| value > b.value) {
                    best = Some(ChshOptimum {
                        tau,
                        theta_b: *theta,
                        value,
                    });
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if ranked.is_empty() {
        return Err(Error::ImpossibleOutcome {
            n_c: cfg.n_c,
            n_d: cfg.n_d,
        });
    }
    // stable sort: ties keep grid order
    ranked.sort_by(|a, b| b.value.total_cmp(&a.value));

    let dtau = PI / search.tau_points as f64;
    let dtheta = FRAC_PI_2 / search.theta_points as f64;
    let value_at = |tau: f64, theta: f64| -> Result<f64> {
        match apply_channel(&cfg.with_tau(tau), channel) {
            Ok(rho) => chsh(&rho, theta),
            Err(Error::ImpossibleOutcome { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    let refine = |start: ChshOptimum| -> Result<ChshOptimum> {
        let mut cur = start;
        for _ in 0..search.rounds {
            let theta = cur.theta_b;
            let (lo, hi) = ((cur.tau - dtau).max(1e-9), (cur.tau + dtau).min(PI));
            let (tau, neg) =
                golden_section_min(|t| value_at(t, theta).map(|v| -v), lo, hi, search.tol)?;
            if -neg > cur.value {
                cur = ChshOptimum {
                    tau,
                    theta_b: theta,
                    value: -neg,
                };
            }
            let rho = apply_channel(&cfg.with_tau(cur.tau), channel)?;
            let (lo, hi) = (
                (cur.theta_b - dtheta).max(1e-9),
                (cur.theta_b + dtheta).min(FRAC_PI_2),
            );
            let (theta, neg) =
                golden_section_min(|t| chsh(&rho, t).map(|v| -v), lo, hi, search.tol)?;
            if -neg > cur.value {
                cur = ChshOptimum {
                    tau: cur.tau,
                    theta_b: theta,
                    value: -neg,
                };
            }
        }
        Ok(cur)
    };
    let refined: Vec<ChshOptimum> = ranked
        .iter()
        .take(search.starts.max(1))
        .copied()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&s| refine(s))
        .collect::<Result<_>>()?;
    Ok(refined
        .into_iter()
        .fold(None, |acc: Option<ChshOptimum>, c| match acc {
            Some(a) if a.value >= c.value => Some(a),
            _ => Some(c),
        })
        .expect("at least one start"))
}

/// Normalisation of the Wineland parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinelandConvention {
    /// `2 (ΔS_⊥²)_min / |⟨S⟩|`.
    Literal,
    /// `2N (ΔS_⊥²)_min / |⟨S⟩|²`.
    Standard,
}

impl WinelandConvention {
    pub fn pick(self, w: &Wineland) -> f64 {
        match self {
            WinelandConvention::Literal => w.literal,
            WinelandConvention::Standard => w.standard,
        }
    }
}

/// Location and value of the smallest Wineland parameter in a `τ` window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WinelandOptimum {
    pub convention: WinelandConvention,
    pub tau: f64,
    pub value: f64,
}

/// Minimises the Wineland parameter in the given normalisation over
/// `τ ∈ [tau_lo, tau_hi]` with a `points`-point grid followed by
/// golden-section refinement around the best grid point. The two
/// normalisations differ by a factor `N/|⟨S⟩|` and generally have different
/// minimisers.
pub fn optimal_wineland(
    cfg: &SystemConfig,
    channel: &ChannelSpec,
    convention: WinelandConvention,
    tau_lo: f64,
    tau_hi: f64,
    points: usize,
) -> Result<WinelandOptimum> {
    use rayon::prelude::*;
    if !(tau_hi > tau_lo) || points < 3 {
        return Err(Error::invalid(
            "Wineland search needs tau_hi > tau_lo and ≥ 3 points",
        ));
    }
    // points without a mean spin direction cannot be optimal
    let value = |tau: f64| -> Result<f64> {
        match apply_channel(&cfg.with_tau(tau), channel).and_then(|r| wineland(&r)) {
            Ok(w) => Ok(convention.pick(&w)),
            Err(Error::UndefinedDirection(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let step = (tau_hi - tau_lo) / (points - 1) as f64;
    let values: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| value(tau_lo + step * i as f64))
        .collect::<Result<_>>()?;
    let imin = (0..points)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("non-empty grid");
    let lo = tau_lo + step * imin.saturating_sub(1) as f64;
    let hi = (tau_lo + step * (imin + 1) as f64).min(tau_hi);
    let (tau, v) = golden_section_min(value, lo, hi, 1e-7)?;
    let (tau, v) = if v <= values[imin] {
        (tau, v)
    } else {
        (tau_lo + step * imin as f64, values[imin])
    };
    Ok(WinelandOptimum {
        convention,
        tau,
        value: v,
    })
}

/// Scalar metrics addressable by name from sweeps and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LogNegativity,
    LogNegativityNormalized,
    VarXMinus,
    VarYPlus,
    VarZMinus,
    WinelandLiteral,
    WinelandStandard,
    HofmannTakeuchi,
    EprSteering,
    Chsh,
    Purity,
    OutcomeWeight,
}

impl Metric {
    pub const ALL: [Metric; 12] = [
        Metric::LogNegativity,
        Metric::LogNegativityNormalized,
        Metric::VarXMinus,
        Metric::VarYPlus,
        Metric::VarZMinus,
        Metric::WinelandLiteral,
        Metric::WinelandStandard,
        Metric::HofmannTakeuchi,
        Metric::EprSteering,
        Metric::Chsh,
        Metric::Purity,
        Metric::OutcomeWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::LogNegativity => "log_negativity",
            Metric::LogNegativityNormalized => "log_negativity_normalized",
            Metric::VarXMinus => "var_x_minus",
            Metric::VarYPlus => "var_y_plus",
            Metric::VarZMinus => "var_z_minus",
            Metric::WinelandLiteral => "wineland_literal",
            Metric::WinelandStandard => "wineland_standard",
            Metric::HofmannTakeuchi => "hofmann_takeuchi",
            Metric::EprSteering => "epr_steering",
            Metric::Chsh => "chsh",
            Metric::Purity => "purity",
            Metric::OutcomeWeight => "outcome_weight",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "metric",
                name: s.to_string(),
            })
    }
}

/// Evaluates one named metric; `theta_b` is used by [`Metric::Chsh`] only.
pub fn evaluate_metric(rho: &AtomicDensityMatrix, metric: Metric, theta_b: f64) -> Result<f64> {
    Ok(match metric {
        Metric::LogNegativity => log_negativity(rho)?.value,
        Metric::LogNegativityNormalized => log_negativity(rho)?.normalized,
        Metric::VarXMinus => variance_of_combo(rho, Axis::X, Combo::Minus)?,
        Metric::VarYPlus => variance_of_combo(rho, Axis::Y, Combo::Plus)?,
        Metric::VarZMinus => variance_of_combo(rho, Axis::Z, Combo::Minus)?,
        Metric::WinelandLiteral => wineland(rho)?.literal,
        Metric::WinelandStandard => wineland(rho)?.standard,
        Metric::HofmannTakeuchi => hofmann_takeuchi(rho)?.value,
        Metric::EprSteering => epr_steering(rho)?.value,
        Metric::Chsh => chsh(rho, theta_b)?,
        Metric::Purity => rho.purity(),
        Metric::OutcomeWeight => rho.outcome_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::apply_dephasing;
    use crate::spin::{spin_coherent_state, PureAtomicState};
    use approx::assert_relative_eq;

    fn pure(state: &PureAtomicState) -> AtomicDensityMatrix {
        AtomicDensityMatrix::from_pure(state, 1.0)
    }

    fn x_product(n: usize) -> AtomicDensityMatrix {
        let c = spin_coherent_state(FRAC_PI_2, 0.0, n).unwrap();
        pure(&PureAtomicState::product(&c, &c).unwrap())
    }

    fn cfg(n: usize, alpha: f64, nc: u32, nd: u32, tau: f64) -> SystemConfig {
        SystemConfig::new(n, alpha, nc, nd, tau).unwrap()
    }

    fn none(c: &SystemConfig) -> AtomicDensityMatrix {
        apply_channel(c, &ChannelSpec::NoDecoherence).unwrap()
    }

    #[test]
    fn product_state_expectations() {
        let rho = x_product(4);
        let id = Observable::identity(5);
        let sx = spin_operator(Axis::X, 4).unwrap();
        let sz = spin_operator(Axis::Z, 4).unwrap();
        assert_relative_eq!(expect(&rho, &sx, &id).unwrap(), 4.0, epsilon = 1e-12);
        assert!(expect(&rho, &sz, &id).unwrap().abs() < 1e-12);
        assert_relative_eq!(
            expect_local(&rho, Ensemble::Second, &sx).unwrap(),
            4.0,
            epsilon = 1e-12
        );
        assert!(expect(&rho, &Observable::identity(3), &id).is_err());
    }

    #[test]
    fn zz_correlation_matches_amplitude_oracle() {
        let rho = none(&cfg(2, 2f64.sqrt(), 2, 0, 0.5));
        let sz = spin_operator(Axis::Z, 2).unwrap();
        assert_relative_eq!(
            expect(&rho, &sz, &sz).unwrap(),
            0.670_443_667_512_481,
            max_relative = 1e-12
        );
    }

    #[test]
    fn baseline_variances() {
        let rho = none(&cfg(6, 3.0, 9, 0, 0.0));
        assert!(
            variance_of_combo(&rho, Axis::X, Combo::Minus)
                .unwrap()
                .abs()
                < 1e-10
        );
        assert_relative_eq!(
            variance_of_combo(&rho, Axis::Y, Combo::Plus).unwrap(),
            12.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            variance_of_combo(&rho, Axis::Z, Combo::Minus).unwrap(),
            12.0,
            epsilon = 1e-10
        );
        let mc = pure(&PureAtomicState::maximally_correlated(3));
        assert!(variance_of_combo(&mc, Axis::Z, Combo::Minus).unwrap().abs() < 1e-12);
    }

    #[test]
    fn baseline_distributions() {
        let n = 4;
        let rho = none(&cfg(n, 2.0, 4, 0, 0.0));
        let pz = probability_distribution(&rho, Axis::Z).unwrap();
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        for k1 in 0..=n {
            for k2 in 0..=n {
                assert_relative_eq!(pz[(k1, k2)], binom[k1] * binom[k2] / 256.0, epsilon = 1e-14);
            }
        }
        let px = probability_distribution(&rho, Axis::X).unwrap();
        assert_relative_eq!(px[(n, n)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(px.sum(), 1.0, epsilon = 1e-12);
        let py = probability_distribution(&rho, Axis::Y).unwrap();
        assert_relative_eq!(py.sum(), 1.0, epsilon = 1e-12);
        assert!(py.min() > -1e-12);
    }

    #[test]
    fn correlation_signs_short_time() {
        let rho = none(&cfg(10, 10.0, 100, 0, 0.1));
        let cz = label_correlation(&probability_distribution(&rho, Axis::Z).unwrap());
        let cy = label_correlation(&probability_distribution(&rho, Axis::Y).unwrap());
        assert!(cz > 0.0, "{cz}");
        assert!(cy < 0.0, "{cy}");
    }

    #[test]
    fn negativity_extremes() {
        assert!(log_negativity(&x_product(5)).unwrap().value < 1e-12);
        let mc = log_negativity(&pure(&PureAtomicState::maximally_correlated(4))).unwrap();
        assert_relative_eq!(mc.value, 5f64.log2(), epsilon = 1e-12);
        assert_relative_eq!(mc.normalized, 1.0, epsilon = 1e-12);
        let rho = none(&cfg(10, 20f64.sqrt(), 20, 0, PI));
        assert!(log_negativity(&rho).unwrap().value < 1e-6);
    }

    #[test]
    fn negativity_rejects_non_hermitian() {
        let mut rho = x_product(2);
        rho.matrix[(0, 1)] += C64::new(1e-3, 0.0);
        assert!(matches!(log_negativity(&rho), Err(Error::InvalidState(_))));
    }

    #[test]
    fn wineland_baselines() {
        let w = wineland(&x_product(7)).unwrap();
        assert_relative_eq!(w.standard, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.literal, 2.0, epsilon = 1e-12);
        let mc = pure(&PureAtomicState::maximally_correlated(3));
        assert!(matches!(wineland(&mc), Err(Error::UndefinedDirection(_))));
    }

    #[test]
    fn criteria_baselines() {
        let rho = none(&cfg(10, 10.0, 100, 0, 0.0));
        assert_relative_eq!(hofmann_takeuchi(&rho).unwrap().value, 1.0, epsilon = 1e-10);
        let steer = epr_steering(&rho).unwrap();
        assert_relative_eq!(steer.value, 4.0, epsilon = 1e-9);
        assert!(!steer.violated);
        let mc = pure(&PureAtomicState::maximally_correlated(2));
        assert!(hofmann_takeuchi(&mc).unwrap().value < 1.0);
        // fully dephased at τ = 0.1: z term from p_z, x/y terms from the
        // decohered matrix
        let c = cfg(4, 3.0, 9, 0, 0.1);
        let deph = apply_dephasing(&c, 1e6).unwrap();
        let pz = probability_distribution(&deph, Axis::Z).unwrap();
        let (mut m, mut m2) = (0.0, 0.0);
        for k1 in 0..5 {
            for k2 in 0..5 {
                let diff = 2.0 * (k1 as f64 - k2 as f64);
                m += pz[(k1, k2)] * diff;
                m2 += pz[(k1, k2)] * diff * diff;
            }
        }
        let expected = (variance_of_combo(&deph, Axis::X, Combo::Minus).unwrap()
            + variance_of_combo(&deph, Axis::Y, Combo::Plus).unwrap()
            + m2
            - m * m)
            / 16.0;
        assert_relative_eq!(
            hofmann_takeuchi(&deph).unwrap().value,
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn steering_detected_short_time() {
        let rho = none(&cfg(10, 10.0, 100, 0, 0.1));
        assert!(epr_steering(&rho).unwrap().violated);
    }

    #[test]
    fn sign_operators() {
        let s1 = sign_operator(&spin_operator(Axis::Z, 1).unwrap()).unwrap();
        assert!(
            crate::spin::max_abs_diff(
                &s1.matrix,
                &DMatrix::from_diagonal(&nalgebra::dvector![
                    C64::new(-1.0, 0.0),
                    C64::new(1.0, 0.0)
                ])
            ) < 1e-12
        );
        let s2 = sign_operator(&spin_operator(Axis::Z, 2).unwrap()).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| s2.matrix[(i, i)].re).collect();
        assert!(
            (diag[0] + 1.0).abs() < 1e-12
                && (diag[1] - 1.0).abs() < 1e-12
                && (diag[2] - 1.0).abs() < 1e-12
        );
        for op in chsh_operators(5, 0.37).unwrap() {
            assert!(op.square_error() < 1e-10);
        }
    }

    #[test]
    fn chsh_bounds() {
        let rho = none(&cfg(5, 5.0, 25, 0, 0.4));
        let zero = chsh(&rho, 0.0).unwrap();
        let ops = chsh_operators(5, 0.0).unwrap();
        let e11 = expect_complex(&rho, &ops[0].matrix, &ops[2].matrix)
            .unwrap()
            .re;
        assert_relative_eq!(zero, 2.0 * e11.abs(), epsilon = 1e-12);
        assert!(zero <= 2.0 + 1e-12);
        for theta in [0.1, 0.37, 0.9, 1.4] {
            assert!(chsh(&x_product(5), theta).unwrap() <= 2.0 + 1e-12);
            assert!(chsh(&rho, theta).unwrap() <= 2.0 * 2f64.sqrt() + 1e-9);
        }
    }

    #[test]
    fn empirical_angle() {
        assert_relative_eq!(
            empirical_theta_b(5),
            0.498_591_549_295_774_6,
            epsilon = 1e-12
        );
    }

    #[test]
    fn golden_section_finds_kink_minimum() {
        // a kink rather than a parabola: a flat minimum only resolves x to √ε
        let (x, fx) = golden_section_min(|x| Ok((x - 0.3).abs() + 1.0), 0.0, 1.0, 1e-9).unwrap();
        assert_relative_eq!(x, 0.3, epsilon = 1e-9);
        // the reported value is the objective at the reported point
        assert_eq!(fx, (x - 0.3).abs() + 1.0);
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bogus".parse::<Metric>().is_err());
    }
}
