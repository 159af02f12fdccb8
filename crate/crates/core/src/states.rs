//! Two-qubit polarization states and the measures reported on them:
//! Wootters concurrence, polarizer coincidence probabilities, the CHSH
//! correlation `S`, a deterministic maximizer of `S` over linear-polarizer
//! angles, and the analytic (unrestricted-measurement) CHSH upper bound used
//! to sanity-check the maximizer.
//!
//! Angles are linear-polarizer angles in degrees throughout, with the
//! projector convention `|θ⟩ = cosθ|H⟩ + sinθ|V⟩`.

use crate::qmath::{eig4, kron2, ComplexMatrix2, ComplexMatrix4, EigError};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Entrywise tolerance for the Hermiticity check in [`DensityMatrix::new`].
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for `|trace − 1|` in [`DensityMatrix::new`].
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a matrix may have and still count as positive
/// semidefinite; anything below this is rejected, not clamped.
pub const PSD_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("matrix is not Hermitian (largest entry deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix trace is {trace}, not 1")]
    TraceNotOne { trace: Complex64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("spin-flip product has an eigenvalue {eigenvalue} too far from the nonnegative reals")]
    SpinFlipSpectrum { eigenvalue: Complex64 },
    #[error(
        "coincidence probabilities over the four orthogonal settings sum to {denominator:.3e}; \
         the correlation ratio is undefined"
    )]
    DegenerateCorrelation { denominator: f64 },
    #[error(transparent)]
    Eig(#[from] EigError),
}

/// A physical two-qubit density matrix in the `{HH, HV, VH, VV}` basis.
///
/// Construction validates Hermiticity, unit trace, and positive
/// semidefiniteness, so a value of this type can be fed to the measures below
/// without further checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix4,
}

impl DensityMatrix {
    /// Validates and wraps a raw matrix.
    pub fn new(m: ComplexMatrix4) -> Result<Self, StateError> {
        let mut deviation = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                deviation = deviation.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        if deviation >= HERMITICITY_TOL {
            return Err(StateError::NotHermitian { deviation });
        }
        let trace = m.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() >= TRACE_TOL {
            return Err(StateError::TraceNotOne { trace });
        }
        let min_eig = eig4(&m)?
            .into_iter()
            .map(|l| l.re)
            .fold(f64::INFINITY, f64::min);
        if min_eig <= PSD_TOL {
            return Err(StateError::NotPositiveSemidefinite { eigenvalue: min_eig });
        }
        Ok(Self { m })
    }

    /// Wraps without validating. For matrices that are valid by construction
    /// (or deliberately invalid, in tests).
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn new_unchecked(m: ComplexMatrix4) -> Self {
        Self { m }
    }

    /// Density matrix of the pure state with the given `{HH, HV, VH, VV}`
    /// amplitudes, normalized.
    ///
    /// # Panics
    /// If the amplitude vector is (numerically) zero.
    pub fn from_pure(amplitudes: [Complex64; 4]) -> Self {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!(norm_sqr > 1e-300, "zero state vector");
        let mut m = ComplexMatrix4::zero();
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = amplitudes[r] * amplitudes[c].conj() / norm_sqr;
            }
        }
        Self { m }
    }

    /// The maximally mixed state `I/4`.
    pub fn maximally_mixed() -> Self {
        Self {
            m: ComplexMatrix4::identity().scaled(Complex64::new(0.25, 0.0)),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix4 {
        self.m
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.m[(r, c)]
    }
}

fn pauli_x() -> ComplexMatrix2 {
    ComplexMatrix2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

fn pauli_y() -> ComplexMatrix2 {
    ComplexMatrix2::new([
        [ZERO, Complex64::new(0.0, -1.0)],
        [Complex64::new(0.0, 1.0), ZERO],
    ])
}

fn pauli_z() -> ComplexMatrix2 {
    ComplexMatrix2::from_real([[1.0, 0.0], [0.0, -1.0]])
}

/// Wootters concurrence: `max{0, √λ₁ − √λ₂ − √λ₃ − √λ₄}` with `λᵢ` the
/// decreasingly ordered eigenvalues of `ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
///
/// That product is similar to a positive semidefinite matrix, so its spectrum
/// is real and nonnegative up to rounding. Two kinds of rounding residue are
/// cleaned up before the square roots: small negative real parts (clamped to
/// zero; anything below `−1e−10`·scale is an error, not noise), and
/// eigenvalues within `1e−14`·scale of zero (clamped to zero — the product is
/// exactly rank-deficient for the dephased-Bell family, and `√` would amplify
/// the O(ε) residue to O(√ε), far above the agreement this crate's tests
/// demand of independent routes).
pub fn concurrence(rho: &DensityMatrix) -> Result<f64, StateError> {
    let yy = kron2(pauli_y(), pauli_y());
    let r = rho.m * yy * rho.m.conj() * yy;
    let scale = r.norm_frob().max(1e-300);
    let mut roots = [0.0f64; 4];
    for (slot, l) in roots.iter_mut().zip(eig4(&r)?) {
        if l.im.abs() > 1e-8 * scale.max(1.0) || l.re < -1e-10 * scale.max(1.0) {
            return Err(StateError::SpinFlipSpectrum { eigenvalue: l });
        }
        let x = if l.re <= 1e-14 * scale { 0.0 } else { l.re };
        *slot = x.sqrt();
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).max(0.0))
}

/// `⟨θ₁θ₂| ρ |θ₁θ₂⟩` for linear polarizers at `θ₁` (first photon) and `θ₂`
/// (second photon), in degrees. Clamped to `[0, 1]`.
pub fn coincidence_prob(rho: &DensityMatrix, theta1_deg: f64, theta2_deg: f64) -> f64 {
    let (s1, c1) = theta1_deg.to_radians().sin_cos();
    let (s2, c2) = theta2_deg.to_radians().sin_cos();
    let v = [c1 * c2, c1 * s2, s1 * c2, s1 * s2];
    let mut p = ZERO;
    for r in 0..4 {
        for c in 0..4 {
            p += v[r] * rho.m[(r, c)] * v[c];
        }
    }
    debug_assert!(p.im.abs() < 1e-12, "coincidence probability should be real");
    p.re.clamp(0.0, 1.0)
}

/// Polarization correlation
/// `E = (C(θ₁,θ₂) + C(θ₁⊥,θ₂⊥) − C(θ₁,θ₂⊥) − C(θ₁⊥,θ₂)) / (sum of the four)`,
/// with `θ⊥ = θ + 90°` and `C` the coincidence probability. The denominator is
/// kept rather than assumed to be 1, and its vanishing is an error.
pub fn correlation_e(rho: &DensityMatrix, theta1_deg: f64, theta2_deg: f64) -> Result<f64, StateError> {
    let (t1, t2) = (theta1_deg, theta2_deg);
    let pp = coincidence_prob(rho, t1, t2);
    let oo = coincidence_prob(rho, t1 + 90.0, t2 + 90.0);
    let po = coincidence_prob(rho, t1, t2 + 90.0);
    let op = coincidence_prob(rho, t1 + 90.0, t2);
    let denominator = pp + oo + po + op;
    if denominator <= 1e-12 {
        return Err(StateError::DegenerateCorrelation { denominator });
    }
    Ok((pp + oo - po - op) / denominator)
}

/// The four polarizer angles of a CHSH measurement, each reduced to
/// `(−90°, 90°]` (a linear polarizer has period 180°).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSetting {
    theta1: f64,
    theta1_prime: f64,
    theta2: f64,
    theta2_prime: f64,
}

fn reduce_angle(deg: f64) -> f64 {
    let mut x = deg % 180.0;
    if x <= -90.0 {
        x += 180.0;
    } else if x > 90.0 {
        x -= 180.0;
    }
    x
}

impl ChshSetting {
    pub fn new(theta1: f64, theta1_prime: f64, theta2: f64, theta2_prime: f64) -> Self {
        Self {
            theta1: reduce_angle(theta1),
            theta1_prime: reduce_angle(theta1_prime),
            theta2: reduce_angle(theta2),
            theta2_prime: reduce_angle(theta2_prime),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta1_prime(&self) -> f64 {
        self.theta1_prime
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
    pub fn theta2_prime(&self) -> f64 {
        self.theta2_prime
    }
}

/// CHSH combination `S = E(θ₁,θ₂) + E(θ₁,θ₂′) + E(θ₁′,θ₂) − E(θ₁′,θ₂′)`.
/// `|S| ≤ 2` for any local realistic model; quantum states reach `2√2`.
pub fn chsh_s(rho: &DensityMatrix, s: &ChshSetting) -> Result<f64, StateError> {
    Ok(correlation_e(rho, s.theta1, s.theta2)?
        + correlation_e(rho, s.theta1, s.theta2_prime)?
        + correlation_e(rho, s.theta1_prime, s.theta2)?
        - correlation_e(rho, s.theta1_prime, s.theta2_prime)?)
}

/// The 2×2 real matrix `M` with `E(θ₁,θ₂) = a(θ₁)ᵀ M a(θ₂)`,
/// `a(θ) = (cos2θ, sin2θ)`: the correlation restricted to the linear-polarizer
/// (z–x) plane, normalized by the trace so it matches [`correlation_e`]
/// exactly.
fn correlation_plane(rho: &DensityMatrix) -> [[f64; 2]; 2] {
    let t = |a: ComplexMatrix2, b: ComplexMatrix2| (rho.m * kron2(a, b)).trace().re;
    let tr = rho.m.trace().re;
    let (x, z) = (pauli_x(), pauli_z());
    [
        [t(z, z) / tr, t(z, x) / tr],
        [t(x, z) / tr, t(x, x) / tr],
    ]
}

fn plane_e(m: &[[f64; 2]; 2], a1: [f64; 2], a2: [f64; 2]) -> f64 {
    a1[0] * (m[0][0] * a2[0] + m[0][1] * a2[1]) + a1[1] * (m[1][0] * a2[0] + m[1][1] * a2[1])
}

fn axis(deg: f64) -> [f64; 2] {
    let (s, c) = (2.0 * deg.to_radians()).sin_cos();
    [c, s]
}

fn plane_s(m: &[[f64; 2]; 2], th: [f64; 4]) -> f64 {
    let (a1, a1p, a2, a2p) = (axis(th[0]), axis(th[1]), axis(th[2]), axis(th[3]));
    plane_e(m, a1, a2) + plane_e(m, a1, a2p) + plane_e(m, a1p, a2) - plane_e(m, a1p, a2p)
}

/// Maximizes [`chsh_s`] over the four linear-polarizer angles.
///
/// Deterministic two-stage search: a 5° grid over all four angles — folded to
/// `[0°, 90°)` per angle with explicit sign flips, since a 90° shift negates a
/// polarizer's correlation axis — followed by coordinate descent that halves
/// its step from 2.5° down to 0.01°. Descent starts at the best grid node and
/// only ever accepts improvements, so the result is ≥ every coarse-grid value.
pub fn maximize_chsh_linear(rho: &DensityMatrix) -> (ChshSetting, f64) {
    let m = correlation_plane(rho);

    let mut etab = [[0.0f64; 18]; 18];
    for i in 0..18 {
        for j in 0..18 {
            etab[i][j] = plane_e(&m, axis(5.0 * i as f64), axis(5.0 * j as f64));
        }
    }

    let mut best_s = f64::NEG_INFINITY;
    let mut best_th = [0.0f64; 4];
    for i1 in 0..18 {
        for i1p in 0..18 {
            for i2 in 0..18 {
                for i2p in 0..18 {
                    let (e11, e12) = (etab[i1][i2], etab[i1][i2p]);
                    let (e21, e22) = (etab[i1p][i2], etab[i1p][i2p]);
                    for signs in 0..16u8 {
                        let s1 = if signs & 1 == 0 { 1.0 } else { -1.0 };
                        let s1p = if signs & 2 == 0 { 1.0 } else { -1.0 };
                        let s2 = if signs & 4 == 0 { 1.0 } else { -1.0 };
                        let s2p = if signs & 8 == 0 { 1.0 } else { -1.0 };
                        let s = s1 * s2 * e11 + s1 * s2p * e12 + s1p * s2 * e21 - s1p * s2p * e22;
                        if s > best_s {
                            best_s = s;
                            // Sign −1 realizes the 90°-shifted polarizer.
                            best_th = [
                                5.0 * i1 as f64 - if s1 < 0.0 { 90.0 } else { 0.0 },
                                5.0 * i1p as f64 - if s1p < 0.0 { 90.0 } else { 0.0 },
                                5.0 * i2 as f64 - if s2 < 0.0 { 90.0 } else { 0.0 },
                                5.0 * i2p as f64 - if s2p < 0.0 { 90.0 } else { 0.0 },
                            ];
                        }
                    }
                }
            }
        }
    }

    let mut th = best_th;
    let mut step = 2.5;
    while step >= 0.01 {
        loop {
            let mut improved = false;
            for k in 0..4 {
                for delta in [step, -step] {
                    let mut cand = th;
                    cand[k] += delta;
                    let s = plane_s(&m, cand);
                    if s > best_s {
                        best_s = s;
                        th = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }

    (ChshSetting::new(th[0], th[1], th[2], th[3]), best_s)
}

/// Analytic CHSH maximum over *all* projective measurements,
/// `2√(u₁ + u₂)` with `u₁ ≥ u₂` the two largest eigenvalues of `TᵀT`,
/// `T_ij = Tr(ρ σ_i⊗σ_j)`. Upper bound for [`maximize_chsh_linear`], which
/// only searches the linear-polarizer plane.
pub fn horodecki_smax(rho: &DensityMatrix) -> f64 {
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    let mut t = [[0.0f64; 3]; 3];
    for (i, a) in paulis.iter().enumerate() {
        for (j, b) in paulis.iter().enumerate() {
            t[i][j] = (rho.m * kron2(*a, *b)).trace().re;
        }
    }
    let mut u = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            u[i][j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let mut e = sym3_eigenvalues(&u);
    e.sort_by(|a, b| b.total_cmp(a));
    let smax = 2.0 * (e[0] + e[1]).max(0.0).sqrt();
    smax.min(2.0 * std::f64::consts::SQRT_2)
}

/// Eigenvalues of a symmetric 3×3 matrix, closed form (trigonometric solution
/// of the characteristic cubic). Returned unordered.
fn sym3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let mut p2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = a[i][j] - if i == j { q } else { 0.0 };
            p2 += d * d;
        }
    }
    let p = (p2 / 6.0).sqrt();
    if p < 1e-300 {
        return [q, q, q];
    }
    // det((A − qI)/p) / 2, with the argument of acos clamped against rounding.
    let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
    let detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}
