//! Simulated two-qubit polarization tomography: coincidence counting with
//! Poissonian shot noise and optional wave-plate angle jitter, linear
//! reconstruction from 16 projective settings, and Monte-Carlo error bars for
//! concurrence and the optimized CHSH value.
//!
//! Reconstruction always uses the nominal settings — jitter perturbs only the
//! simulated counts, the way a real misalignment would. All randomness flows
//! from one explicit seed through a portable generator, so every record and
//! every error bar is bit-reproducible.

use crate::qmath::{eig4, kron2, ComplexMatrix2, ComplexMatrix4};
use crate::states::{concurrence, maximize_chsh_linear, DensityMatrix, StateError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// One single-photon projector: the linear polarization at `theta_deg`, or,
/// with `circular`, the state `(|θ⟩ − i|θ⊥⟩)/√2` a quarter-wave plate at that
/// angle selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjSpec {
    pub theta_deg: f64,
    pub circular: bool,
}

impl ProjSpec {
    pub const fn linear(theta_deg: f64) -> Self {
        Self {
            theta_deg,
            circular: false,
        }
    }

    pub const fn circular(theta_deg: f64) -> Self {
        Self {
            theta_deg,
            circular: true,
        }
    }

    /// The projector's state vector in the `{H, V}` basis.
    fn vector(&self) -> [Complex64; 2] {
        let (s, c) = self.theta_deg.to_radians().sin_cos();
        if self.circular {
            // (|θ⟩ − i|θ⊥⟩)/√2 with |θ⊥⟩ = −sinθ|H⟩ + cosθ|V⟩.
            let r = std::f64::consts::FRAC_1_SQRT_2;
            [
                Complex64::new(c * r, s * r),
                Complex64::new(s * r, -c * r),
            ]
        } else {
            [Complex64::new(c, 0.0), Complex64::new(s, 0.0)]
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TomoError {
    #[error("a projection set needs exactly 16 settings, got {got}")]
    InvalidProjectionCount { got: usize },
    #[error(
        "projection set does not span the two-qubit state space \
         (elimination pivot {pivot:.3e} below threshold)"
    )]
    SingularGram { pivot: f64 },
    #[error("Monte-Carlo error bars need at least 2 trials, got {trials}")]
    InvalidTrials { trials: usize },
    #[error("reconstructed matrix has nonpositive trace {trace:.3e}; counts carry no state")]
    DegenerateNormalization { trace: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Sixteen two-photon projective settings whose outer products span the real
/// 16-dimensional space of Hermitian 4×4 matrices; spanning is checked at
/// construction by factorizing the setting-to-coefficient system.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pairs: Vec<(ProjSpec, ProjSpec)>,
}

impl ProjectionSet {
    pub fn new(pairs: Vec<(ProjSpec, ProjSpec)>) -> Result<Self, TomoError> {
        if pairs.len() != 16 {
            return Err(TomoError::InvalidProjectionCount { got: pairs.len() });
        }
        let set = Self { pairs };
        // Factorize once to reject degenerate geometries up front.
        lu_factor(&mut set.gram())?;
        Ok(set)
    }

    /// The standard well-conditioned choice: `{H, V, +45°, R}` on each
    /// photon, all 16 combinations.
    pub fn canonical() -> Self {
        let single = [
            ProjSpec::linear(0.0),
            ProjSpec::linear(90.0),
            ProjSpec::linear(45.0),
            ProjSpec::circular(0.0),
        ];
        let mut pairs = Vec::with_capacity(16);
        for a in single {
            for b in single {
                pairs.push((a, b));
            }
        }
        Self::new(pairs).expect("the canonical set spans")
    }

    pub fn pairs(&self) -> &[(ProjSpec, ProjSpec)] {
        &self.pairs
    }

    /// Row `i`, column `j`: `tr(B_j · Π_i)/4` where `B_j` runs over the 16
    /// Pauli products and `Π_i` is the `i`-th projector. Mapping from Pauli
    /// coefficients `x_j = tr(ρ B_j)` to expected frequencies.
    fn gram(&self) -> [[f64; 16]; 16] {
        let basis = pauli_products();
        let mut a = [[0.0; 16]; 16];
        for (i, (pa, pb)) in self.pairs.iter().enumerate() {
            let proj = kron2(outer2(pa.vector()), outer2(pb.vector()));
            for (j, b) in basis.iter().enumerate() {
                a[i][j] = (*b * proj).trace().re / 4.0;
            }
        }
        a
    }
}

/// The 16 products `σ_μ ⊗ σ_ν` (μ, ν over I, X, Y, Z).
fn pauli_products() -> Vec<ComplexMatrix4> {
    let i = Complex64::new(0.0, 1.0);
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let singles = [
        ComplexMatrix2::new([[one, o], [o, one]]),
        ComplexMatrix2::new([[o, one], [one, o]]),
        ComplexMatrix2::new([[o, -i], [i, o]]),
        ComplexMatrix2::new([[one, o], [o, -one]]),
    ];
    let mut out = Vec::with_capacity(16);
    for a in singles {
        for b in singles {
            out.push(kron2(a, b));
        }
    }
    out
}

fn outer2(v: [Complex64; 2]) -> ComplexMatrix2 {
    ComplexMatrix2::new([
        [v[0] * v[0].conj(), v[0] * v[1].conj()],
        [v[1] * v[0].conj(), v[1] * v[1].conj()],
    ])
}

fn kron_vec(a: [Complex64; 2], b: [Complex64; 2]) -> [Complex64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// `⟨v|ρ|v⟩`, clamped into `[0, 1]` against rounding at the edges.
fn projection_prob(rho: &DensityMatrix, v: &[Complex64; 4]) -> f64 {
    let mut p = Complex64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            p += v[r].conj() * rho.entry(r, c) * v[c];
        }
    }
    p.re.clamp(0.0, 1.0)
}

/// In-place LU factorization with partial pivoting; returns the permutation.
/// Rejects pivots below `1e-12` times the largest initial entry.
fn lu_factor(a: &mut [[f64; 16]; 16]) -> Result<[usize; 16], TomoError> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let mut perm = [0usize; 16];
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for col in 0..16 {
        let (pivot_row, pivot) = (col..16)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pivot < 1e-12 * scale {
            return Err(TomoError::SingularGram { pivot });
        }
        a.swap(col, pivot_row);
        perm.swap(col, pivot_row);
        for r in col + 1..16 {
            let f = a[r][col] / a[col][col];
            a[r][col] = f;
            for c in col + 1..16 {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    Ok(perm)
}

fn lu_solve(a: &[[f64; 16]; 16], perm: &[usize; 16], b: &[f64; 16]) -> [f64; 16] {
    let mut x = [0.0; 16];
    for i in 0..16 {
        x[i] = b[perm[i]];
        for j in 0..i {
            x[i] -= a[i][j] * x[j];
        }
    }
    for i in (0..16).rev() {
        for j in i + 1..16 {
            x[i] -= a[i][j] * x[j];
        }
        x[i] /= a[i][i];
    }
    x
}

/// Expected and sampled coincidences for one tomography run.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    /// `N · ⟨Π_i⟩` per setting, evaluated at the (possibly jittered) angles.
    pub expected: Vec<f64>,
    /// Poisson draws around `expected`.
    pub counts: Vec<u64>,
    /// Pair budget N per setting.
    pub n_pairs: u64,
    pub seed: u64,
}

/// One standard normal via Box–Muller; consumes two uniforms.
fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Poisson draw: CDF inversion below mean 30, normal approximation above.
/// Both branches consume a bounded number of uniforms, keeping the stream
/// layout portable.
fn poisson(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    debug_assert!(mean >= 0.0);
    if mean == 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u: f64 = rng.gen();
        let mut p = (-mean).exp();
        let mut cum = p;
        let mut k = 0u64;
        // mean < 30 puts the 1e−15 quantile well under k = 200.
        while u > cum && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cum += p;
        }
        k
    } else {
        let z = standard_normal(rng);
        (mean + mean.sqrt() * z).round().max(0.0) as u64
    }
}

/// Simulates one tomography acquisition: per setting, jitter both wave-plate
/// angles by independent zero-mean Gaussians of width `angle_jitter_deg`,
/// take `expected = N·tr(ρΠ)` at the jittered angles, and draw the observed
/// count from a Poisson law with that mean. Per setting the stream consumes
/// two normals then one Poisson draw, so a record is a pure function of
/// `(ρ, ps, n_pairs, seed, angle_jitter_deg)`.
///
/// # Panics
/// If `n_pairs` is zero or the jitter is negative.
pub fn simulate_counts(
    rho: &DensityMatrix,
    ps: &ProjectionSet,
    n_pairs: u64,
    seed: u64,
    angle_jitter_deg: f64,
) -> CountRecord {
    assert!(n_pairs > 0, "the pair budget must be positive");
    assert!(
        angle_jitter_deg >= 0.0 && angle_jitter_deg.is_finite(),
        "angle jitter must be a finite nonnegative width"
    );
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut expected = Vec::with_capacity(16);
    let mut counts = Vec::with_capacity(16);
    for (pa, pb) in ps.pairs() {
        let ja = angle_jitter_deg * standard_normal(&mut rng);
        let jb = angle_jitter_deg * standard_normal(&mut rng);
        let pa = ProjSpec {
            theta_deg: pa.theta_deg + ja,
            ..*pa
        };
        let pb = ProjSpec {
            theta_deg: pb.theta_deg + jb,
            ..*pb
        };
        let v = kron_vec(pa.vector(), pb.vector());
        let mean = n_pairs as f64 * projection_prob(rho, &v);
        expected.push(mean);
        counts.push(poisson(&mut rng, mean));
    }
    CountRecord {
        expected,
        counts,
        n_pairs,
        seed,
    }
}

/// A reconstructed state, flagged when the linear estimate had to be pushed
/// back onto the physical (positive-semidefinite) cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    pub projected: bool,
}

/// Linear tomographic inversion of the sampled counts. Solves the 16×16
/// system from Pauli coefficients to measured frequencies, renormalizes the
/// trace, and — only if the estimate dips below −1e−9 along some direction —
/// clips negative eigenvalues and renormalizes, setting `projected`.
pub fn linear_reconstruct(
    cr: &CountRecord,
    ps: &ProjectionSet,
) -> Result<Reconstruction, TomoError> {
    let freqs: Vec<f64> = cr
        .counts
        .iter()
        .map(|&c| c as f64 / cr.n_pairs as f64)
        .collect();
    reconstruct_frequencies(&freqs, ps)
}

/// [`linear_reconstruct`] fed with the noise-free expected frequencies
/// instead of the sampled counts: the exact inversion identity.
pub fn linear_reconstruct_expected(
    cr: &CountRecord,
    ps: &ProjectionSet,
) -> Result<Reconstruction, TomoError> {
    let freqs: Vec<f64> = cr
        .expected
        .iter()
        .map(|&e| e / cr.n_pairs as f64)
        .collect();
    reconstruct_frequencies(&freqs, ps)
}

fn reconstruct_frequencies(
    freqs: &[f64],
    ps: &ProjectionSet,
) -> Result<Reconstruction, TomoError> {
    let mut a = ps.gram();
    let perm = lu_factor(&mut a)?;
    let mut b = [0.0; 16];
    b.copy_from_slice(freqs);
    let x = lu_solve(&a, &perm, &b);

    let basis = pauli_products();
    let mut rho = ComplexMatrix4::zero();
    for (j, bj) in basis.iter().enumerate() {
        rho = rho + bj.scaled(Complex64::new(x[j] / 4.0, 0.0));
    }
    let trace = rho.trace().re;
    if trace <= 1e-12 {
        return Err(TomoError::DegenerateNormalization { trace });
    }
    let mut rho = rho.scaled(Complex64::new(1.0 / trace, 0.0));

    let eigs = eig4(&rho).map_err(StateError::from)?;
    let min_eig = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    let mut projected = false;
    if min_eig < -1e-9 {
        rho = clip_to_psd(&rho)?;
        projected = true;
    }
    Ok(Reconstruction {
        rho: DensityMatrix::new(rho)?,
        projected,
    })
}

/// Eigenvalue clipping: diagonalize, zero the negative part of the spectrum,
/// renormalize the trace.
fn clip_to_psd(h: &ComplexMatrix4) -> Result<ComplexMatrix4, TomoError> {
    let (vals, vecs) = hermitian_eig4(h);
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(TomoError::DegenerateNormalization { trace: total });
    }
    let mut out = ComplexMatrix4::zero();
    for (j, &lam) in clipped.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for r in 0..4 {
            for c in 0..4 {
                out[(r, c)] += Complex64::new(lam / total, 0.0)
                    * vecs[(r, j)]
                    * vecs[(c, j)].conj();
            }
        }
    }
    Ok(out)
}

/// Cyclic complex Jacobi diagonalization of a Hermitian 4×4: returns the real
/// eigenvalues and a unitary whose columns are the eigenvectors. Quadratic
/// convergence makes a handful of sweeps plenty at this size.
fn hermitian_eig4(h: &ComplexMatrix4) -> ([f64; 4], ComplexMatrix4) {
    let mut a = *h;
    let mut v = ComplexMatrix4::identity();
    let scale = a.norm_frob().max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..4 {
            for q in p + 1..4 {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..4 {
            for q in p + 1..4 {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-18 * scale {
                    continue;
                }
                // Unitary 2×2 rotation annihilating a[(p,q)]: diagonalize the
                // Hermitian block [[app, apq], [apq*, aqq]].
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns: J[:,p] = c·e_p − s·phase*·e_q ; J[:,q] = s·phase·e_p + c·e_q.
                let (jp_p, jq_p) = (Complex64::new(c, 0.0), -phase.conj() * s);
                let (jp_q, jq_q) = (phase * s, Complex64::new(c, 0.0));
                // a ← J† a J, updating only rows/columns p and q.
                for r in 0..4 {
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = arp * jp_p + arq * jq_p;
                    a[(r, q)] = arp * jp_q + arq * jq_q;
                }
                for cidx in 0..4 {
                    let (apc, aqc) = (a[(p, cidx)], a[(q, cidx)]);
                    a[(p, cidx)] = jp_p.conj() * apc + jq_p.conj() * aqc;
                    a[(q, cidx)] = jp_q.conj() * apc + jq_q.conj() * aqc;
                }
                for r in 0..4 {
                    let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = vrp * jp_p + vrq * jq_p;
                    v[(r, q)] = vrp * jp_q + vrq * jq_q;
                }
            }
        }
    }
    let vals = [a[(0, 0)].re, a[(1, 1)].re, a[(2, 2)].re, a[(3, 3)].re];
    (vals, v)
}

/// Monte-Carlo error bars from repeated simulate-and-reconstruct trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBars {
    pub concurrence_mean: f64,
    pub concurrence_std: f64,
    pub s_mean: f64,
    pub s_std: f64,
    pub trials: usize,
}

/// SplitMix64 step; the per-trial seed stream for [`mc_error`].
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Pairwise (cascade) summation: error grows like log n instead of n.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0)).sqrt())
}

/// Repeats `simulate_counts` → `linear_reconstruct` with per-trial seeds
/// derived from `seed`, and reports sample mean and standard deviation of
/// the reconstructed concurrence and optimized CHSH value. Trials run
/// concurrently; the aggregation is order-independent, so the report is
/// deterministic.
pub fn mc_error(
    rho: &DensityMatrix,
    ps: &ProjectionSet,
    n_pairs: u64,
    trials: usize,
    seed: u64,
    angle_jitter_deg: f64,
) -> Result<ErrorBars, TomoError> {
    if trials < 2 {
        return Err(TomoError::InvalidTrials { trials });
    }
    let mut state = seed;
    let trial_seeds: Vec<u64> = (0..trials).map(|_| splitmix64(&mut state)).collect();
    let samples: Result<Vec<(f64, f64)>, TomoError> = trial_seeds
        .par_iter()
        .map(|&s| {
            let record = simulate_counts(rho, ps, n_pairs, s, angle_jitter_deg);
            let rec = linear_reconstruct(&record, ps)?;
            let c = concurrence(&rec.rho)?;
            let (_, smax) = maximize_chsh_linear(&rec.rho);
            Ok((c, smax))
        })
        .collect();
    let samples = samples?;
    let concs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let smaxs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (concurrence_mean, concurrence_std) = mean_std(&concs);
    let (s_mean, s_std) = mean_std(&smaxs);
    Ok(ErrorBars {
        concurrence_mean,
        concurrence_std,
        s_mean,
        s_std,
        trials,
    })
}
