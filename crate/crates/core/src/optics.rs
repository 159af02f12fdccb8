//! Pre-integration biphoton representation and the optical elements acting on
//! it. The state of one photon pair is a finite sum of terms, each carrying a
//! complex amplitude, a polarization and a spatial path per photon, and the
//! birefringent delay each photon has accumulated. Quartz adds delay, wave
//! plates mix polarizations, beam displacers split or post-select on
//! (polarization, path), and [`reduce`] integrates the delays against each
//! photon's Gaussian spectrum to produce the observable density matrix and
//! the post-selection success probability.
//!
//! Keeping delays symbolic until [`reduce`] makes frequency integration exact:
//! every matrix entry becomes a finite sum of Gaussian characteristic-function
//! values, with no discretization anywhere.

use crate::qmath::{ComplexMatrix2, ComplexMatrix4};
use crate::states::{DensityMatrix, StateError};
use num_complex::Complex64;
use std::cmp::Ordering;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0; // m/s

/// Amplitudes below this are dropped during canonicalization, so exact
/// cancellations (interferometric dark outputs) leave no residue terms.
pub const AMP_PRUNE_TOL: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

/// The two photons of a pair; arm A flies free, arm B is where this
/// experiment's plates and displacers sit (either arm works).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    A,
    B,
}

/// Spatial path label inside one arm. Everything starts in `I`; a beam
/// displacer moves the vertical component to `II`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeamPath {
    I,
    II,
}

/// One amplitude of a biphoton superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub amp: Complex64,
    pub pol_a: Pol,
    pub pol_b: Pol,
    pub path_a: BeamPath,
    pub path_b: BeamPath,
    /// Birefringent delay accumulated by photon A, seconds.
    pub delay_a: f64,
    /// Birefringent delay accumulated by photon B, seconds.
    pub delay_b: f64,
}

impl Term {
    fn pol(&self, arm: Arm) -> Pol {
        match arm {
            Arm::A => self.pol_a,
            Arm::B => self.pol_b,
        }
    }

    fn pol_mut(&mut self, arm: Arm) -> &mut Pol {
        match arm {
            Arm::A => &mut self.pol_a,
            Arm::B => &mut self.pol_b,
        }
    }

    fn path(&self, arm: Arm) -> BeamPath {
        match arm {
            Arm::A => self.path_a,
            Arm::B => self.path_b,
        }
    }

    fn path_mut(&mut self, arm: Arm) -> &mut BeamPath {
        match arm {
            Arm::A => &mut self.path_a,
            Arm::B => &mut self.path_b,
        }
    }

    fn delay_mut(&mut self, arm: Arm) -> &mut f64 {
        match arm {
            Arm::A => &mut self.delay_a,
            Arm::B => &mut self.delay_b,
        }
    }

    /// Ordering key: everything except the amplitude. Terms with equal keys
    /// are the same basis vector and get merged.
    fn key_cmp(&self, other: &Self) -> Ordering {
        (self.pol_a, self.pol_b, self.path_a, self.path_b)
            .cmp(&(other.pol_a, other.pol_b, other.path_a, other.path_b))
            .then(self.delay_a.total_cmp(&other.delay_a))
            .then(self.delay_b.total_cmp(&other.delay_b))
    }
}

/// A biphoton pure state as a canonically sorted, merged, pruned term list.
/// Two values constructed through any sequence of element applications
/// compare equal iff they are the same superposition (up to amplitudes and
/// delays agreeing bit-for-bit; use [`BiphotonState::approx_eq`] when the two
/// took different arithmetic routes).
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    terms: Vec<Term>,
}

impl BiphotonState {
    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut s = Self { terms };
        s.canonicalize();
        s
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(Term::key_cmp);
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.key_cmp(&t) == Ordering::Equal => last.amp += t.amp,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.amp.norm() >= AMP_PRUNE_TOL);
        self.terms = merged;
    }

    /// `⟨ψ|ψ⟩` under the given spectra: terms on the same (polarization, path)
    /// basis vector interfere through the characteristic function of their
    /// delay difference; orthogonal basis vectors do not.
    pub fn norm_sqr(&self, sp_a: &Spectrum, sp_b: &Spectrum) -> f64 {
        let mut total = ZERO;
        for m in &self.terms {
            for n in &self.terms {
                if (m.pol_a, m.pol_b, m.path_a, m.path_b)
                    == (n.pol_a, n.pol_b, n.path_a, n.path_b)
                {
                    total += m.amp
                        * n.amp.conj()
                        * gaussian_characteristic(m.delay_a - n.delay_a, sp_a)
                        * gaussian_characteristic(m.delay_b - n.delay_b, sp_b);
                }
            }
        }
        total.re
    }

    /// Term-by-term comparison with an absolute tolerance on amplitudes and a
    /// mixed absolute/relative tolerance on delays. Requires identical
    /// polarization/path structure.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|(s, o)| {
                (s.pol_a, s.pol_b, s.path_a, s.path_b) == (o.pol_a, o.pol_b, o.path_a, o.path_b)
                    && (s.amp - o.amp).norm() <= tol
                    && (s.delay_a - o.delay_a).abs() <= tol * s.delay_a.abs().max(1.0)
                    && (s.delay_b - o.delay_b).abs() <= tol * s.delay_b.abs().max(1.0)
            })
    }
}

/// Gaussian single-photon spectrum
/// `f(ω) = (2 / (√π σ)) · exp(−4 (ω − ω₀)² / σ²)`,
/// normalized so `∫ f dω = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    omega0: f64,
    sigma: f64,
}

impl Spectrum {
    pub fn new(omega0: f64, sigma: f64) -> Result<Self, OpticsError> {
        if !(omega0 > 0.0 && omega0.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(OpticsError::InvalidSpectrum { omega0, sigma });
        }
        Ok(Self { omega0, sigma })
    }

    /// Center angular frequency, rad/s.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Width parameter σ, rad/s.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Center vacuum wavelength `2πc/ω₀`, meters.
    pub fn lambda0(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.omega0
    }
}

/// An element of the optical pipeline, tagged with the arm it sits in.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Birefringent quartz of the given physical thickness (in units of the
    /// center wavelength λ₀) and birefringence Δn; delays the V ray.
    QuartzPlate {
        arm: Arm,
        thickness_lambda0: f64,
        delta_n: f64,
    },
    /// Physical half-wave plate with its fast axis at `axis_deg`; Jones matrix
    /// `[[cos2θ, sin2θ], [sin2θ, −cos2θ]]`.
    HalfWavePlate { arm: Arm, axis_deg: f64 },
    /// Arbitrary explicit polarization map, applied verbatim (unitarity not
    /// required).
    MapPlate { arm: Arm, map: ComplexMatrix2 },
    BeamDisplacerSplit { arm: Arm },
    BeamDisplacerMerge { arm: Arm },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpticsError {
    #[error("spectrum parameters must be positive and finite (omega0 = {omega0}, sigma = {sigma})")]
    InvalidSpectrum { omega0: f64, sigma: f64 },
    #[error(
        "quartz plate parameters out of range (thickness {thickness_lambda0} λ₀, Δn {delta_n}); \
         thickness must be ≥ 0 and Δn in (0, 1)"
    )]
    InvalidQuartz { thickness_lambda0: f64, delta_n: f64 },
    #[error("arm {arm:?} already carries two paths; nested splits are not supported")]
    NestedSplit { arm: Arm },
    #[error("arm {arm:?} still carries two paths; merge it before reducing")]
    UnmergedPath { arm: Arm },
    #[error("post-selection removed essentially all amplitude (norm {trace:.3e})")]
    FullyPostSelected { trace: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// `(|HH⟩ + |VV⟩)/√2`, both photons in path I, no accumulated delay.
pub fn bell_state() -> BiphotonState {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let base = Term {
        amp,
        pol_a: Pol::H,
        pol_b: Pol::H,
        path_a: BeamPath::I,
        path_b: BeamPath::I,
        delay_a: 0.0,
        delay_b: 0.0,
    };
    BiphotonState::from_terms(vec![
        base,
        Term {
            pol_a: Pol::V,
            pol_b: Pol::V,
            ..base
        },
    ])
}

/// Hadamard `[[1, 1], [1, −1]]/√2` — the action of a half-wave plate at 22.5°.
pub fn hadamard() -> ComplexMatrix2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix2::from_real([[h, h], [h, -h]])
}

/// Rotation of the polarization plane by `angle_deg`:
/// `[[cosθ, −sinθ], [sinθ, cosθ]]`. At +45° this sends `|H⟩ → (|H⟩+|V⟩)/√2`
/// and `|V⟩ → (−|H⟩+|V⟩)/√2`, the map the recovery pipeline needs between
/// the second quartz plate and the merging displacer.
pub fn polarization_rotation(angle_deg: f64) -> ComplexMatrix2 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    ComplexMatrix2::from_real([[c, -s], [s, c]])
}

/// Bit flip `|H⟩ ↔ |V⟩`.
pub fn bit_flip() -> ComplexMatrix2 {
    ComplexMatrix2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

/// Jones matrix of a physical half-wave plate with fast axis at `axis_deg`.
pub fn half_wave_jones(axis_deg: f64) -> ComplexMatrix2 {
    let (s, c) = (2.0 * axis_deg.to_radians()).sin_cos();
    ComplexMatrix2::from_real([[c, s], [s, -c]])
}

/// Birefringent delay of the V ray: every term vertically polarized in `arm`
/// gains `thickness_lambda0 · λ₀ · Δn / c` seconds of delay. Amplitudes and
/// the H ray are untouched; the frequency-dependent phase this delay stands
/// for is applied by [`reduce`].
///
/// # Panics
/// If `thickness_lambda0` is negative (quartz only ever adds delay).
pub fn apply_quartz(
    s: &BiphotonState,
    arm: Arm,
    thickness_lambda0: f64,
    delta_n: f64,
    lambda0: f64,
) -> BiphotonState {
    assert!(
        thickness_lambda0 >= 0.0,
        "quartz thickness must be nonnegative"
    );
    let delay = thickness_lambda0 * lambda0 * delta_n / SPEED_OF_LIGHT;
    let mut terms = s.terms.clone();
    for t in &mut terms {
        if t.pol(arm) == Pol::V {
            *t.delay_mut(arm) += delay;
        }
    }
    BiphotonState::from_terms(terms)
}

/// Applies a 2×2 polarization map to one arm. Each term's polarization
/// component transforms linearly (columns of `j` are the images of `|H⟩` and
/// `|V⟩`); resulting coinciding terms merge and cancellations are pruned.
pub fn apply_jones(s: &BiphotonState, arm: Arm, j: ComplexMatrix2) -> BiphotonState {
    let mut terms = Vec::with_capacity(2 * s.terms.len());
    for t in &s.terms {
        let col = match t.pol(arm) {
            Pol::H => 0,
            Pol::V => 1,
        };
        for (row, pol) in [(0, Pol::H), (1, Pol::V)] {
            let amp = t.amp * j[(row, col)];
            if amp.norm() == 0.0 {
                continue;
            }
            let mut out = *t;
            out.amp = amp;
            *out.pol_mut(arm) = pol;
            terms.push(out);
        }
    }
    BiphotonState::from_terms(terms)
}

/// Beam-displacer split: in `arm`, H keeps path I and V moves to path II.
/// Unitary rerouting — amplitudes unchanged. Errors if the arm is already
/// split (one displacer pair per arm).
pub fn apply_bd_split(s: &BiphotonState, arm: Arm) -> Result<BiphotonState, OpticsError> {
    if s.terms.iter().any(|t| t.path(arm) == BeamPath::II) {
        return Err(OpticsError::NestedSplit { arm });
    }
    let mut terms = s.terms.clone();
    for t in &mut terms {
        if t.pol(arm) == Pol::V {
            *t.path_mut(arm) = BeamPath::II;
        }
    }
    Ok(BiphotonState::from_terms(terms))
}

/// Beam-displacer merge, post-selecting on the recombined output port.
///
/// A second displacer oriented like the first walks V off once more, so the
/// single spatially recombined output carries the V component of path I and
/// the H component of path II; those terms are kept (path reset to I). The
/// other two combinations — H that stayed in path I, V displaced out of path
/// II — exit through dark ports and are deleted, which is where the
/// squared-norm drops below 1 and becomes the post-selection success
/// probability.
pub fn apply_bd_merge(s: &BiphotonState, arm: Arm) -> BiphotonState {
    let mut terms = Vec::with_capacity(s.terms.len());
    for t in &s.terms {
        let keep = matches!(
            (t.pol(arm), t.path(arm)),
            (Pol::V, BeamPath::I) | (Pol::H, BeamPath::II)
        );
        if keep {
            let mut out = *t;
            *out.path_mut(arm) = BeamPath::I;
            terms.push(out);
        }
    }
    BiphotonState::from_terms(terms)
}

/// Applies one [`Element`]; `lambda0` (meters) converts quartz thickness in
/// λ₀ units to physical length.
pub fn apply_element(
    s: &BiphotonState,
    e: &Element,
    lambda0: f64,
) -> Result<BiphotonState, OpticsError> {
    match *e {
        Element::QuartzPlate {
            arm,
            thickness_lambda0,
            delta_n,
        } => {
            if !(thickness_lambda0 >= 0.0 && delta_n > 0.0 && delta_n < 1.0) {
                return Err(OpticsError::InvalidQuartz {
                    thickness_lambda0,
                    delta_n,
                });
            }
            Ok(apply_quartz(s, arm, thickness_lambda0, delta_n, lambda0))
        }
        Element::HalfWavePlate { arm, axis_deg } => {
            Ok(apply_jones(s, arm, half_wave_jones(axis_deg)))
        }
        Element::MapPlate { arm, map } => Ok(apply_jones(s, arm, map)),
        Element::BeamDisplacerSplit { arm } => apply_bd_split(s, arm),
        Element::BeamDisplacerMerge { arm } => Ok(apply_bd_merge(s, arm)),
    }
}

/// Characteristic function of the Gaussian spectrum at delay difference `Δα`:
/// `∫ f(ω) e^{iΔαω} dω = exp(−Δα²σ²/16) · exp(iΔα·ω₀)`.
pub fn gaussian_characteristic(delta_alpha: f64, sp: &Spectrum) -> Complex64 {
    let damp = (-delta_alpha * delta_alpha * sp.sigma * sp.sigma / 16.0).exp();
    Complex64::from_polar(damp, delta_alpha * sp.omega0)
}

/// Integrates the delay tags against each photon's spectrum (independently —
/// each term carries one delay per photon) and returns the normalized density
/// matrix plus the pre-normalization trace, which is the probability that the
/// pair survived every post-selection in the pipeline.
///
/// Unnormalized entries:
/// `ρ̃[m-pols, n-pols] = Σ amp_m·amp_n* · k_a(δa_m − δa_n) · k_b(δb_m − δb_n)`
/// over all term pairs, with `k` the Gaussian characteristic function.
pub fn reduce(
    s: &BiphotonState,
    sp_a: &Spectrum,
    sp_b: &Spectrum,
) -> Result<(DensityMatrix, f64), OpticsError> {
    reduce_with(s, &mut |d, sp| gaussian_characteristic(d, sp), sp_a, sp_b)
}

/// [`reduce`] parameterized over the characteristic function, so a numeric
/// quadrature can stand in for the closed form when cross-checking it.
pub fn reduce_with(
    s: &BiphotonState,
    characteristic: &mut dyn FnMut(f64, &Spectrum) -> Complex64,
    sp_a: &Spectrum,
    sp_b: &Spectrum,
) -> Result<(DensityMatrix, f64), OpticsError> {
    for arm in [Arm::A, Arm::B] {
        if s.terms.iter().any(|t| t.path(arm) == BeamPath::II) {
            return Err(OpticsError::UnmergedPath { arm });
        }
    }
    let idx = |pa: Pol, pb: Pol| 2 * (pa as usize) + (pb as usize);
    let mut rho = ComplexMatrix4::zero();
    for m in &s.terms {
        for n in &s.terms {
            let ka = characteristic(m.delay_a - n.delay_a, sp_a);
            let kb = characteristic(m.delay_b - n.delay_b, sp_b);
            rho[(idx(m.pol_a, m.pol_b), idx(n.pol_a, n.pol_b))] += m.amp * n.amp.conj() * ka * kb;
        }
    }
    let trace = rho.trace().re;
    if trace < 1e-14 {
        return Err(OpticsError::FullyPostSelected { trace });
    }
    let rho = rho.scaled(Complex64::new(1.0 / trace, 0.0));
    // The 1/√2 amplitudes square to 0.5 ± 1 ulp, so a lossless pipeline's
    // trace can land a hair above 1.
    let success = trace.min(1.0);
    Ok((DensityMatrix::new(rho)?, success))
}
