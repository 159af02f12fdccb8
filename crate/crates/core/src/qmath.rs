//! Dense complex linear algebra for the 2×2 and 4×4 matrices used throughout
//! this crate: Jones operators on one polarization qubit and density operators
//! on the two-photon space. Row-major storage; the two-qubit basis ordering is
//! `{HH, HV, VH, VV}` everywhere.
//!
//! The one nontrivial algorithm here is [`eig4`], a general complex 4×4
//! eigenvalue solver (Hessenberg reduction followed by shifted QR iteration).
//! It intentionally stops at eigenvalues — no eigenvectors, no general n×n
//! support, no decompositions beyond what the solver itself needs.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A 2×2 complex matrix (single-photon polarization operator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix2 {
    pub entries: [[Complex64; 2]; 2],
}

/// A 4×4 complex matrix (two-photon operator in the `{HH, HV, VH, VV}` basis).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix4 {
    pub entries: [[Complex64; 4]; 4],
}

impl ComplexMatrix2 {
    pub const fn new(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn zero() -> Self {
        Self::new([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.entries[0][0] = ONE;
        m.entries[1][1] = ONE;
        m
    }

    /// Builds the matrix from real entries (imaginary parts zero).
    pub fn from_real(entries: [[f64; 2]; 2]) -> Self {
        let mut m = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                m.entries[r][c] = Complex64::new(entries[r][c], 0.0);
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.entries[r][c] = self.entries[c][r].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut() {
            for e in row.iter_mut() {
                *e = e.conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut() {
            for e in row.iter_mut() {
                *e *= k;
            }
        }
        out
    }
}

impl ComplexMatrix4 {
    pub const fn new(entries: [[Complex64; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn zero() -> Self {
        Self::new([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.entries[i][i] = ONE;
        }
        m
    }

    pub fn from_real(entries: [[f64; 4]; 4]) -> Self {
        let mut m = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                m.entries[r][c] = Complex64::new(entries[r][c], 0.0);
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] = self.entries[c][r].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut() {
            for e in row.iter_mut() {
                *e = e.conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.entries[i][i]).sum()
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut() {
            for e in row.iter_mut() {
                *e *= k;
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm_frob(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Determinant by cofactor expansion along the first row. Kept independent
    /// of [`eig4`] so the two can cross-check each other.
    pub fn det(&self) -> Complex64 {
        let e = &self.entries;
        let mut det = ZERO;
        let mut sign = ONE;
        for col in 0..4 {
            // 3×3 minor skipping row 0 and `col`.
            let mut m = [[ZERO; 3]; 3];
            for (mr, r) in (1..4).enumerate() {
                let mut mc = 0;
                for c in 0..4 {
                    if c != col {
                        m[mr][mc] = e[r][c];
                        mc += 1;
                    }
                }
            }
            let minor = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            det += sign * e[0][col] * minor;
            sign = -sign;
        }
        det
    }
}

impl Index<(usize, usize)> for ComplexMatrix2 {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r][c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix2 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[r][c]
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r][c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[r][c]
    }
}

impl Mul for ComplexMatrix2 {
    type Output = ComplexMatrix2;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.entries[r][c] =
                    self.entries[r][0] * rhs.entries[0][c] + self.entries[r][1] * rhs.entries[1][c];
            }
        }
        out
    }
}

impl Mul for ComplexMatrix4 {
    type Output = ComplexMatrix4;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.entries[r][k] * rhs.entries[k][c];
                }
                out.entries[r][c] = acc;
            }
        }
        out
    }
}

impl Add for ComplexMatrix4 {
    type Output = ComplexMatrix4;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] += rhs.entries[r][c];
            }
        }
        out
    }
}

impl Sub for ComplexMatrix4 {
    type Output = ComplexMatrix4;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] -= rhs.entries[r][c];
            }
        }
        out
    }
}

/// Kronecker product, first factor on the slow (left-qubit) index. With the
/// global basis ordering this sends `(a ⊗ b)` to the operator acting as `a` on
/// the first photon and `b` on the second.
pub fn kron2(a: ComplexMatrix2, b: ComplexMatrix2) -> ComplexMatrix4 {
    let mut out = ComplexMatrix4::zero();
    for ar in 0..2 {
        for ac in 0..2 {
            for br in 0..2 {
                for bc in 0..2 {
                    out.entries[2 * ar + br][2 * ac + bc] = a.entries[ar][ac] * b.entries[br][bc];
                }
            }
        }
    }
    out
}

/// Failure modes of [`eig4`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EigError {
    /// QR iteration did not isolate all eigenvalues within the sweep budget.
    /// Finite input essentially never triggers this; NaN/Inf entries do.
    #[error("eigenvalue iteration did not converge within {cap} QR sweeps")]
    NonConvergence { cap: usize },
}

/// QR sweep budget for [`eig4`]. Random 4×4 matrices converge in well under 20
/// sweeps; the cap only exists so pathological input fails loudly instead of
/// spinning.
const EIG4_SWEEP_CAP: usize = 160;

/// Eigenvalues of a general complex 4×4 matrix, in no particular order.
///
/// Reduces to upper Hessenberg form with Givens similarity rotations, then runs
/// explicitly shifted QR (Wilkinson shift from the trailing 2×2, with an
/// occasional exceptional shift to break symmetry stalls). Trailing 2×2 blocks
/// are finished in closed form. Errors instead of returning garbage if the
/// sweep budget is exhausted.
pub fn eig4(m: &ComplexMatrix4) -> Result<[Complex64; 4], EigError> {
    eig4_capped(m, EIG4_SWEEP_CAP)
}

/// [`eig4`] with an explicit sweep budget. Crate-visible so tests can force the
/// non-convergence path without manufacturing pathological input.
pub(crate) fn eig4_capped(m: &ComplexMatrix4, cap: usize) -> Result<[Complex64; 4], EigError> {
    let mut h = m.entries;
    hessenberg(&mut h);
    let scale = m.norm_frob();
    if scale == 0.0 {
        return Ok([ZERO; 4]);
    }

    let mut hi = 3usize;
    let mut sweeps = 0usize;
    let mut window_sweeps = 0usize;
    loop {
        // Deflate negligible subdiagonal couplings: negligible relative to
        // the neighbouring diagonal, or to the whole matrix. The second floor
        // is what terminates rank-deficient input — once every eigenvalue
        // left in the window is rounding dust, coupling and diagonal are the
        // same size, a neighbourhood-relative test alone can never fire, and
        // the iteration would grind on noise until the sweep budget ran out.
        // Zeroing an entry of size ≤ ε·‖M‖ stays within the backward-error
        // envelope the rotations already carry.
        for i in 1..=hi {
            let local = h[i - 1][i - 1].norm() + h[i][i].norm();
            let tol = f64::EPSILON * local.max(scale);
            if h[i][i - 1].norm() <= tol {
                h[i][i - 1] = ZERO;
            }
        }
        while hi > 0 && h[hi][hi - 1] == ZERO {
            hi -= 1;
            window_sweeps = 0;
        }
        if hi == 0 {
            break;
        }
        let mut lo = hi;
        while lo > 0 && h[lo][lo - 1] != ZERO {
            lo -= 1;
        }

        if hi - lo == 1 {
            // 2×2 windows have a stable closed form; QR would only dance
            // around it.
            let (l1, l2) = eig22(h[lo][lo], h[lo][hi], h[hi][lo], h[hi][hi]);
            h[lo][lo] = l1;
            h[hi][hi] = l2;
            h[hi][lo] = ZERO;
            window_sweeps = 0;
            continue;
        }

        if sweeps == cap {
            return Err(EigError::NonConvergence { cap });
        }
        sweeps += 1;
        window_sweeps += 1;

        let mu = if window_sweeps % 13 == 0 {
            // Exceptional shift: perturb away from a cycling trajectory.
            h[hi][hi] + 0.75 * h[hi][hi - 1].norm()
        } else {
            // Wilkinson shift: the trailing-2×2 eigenvalue closer to the
            // bottom corner.
            let (l1, l2) = eig22(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
            if (l1 - h[hi][hi]).norm() <= (l2 - h[hi][hi]).norm() {
                l1
            } else {
                l2
            }
        };
        qr_step(&mut h, lo, hi, mu);
    }

    Ok([h[0][0], h[1][1], h[2][2], h[3][3]])
}

/// Normalized Givens pair `(f, g) / √(|f|²+|g|²)`. The rotation
/// `G = [[f, -ḡ], [g, f̄]]` built from the result is unitary, and `G†` maps the
/// original `(f, g)ᵀ` to `(√(|f|²+|g|²), 0)ᵀ`.
fn givens(f: Complex64, g: Complex64) -> (Complex64, Complex64) {
    let n = (f.norm_sqr() + g.norm_sqr()).sqrt();
    if n == 0.0 {
        (ONE, ZERO)
    } else {
        (f / n, g / n)
    }
}

/// Applies `G†` to rows `i`, `j` (all columns); `(f, g)` from [`givens`].
fn rot_rows(h: &mut [[Complex64; 4]; 4], i: usize, j: usize, f: Complex64, g: Complex64) {
    for col in 0..4 {
        let a = h[i][col];
        let b = h[j][col];
        h[i][col] = f.conj() * a + g.conj() * b;
        h[j][col] = f * b - g * a;
    }
}

/// Applies `G` to columns `i`, `j` (all rows); `(f, g)` from [`givens`].
fn rot_cols(h: &mut [[Complex64; 4]; 4], i: usize, j: usize, f: Complex64, g: Complex64) {
    for row in 0..4 {
        let a = h[row][i];
        let b = h[row][j];
        h[row][i] = a * f + b * g;
        h[row][j] = b * f.conj() - a * g.conj();
    }
}

/// In-place reduction to upper Hessenberg form by Givens similarity
/// transformations. Three rotations suffice at this size; each zeroes one
/// below-subdiagonal entry without disturbing the ones already cleared.
fn hessenberg(h: &mut [[Complex64; 4]; 4]) {
    for (i, j, col) in [(2, 3, 0), (1, 2, 0), (2, 3, 1)] {
        let (f, g) = givens(h[i][col], h[j][col]);
        if g == ZERO {
            continue;
        }
        rot_rows(h, i, j, f, g);
        rot_cols(h, i, j, f, g);
    }
}

/// One explicit shifted QR sweep on the active window `lo..=hi`:
/// `H − μI = QR`, then `H ← RQ + μI` with the same rotations applied from the
/// right. Rows/columns outside the window carry the coupling blocks and are
/// rotated along, which preserves similarity of the full matrix.
fn qr_step(h: &mut [[Complex64; 4]; 4], lo: usize, hi: usize, mu: Complex64) {
    let mut rots = [(ONE, ZERO); 3];
    for i in lo..=hi {
        h[i][i] -= mu;
    }
    for i in lo..hi {
        let r = givens(h[i][i], h[i + 1][i]);
        rots[i - lo] = r;
        rot_rows(h, i, i + 1, r.0, r.1);
    }
    for i in lo..hi {
        let (f, g) = rots[i - lo];
        rot_cols(h, i, i + 1, f, g);
    }
    for i in lo..=hi {
        h[i][i] += mu;
    }
}

/// Eigenvalues of `[[a, b], [c, d]]` in closed form, scaled to avoid
/// overflow/underflow and with the quadratic solved cancellation-free: the
/// discriminant uses `((a−d)/2)² + bc`, which stays exact for nearly equal
/// eigenvalues where the algebraically identical `tr²/4 − det` would cancel
/// (that form loses separations below √ε·|tr| — far above the coherences
/// the density-matrix callers need resolved); the smaller root comes from
/// `det/λ₁`, not from subtracting nearly equal terms.
fn eig22(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let s = a.norm() + b.norm() + c.norm() + d.norm();
    if s == 0.0 {
        return (ZERO, ZERO);
    }
    let (a, b, c, d) = (a / s, b / s, c / s, d / s);
    let half_tr = (a + d) * 0.5;
    let half_gap = (a - d) * 0.5;
    let det = a * d - b * c;
    let mut disc = (half_gap * half_gap + b * c).sqrt();
    if (half_tr.conj() * disc).re < 0.0 {
        disc = -disc;
    }
    let l1 = half_tr + disc;
    let l2 = if l1.norm() > 0.0 { det / l1 } else { half_tr - disc };
    (l1 * s, l2 * s)
}
