//! Dense linear algebra on the truncated spin-1/2 ⊗ oscillator space.
//!
//! Basis ordering is spin-major: the joint basis state `|s, n>` sits at index
//! `s * (n_max + 1) + n`, with `s = 0` for spin down and `s = 1` for spin up.
//! Every operator and state in the crate uses this ordering. Units are
//! `hbar = 1`, so Hamiltonians are angular frequencies and `exp(-i H t)` is
//! the propagator for a time `t`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Default tolerance for [`truncation_guard`].
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Truncated joint space: a spin-1/2 tensored with Fock levels `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidSpace(format!("n_max must be at least 1, got {n_max}")));
        }
        Ok(Self { n_max })
    }

    /// Highest retained Fock level (inclusive).
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of retained Fock levels, `n_max + 1`.
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    /// Joint dimension, `2 (n_max + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.levels()
    }

    pub fn index(&self, spin: Spin, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        spin.index() * self.levels() + n
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn label(&self, index: usize) -> (Spin, usize) {
        let spin = if index < self.levels() { Spin::Down } else { Spin::Up };
        (spin, index % self.levels())
    }

    pub(crate) fn require_n_max(&self, required: usize) -> Result<()> {
        if self.n_max < required {
            return Err(Error::SpaceTooSmall {
                required,
                n_max: self.n_max,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// The four spin factors of the target Hamiltonian class.
///
/// `SigmaPlus`/`SigmaMinus` follow `sigma_± = sigma_x ± i sigma_y`, which is
/// twice the elementary `|up><down|` (resp. `|down><up|`) matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinOp {
    Identity,
    SigmaPlus,
    SigmaMinus,
    SigmaZ,
}

/// Tri-state structural flag on an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Flag {
    Yes,
    No,
    #[default]
    Unknown,
}

/// Which factor of the joint space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// The 2x2 spin factor.
    Spin,
    /// The `(n_max + 1)`-dimensional motional factor.
    Motion(HilbertSpace),
    /// The full joint space.
    Joint(HilbertSpace),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Spin => 2,
            Domain::Motion(s) => s.levels(),
            Domain::Joint(s) => s.dim(),
        }
    }
}

/// Dense complex matrix with optional Hermitian/unitary certification.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    domain: Domain,
    entries: DMatrix<Cplx<T>>,
    hermitian: Flag,
    unitary: Flag,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn new(domain: Domain, entries: DMatrix<Cplx<T>>) -> Result<Self> {
        let d = domain.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self {
            domain,
            entries,
            hermitian: Flag::Unknown,
            unitary: Flag::Unknown,
        })
    }

    pub fn zeros(domain: Domain) -> Self {
        let d = domain.dim();
        Self {
            domain,
            entries: DMatrix::zeros(d, d),
            hermitian: Flag::Yes,
            unitary: Flag::No,
        }
    }

    pub fn identity(domain: Domain) -> Self {
        let d = domain.dim();
        Self {
            domain,
            entries: DMatrix::identity(d, d),
            hermitian: Flag::Yes,
            unitary: Flag::Yes,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Cplx<T>> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Cplx<T>> {
        self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Cplx<T> {
        self.entries[(row, col)]
    }

    pub fn hermitian_flag(&self) -> Flag {
        self.hermitian
    }

    pub fn unitary_flag(&self) -> Flag {
        self.unitary
    }

    /// `max |M - M^dagger|` over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = self.entries[(i, j)] - self.entries[(j, i)].conj();
                worst = worst.max(diff.norm_sqr().sqrt().to_f64_lossy());
            }
        }
        worst
    }

    /// `max |U^dagger U - I|` over all entries.
    pub fn unitary_deviation(&self) -> f64 {
        let d = self.dim();
        let prod = self.entries.adjoint() * &self.entries;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j {
                    Cplx::new(T::one(), T::zero())
                } else {
                    Cplx::new(T::zero(), T::zero())
                };
                worst = worst.max((prod[(i, j)] - target).norm_sqr().sqrt().to_f64_lossy());
            }
        }
        worst
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm_sqr().sqrt().to_f64_lossy()))
    }

    // Entry scale for the structural tolerances; couplings in rad/s can be
    // large, so the Hermitian check is relative once entries exceed one.
    fn tol_scale(&self) -> f64 {
        self.max_abs().max(1.0)
    }

    /// Certifies the matrix as Hermitian, failing if it is not.
    ///
    /// The tolerance is `T::HERMITIAN_TOL` relative to `max(1, max|M_ij|)`.
    pub fn certify_hermitian(mut self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev < T::HERMITIAN_TOL * self.tol_scale() {
            self.hermitian = Flag::Yes;
            Ok(self)
        } else {
            Err(Error::NotHermitian { deviation: dev })
        }
    }

    /// Certifies the matrix as unitary, failing if it is not.
    pub fn certify_unitary(mut self) -> Result<Self> {
        let dev = self.unitary_deviation();
        if dev < T::UNITARY_TOL {
            self.unitary = Flag::Yes;
            Ok(self)
        } else {
            Err(Error::NotUnitary { deviation: dev })
        }
    }

    /// Resolves the Hermitian flag by measurement.
    pub fn is_hermitian(&self) -> bool {
        match self.hermitian {
            Flag::Yes => true,
            Flag::No => false,
            Flag::Unknown => self.hermitian_deviation() < T::HERMITIAN_TOL * self.tol_scale(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        match self.unitary {
            Flag::Yes => true,
            Flag::No => false,
            Flag::Unknown => self.unitary_deviation() < T::UNITARY_TOL,
        }
    }

    /// Replaces the unknown flags with measured values.
    pub fn resolve_flags(mut self) -> Self {
        if self.hermitian == Flag::Unknown {
            self.hermitian = if self.is_hermitian() { Flag::Yes } else { Flag::No };
        }
        if self.unitary == Flag::Unknown {
            self.unitary = if self.is_unitary() { Flag::Yes } else { Flag::No };
        }
        self
    }

    pub fn adjoint(&self) -> Self {
        Self {
            domain: self.domain,
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
            unitary: self.unitary,
        }
    }

    fn same_domain(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        let unitary = if self.unitary == Flag::Yes && other.unitary == Flag::Yes {
            Flag::Yes
        } else {
            Flag::Unknown
        };
        Ok(Self {
            domain: self.domain,
            entries: &self.entries * &other.entries,
            hermitian: Flag::Unknown,
            unitary,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        let hermitian = if self.hermitian == Flag::Yes && other.hermitian == Flag::Yes {
            Flag::Yes
        } else {
            Flag::Unknown
        };
        Ok(Self {
            domain: self.domain,
            entries: &self.entries + &other.entries,
            hermitian,
            unitary: Flag::Unknown,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Cplx::new(-T::one(), T::zero())))
    }

    pub fn scale(&self, factor: Cplx<T>) -> Self {
        let hermitian = if self.hermitian == Flag::Yes && factor.im == T::zero() {
            Flag::Yes
        } else {
            Flag::Unknown
        };
        Self {
            domain: self.domain,
            entries: &self.entries * factor,
            hermitian,
            unitary: Flag::Unknown,
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Cplx::new(factor, T::zero()))
    }

    /// `[self, other] = self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        let e = &self.entries * &other.entries - &other.entries * &self.entries;
        Ok(Self {
            domain: self.domain,
            entries: e,
            hermitian: Flag::Unknown,
            unitary: Flag::Unknown,
        })
    }

    /// Integer matrix power.
    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::identity(self.domain);
        for _ in 0..k {
            out.entries = &out.entries * &self.entries;
        }
        out.hermitian = Flag::Unknown;
        out.unitary = Flag::Unknown;
        out
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> T {
        if self.dim() == 0 {
            return T::zero();
        }
        self.entries
            .clone()
            .singular_values()
            .iter()
            .fold(T::zero(), |a, &b| a.max(b))
    }

    /// Applies the operator to a raw amplitude vector.
    pub fn apply_vec(&self, v: &DVector<Cplx<T>>) -> Result<DVector<Cplx<T>>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(&self.entries * v)
    }

    /// Eigendecomposition of a Hermitian operator.
    pub fn eigh(&self) -> Result<HermitianEigen<T>> {
        if !self.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: self.hermitian_deviation(),
            });
        }
        // symmetrise so round-off in the input cannot leak into the spectrum
        let half = T::lit(0.5);
        let sym = (&self.entries + self.entries.adjoint()) * Cplx::new(half, T::zero());
        let eig = SymmetricEigen::new(sym);
        Ok(HermitianEigen {
            domain: self.domain,
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// Hermitian generator `K = i log U` of a unitary, principal branch.
    ///
    /// The eigenphases of `U` are taken in `(-pi, pi]`, so the result is only
    /// meaningful when the spectrum of `U` stays away from `-1`.
    pub fn generator(&self) -> Result<Self> {
        if !self.is_unitary() {
            return Err(Error::NotUnitary {
                deviation: self.unitary_deviation(),
            });
        }
        let d = self.dim();
        let schur = Schur::try_new(self.entries.clone(), T::default_epsilon(), 10_000)
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
        let (q, t) = schur.unpack();
        let mut phases = DMatrix::<Cplx<T>>::zeros(d, d);
        for k in 0..d {
            let z = t[(k, k)];
            // eigenvalues of a unitary sit on the unit circle: i log z = -arg z
            phases[(k, k)] = Cplx::new(-z.im.atan2(z.re), T::zero());
        }
        let k = &q * phases * q.adjoint();
        let half = T::lit(0.5);
        let k = (&k + k.adjoint()) * Cplx::new(half, T::zero());
        Ok(Self {
            domain: self.domain,
            entries: k,
            hermitian: Flag::Yes,
            unitary: Flag::Unknown,
        })
    }

    pub(crate) fn from_parts(domain: Domain, entries: DMatrix<Cplx<T>>, hermitian: Flag, unitary: Flag) -> Self {
        Self {
            domain,
            entries,
            hermitian,
            unitary,
        }
    }
}

/// Spectral decomposition `H = V diag(lambda) V^dagger` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    domain: Domain,
    values: DVector<T>,
    vectors: DMatrix<Cplx<T>>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    /// `exp(-i H t)`, certified unitary.
    pub fn propagator(&self, t: T) -> Result<OperatorMatrix<T>> {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            let phase = crate::scalar::cis(-self.values[j] * t);
            for i in 0..d {
                scaled[(i, j)] *= phase;
            }
        }
        let u = scaled * self.vectors.adjoint();
        OperatorMatrix::from_parts(self.domain, u, Flag::Unknown, Flag::Unknown).certify_unitary()
    }
}

/// Normalised pure state on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    space: HilbertSpace,
    amplitudes: DVector<Cplx<T>>,
}

impl<T: Real> StateVector<T> {
    /// Basis state `|spin, n>`.
    pub fn basis(space: HilbertSpace, spin: Spin, n: usize) -> Result<Self> {
        space.require_n_max(n)?;
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[space.index(spin, n)] = Cplx::new(T::one(), T::zero());
        Ok(Self { space, amplitudes })
    }

    /// Arbitrary superposition; the amplitudes are rescaled to unit norm.
    pub fn from_amplitudes(space: HilbertSpace, amplitudes: DVector<Cplx<T>>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidState("amplitudes have zero or non-finite norm".into()));
        }
        Ok(Self {
            space,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<Cplx<T>> {
        &self.amplitudes
    }

    pub fn amplitude(&self, spin: Spin, n: usize) -> Cplx<T> {
        self.amplitudes[self.space.index(spin, n)]
    }

    pub fn probability(&self, spin: Spin, n: usize) -> T {
        self.amplitude(spin, n).norm_sqr()
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: other.space.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Applies a unitary; operators not certified unitary are rejected.
    pub fn apply(&self, u: &OperatorMatrix<T>) -> Result<Self> {
        if u.domain() != Domain::Joint(self.space) {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: u.dim(),
            });
        }
        if !u.is_unitary() {
            return Err(Error::NotUnitary {
                deviation: u.unitary_deviation(),
            });
        }
        Ok(Self {
            space: self.space,
            amplitudes: u.entries() * &self.amplitudes,
        })
    }
}

/// Annihilation operator `a` on the motional factor: `<n-1|a|n> = sqrt(n)`.
pub fn lowering_op<T: Real>(space: HilbertSpace) -> OperatorMatrix<T> {
    let l = space.levels();
    let mut m = DMatrix::zeros(l, l);
    for n in 1..l {
        m[(n - 1, n)] = Cplx::new(T::lit(n as f64).sqrt(), T::zero());
    }
    OperatorMatrix::from_parts(Domain::Motion(space), m, Flag::No, Flag::No)
}

/// Creation operator `a^dagger`, the adjoint of [`lowering_op`].
pub fn raising_op<T: Real>(space: HilbertSpace) -> OperatorMatrix<T> {
    lowering_op(space).adjoint()
}

/// Number operator `a^dagger a` (exact diagonal, no truncation artefact).
pub fn number_op<T: Real>(space: HilbertSpace) -> OperatorMatrix<T> {
    let l = space.levels();
    let mut m = DMatrix::zeros(l, l);
    for n in 0..l {
        m[(n, n)] = Cplx::new(T::lit(n as f64), T::zero());
    }
    OperatorMatrix::from_parts(Domain::Motion(space), m, Flag::Yes, Flag::Unknown)
}

/// Normal-ordered monomial `(a^dagger)^p a^q` on the motional factor.
pub fn monomial_op<T: Real>(space: HilbertSpace, p: u32, q: u32) -> OperatorMatrix<T> {
    let ad = raising_op::<T>(space).powi(p);
    let a = lowering_op::<T>(space).powi(q);
    let mut m = ad.mul(&a).expect("same motional domain");
    m.hermitian = if p == q { Flag::Yes } else { Flag::Unknown };
    m
}

pub fn spin_op<T: Real>(kind: SpinOp) -> OperatorMatrix<T> {
    let z = Cplx::new(T::zero(), T::zero());
    let one = Cplx::new(T::one(), T::zero());
    let two = Cplx::new(T::lit(2.0), T::zero());
    // rows/cols: 0 = down, 1 = up
    let (entries, hermitian, unitary) = match kind {
        SpinOp::Identity => (DMatrix::from_row_slice(2, 2, &[one, z, z, one]), Flag::Yes, Flag::Yes),
        SpinOp::SigmaPlus => (DMatrix::from_row_slice(2, 2, &[z, z, two, z]), Flag::No, Flag::No),
        SpinOp::SigmaMinus => (DMatrix::from_row_slice(2, 2, &[z, two, z, z]), Flag::No, Flag::No),
        SpinOp::SigmaZ => (DMatrix::from_row_slice(2, 2, &[-one, z, z, one]), Flag::Yes, Flag::Yes),
    };
    OperatorMatrix::from_parts(Domain::Spin, entries, hermitian, unitary)
}

/// Elementary spin raising matrix `|up><down|` (half of `sigma_+`).
pub fn spin_raise<T: Real>() -> OperatorMatrix<T> {
    spin_op::<T>(SpinOp::SigmaPlus).scale_real(T::lit(0.5))
}

/// Tensor product `spin ⊗ motion` in the spin-major basis.
pub fn embed<T: Real>(spin: &OperatorMatrix<T>, motion: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    if spin.domain() != Domain::Spin {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: spin.dim(),
        });
    }
    let space = match motion.domain() {
        Domain::Motion(s) => s,
        other => {
            return Err(Error::DimensionMismatch {
                expected: motion.dim(),
                found: other.dim(),
            })
        }
    };
    let hermitian = if spin.hermitian == Flag::Yes && motion.hermitian == Flag::Yes {
        Flag::Yes
    } else {
        Flag::Unknown
    };
    Ok(OperatorMatrix::from_parts(
        Domain::Joint(space),
        spin.entries.kronecker(&motion.entries),
        hermitian,
        Flag::Unknown,
    ))
}

/// Projector onto one spin level, identity on the motion.
pub fn spin_projector<T: Real>(space: HilbertSpace, spin: Spin) -> OperatorMatrix<T> {
    let mut m = DMatrix::zeros(2, 2);
    m[(spin.index(), spin.index())] = Cplx::new(T::one(), T::zero());
    let s = OperatorMatrix::from_parts(Domain::Spin, m, Flag::Yes, Flag::No);
    let mut out = embed(&s, &OperatorMatrix::identity(Domain::Motion(space))).expect("valid factors");
    out.hermitian = Flag::Yes;
    out
}

/// `exp(-i H t) psi` via the eigendecomposition of `H`.
pub fn evolve<T: Real>(h: &OperatorMatrix<T>, t: T, psi: &StateVector<T>) -> Result<StateVector<T>> {
    if h.domain() != Domain::Joint(psi.space()) {
        return Err(Error::DimensionMismatch {
            expected: psi.space().dim(),
            found: h.dim(),
        });
    }
    let u = h.eigh()?.propagator(t)?;
    psi.apply(&u)
}

/// `<psi|op|psi>`.
pub fn expectation<T: Real>(op: &OperatorMatrix<T>, psi: &StateVector<T>) -> Result<Cplx<T>> {
    if op.dim() != psi.space().dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.space().dim(),
            found: op.dim(),
        });
    }
    let v = op.entries() * psi.amplitudes();
    Ok(psi.amplitudes().dotc(&v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationStatus {
    Ok { leaked: f64 },
    Violation { leaked: f64 },
}

impl TruncationStatus {
    pub fn leaked(&self) -> f64 {
        match *self {
            TruncationStatus::Ok { leaked } | TruncationStatus::Violation { leaked } => leaked,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, TruncationStatus::Ok { .. })
    }

    /// Escalates a violation into [`Error::Truncation`].
    pub fn into_result(self) -> Result<f64> {
        match self {
            TruncationStatus::Ok { leaked } => Ok(leaked),
            TruncationStatus::Violation { leaked } => Err(Error::Truncation { leaked }),
        }
    }
}

/// Population in the top two Fock levels (both spins) against `tol`.
pub fn truncation_guard<T: Real>(psi: &StateVector<T>, tol: f64) -> TruncationStatus {
    let space = psi.space();
    let top = space.n_max();
    let mut leaked = 0.0;
    for spin in [Spin::Down, Spin::Up] {
        for n in top.saturating_sub(1)..=top {
            leaked += psi.probability(spin, n).to_f64_lossy();
        }
    }
    if leaked > tol {
        TruncationStatus::Violation { leaked }
    } else {
        TruncationStatus::Ok { leaked }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn space(n: usize) -> HilbertSpace {
        HilbertSpace::new(n).unwrap()
    }

    fn motion_state(s: HilbertSpace, n: usize) -> DVector<Cplx<f64>> {
        let mut v = DVector::zeros(s.levels());
        v[n] = c(1.0, 0.0);
        v
    }

    #[test]
    fn rejects_degenerate_space() {
        assert!(HilbertSpace::new(0).is_err());
        let s = space(3);
        assert_eq!(s.dim(), 8);
        assert_eq!(s.index(Spin::Up, 2), 6);
        assert_eq!(s.label(6), (Spin::Up, 2));
    }

    #[test]
    fn lowering_kills_vacuum() {
        let s = space(5);
        let a = lowering_op::<f64>(s);
        let out = a.apply_vec(&motion_state(s, 0)).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lowering_on_three() {
        let s = space(5);
        let a = lowering_op::<f64>(s);
        let out = a.apply_vec(&motion_state(s, 3)).unwrap();
        assert!((out[2] - c(3f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn number_from_ladders() {
        let s = space(7);
        let a = lowering_op::<f64>(s);
        let n = a.adjoint().mul(&a).unwrap();
        for k in 0..=7 {
            let out = n.apply_vec(&motion_state(s, k)).unwrap();
            assert!((out[k] - c(k as f64, 0.0)).norm() < 1e-12);
        }
        let diff = n.sub(&number_op(s)).unwrap();
        assert!(diff.spectral_norm() < 1e-12);
    }

    #[test]
    fn canonical_commutator_below_top_level() {
        let s = space(9);
        let a = lowering_op::<f64>(s);
        let comm = a.commutator(&a.adjoint()).unwrap();
        for i in 0..s.n_max() {
            for j in 0..s.n_max() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((comm.entry(i, j) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sigma_plus_convention() {
        let sp = spin_op::<f64>(SpinOp::SigmaPlus);
        let down = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let out = sp.apply_vec(&down).unwrap();
        assert_eq!(out[1], c(2.0, 0.0));
        assert_eq!(out[0], c(0.0, 0.0));

        let sz = spin_op::<f64>(SpinOp::SigmaZ);
        let up = DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(sz.apply_vec(&up).unwrap()[1], c(1.0, 0.0));

        let comm = sz.commutator(&sp).unwrap();
        let want = sp.scale_real(2.0);
        assert!(comm.sub(&want).unwrap().spectral_norm() < 1e-15);

        // sigma_+ = sigma_x + i sigma_y
        let sx = spin_op::<f64>(SpinOp::SigmaPlus)
            .add(&spin_op(SpinOp::SigmaMinus))
            .unwrap()
            .scale_real(0.5);
        assert!((sx.entry(0, 1) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn embed_examples() {
        let s = space(4);
        let id = spin_op::<f64>(SpinOp::Identity);
        let n_op = embed(&id, &number_op(s)).unwrap();
        let psi = StateVector::<f64>::basis(s, Spin::Up, 2).unwrap();
        let out = n_op.apply_vec(psi.amplitudes()).unwrap();
        assert!((out[s.index(Spin::Up, 2)] - c(2.0, 0.0)).norm() < 1e-15);

        let sz = embed(&spin_op(SpinOp::SigmaZ), &OperatorMatrix::identity(Domain::Motion(s))).unwrap();
        for n in 0..=4 {
            let psi = StateVector::<f64>::basis(s, Spin::Down, n).unwrap();
            let out = sz.apply_vec(psi.amplitudes()).unwrap();
            assert_eq!(out[s.index(Spin::Down, n)], c(-1.0, 0.0));
        }
    }

    #[test]
    fn embed_sigma_plus_lowering_matches_direct_product() {
        // direct oracle: (sigma_+ ⊗ a)|down,1> = (sigma_+|down>) ⊗ (a|1>) = 2|up> ⊗ |0>
        let s = space(4);
        let op = embed(&spin_op::<f64>(SpinOp::SigmaPlus), &lowering_op(s)).unwrap();
        let psi = StateVector::<f64>::basis(s, Spin::Down, 1).unwrap();
        let out = op.apply_vec(psi.amplitudes()).unwrap();
        for i in 0..s.dim() {
            let want = if i == s.index(Spin::Up, 0) { 2.0 } else { 0.0 };
            assert!((out[i] - c(want, 0.0)).norm() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn embed_rejects_wrong_factors() {
        let s = space(3);
        assert!(embed(&number_op::<f64>(s), &number_op(s)).is_err());
        assert!(embed(&spin_op::<f64>(SpinOp::SigmaZ), &spin_op(SpinOp::SigmaZ)).is_err());
    }

    fn spin_z_hamiltonian(s: HilbertSpace, omega: f64) -> OperatorMatrix<f64> {
        embed(&spin_op(SpinOp::SigmaZ), &OperatorMatrix::identity(Domain::Motion(s)))
            .unwrap()
            .scale_real(omega / 2.0)
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let s = space(4);
        let h = embed(&spin_op::<f64>(SpinOp::SigmaPlus), &lowering_op(s)).unwrap();
        let h = h.add(&h.adjoint()).unwrap();
        let psi = StateVector::basis(s, Spin::Down, 1).unwrap();
        let out = evolve(&h, 0.0, &psi).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn evolve_spin_z_global_phase() {
        let s = space(3);
        let omega = 1.7;
        let t = 0.9;
        let psi = StateVector::basis(s, Spin::Up, 0).unwrap();
        let out = evolve(&spin_z_hamiltonian(s, omega), t, &psi).unwrap();
        let want = crate::scalar::cis(-omega * t / 2.0);
        assert!((out.amplitude(Spin::Up, 0) - want).norm() < 1e-13);
        assert!((out.probability(Spin::Up, 0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn evolve_rejects_non_hermitian() {
        let s = space(3);
        let h = embed(&spin_op::<f64>(SpinOp::SigmaPlus), &lowering_op(s)).unwrap();
        let psi = StateVector::basis(s, Spin::Down, 1).unwrap();
        assert!(matches!(evolve(&h, 1.0, &psi), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expectation_examples() {
        let s = space(6);
        let id = spin_op::<f64>(SpinOp::Identity);
        let n_op = embed(&id, &number_op(s)).unwrap();
        let vac = StateVector::basis(s, Spin::Down, 0).unwrap();
        assert_eq!(expectation(&n_op, &vac).unwrap(), c(0.0, 0.0));

        // equal superposition of |down,0> and |up,2>
        let mut amps = DVector::zeros(s.dim());
        amps[s.index(Spin::Down, 0)] = c(1.0, 0.0);
        amps[s.index(Spin::Up, 2)] = c(0.0, 1.0);
        let psi = StateVector::from_amplitudes(s, amps).unwrap();
        let proj = spin_projector::<f64>(s, Spin::Down);
        assert!((expectation(&proj, &psi).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn position_squared_oracle() {
        // direct oracle: (a + a^dagger)^2 |n> has diagonal element 2n + 1
        let s = space(8);
        let a = lowering_op::<f64>(s);
        let x = a.add(&a.adjoint()).unwrap();
        let x2 = embed(&spin_op(SpinOp::Identity), &x.mul(&x).unwrap()).unwrap();
        for n in 0..s.n_max() {
            let psi = StateVector::basis(s, Spin::Up, n).unwrap();
            let e = expectation(&x2, &psi).unwrap();
            assert!((e - c(2.0 * n as f64 + 1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn truncation_guard_examples() {
        let s = space(9);
        let vac = StateVector::<f64>::basis(s, Spin::Down, 0).unwrap();
        assert!(truncation_guard(&vac, 1e-10).is_ok());
        let top = StateVector::<f64>::basis(s, Spin::Up, 9).unwrap();
        let status = truncation_guard(&top, 0.99);
        assert_eq!(status, TruncationStatus::Violation { leaked: 1.0 });
        assert!(matches!(status.into_result(), Err(Error::Truncation { .. })));
        let below = StateVector::<f64>::basis(s, Spin::Up, 8).unwrap();
        assert!(!truncation_guard(&below, 0.5).is_ok());
        let safe = StateVector::<f64>::basis(s, Spin::Up, 7).unwrap();
        assert!(truncation_guard(&safe, 0.0).is_ok());
    }

    #[test]
    fn generator_inverts_propagator() {
        let s = space(4);
        let a = lowering_op::<f64>(s);
        let h = embed(&spin_op(SpinOp::SigmaPlus), &a).unwrap();
        let h = h.add(&h.adjoint()).unwrap().add(&spin_z_hamiltonian(s, 0.3)).unwrap();
        let t = 0.2;
        let u = h.eigh().unwrap().propagator(t).unwrap();
        let k = u.generator().unwrap();
        let diff = k.sub(&h.scale_real(t)).unwrap();
        assert!(diff.spectral_norm() < 1e-10, "{}", diff.spectral_norm());
    }

    #[test]
    fn from_amplitudes_normalises() {
        let s = space(2);
        let amps = DVector::from_element(s.dim(), c(3.0, 4.0));
        let psi = StateVector::from_amplitudes(s, amps).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::from_amplitudes(s, DVector::<Cplx<f64>>::zeros(s.dim())).is_err());
        assert!(StateVector::from_amplitudes(s, DVector::<Cplx<f64>>::zeros(3)).is_err());
    }

    #[test]
    fn single_precision_evolution_keeps_norm() {
        let s = space(3);
        let a = lowering_op::<f32>(s);
        let h = embed(&spin_op(SpinOp::SigmaPlus), &a).unwrap();
        let h = h.add(&h.adjoint()).unwrap();
        let psi = StateVector::<f32>::basis(s, Spin::Down, 1).unwrap();
        let out = evolve(&h, 2.5, &psi).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-5);
    }
}
