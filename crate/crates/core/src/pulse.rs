//! Native resonant laser interactions and their pulse unitaries.
//!
//! A native interaction is labelled by `(epsilon, l)`: `epsilon = 1` flips the
//! spin, `l` is the signed sideband order. For a coupling `omega` and laser
//! phase `phi` the Hamiltonian in the Lamb-Dicke limit is
//!
//! ```text
//! H = omega e^{i phi} S M + h.c.,
//! S = |up><down|           (epsilon = 1)   or   identity (epsilon = 0),
//! M = (i eta a^dagger)^l / l!      (l > 0),
//!     (i eta a)^|l| / |l|!        (l < 0),
//!     identity                   (l = 0).
//! ```
//!
//! Positive `l` raises the motion, so `(1, l > 0)` is the blue sideband
//! coupling `|down, n> <-> |up, n + l>` and `(1, 0)` is the carrier.
//! `S` is the elementary raising matrix, so `omega` is the literal matrix
//! element and a pulse of duration `t` transfers `sin^2(omega_eff t)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{
    embed, expectation, lowering_op, raising_op, spin_op, spin_raise, Domain, Flag, HilbertSpace, OperatorMatrix,
    SpinOp, StateVector,
};
use crate::scalar::{cis, factorial, Cplx, Real};

/// Reduced Planck constant in SI units, used only to derive `z0` from a mass.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Highest sideband order in the native set.
pub const MAX_NATIVE_ORDER: u32 = 3;

/// Warning threshold on `eta^2 <(a + a^dagger)^2>`.
pub const LAMB_DICKE_WARN: f64 = 0.25;

/// Trap and laser geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T: Real> {
    /// Motional frequency (rad/s).
    pub omega_z: T,
    /// Spin splitting (rad/s), informational.
    pub omega_0: Option<T>,
    /// Ion mass (kg), informational unless `delta_k` is also given.
    pub mu: Option<T>,
    /// Wavevector-difference projection (1/m).
    pub delta_k: Option<T>,
    /// Direct Lamb-Dicke parameter, overriding the derived value.
    pub eta_override: Option<T>,
}

impl<T: Real> TrapConfig<T> {
    /// Trap with an explicit Lamb-Dicke parameter.
    pub fn with_eta(omega_z: T, eta: T) -> Result<Self> {
        let trap = Self {
            omega_z,
            omega_0: None,
            mu: None,
            delta_k: None,
            eta_override: Some(eta),
        };
        trap.validate()?;
        Ok(trap)
    }

    /// Trap whose `eta = delta_k * sqrt(hbar / (2 mu omega_z))`.
    pub fn from_physical(omega_z: T, mu: T, delta_k: T) -> Result<Self> {
        let trap = Self {
            omega_z,
            omega_0: None,
            mu: Some(mu),
            delta_k: Some(delta_k),
            eta_override: None,
        };
        trap.validate()?;
        Ok(trap)
    }

    /// 3.63 MHz axial trap with `eta = 0.35`.
    pub fn reference() -> Self {
        Self::with_eta(T::two_pi() * T::lit(3.63e6), T::lit(0.35)).expect("reference trap is valid")
    }

    /// Ground-state extent `sqrt(hbar / (2 mu omega_z))`, when the mass is known.
    pub fn z0(&self) -> Option<T> {
        self.mu
            .map(|mu| (T::lit(HBAR_SI) / (T::lit(2.0) * mu * self.omega_z)).sqrt())
    }

    fn derived_eta(&self) -> Option<T> {
        match (self.delta_k, self.z0()) {
            (Some(dk), Some(z0)) => Some(dk * z0),
            _ => None,
        }
    }

    pub fn eta(&self) -> T {
        self.eta_override
            .or_else(|| self.derived_eta())
            .expect("validated trap always resolves eta")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_z > T::zero()) {
            return Err(Error::InvalidTrap(format!(
                "omega_z must be positive, got {}",
                self.omega_z
            )));
        }
        if let Some(mu) = self.mu {
            if !(mu > T::zero()) {
                return Err(Error::InvalidTrap(format!("mu must be positive, got {mu}")));
            }
        }
        let derived = self.derived_eta();
        let eta = match (self.eta_override, derived) {
            (Some(o), Some(d)) => {
                let rel = ((o - d) / d).abs().to_f64_lossy();
                if rel > 1e-9 {
                    return Err(Error::InvalidTrap(format!(
                        "eta override {o} disagrees with delta_k * z0 = {d}"
                    )));
                }
                o
            }
            (Some(o), None) => o,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidTrap(
                    "eta is undetermined: give eta directly or mu and delta_k".into(),
                ))
            }
        };
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidTrap(format!("eta must be positive, got {eta}")));
        }
        Ok(())
    }
}

/// One square pulse of a native interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec<T: Real> {
    /// 1 if the pulse flips the spin, 0 for motion-only drives.
    pub epsilon: u8,
    /// Signed sideband order; positive raises the motion.
    pub l: i32,
    /// Coupling strength (rad/s).
    pub omega: T,
    /// Laser phase (rad).
    pub phi: T,
    /// Pulse length (s).
    pub duration: T,
    /// Allows `|l| > 3`.
    pub extended_order: bool,
}

impl<T: Real> PulseSpec<T> {
    pub fn new(epsilon: u8, l: i32, omega: T, phi: T, duration: T) -> Result<Self> {
        let spec = Self {
            epsilon,
            l,
            omega,
            phi,
            duration,
            extended_order: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn order(&self) -> u32 {
        self.l.unsigned_abs()
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon > 1 {
            return Err(Error::InvalidPulse(format!(
                "epsilon must be 0 or 1, got {}",
                self.epsilon
            )));
        }
        if self.epsilon == 0 && self.l == 0 {
            return Err(Error::InvalidPulse(
                "(epsilon, l) = (0, 0) is not an interaction".into(),
            ));
        }
        if !self.extended_order && self.order() > MAX_NATIVE_ORDER {
            return Err(Error::UnsupportedOrder(self.order()));
        }
        if !(self.omega > T::zero()) || !self.omega.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.duration >= T::zero()) || !self.duration.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidPulse("phase must be finite".into()));
        }
        Ok(())
    }

    /// Same pulse with the generator negated (`phi -> phi + pi`).
    pub fn reversed(&self) -> Self {
        Self {
            phi: crate::scalar::wrap_phase(self.phi + T::pi()),
            ..*self
        }
    }

    pub fn with_duration(&self, duration: T) -> Self {
        Self { duration, ..*self }
    }
}

/// Motional factor `M` of the native Hamiltonian.
fn motional_factor<T: Real>(l: i32, eta: T, space: HilbertSpace) -> OperatorMatrix<T> {
    let order = l.unsigned_abs();
    if order == 0 {
        return OperatorMatrix::identity(Domain::Motion(space));
    }
    let ladder = if l > 0 {
        raising_op::<T>(space)
    } else {
        lowering_op::<T>(space)
    };
    let i_eta = Cplx::new(T::zero(), eta);
    let mut prefactor = Cplx::new(T::one(), T::zero());
    for _ in 0..order {
        prefactor *= i_eta;
    }
    prefactor /= Cplx::new(factorial::<T>(order), T::zero());
    ladder.powi(order).scale(prefactor)
}

/// Hermitian native Hamiltonian `H_{epsilon l}` on the joint space.
pub fn native_hamiltonian<T: Real>(
    spec: &PulseSpec<T>,
    trap: &TrapConfig<T>,
    space: HilbertSpace,
) -> Result<OperatorMatrix<T>> {
    spec.validate()?;
    space.require_n_max(spec.order() as usize + 2)?;
    let spin = if spec.epsilon == 1 {
        spin_raise::<T>()
    } else {
        spin_op::<T>(SpinOp::Identity)
    };
    let motion = motional_factor(spec.l, trap.eta(), space);
    let coupling = cis(spec.phi) * Cplx::new(spec.omega, T::zero());
    let x = embed(&spin, &motion)?.scale(coupling);
    x.add(&x.adjoint())?.certify_hermitian()
}

/// Rabi frequency `omega eta^|l| sqrt((n+|l|)!/n!) / |l|!` between
/// `n` and `n + |l|`.
pub fn rabi_frequency<T: Real>(spec: &PulseSpec<T>, trap: &TrapConfig<T>, n: usize) -> T {
    let order = spec.order();
    let mut ratio = T::one();
    for k in (n + 1)..=(n + order as usize) {
        ratio *= T::lit(k as f64);
    }
    spec.omega * trap.eta().powi(order as i32) * ratio.sqrt() / factorial::<T>(order)
}

/// First time at which a spin-flip pulse moves half the population out of
/// the motional ground state: `(pi/4) / rabi_frequency(n = 0)`.
pub fn pi_over_2_duration<T: Real>(spec: &PulseSpec<T>, trap: &TrapConfig<T>) -> Result<T> {
    if spec.epsilon != 1 {
        return Err(Error::NoSpinFlip);
    }
    spec.validate()?;
    Ok(T::frac_pi_4() / rabi_frequency(spec, trap, 0))
}

/// `exp(-i H_{epsilon l} duration)`.
pub fn pulse_unitary<T: Real>(
    spec: &PulseSpec<T>,
    trap: &TrapConfig<T>,
    space: HilbertSpace,
) -> Result<OperatorMatrix<T>> {
    if spec.duration == T::zero() {
        spec.validate()?;
        return Ok(OperatorMatrix::identity(Domain::Joint(space)));
    }
    native_hamiltonian(spec, trap, space)?.eigh()?.propagator(spec.duration)
}

/// Trap-frequency shift Hamiltonian `dwz * (I ⊗ a^dagger a)`.
pub fn free_hamiltonian<T: Real>(delta_omega_z: T, space: HilbertSpace) -> OperatorMatrix<T> {
    let l = space.levels();
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for s in 0..2 {
        for n in 0..l {
            m[(s * l + n, s * l + n)] = Cplx::new(delta_omega_z * T::lit(n as f64), T::zero());
        }
    }
    OperatorMatrix::new(Domain::Joint(space), m)
        .expect("dimension matches")
        .certify_hermitian()
        .expect("diagonal real matrix")
}

/// `exp(-i dwz t a^dagger a)`, evaluated exactly on the diagonal.
pub fn free_unitary<T: Real>(delta_omega_z: T, t: T, space: HilbertSpace) -> OperatorMatrix<T> {
    let l = space.levels();
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for s in 0..2 {
        for n in 0..l {
            m[(s * l + n, s * l + n)] = cis(-delta_omega_z * t * T::lit(n as f64));
        }
    }
    let op = OperatorMatrix::new(Domain::Joint(space), m).expect("dimension matches");
    // diagonal of unit-modulus phases
    crate::hilbert::OperatorMatrix::from_parts(Domain::Joint(space), op.into_entries(), Flag::Unknown, Flag::Yes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambDickeStatus {
    Ok,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambDicke<T> {
    /// `eta^2 <(a + a^dagger)^2>`.
    pub value: T,
    pub status: LambDickeStatus,
}

/// Evaluates the Lamb-Dicke figure of merit for a state.
pub fn lamb_dicke_check<T: Real>(psi: &StateVector<T>, trap: &TrapConfig<T>) -> LambDicke<T> {
    let space = psi.space();
    let a = lowering_op::<T>(space);
    let x = a.add(&a.adjoint()).expect("same domain");
    let x2 = embed(&spin_op(SpinOp::Identity), &x.mul(&x).expect("same domain")).expect("valid factors");
    let eta = trap.eta();
    let value = eta * eta * expectation(&x2, psi).expect("matching space").re;
    let status = if value.to_f64_lossy() > LAMB_DICKE_WARN {
        LambDickeStatus::Warn
    } else {
        LambDickeStatus::Ok
    };
    LambDicke { value, status }
}
