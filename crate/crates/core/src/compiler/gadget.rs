//! Realizable generators, the group-commutator gadget and product splitting.

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, OperatorMatrix, SpinOp};
use crate::pulse::{PulseSpec, TrapConfig};
use crate::scalar::{cis, factorial, Cplx, Real};

use super::expr::{expr_to_matrix, OperatorExpr};
use super::program::{ProgramMeta, PulseProgram, Step};

/// Sign `s` in `U_A(dt) U_B(dt) U_A(-dt) U_B(-dt) = exp(s [A, B] dt^2) + O(dt^3)`,
/// with `U_X(t) = exp(-i X t)` and the product read right to left in time.
///
/// Pinned by [`calibrate_gadget_sign`].
pub const GADGET_SIGN: i32 = -1;

/// A Hermitian generator `G` together with a recipe for a pulse sequence
/// approximating `exp(-i G tau)` for any real `tau`.
#[derive(Debug, Clone, PartialEq)]
pub enum Block<T: Real> {
    /// Native interaction; the spec's duration is ignored.
    Native(PulseSpec<T>),
    /// Trap-frequency shift, generator `dwz * a^dagger a`.
    Free(T),
    /// Generator `omega * sigma_z`, realised exactly by conjugating a
    /// `sigma_y`-like carrier with quarter-turn `sigma_x` carriers.
    SpinZ(T),
    /// Generator `weight * G_inner`.
    Scaled(T, Box<Block<T>>),
    /// Group commutator of two blocks, generator `i s [A, B]`.
    Gadget(Box<Block<T>>, Box<Block<T>>),
}

impl<T: Real> Block<T> {
    pub fn native(spec: PulseSpec<T>) -> Self {
        Block::Native(spec)
    }

    pub fn gadget(a: Block<T>, b: Block<T>) -> Self {
        Block::Gadget(Box::new(a), Box::new(b))
    }

    pub fn scaled(weight: T, inner: Block<T>) -> Self {
        Block::Scaled(weight, Box::new(inner))
    }

    /// Commutator nesting depth; native pulses have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Block::Native(_) | Block::Free(_) | Block::SpinZ(_) => 0,
            Block::Scaled(_, b) => b.depth(),
            Block::Gadget(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Symbolic generator in the operator IR.
    pub fn generator(&self, trap: &TrapConfig<T>) -> OperatorExpr<T> {
        match self {
            Block::Native(spec) => native_generator(spec, trap),
            Block::Free(dwz) => OperatorExpr::term(SpinOp::Identity, 1, 1, Cplx::new(*dwz, T::zero())),
            Block::SpinZ(w) => OperatorExpr::term(SpinOp::SigmaZ, 0, 0, Cplx::new(*w, T::zero())),
            Block::Scaled(w, b) => b.generator(trap).scale(Cplx::new(*w, T::zero())),
            Block::Gadget(a, b) => {
                let comm = a.generator(trap).commutator(&b.generator(trap));
                comm.scale(Cplx::new(T::zero(), T::lit(GADGET_SIGN as f64)))
            }
        }
    }

    pub fn generator_matrix(&self, trap: &TrapConfig<T>, space: HilbertSpace) -> Result<OperatorMatrix<T>> {
        expr_to_matrix(&self.generator(trap), space)
    }

    /// Appends steps approximating `exp(-i G tau)`.
    pub fn push_steps(&self, tau: T, out: &mut Vec<Step<T>>) {
        if tau == T::zero() {
            return;
        }
        match self {
            Block::Native(spec) => {
                let s = if tau > T::zero() { *spec } else { spec.reversed() };
                out.push(Step::Pulse(s.with_duration(tau.abs())));
            }
            Block::Free(dwz) => {
                let sign = if tau > T::zero() { T::one() } else { -T::one() };
                out.push(Step::Free {
                    delta_omega_z: *dwz * sign,
                    t: tau.abs(),
                });
            }
            Block::SpinZ(w) => {
                if *w == T::zero() {
                    return;
                }
                let rate = w.abs();
                let quarter = T::frac_pi_4() / rate;
                let carrier = |phi: T, duration: T| {
                    Step::Pulse(PulseSpec {
                        epsilon: 1,
                        l: 0,
                        omega: rate,
                        phi,
                        duration,
                        extended_order: false,
                    })
                };
                // exp(-i w tau sz) = exp(-i pi/4 sx) exp(-i w tau sy) exp(+i pi/4 sx)
                let sy_phase = if *w * tau > T::zero() {
                    -T::frac_pi_2()
                } else {
                    T::frac_pi_2()
                };
                out.push(carrier(T::pi(), quarter));
                out.push(carrier(sy_phase, tau.abs()));
                out.push(carrier(T::zero(), quarter));
            }
            Block::Scaled(w, b) => b.push_steps(*w * tau, out),
            Block::Gadget(a, b) => {
                let db = tau.abs().sqrt();
                let da = if tau > T::zero() { db } else { -db };
                // time order B(-db), A(-da), B(db), A(da)
                b.push_steps(-db, out);
                a.push_steps(-da, out);
                b.push_steps(db, out);
                a.push_steps(da, out);
            }
        }
    }

    pub fn steps(&self, tau: T) -> Vec<Step<T>> {
        let mut out = Vec::new();
        self.push_steps(tau, &mut out);
        out
    }
}

/// Native Hamiltonian written in the operator IR.
pub fn native_generator<T: Real>(spec: &PulseSpec<T>, trap: &TrapConfig<T>) -> OperatorExpr<T> {
    let order = spec.order();
    let mut c = cis(spec.phi) * Cplx::new(spec.omega, T::zero());
    for _ in 0..order {
        c *= Cplx::new(T::zero(), trap.eta());
    }
    c /= Cplx::new(factorial::<T>(order), T::zero());
    let spin = if spec.epsilon == 1 {
        // |up><down| = sigma_+ / 2
        c *= Cplx::new(T::lit(0.5), T::zero());
        SpinOp::SigmaPlus
    } else {
        SpinOp::Identity
    };
    let (p, q) = if spec.l >= 0 { (order, 0) } else { (0, order) };
    OperatorExpr::hermitian_term(spin, p, q, c)
}

/// Four-step group commutator `U_A(dt) U_B(dt) U_A(-dt) U_B(-dt)`.
///
/// Negative times are realised by advancing the pulse phase by `pi`. The
/// product approximates `exp(GADGET_SIGN [A, B] dt^2)` up to `O(dt^3)`.
pub fn commutator_gadget<T: Real>(a: &Block<T>, b: &Block<T>, delta_t: T) -> Result<PulseProgram<T>> {
    if !(delta_t > T::zero()) {
        return Err(Error::OutOfRange {
            name: "delta_t",
            message: format!("must be positive, got {delta_t}"),
        });
    }
    let block = Block::gadget(a.clone(), b.clone());
    let steps = block.steps(delta_t * delta_t);
    Ok(PulseProgram {
        steps,
        meta: ProgramMeta {
            target: "commutator gadget".into(),
            delta_t: Some(delta_t),
            depth: block.depth(),
        },
    })
}

/// First-order product formula `(prod_j U_j(t/k))^k` for the sum of the
/// blocks' generators.
pub fn trotter<T: Real>(blocks: &[Block<T>], total_time: T, k: usize) -> Result<PulseProgram<T>> {
    if k == 0 {
        return Err(Error::OutOfRange {
            name: "k",
            message: "must be at least 1".into(),
        });
    }
    let tau = total_time / T::lit(k as f64);
    let mut steps = Vec::new();
    for _ in 0..k {
        for b in blocks {
            b.push_steps(tau, &mut steps);
        }
    }
    Ok(PulseProgram {
        steps,
        meta: ProgramMeta {
            target: "product formula".into(),
            delta_t: Some(tau),
            depth: blocks.iter().map(Block::depth).max().unwrap_or(0),
        },
    })
}

/// Determines the gadget sign numerically from two carriers with phases 0
/// and pi/2, whose commutator is proportional to `sigma_z`.
pub fn calibrate_gadget_sign<T: Real>(trap: &TrapConfig<T>, space: HilbertSpace) -> Result<i32> {
    let carrier = |phi: T| {
        Block::Native(PulseSpec {
            epsilon: 1,
            l: 0,
            omega: T::one(),
            phi,
            duration: T::zero(),
            extended_order: false,
        })
    };
    let (a, b) = (carrier(T::zero()), carrier(T::frac_pi_2()));
    let dt = T::lit(1e-2);
    let u = commutator_gadget(&a, &b, dt)?.unitary(trap, space)?;
    let comm = a
        .generator_matrix(trap, space)?
        .commutator(&b.generator_matrix(trap, space)?)?;
    // exp(s C dt^2) = exp(-i (i s C) dt^2) with i C Hermitian
    let herm = comm.scale(Cplx::new(T::zero(), T::one()));
    let mut best = (f64::INFINITY, 0);
    for s in [1i32, -1] {
        let exact = herm.eigh()?.propagator(dt * dt * T::lit(s as f64))?;
        let err = u.sub(&exact)?.spectral_norm().to_f64_lossy();
        if err < best.0 {
            best = (err, s);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Domain, Spin, StateVector};
    use crate::pulse::native_hamiltonian;

    fn trap() -> TrapConfig<f64> {
        TrapConfig::with_eta(1.0, 0.35).unwrap()
    }

    fn space() -> HilbertSpace {
        HilbertSpace::new(7).unwrap()
    }

    fn carrier(phi: f64) -> Block<f64> {
        Block::Native(PulseSpec::new(1, 0, 1.0, phi, 0.0).unwrap())
    }

    #[test]
    fn sign_constant_matches_calibration() {
        assert_eq!(calibrate_gadget_sign(&trap(), space()).unwrap(), GADGET_SIGN);
    }

    #[test]
    fn native_generator_matches_hamiltonian() {
        let s = space();
        for (eps, l) in [(1u8, 0), (1, 2), (1, -3), (0, 1), (0, -2), (0, 3)] {
            let spec = PulseSpec::new(eps, l, 0.9, 0.4, 0.0).unwrap();
            let sym = expr_to_matrix(&native_generator(&spec, &trap()), s).unwrap();
            let h = native_hamiltonian(&spec, &trap(), s).unwrap();
            assert!(sym.sub(&h).unwrap().spectral_norm() < 1e-13, "({eps},{l})");
        }
    }

    #[test]
    fn spin_z_block_is_exact() {
        let s = space();
        for (w, tau) in [(0.8, 0.3), (-1.2, 0.5), (0.8, -0.7)] {
            let block = Block::SpinZ(w);
            let u = PulseProgram::new(block.steps(tau)).unitary(&trap(), s).unwrap();
            let exact = block
                .generator_matrix(&trap(), s)
                .unwrap()
                .eigh()
                .unwrap()
                .propagator(tau)
                .unwrap();
            assert!(u.sub(&exact).unwrap().spectral_norm() < 1e-12, "w={w} tau={tau}");
        }
    }

    #[test]
    fn gadget_of_identical_pulses_is_identity() {
        let s = space();
        let a = Block::Native(PulseSpec::new(1, 1, 1.0, 0.2, 0.0).unwrap());
        let norm = a.generator_matrix(&trap(), s).unwrap().spectral_norm();
        let dt = 1e-3 / norm;
        let u = commutator_gadget(&a, &a, dt).unwrap().unitary(&trap(), s).unwrap();
        let id = OperatorMatrix::identity(Domain::Joint(s));
        assert!(u.sub(&id).unwrap().spectral_norm() < 1e-9);
    }

    #[test]
    fn carrier_gadget_rotates_about_z() {
        // populations of |down> are untouched by a sigma_z rotation
        let s = space();
        let prog = commutator_gadget(&carrier(0.0), &carrier(std::f64::consts::FRAC_PI_2), 0.05).unwrap();
        assert_eq!(prog.len(), 4);
        let psi = StateVector::basis(s, Spin::Down, 2).unwrap();
        let out = psi.apply(&prog.unitary(&trap(), s).unwrap()).unwrap();
        assert!((out.probability(Spin::Down, 2) - 1.0).abs() < 1e-3);
        let gen = Block::gadget(carrier(0.0), carrier(std::f64::consts::FRAC_PI_2)).generator(&trap());
        let canon = gen.canonical();
        assert_eq!(canon.len(), 1);
        assert_eq!(canon.keys().next().unwrap().spin, SpinOp::SigmaZ);
    }

    #[test]
    fn gadget_block_negative_time_inverts_to_leading_order() {
        let s = space();
        let g = Block::gadget(carrier(0.0), carrier(1.0));
        let fwd = PulseProgram::new(g.steps(1e-4)).unitary(&trap(), s).unwrap();
        let back = PulseProgram::new(g.steps(-1e-4)).unitary(&trap(), s).unwrap();
        let id = OperatorMatrix::identity(Domain::Joint(s));
        assert!(back.mul(&fwd).unwrap().sub(&id).unwrap().spectral_norm() < 1e-5);
    }

    #[test]
    fn trotter_single_block_is_exact() {
        let s = space();
        let a = Block::Native(PulseSpec::new(1, 1, 1.3, 0.1, 0.0).unwrap());
        let exact = a
            .generator_matrix(&trap(), s)
            .unwrap()
            .eigh()
            .unwrap()
            .propagator(2.0)
            .unwrap();
        for k in [1, 3, 10] {
            let u = trotter(std::slice::from_ref(&a), 2.0, k)
                .unwrap()
                .unitary(&trap(), s)
                .unwrap();
            assert!(u.sub(&exact).unwrap().spectral_norm() < 1e-12);
        }
    }

    #[test]
    fn trotter_commuting_blocks_is_exact() {
        let s = space();
        let blocks = [Block::SpinZ(0.7), Block::Free(1.9)];
        let h = blocks[0]
            .generator_matrix(&trap(), s)
            .unwrap()
            .add(&blocks[1].generator_matrix(&trap(), s).unwrap())
            .unwrap();
        let exact = h.eigh().unwrap().propagator(1.5).unwrap();
        for k in [1, 2, 7] {
            let u = trotter(&blocks, 1.5, k).unwrap().unitary(&trap(), s).unwrap();
            assert!(u.sub(&exact).unwrap().spectral_norm() < 1e-10);
        }
    }

    #[test]
    fn trotter_rejects_zero_steps() {
        assert!(trotter::<f64>(&[], 1.0, 0).is_err());
        assert!(commutator_gadget(&carrier(0.0), &carrier(1.0), 0.0).is_err());
    }
}
