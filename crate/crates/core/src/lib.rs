//! Trapped-ion simulation of nonlinear interferometers: a spin coupled to one
//! motional mode, native sideband pulses, a pulse compiler built on
//! commutator gadgets, and projection-noise statistics.
//!
//! Units: `hbar = 1`, times in seconds, frequencies in rad/s. The basis is
//! spin-major, index `s * (n_max + 1) + n` with `s = 0` for spin down.
//!
//! Everything is generic over the scalar type ([`scalar::Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compiler;
pub mod error;
pub mod hilbert;
pub mod interferometer;
pub mod noise;
pub mod pulse;
pub mod scalar;

pub use error::{Error, Result};
pub use hilbert::{HilbertSpace, Spin, SpinOp};

pub type Complex = scalar::Cplx<f64>;
pub type Operator = hilbert::OperatorMatrix<f64>;
pub type State = hilbert::StateVector<f64>;
pub type Trap = pulse::TrapConfig<f64>;
pub type Pulse = pulse::PulseSpec<f64>;
pub type Expr = compiler::OperatorExpr<f64>;
pub type Program = compiler::PulseProgram<f64>;
pub type ProgramStep = compiler::Step<f64>;
pub type GadgetBlock = compiler::Block<f64>;
pub type CompileOptions = compiler::CompileOptions<f64>;
pub type Interferometer = interferometer::InterferometerConfig<f64>;
pub type Fringe = interferometer::FringeDataset<f64>;
pub type Shots = noise::ShotRecord<f64>;
pub type Allan = noise::AllanResult<f64>;
