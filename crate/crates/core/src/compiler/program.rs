//! Pulse schedules: ordered native pulses and free-evolution segments.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{Domain, HilbertSpace, OperatorMatrix};
use crate::pulse::{free_unitary, pulse_unitary, PulseSpec, TrapConfig};
use crate::scalar::Real;

/// One schedule entry, applied in program order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step<T: Real> {
    Pulse(PulseSpec<T>),
    /// Trap frequency shifted by `delta_omega_z` for a time `t`:
    /// `exp(-i delta_omega_z t a^dagger a)`.
    Free {
        delta_omega_z: T,
        t: T,
    },
}

impl<T: Real> Step<T> {
    pub fn duration(&self) -> T {
        match self {
            Step::Pulse(p) => p.duration,
            Step::Free { t, .. } => *t,
        }
    }

    /// Step whose unitary is the inverse of this one.
    pub fn inverse(&self) -> Self {
        match *self {
            Step::Pulse(p) => Step::Pulse(p.reversed()),
            Step::Free { delta_omega_z, t } => Step::Free {
                delta_omega_z: -delta_omega_z,
                t,
            },
        }
    }

    fn key(&self) -> StepKey {
        match self {
            Step::Pulse(p) => StepKey::Pulse(
                p.epsilon,
                p.l,
                p.omega.to_f64_lossy().to_bits(),
                p.phi.to_f64_lossy().to_bits(),
                p.duration.to_f64_lossy().to_bits(),
            ),
            Step::Free { delta_omega_z, t } => {
                StepKey::Free(delta_omega_z.to_f64_lossy().to_bits(), t.to_f64_lossy().to_bits())
            }
        }
    }

    pub fn unitary(&self, trap: &TrapConfig<T>, space: HilbertSpace) -> Result<OperatorMatrix<T>> {
        match self {
            Step::Pulse(p) => pulse_unitary(p, trap, space),
            Step::Free { delta_omega_z, t } => Ok(free_unitary(*delta_omega_z, *t, space)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StepKey {
    Pulse(u8, i32, u64, u64, u64),
    Free(u64, u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramMeta<T: Real> {
    /// Human-readable description of what the program realises.
    pub target: String,
    /// Step size used by the compiler, if any.
    pub delta_t: Option<T>,
    /// Deepest commutator nesting used.
    pub depth: usize,
}

impl<T: Real> Default for ProgramMeta<T> {
    fn default() -> Self {
        Self {
            target: String::new(),
            delta_t: None,
            depth: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram<T: Real> {
    pub steps: Vec<Step<T>>,
    pub meta: ProgramMeta<T>,
}

impl<T: Real> Default for PulseProgram<T> {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl<T: Real> PulseProgram<T> {
    pub fn new(steps: Vec<Step<T>>) -> Self {
        Self {
            steps,
            meta: ProgramMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_duration(&self) -> T {
        self.steps.iter().fold(T::zero(), |acc, s| acc + s.duration())
    }

    /// Program realising the inverse unitary: reversed order, each step inverted.
    pub fn inverse(&self) -> Self {
        Self {
            steps: self.steps.iter().rev().map(Step::inverse).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for step in &self.steps {
            match step {
                Step::Pulse(p) => p.validate()?,
                Step::Free { delta_omega_z, t } => {
                    if !(*t >= T::zero()) || !t.is_finite() || !delta_omega_z.is_finite() {
                        return Err(Error::InvalidPulse(format!(
                            "free segment needs finite dwz and t >= 0, got dwz={delta_omega_z} t={t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Unitaries of the distinct steps, computed in parallel.
    pub(crate) fn step_unitaries(
        &self,
        trap: &TrapConfig<T>,
        space: HilbertSpace,
    ) -> Result<(Vec<usize>, Vec<OperatorMatrix<T>>)> {
        let mut index = HashMap::new();
        let mut unique = Vec::new();
        let mut order = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let k = *index.entry(step.key()).or_insert_with(|| {
                unique.push(*step);
                unique.len() - 1
            });
            order.push(k);
        }
        let mats = unique
            .par_iter()
            .map(|s| s.unitary(trap, space))
            .collect::<Result<Vec<_>>>()?;
        Ok((order, mats))
    }

    /// Composed unitary `U_last ... U_first`.
    pub fn unitary(&self, trap: &TrapConfig<T>, space: HilbertSpace) -> Result<OperatorMatrix<T>> {
        self.validate()?;
        let (order, mats) = self.step_unitaries(trap, space)?;
        let mut acc = OperatorMatrix::identity(Domain::Joint(space));
        for k in order {
            acc = mats[k].mul(&acc)?;
        }
        acc.certify_unitary()
    }

    /// Text schedule, one step per line:
    /// `PULSE eps=<0|1> l=<int> omega=<rad/s> phi=<rad> t=<s>` or
    /// `FREE dwz=<rad/s> t=<s>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            match step {
                Step::Pulse(p) => {
                    let _ = writeln!(
                        out,
                        "PULSE eps={} l={} omega={} phi={} t={}",
                        p.epsilon, p.l, p.omega, p.phi, p.duration
                    );
                }
                Step::Free { delta_omega_z, t } => {
                    let _ = writeln!(out, "FREE dwz={delta_omega_z} t={t}");
                }
            }
        }
        out
    }

    /// Parses [`PulseProgram::to_text`] output; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut fields = Vec::new();
            let mut col = 1;
            for piece in content.split(' ') {
                if !piece.is_empty() {
                    fields.push((col, piece));
                }
                col += piece.len() + 1;
            }
            let Some(&(kind_col, kind)) = fields.first() else {
                continue;
            };
            let err = |column: usize, message: String| Error::Parse { line, column, message };
            let mut kv = HashMap::new();
            for &(c, f) in &fields[1..] {
                let (k, v) = f
                    .split_once('=')
                    .ok_or_else(|| err(c, format!("expected key=value, found `{f}`")))?;
                if kv.insert(k, (c, v)).is_some() {
                    return Err(err(c, format!("duplicate key `{k}`")));
                }
            }
            let mut take = |key: &str| -> Result<(usize, &str)> {
                kv.remove(key).ok_or_else(|| err(kind_col, format!("missing `{key}`")))
            };
            let real = |(c, v): (usize, &str)| -> Result<T> {
                v.parse::<T>().map_err(|_| err(c, format!("invalid number `{v}`")))
            };
            let step = match kind {
                "PULSE" => {
                    let (ce, eps) = take("eps")?;
                    let epsilon = eps.parse::<u8>().map_err(|_| err(ce, format!("invalid eps `{eps}`")))?;
                    let (cl, l) = take("l")?;
                    let l = l.parse::<i32>().map_err(|_| err(cl, format!("invalid l `{l}`")))?;
                    let omega = real(take("omega")?)?;
                    let phi = real(take("phi")?)?;
                    let t = real(take("t")?)?;
                    let spec = PulseSpec {
                        epsilon,
                        l,
                        omega,
                        phi,
                        duration: t,
                        extended_order: l.unsigned_abs() > crate::pulse::MAX_NATIVE_ORDER,
                    };
                    spec.validate().map_err(|e| err(kind_col, e.to_string()))?;
                    Step::Pulse(spec)
                }
                "FREE" => {
                    let dwz = real(take("dwz")?)?;
                    let t = real(take("t")?)?;
                    Step::Free { delta_omega_z: dwz, t }
                }
                other => return Err(err(kind_col, format!("unknown step kind `{other}`"))),
            };
            if let Some((_, (c, _))) = kv.iter().min_by_key(|(_, (c, _))| *c) {
                return Err(err(*c, "unexpected field".into()));
            }
            steps.push(step);
        }
        let program = Self::new(steps);
        program.validate()?;
        Ok(program)
    }
}
