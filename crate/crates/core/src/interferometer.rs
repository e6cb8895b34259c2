//! n-th order Mach-Zehnder interferometer on a spin and one motional mode.
//!
//! The optical mode `a` is replaced by the spin with `|1>_a = |down>` and
//! `|0>_a = |up>`; mode `b` is the motion. Beamsplitters are pi/2 pulses on
//! the n-th blue sideband, the phase shifter is a trap-frequency step.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{truncation_guard, HilbertSpace, OperatorMatrix, Spin, StateVector, DEFAULT_TRUNCATION_TOL};
use crate::noise::{bernoulli_count, stream_rng};
use crate::pulse::{free_unitary, pi_over_2_duration, pulse_unitary, PulseSpec, TrapConfig, MAX_NATIVE_ORDER};
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerConfig<T: Real> {
    pub order: u32,
    pub trap: TrapConfig<T>,
    /// Sideband coupling of both beamsplitter pulses (rad/s).
    pub omega_pulse: T,
    /// Laser phases of the first and second pulse (rad).
    pub pulse_phases: (T, T),
    /// Trap-frequency step during the phase segment (rad/s).
    pub delta_omega_z: T,
    pub contrast: T,
    pub space: HilbertSpace,
}

impl<T: Real> InterferometerConfig<T> {
    /// Reference trap, 2pi x 50 kHz pulses, 2pi x 1 kHz phase step, unit
    /// contrast, equal pulse phases and `n_max = 2n + 6`.
    pub fn new(order: u32) -> Result<Self> {
        let config = Self {
            order,
            trap: TrapConfig::reference(),
            omega_pulse: T::two_pi() * T::lit(5e4),
            pulse_phases: (T::zero(), T::zero()),
            delta_omega_z: T::two_pi() * T::lit(1e3),
            contrast: T::one(),
            space: HilbertSpace::new(default_n_max(order))?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::OutOfRange {
                name: "order",
                message: "interferometer order must be at least 1".into(),
            });
        }
        let need = self.order as usize + 4;
        if self.space.n_max() < need {
            return Err(Error::SpaceTooSmall {
                required: need,
                n_max: self.space.n_max(),
            });
        }
        let c = self.contrast.to_f64_lossy();
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfRange {
                name: "contrast",
                message: format!("contrast must lie in [0, 1], got {c}"),
            });
        }
        if !(self.omega_pulse > T::zero()) || !self.omega_pulse.is_finite() {
            return Err(Error::OutOfRange {
                name: "omega_pulse",
                message: format!("must be positive and finite, got {}", self.omega_pulse),
            });
        }
        if !self.delta_omega_z.is_finite() {
            return Err(Error::OutOfRange {
                name: "delta_omega_z",
                message: "must be finite".into(),
            });
        }
        self.trap.validate()
    }

    fn pulse(&self, phi: T) -> PulseSpec<T> {
        PulseSpec {
            epsilon: 1,
            l: self.order as i32,
            omega: self.omega_pulse,
            phi,
            duration: T::zero(),
            extended_order: self.order > MAX_NATIVE_ORDER,
        }
    }

    /// Duration of each beamsplitter pulse.
    pub fn beamsplitter_duration(&self) -> Result<T> {
        pi_over_2_duration(&self.pulse(T::zero()), &self.trap)
    }
}

pub fn default_n_max(order: u32) -> usize {
    2 * order as usize + 6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    First,
    Second,
}

/// `|1>_a |0>_b`: spin down, motional ground state.
pub fn prepare_input<T: Real>(space: HilbertSpace) -> StateVector<T> {
    StateVector::basis(space, Spin::Down, 0).expect("ground state is in every space")
}

/// pi/2 pulse on the n-th blue sideband with the first or second phase.
pub fn beamsplitter<T: Real>(config: &InterferometerConfig<T>, which: Which) -> Result<OperatorMatrix<T>> {
    config.validate()?;
    let phi = match which {
        Which::First => config.pulse_phases.0,
        Which::Second => config.pulse_phases.1,
    };
    let spec = config.pulse(phi).with_duration(config.beamsplitter_duration()?);
    pulse_unitary(&spec, &config.trap, config.space)
}

/// `exp(-i dwz t a^dagger a)`.
pub fn phase_segment<T: Real>(delta_omega_z: T, t: T, space: HilbertSpace) -> Result<OperatorMatrix<T>> {
    if !(t >= T::zero()) {
        return Err(Error::OutOfRange {
            name: "t",
            message: format!("phase segment time must be non-negative, got {t}"),
        });
    }
    Ok(free_unitary(delta_omega_z, t, space))
}

/// Precomputed beamsplitters for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Interferometer<T: Real> {
    config: InterferometerConfig<T>,
    first: DMatrix<Cplx<T>>,
    second: DMatrix<Cplx<T>>,
}

impl<T: Real> Interferometer<T> {
    pub fn new(config: &InterferometerConfig<T>) -> Result<Self> {
        Ok(Self {
            config: *config,
            first: beamsplitter(config, Which::First)?.into_entries(),
            second: beamsplitter(config, Which::Second)?.into_entries(),
        })
    }

    pub fn config(&self) -> &InterferometerConfig<T> {
        &self.config
    }

    /// Output state after the full sequence with phase segment length `t`.
    pub fn output_state(&self, t: T) -> Result<StateVector<T>> {
        if !(t >= T::zero()) {
            return Err(Error::OutOfRange {
                name: "t",
                message: format!("phase segment time must be non-negative, got {t}"),
            });
        }
        let space = self.config.space;
        let psi = prepare_input::<T>(space);
        let mid = &self.first * psi.amplitudes();
        let guard = |v: &DVector<Cplx<T>>| -> Result<()> {
            let s = StateVector::from_amplitudes(space, v.clone())?;
            truncation_guard(&s, DEFAULT_TRUNCATION_TOL).into_result().map(|_| ())
        };
        guard(&mid)?;
        // diagonal phase exp(-i dwz t n)
        let levels = space.levels();
        let shifted = DVector::from_fn(space.dim(), |i, _| {
            let n = T::lit((i % levels) as f64);
            let theta = -self.config.delta_omega_z * t * n;
            mid[i] * Cplx::new(theta.cos(), theta.sin())
        });
        let out = &self.second * shifted;
        guard(&out)?;
        StateVector::from_amplitudes(space, out)
    }

    /// `<n_a''>`: population of `|1>_a`, i.e. of spin down.
    pub fn run_point(&self, t: T) -> Result<T> {
        let psi = self.output_state(t)?;
        let space = self.config.space;
        let mut p = T::zero();
        for n in 0..space.levels() {
            p += psi.probability(Spin::Down, n);
        }
        Ok(p)
    }
}

/// Ideal output probability at phase-segment time `t`, by state-vector
/// evolution.
pub fn run_point<T: Real>(config: &InterferometerConfig<T>, t: T) -> Result<T> {
    Interferometer::new(config)?.run_point(t)
}

/// `C * p_ideal`.
pub fn apply_contrast<T: Real>(p_ideal: T, contrast: T) -> Result<T> {
    let (p, c) = (p_ideal.to_f64_lossy(), contrast.to_f64_lossy());
    let slack = 1e-12;
    if !(-slack..=1.0 + slack).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p_ideal",
            message: format!("probability must lie in [0, 1], got {p}"),
        });
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange {
            name: "contrast",
            message: format!("contrast must lie in [0, 1], got {c}"),
        });
    }
    Ok(contrast * p_ideal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeMode {
    Analytic,
    Statevector,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint<T: Real> {
    pub t: T,
    pub phi: T,
    pub p_est: T,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeDataset<T: Real> {
    pub points: Vec<FringePoint<T>>,
    pub mode: FringeMode,
}

impl<T: Real> FringeDataset<T> {
    /// Closed-form fringe `(C/2)(1 - cos(n dwz t))`, for fit checks.
    pub fn analytic(order: u32, delta_omega_z: T, contrast: T, t_grid: &[T]) -> Self {
        let n = T::lit(order as f64);
        let points = t_grid
            .iter()
            .map(|&t| {
                let phi = delta_omega_z * t;
                FringePoint {
                    t,
                    phi,
                    p_est: contrast / T::lit(2.0) * (T::one() - (n * phi).cos()),
                    shots: 0,
                }
            })
            .collect();
        Self {
            points,
            mode: FringeMode::Analytic,
        }
    }

    /// CSV with header `t_s,phi_rad,p_est,shots`; values use the shortest
    /// representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,phi_rad,p_est,shots\n");
        for p in &self.points {
            let _ = writeln!(out, "{:?},{:?},{:?},{}", p.t, p.phi, p.p_est, p.shots);
        }
        out
    }

    /// Parses [`FringeDataset::to_csv`] output; `#` lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut header_seen = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line.trim() != "t_s,phi_rad,p_est,shots" {
                    return Err(Error::Parse {
                        line: line_no,
                        column: 1,
                        message: "expected header `t_s,phi_rad,p_est,shots`".into(),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let mut col = 1;
            let mut nums = [T::zero(); 3];
            for (k, f) in fields[..3].iter().enumerate() {
                nums[k] = f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    column: col,
                    message: format!("invalid number `{f}`"),
                })?;
                col += f.len() + 1;
            }
            let shots = fields[3].parse().map_err(|_| Error::Parse {
                line: line_no,
                column: col,
                message: format!("invalid shot count `{}`", fields[3]),
            })?;
            points.push(FringePoint {
                t: nums[0],
                phi: nums[1],
                p_est: nums[2],
                shots,
            });
        }
        let mode = if points.iter().any(|p| p.shots > 0) {
            FringeMode::MonteCarlo
        } else {
            FringeMode::Statevector
        };
        Ok(Self { points, mode })
    }
}

/// Fringe over a grid of phase-segment times. With `shots > 0` each point is
/// the mean of `shots` Bernoulli draws from stream `i` of `seed`.
pub fn sweep<T: Real>(
    config: &InterferometerConfig<T>,
    t_grid: &[T],
    shots: u64,
    seed: u64,
) -> Result<FringeDataset<T>> {
    if t_grid.is_empty() {
        return Err(Error::OutOfRange {
            name: "t_grid",
            message: "time grid is empty".into(),
        });
    }
    let engine = Interferometer::new(config)?;
    let points = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let ideal = engine.run_point(t)?;
            let ideal = ideal.max(T::zero()).min(T::one());
            let p = apply_contrast(ideal, config.contrast)?;
            let p_est = if shots > 0 {
                let mut rng = stream_rng(seed, i as u64);
                T::lit(bernoulli_count(p, shots, &mut rng)? as f64 / shots as f64)
            } else {
                p
            };
            Ok(FringePoint {
                t,
                phi: config.delta_omega_z * t,
                p_est,
                shots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeDataset {
        points,
        mode: if shots > 0 {
            FringeMode::MonteCarlo
        } else {
            FringeMode::Statevector
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    /// Angular frequency in `t` (rad/s); `None` when the data show no fringe.
    pub frequency: Option<f64>,
    pub contrast: f64,
    pub phase_offset: f64,
    pub residual_norm: f64,
    /// Standard errors of `(contrast, frequency, phase_offset)` from the
    /// residual variance and the Jacobian at the optimum.
    pub std_errors: Option<[f64; 3]>,
}

fn model(c: f64, w: f64, th: f64, t: f64) -> f64 {
    0.5 * c * (1.0 - (w * t + th).cos())
}

fn ssr(params: [f64; 3], ts: &[f64], ps: &[f64]) -> f64 {
    ts.iter()
        .zip(ps)
        .map(|(&t, &p)| (p - model(params[0], params[1], params[2], t)).powi(2))
        .sum()
}

/// Least-squares fit of `p(t) = (C/2)(1 - cos(omega t + theta))`.
///
/// The starting frequency is the peak of the discrete spectrum of the
/// mean-removed data, `C` and `theta` start from the linear fit at that
/// frequency, and Levenberg-Marquardt refines all three.
pub fn fit_fringe<T: Real>(dataset: &FringeDataset<T>) -> Result<FringeFit> {
    let ts: Vec<f64> = dataset.points.iter().map(|p| p.t.to_f64_lossy()).collect();
    let ps: Vec<f64> = dataset.points.iter().map(|p| p.p_est.to_f64_lossy()).collect();
    let n = ts.len();
    if n < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {n}")));
    }
    let t0 = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let t1 = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = t1 - t0;
    let mean = ps.iter().sum::<f64>() / n as f64;
    let spread = ps.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 {
        return Ok(FringeFit {
            frequency: None,
            contrast: 0.0,
            phase_offset: 0.0,
            residual_norm: ps.iter().map(|p| p * p).sum::<f64>().sqrt(),
            std_errors: None,
        });
    }
    if !(span > 0.0) {
        return Err(Error::Fit("time grid has zero span".into()));
    }

    // spectrum peak on a grid 8x finer than the natural resolution
    let pad = 8usize;
    let bins = n * pad / 2;
    let dw = std::f64::consts::TAU / (span * pad as f64);
    let power = |w: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (&t, &p) in ts.iter().zip(&ps) {
            re += (p - mean) * (w * t).cos();
            im += (p - mean) * (w * t).sin();
        }
        re * re + im * im
    };
    let (mut w0, mut best) = (dw, f64::NEG_INFINITY);
    for k in 1..=bins {
        let w = k as f64 * dw;
        let pw = power(w);
        if pw > best {
            best = pw;
            w0 = w;
        }
    }

    // linear fit p = a + b cos(w t) + c sin(w t)
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (w0 * ts[i]).cos(),
        _ => (w0 * ts[i]).sin(),
    });
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&DVector::from_column_slice(&ps), 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let amp = (coef[1] * coef[1] + coef[2] * coef[2]).sqrt();
    let mut params = [coef[0] + amp, w0, coef[2].atan2(-coef[1])];

    let mut lambda = 1e-3;
    let mut cost = ssr(params, &ts, &ps);
    for _ in 0..500 {
        let mut jtj = nalgebra::Matrix3::<f64>::zeros();
        let mut jtr = nalgebra::Vector3::<f64>::zeros();
        for (&t, &p) in ts.iter().zip(&ps) {
            let arg = params[1] * t + params[2];
            let r = p - model(params[0], params[1], params[2], t);
            let g = nalgebra::Vector3::new(
                0.5 * (1.0 - arg.cos()),
                0.5 * params[0] * arg.sin() * t,
                0.5 * params[0] * arg.sin(),
            );
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for d in 0..3 {
                a[(d, d)] *= 1.0 + lambda;
                a[(d, d)] += 1e-300;
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [params[0] + step[0], params[1] + step[1], params[2] + step[2]];
            let c = ssr(trial, &ts, &ps);
            if c <= cost {
                let rel = (cost - c) / cost.max(1e-300);
                params = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = rel > 1e-15 && step.norm() > 1e-15 * (1.0 + params[1].abs());
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !cost.is_finite() {
        return Err(Error::Fit("fit diverged".into()));
    }
    if params[0] < 0.0 {
        // (C/2)(1 - cos x) with C < 0 has no equivalent positive form; report as is
        return Err(Error::Fit(format!("fitted contrast is negative ({})", params[0])));
    }
    if params[1] < 0.0 {
        params[1] = -params[1];
        params[2] = -params[2];
    }
    if params[1] * span < std::f64::consts::TAU {
        return Err(Error::Fit(format!(
            "data span one fringe period at most ({:.3} periods)",
            params[1] * span / std::f64::consts::TAU
        )));
    }
    let theta = crate::scalar::wrap_phase(params[2]);

    let dof = n.saturating_sub(3).max(1) as f64;
    let mut jtj = nalgebra::Matrix3::<f64>::zeros();
    for &t in &ts {
        let arg = params[1] * t + theta;
        let g = nalgebra::Vector3::new(
            0.5 * (1.0 - arg.cos()),
            0.5 * params[0] * arg.sin() * t,
            0.5 * params[0] * arg.sin(),
        );
        jtj += g * g.transpose();
    }
    let std_errors = jtj.try_inverse().map(|inv| {
        let s2 = cost / dof;
        [
            (s2 * inv[(0, 0)]).sqrt(),
            (s2 * inv[(1, 1)]).sqrt(),
            (s2 * inv[(2, 2)]).sqrt(),
        ]
    });
    Ok(FringeFit {
        frequency: Some(params[1]),
        contrast: params[0],
        phase_offset: theta,
        residual_norm: cost.sqrt(),
        std_errors,
    })
}
