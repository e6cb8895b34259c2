//! Projection-noise sampling, bin averages, two-sample Allan deviation and
//! phase sensitivity.
//!
//! Every random stream is a ChaCha8 generator seeded with
//! `ChaCha8Rng::seed_from_u64(seed)` and switched to stream `k` with
//! `set_stream(k)`; a shot record uses stream 0 and sweep point `i` uses
//! stream `i`. Outcomes are drawn with `rand::distr::Bernoulli`, so records
//! are reproducible for a given seed on every platform.

use std::fmt::Write as _;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interferometer::InterferometerConfig;
use crate::scalar::Real;

/// Deterministic generator for one `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bernoulli<T: Real>(p: T) -> Result<Bernoulli> {
    let pf = p.to_f64_lossy();
    if !(0.0..=1.0).contains(&pf) {
        return Err(Error::OutOfRange {
            name: "p",
            message: format!("probability must lie in [0, 1], got {p}"),
        });
    }
    Bernoulli::new(pf).map_err(|e| Error::Numerical(e.to_string()))
}

/// Number of successes in `shots` Bernoulli(`p`) draws from `rng`.
pub fn bernoulli_count<T: Real>(p: T, shots: u64, rng: &mut ChaCha8Rng) -> Result<u64> {
    let dist = bernoulli(p)?;
    Ok(dist.sample_iter(rng).take(shots as usize).filter(|&x| x).count() as u64)
}

/// A sequence of single-shot outcomes of the output-port number operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord<T: Real> {
    pub outcomes: Vec<u8>,
    /// Interferometer phase at which the shots were taken, if known.
    pub operating_point: Option<T>,
    pub seed: u64,
    /// Free-form description of the generating configuration.
    pub config: String,
}

impl<T: Real> ShotRecord<T> {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> T {
        let ones = self.outcomes.iter().filter(|&&x| x == 1).count();
        T::lit(ones as f64) / T::lit(self.outcomes.len().max(1) as f64)
    }

    pub fn with_operating_point(mut self, phi: T) -> Self {
        self.operating_point = Some(phi);
        self
    }

    /// Plain-text form: `#`-comment header lines (`seed=`, optional
    /// `operating_point=` and `config=`), then the outcomes as `0`/`1`
    /// characters, 80 per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# seed={}", self.seed);
        if let Some(phi) = self.operating_point {
            let _ = writeln!(out, "# operating_point={phi}");
        }
        if !self.config.is_empty() {
            let _ = writeln!(out, "# config={}", self.config.replace('\n', " "));
        }
        for chunk in self.outcomes.chunks(80) {
            out.extend(chunk.iter().map(|&b| if b == 1 { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rec = ShotRecord {
            outcomes: Vec::new(),
            operating_point: None,
            seed: 0,
            config: String::new(),
        };
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("seed=") {
                    rec.seed = v.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        column: 8,
                        message: format!("invalid seed `{v}`"),
                    })?;
                } else if let Some(v) = comment.strip_prefix("operating_point=") {
                    rec.operating_point = Some(v.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        column: 19,
                        message: format!("invalid operating point `{v}`"),
                    })?);
                } else if let Some(v) = comment.strip_prefix("config=") {
                    rec.config = v.to_string();
                }
                continue;
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '0' => rec.outcomes.push(0),
                    '1' => rec.outcomes.push(1),
                    c if c.is_whitespace() => {}
                    c => {
                        return Err(Error::Parse {
                            line: line_no,
                            column: col + 1,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                }
            }
        }
        Ok(rec)
    }
}

/// `m` independent Bernoulli(`p`) outcomes from stream 0 of `seed`.
pub fn sample_shots<T: Real>(p: T, m: usize, seed: u64) -> Result<ShotRecord<T>> {
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "M",
            message: "at least one shot is required".into(),
        });
    }
    let dist = bernoulli(p)?;
    let outcomes = dist.sample_iter(stream_rng(seed, 0)).take(m).map(u8::from).collect();
    Ok(ShotRecord {
        outcomes,
        operating_point: None,
        seed,
        config: format!("bernoulli p={p}"),
    })
}

/// Shots of the simulated interferometer (with its contrast) at phase `phi`.
pub fn sample_interferometer<T: Real>(
    config: &InterferometerConfig<T>,
    phi: T,
    m: usize,
    seed: u64,
) -> Result<ShotRecord<T>> {
    let t = phi / config.delta_omega_z;
    let p = crate::interferometer::apply_contrast(crate::interferometer::run_point(config, t)?, config.contrast)?;
    let p = p.max(T::zero()).min(T::one());
    let mut rec = sample_shots(p, m, seed)?.with_operating_point(phi);
    rec.config = format!("order={} contrast={} phi={phi}", config.order, config.contrast);
    Ok(rec)
}

/// Consecutive non-overlapping bin averages; a trailing partial bin is
/// dropped. Requires `2 < n_b < M / 2`.
pub fn bin_means<T: Real>(record: &ShotRecord<T>, n_b: usize) -> Result<Vec<T>> {
    let m = record.len();
    if n_b <= 2 || 2 * n_b >= m {
        return Err(Error::BinSize { n_b, m });
    }
    let inv = T::one() / T::lit(n_b as f64);
    Ok(record
        .outcomes
        .chunks_exact(n_b)
        .map(|c| T::lit(c.iter().map(|&x| x as u64).sum::<u64>() as f64) * inv)
        .collect())
}

/// Two-sample Allan variance `sum (m_{i+1} - m_i)^2 / (2 (K - 1))` over
/// `K` consecutive bin means.
pub fn allan_variance<T: Real>(means: &[T]) -> Result<T> {
    let k = means.len();
    if k < 2 {
        return Err(Error::TooFewBins(k));
    }
    let sum = means.windows(2).fold(T::zero(), |acc, w| {
        let d = w[1] - w[0];
        acc + d * d
    });
    Ok(sum / T::lit(2.0 * (k - 1) as f64))
}

/// Allan deviation, the square root of [`allan_variance`].
pub fn allan_deviation<T: Real>(means: &[T]) -> Result<T> {
    allan_variance(means).map(|v| v.sqrt())
}

/// `d<n_a''>/d phi = (C n / 2) sin(n phi)`.
pub fn fringe_slope<T: Real>(config: &InterferometerConfig<T>, phi: T) -> T {
    let n = T::lit(config.order as f64);
    config.contrast * n / T::lit(2.0) * (n * phi).sin()
}

/// Maximum-slope operating point `phi = pi / (2 n)`.
pub fn max_slope_point<T: Real>(order: u32) -> T {
    T::frac_pi_2() / T::lit(order as f64)
}

/// `delta_phi = sigma / |slope|`.
pub fn sensitivity<T: Real>(sigma: T, slope: T) -> Result<T> {
    if slope.abs().to_f64_lossy() <= 1e-15 {
        return Err(Error::ZeroSlope);
    }
    Ok(sigma / slope.abs())
}

/// Standard-quantum-limit reference `1 / sqrt(N_b)`: the single-shot
/// deviation 0.5 over sqrt(N_b), divided by the ideal linear slope 0.5.
pub fn sql_curve<T: Real>(n_b: usize) -> Result<T> {
    if n_b == 0 {
        return Err(Error::OutOfRange {
            name: "N_b",
            message: "bin size must be at least 1".into(),
        });
    }
    Ok(T::one() / T::lit(n_b as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllanRow<T: Real> {
    pub n_b: usize,
    pub sigma: T,
    pub delta_phi: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllanResult<T: Real> {
    pub rows: Vec<AllanRow<T>>,
    pub slope_used: T,
}

impl<T: Real> AllanResult<T> {
    /// CSV with header `N_b,sigma,delta_phi`, plus `sql_delta_phi` when
    /// `with_sql` is set.
    pub fn to_csv(&self, with_sql: bool) -> String {
        let mut out = String::from("N_b,sigma,delta_phi");
        out.push_str(if with_sql { ",sql_delta_phi\n" } else { "\n" });
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.n_b, r.sigma, r.delta_phi);
            if with_sql {
                let sql: T = sql_curve(r.n_b).expect("rows have n_b > 2");
                let _ = write!(out, ",{sql}");
            }
            out.push('\n');
        }
        out
    }
}

/// Allan deviation and phase sensitivity for each bin size.
pub fn allan_scan<T: Real>(
    record: &ShotRecord<T>,
    config: &InterferometerConfig<T>,
    n_b_list: &[usize],
) -> Result<AllanResult<T>> {
    let phi = record.operating_point.ok_or_else(|| Error::OutOfRange {
        name: "operating_point",
        message: "shot record has no operating point".into(),
    })?;
    let slope = fringe_slope(config, phi);
    let mut rows = Vec::with_capacity(n_b_list.len());
    for &n_b in n_b_list {
        let sigma = allan_deviation(&bin_means(record, n_b)?)?;
        rows.push(AllanRow {
            n_b,
            sigma,
            delta_phi: sensitivity(sigma, slope)?,
        });
    }
    Ok(AllanResult {
        rows,
        slope_used: slope,
    })
}
