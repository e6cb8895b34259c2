//! Lowering operator targets to native pulse programs, and verification.
//!
//! Each Hermitian piece of the target is matched against the native set
//! first. Anything else is fitted, on its leading motional degree, by a
//! sparse real combination of commutator gadgets built from unit native
//! generators; whatever lower-degree remainder those gadgets leave behind is
//! lowered again and appended, so the compiled generator equals the target
//! exactly up to gadget and splitting error.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, OperatorMatrix, SpinOp, DEFAULT_TRUNCATION_TOL};
use crate::pulse::{PulseSpec, TrapConfig, MAX_NATIVE_ORDER};
use crate::scalar::{factorial, wrap_phase, Cplx, Real};

use super::expr::{expr_to_matrix, Monomial, OperatorExpr};
use super::gadget::{trotter, Block};
use super::program::{PulseProgram, Step};

/// Deepest commutator nesting the gadget search will build.
pub const MAX_SEARCH_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions<T: Real> {
    pub trap: TrapConfig<T>,
    /// Space used for verification; `None` picks `n_max = 30`, which leaves
    /// headroom for the intermediate Fock spread of cubic pulses.
    pub space: Option<HilbertSpace>,
    /// Inputs with Fock number `<= probe_levels` (both spins) define the
    /// subspace on which the error is measured.
    pub probe_levels: usize,
    pub truncation_tol: f64,
    /// Upper limit on product-formula repetitions.
    pub max_trotter_steps: usize,
}

impl<T: Real> Default for CompileOptions<T> {
    fn default() -> Self {
        Self {
            trap: TrapConfig::reference(),
            space: None,
            probe_levels: 2,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
            max_trotter_steps: 200_000,
        }
    }
}

impl<T: Real> CompileOptions<T> {
    fn resolve_space(&self, target: &OperatorExpr<T>) -> Result<HilbertSpace> {
        match self.space {
            Some(s) => Ok(s),
            None => HilbertSpace::new(30usize.max(target.max_order() as usize + 2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileReport {
    /// Spectral-norm distance to the exact evolution on the probe subspace,
    /// minimised over a global phase.
    pub measured_error: f64,
    pub step_count: usize,
    pub depth: usize,
    pub delta_t: Option<f64>,
    pub trotter_steps: usize,
    /// Heuristic error estimate from block norms; only set by [`synthesize`].
    pub estimated_bound: Option<f64>,
    pub probe_levels: usize,
}

impl std::fmt::Display for CompileReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "measured_error={:e}", self.measured_error)?;
        writeln!(f, "step_count={}", self.step_count)?;
        writeln!(f, "depth={}", self.depth)?;
        match self.delta_t {
            Some(d) => writeln!(f, "delta_t={d:e}")?,
            None => writeln!(f, "delta_t=none")?,
        }
        writeln!(f, "trotter_steps={}", self.trotter_steps)?;
        match self.estimated_bound {
            Some(b) => writeln!(f, "estimated_bound={b:e}")?,
            None => writeln!(f, "estimated_bound=none")?,
        }
        writeln!(f, "probe_levels={}", self.probe_levels)
    }
}

/// Splits a Hermitian expression into `(representative, coefficient)` pairs,
/// each standing for `c m + h.c.` (or `Re(c) m` when `m` is self-adjoint).
fn hermitian_pieces<T: Real>(expr: &OperatorExpr<T>) -> Result<Vec<(Monomial, Cplx<T>)>> {
    if !expr.is_hermitian(1e-9) {
        return Err(Error::NotRealizable("target is not Hermitian".into()));
    }
    let mut out = Vec::new();
    for (m, c) in expr.canonical() {
        if m.is_self_adjoint() {
            out.push((m, Cplx::new(c.re, T::zero())));
        } else if m < m.adjoint() {
            out.push((m, c));
        }
    }
    Ok(out)
}

fn piece_expr<T: Real>(m: Monomial, c: Cplx<T>) -> OperatorExpr<T> {
    if m.is_self_adjoint() {
        OperatorExpr::term(m.spin, m.p, m.q, c)
    } else {
        OperatorExpr::hermitian_term(m.spin, m.p, m.q, c)
    }
}

/// Native block whose generator is exactly `c m + h.c.`, if one exists.
///
/// Returns `None` for the identity (a global phase) and for anything that
/// needs a gadget.
pub fn native_block<T: Real>(m: Monomial, c: Cplx<T>, trap: &TrapConfig<T>) -> Option<Block<T>> {
    if c.norm_sqr() == T::zero() {
        return None;
    }
    if m.spin == SpinOp::SigmaMinus {
        return native_block(m.adjoint(), c.conj(), trap);
    }
    let (epsilon, l) = match (m.spin, m.p, m.q) {
        (SpinOp::Identity, 1, 1) => return Some(Block::Free(c.re)),
        (SpinOp::SigmaZ, 0, 0) => return Some(Block::SpinZ(c.re)),
        (SpinOp::Identity, p, 0) if (1..=MAX_NATIVE_ORDER).contains(&p) => (0u8, p as i32),
        (SpinOp::Identity, 0, q) if (1..=MAX_NATIVE_ORDER).contains(&q) => (0, -(q as i32)),
        (SpinOp::SigmaPlus, p, 0) if p <= MAX_NATIVE_ORDER => (1, p as i32),
        (SpinOp::SigmaPlus, 0, q) if q <= MAX_NATIVE_ORDER => (1, -(q as i32)),
        _ => return None,
    };
    let k = l.unsigned_abs();
    let mut omega = c.norm_sqr().sqrt() * factorial::<T>(k);
    for _ in 0..k {
        omega /= trap.eta();
    }
    if epsilon == 1 {
        // sigma_+ is twice the elementary |up><down|
        omega *= T::lit(2.0);
    }
    let phi = wrap_phase(c.im.atan2(c.re) - T::frac_pi_2() * T::lit(k as f64));
    Some(Block::Native(PulseSpec {
        epsilon,
        l,
        omega,
        phi,
        duration: T::zero(),
        extended_order: false,
    }))
}

/// Unit-strength native generators offered to the gadget search.
fn gadget_pool<T: Real>(with_spin: bool, trap: &TrapConfig<T>) -> Vec<Block<T>> {
    let units = [Cplx::new(T::one(), T::zero()), Cplx::new(T::zero(), T::one())];
    let mut monos = Vec::new();
    for k in 1..=MAX_NATIVE_ORDER {
        monos.push(Monomial::new(SpinOp::Identity, k, 0));
    }
    if with_spin {
        for k in 0..=MAX_NATIVE_ORDER {
            monos.push(Monomial::new(SpinOp::SigmaPlus, k, 0));
        }
        for k in 1..=MAX_NATIVE_ORDER {
            monos.push(Monomial::new(SpinOp::SigmaPlus, 0, k));
        }
    }
    let mut pool: Vec<Block<T>> = monos
        .iter()
        .flat_map(|&m| units.iter().filter_map(move |&u| native_block(m, u, trap)))
        .collect();
    pool.push(Block::Free(T::one()));
    if with_spin {
        pool.push(Block::SpinZ(T::one()));
    }
    pool
}

struct Candidate<T: Real> {
    block: Block<T>,
    generator: OperatorExpr<T>,
}

fn pair_candidates<T: Real>(left: &[Candidate<T>], right: &[Candidate<T>], triangular: bool) -> Vec<Candidate<T>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, a) in left.iter().enumerate() {
        let start = if triangular { i + 1 } else { 0 };
        for b in &right[start.min(right.len())..] {
            let gen = a
                .generator
                .commutator(&b.generator)
                .scale(Cplx::new(T::zero(), T::lit(super::gadget::GADGET_SIGN as f64)));
            if gen.is_zero() {
                continue;
            }
            if seen.insert(gen.to_text()) {
                out.push(Candidate {
                    block: Block::gadget(a.block.clone(), b.block.clone()),
                    generator: gen,
                });
            }
        }
    }
    out
}

/// Sparse real fit `target ≈ sum_j w_j columns_j`
/// (orthogonal matching pursuit) restricted to monomials of degree
/// `>= min_degree`.
fn sparse_fit<T: Real>(
    target: &OperatorExpr<T>,
    columns: &[&OperatorExpr<T>],
    min_degree: u32,
) -> Option<Vec<(usize, f64)>> {
    let mut rows: BTreeMap<Monomial, usize> = BTreeMap::new();
    let to_map = |e: &OperatorExpr<T>| -> BTreeMap<Monomial, (f64, f64)> {
        e.canonical()
            .into_iter()
            .filter(|(m, _)| m.degree() >= min_degree)
            .map(|(m, c)| (m, (c.re.to_f64_lossy(), c.im.to_f64_lossy())))
            .collect()
    };
    let tmap = to_map(target);
    let cmaps: Vec<_> = columns.iter().map(|c| to_map(c)).collect();
    for m in tmap.keys().chain(cmaps.iter().flat_map(|c| c.keys())) {
        let n = rows.len();
        rows.entry(*m).or_insert(n);
    }
    let r = rows.len();
    let vec_of = |map: &BTreeMap<Monomial, (f64, f64)>| {
        let mut v = DVector::<f64>::zeros(2 * r);
        for (m, (re, im)) in map {
            let i = rows[m];
            v[2 * i] = *re;
            v[2 * i + 1] = *im;
        }
        v
    };
    let b = vec_of(&tmap);
    let cols: Vec<DVector<f64>> = cmaps.iter().map(vec_of).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.norm()).collect();
    let tol = 1e-9 * b.norm().max(1.0);
    if b.norm() <= tol {
        return Some(Vec::new());
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut residual = b.clone();
    for _ in 0..(2 * r).min(cols.len()) {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in cols.iter().enumerate() {
            if norms[j] < 1e-14 || selected.contains(&j) {
                continue;
            }
            let score = c.dot(&residual).abs() / norms[j];
            if best.is_none_or(|(_, s)| score > s * (1.0 + 1e-12)) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else { break };
        if score <= 1e-12 * b.norm() {
            break;
        }
        selected.push(j);
        let a = DMatrix::from_columns(&selected.iter().map(|&k| cols[k].clone()).collect::<Vec<_>>());
        let w = a.clone().svd(true, true).solve(&b, 1e-13).ok()?;
        residual = &b - &a * &w;
        if residual.norm() <= tol {
            let scale = w.amax();
            return Some(
                selected
                    .iter()
                    .zip(w.iter())
                    .filter(|(_, x)| x.abs() > 1e-14 * scale)
                    .map(|(&k, &x)| (k, x))
                    .collect(),
            );
        }
    }
    None
}

/// Lowers a Hermitian target into blocks whose generators sum to it.
pub fn lower<T: Real>(target: &OperatorExpr<T>, max_depth: usize, trap: &TrapConfig<T>) -> Result<Vec<Block<T>>> {
    if max_depth == 0 {
        return Err(Error::OutOfRange {
            name: "max_depth",
            message: "must be at least 1".into(),
        });
    }
    let mut blocks = Vec::new();
    let mut pools: PoolCache<T> = [None, None];
    lower_into(target, max_depth, trap, &mut pools, &mut blocks, 0)?;
    Ok(blocks)
}

type PoolCache<T> = [Option<(Vec<Candidate<T>>, Vec<Candidate<T>>, Option<Vec<Candidate<T>>>)>; 2];

fn lower_into<T: Real>(
    target: &OperatorExpr<T>,
    max_depth: usize,
    trap: &TrapConfig<T>,
    pools: &mut PoolCache<T>,
    out: &mut Vec<Block<T>>,
    recursion: usize,
) -> Result<()> {
    if recursion > 64 {
        return Err(Error::Numerical("byproduct cancellation did not terminate".into()));
    }
    let scale = target.max_coeff().to_f64_lossy().max(1.0);
    for (m, c) in hermitian_pieces(target)? {
        if c.norm_sqr().sqrt().to_f64_lossy() <= 1e-13 * scale {
            continue;
        }
        if m.spin == SpinOp::Identity && m.p == 0 && m.q == 0 {
            continue;
        }
        if let Some(b) = native_block(m, c, trap) {
            out.push(b);
            continue;
        }
        let piece = piece_expr(m, c);
        let with_spin = m.spin != SpinOp::Identity;
        let cache = &mut pools[with_spin as usize];
        let (pool, level1, level2) = cache.get_or_insert_with(|| {
            let pool: Vec<Candidate<T>> = gadget_pool(with_spin, trap)
                .into_iter()
                .map(|b| Candidate {
                    generator: b.generator(trap),
                    block: b,
                })
                .collect();
            let level1 = pair_candidates(&pool, &pool, true);
            (pool, level1, None)
        });
        let mut fit = None;
        for depth in 1..=max_depth.min(MAX_SEARCH_DEPTH) {
            let cands: Vec<&Candidate<T>> = if depth == 1 {
                level1.iter().collect()
            } else {
                let l2 = level2.get_or_insert_with(|| pair_candidates(level1, pool, false));
                level1.iter().chain(l2.iter()).collect()
            };
            let cols: Vec<&OperatorExpr<T>> = cands.iter().map(|c| &c.generator).collect();
            if let Some(w) = sparse_fit(&piece, &cols, m.degree()) {
                fit = Some(
                    w.into_iter()
                        .map(|(j, x)| (cands[j].block.clone(), cands[j].generator.clone(), x))
                        .collect::<Vec<_>>(),
                );
                break;
            }
        }
        let Some(fit) = fit else {
            return Err(Error::Unreachable {
                monomial: m.to_string(),
                depth: max_depth,
            });
        };
        let mut remainder = piece.clone();
        for (block, gen, w) in fit {
            let w = T::lit(w);
            remainder = remainder.sub(&gen.scale(Cplx::new(w, T::zero())));
            out.push(Block::scaled(w, block));
        }
        let remainder = remainder.chop(T::lit(1e-11 * scale));
        if remainder.max_degree() >= m.degree() && !remainder.is_zero() {
            return Err(Error::Numerical(format!(
                "gadget fit left degree-{} residue",
                remainder.max_degree()
            )));
        }
        lower_into(&remainder, max_depth, trap, pools, out, recursion + 1)?;
    }
    Ok(())
}

fn block_rate<T: Real>(b: &Block<T>) -> f64 {
    match b {
        Block::Scaled(w, inner) => w.abs().to_f64_lossy() * block_rate(inner),
        _ => 1.0,
    }
}

fn all_commute<T: Real>(blocks: &[Block<T>], trap: &TrapConfig<T>) -> bool {
    let gens: Vec<_> = blocks.iter().map(|b| b.generator(trap)).collect();
    let tol = T::lit(1e-12);
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            if gens[i].commutator(&gens[j]).max_coeff() > tol {
                return false;
            }
        }
    }
    true
}

/// Product-formula repetitions so that every gadget's innermost step is at
/// most `delta_t` and every native step is at most `delta_t` long.
pub fn trotter_steps<T: Real>(blocks: &[Block<T>], time: T, delta_t: T, trap: &TrapConfig<T>) -> usize {
    if blocks.iter().all(|b| b.depth() == 0) && all_commute(blocks, trap) {
        return 1;
    }
    let t = time.abs().to_f64_lossy();
    let dt = delta_t.to_f64_lossy();
    blocks
        .iter()
        .map(|b| {
            let reach = dt.powi(1 << b.depth().min(16));
            (block_rate(b) * t / reach).ceil() as usize
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

fn block_norm<T: Real>(b: &Block<T>, trap: &TrapConfig<T>, space: HilbertSpace) -> Result<f64> {
    Ok(match b {
        Block::Scaled(w, inner) => w.abs().to_f64_lossy() * block_norm(inner, trap, space)?,
        Block::Gadget(a, c) => 2.0 * block_norm(a, trap, space)? * block_norm(c, trap, space)?,
        other => other.generator_matrix(trap, space)?.spectral_norm().to_f64_lossy(),
    })
}

fn gadget_error<T: Real>(b: &Block<T>, tau: f64, trap: &TrapConfig<T>, space: HilbertSpace) -> Result<f64> {
    Ok(match b {
        Block::Scaled(w, inner) => gadget_error(inner, w.abs().to_f64_lossy() * tau, trap, space)?,
        Block::Gadget(a, c) => {
            let d = tau.abs().sqrt();
            let x = block_norm(a, trap, space)? + block_norm(c, trap, space)?;
            (x * d).powi(3) + 2.0 * gadget_error(a, d, trap, space)? + 2.0 * gadget_error(c, d, trap, space)?
        }
        _ => 0.0,
    })
}

fn estimate_bound<T: Real>(
    blocks: &[Block<T>],
    time: T,
    k: usize,
    trap: &TrapConfig<T>,
    space: HilbertSpace,
) -> Result<f64> {
    let t = time.abs().to_f64_lossy();
    let tau = t / k as f64;
    let mut bound = 0.0;
    for b in blocks {
        bound += k as f64 * gadget_error(b, tau, trap, space)?;
    }
    if k > 1 || blocks.len() > 1 {
        let gens = blocks
            .iter()
            .map(|b| b.generator_matrix(trap, space))
            .collect::<Result<Vec<OperatorMatrix<T>>>>()?;
        let mut comm = 0.0;
        for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                comm += gens[i].commutator(&gens[j])?.spectral_norm().to_f64_lossy();
            }
        }
        bound += t * t / (2.0 * k as f64) * comm;
    }
    Ok(bound)
}

/// Compiles `exp(-i target time)` into a pulse program and verifies it.
pub fn synthesize<T: Real>(
    target: &OperatorExpr<T>,
    time: T,
    delta_t: T,
    max_depth: usize,
    options: &CompileOptions<T>,
) -> Result<(PulseProgram<T>, CompileReport)> {
    if !(delta_t > T::zero()) || !delta_t.is_finite() {
        return Err(Error::OutOfRange {
            name: "delta_t",
            message: format!("must be positive, got {delta_t}"),
        });
    }
    if !time.is_finite() {
        return Err(Error::OutOfRange {
            name: "time",
            message: format!("must be finite, got {time}"),
        });
    }
    let trap = &options.trap;
    let space = options.resolve_space(target)?;
    let blocks = lower(target, max_depth, trap)?;
    let k = trotter_steps(&blocks, time, delta_t, trap);
    if k > options.max_trotter_steps {
        return Err(Error::OutOfRange {
            name: "delta_t",
            message: format!(
                "needs {k} product-formula steps, limit is {}",
                options.max_trotter_steps
            ),
        });
    }
    let mut program = trotter(&blocks, time, k)?;
    program.meta.target = target.to_string();
    program.meta.delta_t = Some(delta_t);
    let mut report = verify(&program, target, time, space, options)?;
    report.trotter_steps = k;
    report.estimated_bound = Some(estimate_bound(&blocks, time, k, trap, space)?);
    Ok((program, report))
}

/// Spectral norm of `v - e^{i theta} w`.
fn phase_distance(v: &DMatrix<Cplx<f64>>, w: &DMatrix<Cplx<f64>>, theta: f64) -> f64 {
    let d = v - w * Cplx::from_polar(1.0, theta);
    d.singular_values().max()
}

/// Measures the program against `exp(-i target time)` on the probe subspace.
pub fn verify<T: Real>(
    program: &PulseProgram<T>,
    target: &OperatorExpr<T>,
    time: T,
    space: HilbertSpace,
    options: &CompileOptions<T>,
) -> Result<CompileReport> {
    program.validate()?;
    let n_max = space.n_max();
    let probe = options.probe_levels.min(n_max.saturating_sub(2));
    let h = expr_to_matrix(target, space)?.certify_hermitian()?;
    let exact = h.eigh()?.propagator(time)?;

    let levels = space.levels();
    let cols: Vec<usize> = (0..2).flat_map(|s| (0..=probe).map(move |n| s * levels + n)).collect();
    let dim = space.dim();
    let to64 = |c: Cplx<T>| Cplx::new(c.re.to_f64_lossy(), c.im.to_f64_lossy());
    let w = DMatrix::from_fn(dim, cols.len(), |r, c| to64(exact.entry(r, cols[c])));
    let mut v = DMatrix::from_fn(dim, cols.len(), |r, c| {
        if r == cols[c] {
            Cplx::new(1.0, 0.0)
        } else {
            Cplx::new(0.0, 0.0)
        }
    });

    let (order, mats) = program.step_unitaries(&options.trap, space)?;
    let mats64: Vec<DMatrix<Cplx<f64>>> = mats.iter().map(|m| m.entries().map(to64)).collect();
    for k in order {
        v = &mats64[k] * &v;
        let mut leaked: f64 = 0.0;
        for c in 0..v.ncols() {
            let mut top = 0.0;
            for s in 0..2 {
                for n in [n_max - 1, n_max] {
                    top += v[(s * levels + n, c)].norm_sqr();
                }
            }
            leaked = leaked.max(top);
        }
        if leaked > options.truncation_tol {
            return Err(Error::Truncation { leaked });
        }
    }

    let overlap = (w.adjoint() * &v).trace();
    let theta0 = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    let (mut lo, mut hi) = (theta0 - 0.5, theta0 + 0.5);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = phase_distance(&v, &w, x1);
    let mut f2 = phase_distance(&v, &w, x2);
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = phase_distance(&v, &w, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = phase_distance(&v, &w, x2);
        }
    }
    let measured_error = f1.min(f2).min(phase_distance(&v, &w, theta0));

    Ok(CompileReport {
        measured_error,
        step_count: program.len(),
        depth: program.meta.depth,
        delta_t: program.meta.delta_t.map(|d| d.to_f64_lossy()),
        trotter_steps: 1,
        estimated_bound: None,
        probe_levels: probe,
    })
}

/// Number of pulses in a program that are not free-evolution segments.
pub fn pulse_count<T: Real>(program: &PulseProgram<T>) -> usize {
    program.steps.iter().filter(|s| matches!(s, Step::Pulse(_))).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::gadget::native_generator;

    fn trap() -> TrapConfig<f64> {
        TrapConfig::with_eta(1.0, 0.35).unwrap()
    }

    fn opts() -> CompileOptions<f64> {
        CompileOptions {
            trap: trap(),
            space: Some(HilbertSpace::new(30).unwrap()),
            ..CompileOptions::default()
        }
    }

    #[test]
    fn native_blocks_reproduce_their_piece() {
        let c = Cplx::new(0.3, -0.8);
        for (s, p, q) in [
            (SpinOp::Identity, 1, 0),
            (SpinOp::Identity, 0, 2),
            (SpinOp::Identity, 3, 0),
            (SpinOp::SigmaPlus, 0, 0),
            (SpinOp::SigmaPlus, 2, 0),
            (SpinOp::SigmaPlus, 0, 3),
            (SpinOp::SigmaMinus, 1, 0),
        ] {
            let m = Monomial::new(s, p, q);
            let Some(Block::Native(spec)) = native_block(m, c, &trap()) else {
                panic!("{m} should be native");
            };
            let diff = native_generator(&spec, &trap()).sub(&piece_expr(m, c));
            assert!(diff.max_coeff() < 1e-12, "{m}");
        }
        assert!(native_block(Monomial::new(SpinOp::Identity, 1, 2), c, &trap()).is_none());
        assert!(native_block(Monomial::new(SpinOp::Identity, 4, 0), c, &trap()).is_none());
    }

    #[test]
    fn lowered_generators_sum_to_target() {
        let target = OperatorExpr::<f64>::parse("I 1 2 0 1\nSZ 0 0 0.4 0\nI 2 0 0.1 0.2\nHERMITIZE\n").unwrap();
        let blocks = lower(&target, 1, &trap()).unwrap();
        let sum = blocks
            .iter()
            .fold(OperatorExpr::zero(), |acc, b| acc.add(&b.generator(&trap())));
        // the identity part is a dropped global phase
        let diff = sum.sub(&target).chop(1e-9);
        assert!(diff.is_zero(), "{diff}");
        assert!(blocks.iter().any(|b| b.depth() == 1));
    }

    #[test]
    fn spin_dependent_target_lowers() {
        let target = OperatorExpr::<f64>::parse("SZ 1 0 0.5 0\nHERMITIZE\n").unwrap();
        let blocks = lower(&target, 1, &trap()).unwrap();
        let sum = blocks
            .iter()
            .fold(OperatorExpr::zero(), |acc, b| acc.add(&b.generator(&trap())));
        assert!(sum.sub(&target).chop(1e-9).is_zero());
    }

    #[test]
    fn carrier_target_is_single_pulse() {
        let target = OperatorExpr::<f64>::parse("SP 0 0 0.7 0.2\nHERMITIZE\n").unwrap();
        let (prog, report) = synthesize(&target, 1.3, 0.1, 1, &opts()).unwrap();
        assert_eq!(prog.len(), 1);
        assert!(report.measured_error < 1e-10, "{}", report.measured_error);
    }

    #[test]
    fn depth_exhaustion_names_monomial() {
        let target = OperatorExpr::<f64>::parse("I 5 0 1 0\nHERMITIZE\n").unwrap();
        match synthesize(&target, 0.1, 0.1, 1, &opts()) {
            Err(Error::Unreachable { monomial, depth }) => {
                assert_eq!(monomial, "I a^5");
                assert_eq!(depth, 1);
            }
            other => panic!("expected unreachable, got {other:?}"),
        }
    }

    #[test]
    fn empty_program_zero_target() {
        let s = HilbertSpace::new(6).unwrap();
        let r = verify(
            &PulseProgram::new(vec![]),
            &OperatorExpr::<f64>::zero(),
            1.0,
            s,
            &opts(),
        )
        .unwrap();
        assert!(r.measured_error < 1e-14);
    }

    #[test]
    fn compilation_is_deterministic() {
        let target = OperatorExpr::<f64>::parse("I 1 2 0 0.5\nHERMITIZE\n").unwrap();
        let (a, _) = synthesize(&target, 0.05, 0.01, 1, &opts()).unwrap();
        let (b, _) = synthesize(&target, 0.05, 0.01, 1, &opts()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn non_hermitian_target_rejected() {
        let target = OperatorExpr::<f64>::parse("I 1 0 1 0\n").unwrap();
        assert!(matches!(lower(&target, 1, &trap()), Err(Error::NotRealizable(_))));
    }
}
