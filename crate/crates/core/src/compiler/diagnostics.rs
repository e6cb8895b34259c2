//! Effective-generator extraction and projection onto normal-ordered monomials.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{spin_op, Domain, HilbertSpace, OperatorMatrix, SpinOp};
use crate::pulse::TrapConfig;
use crate::scalar::{Cplx, Real};

use super::expr::{OperatorExpr, Term};
use super::program::PulseProgram;

/// `G` with `U = exp(-i G)` for the program's composed unitary, principal branch.
pub fn effective_generator<T: Real>(
    program: &PulseProgram<T>,
    trap: &TrapConfig<T>,
    space: HilbertSpace,
) -> Result<OperatorMatrix<T>> {
    program.unitary(trap, space)?.generator()
}

/// Infinite-space matrix element `<m| (a^dag)^p a^q |n>`.
fn ladder_element(p: u32, q: u32, m: usize, n: usize) -> f64 {
    let (p, q) = (p as usize, q as usize);
    if n < q || m < p || m - p != n - q {
        return 0.0;
    }
    let k = n - q;
    let mut v = 1.0f64;
    for j in (k + 1)..=n {
        v *= j as f64;
    }
    for j in (k + 1)..=m {
        v *= j as f64;
    }
    v.sqrt()
}

/// Least-squares fit of `op` by normal-ordered monomials of motional degree
/// `<= max_degree`, using only matrix elements between Fock levels
/// `<= fit_levels` so truncation edge effects stay out of the fit.
///
/// Joint-space operators are fitted with all four spin factors, motional
/// operators with the identity factor only.
pub fn project_monomials<T: Real>(
    op: &OperatorMatrix<T>,
    max_degree: u32,
    fit_levels: usize,
) -> Result<OperatorExpr<T>> {
    let (space, spins): (HilbertSpace, Vec<SpinOp>) = match op.domain() {
        Domain::Motion(s) => (s, vec![SpinOp::Identity]),
        Domain::Joint(s) => (
            s,
            vec![SpinOp::Identity, SpinOp::SigmaPlus, SpinOp::SigmaMinus, SpinOp::SigmaZ],
        ),
        Domain::Spin => return Err(Error::InvalidSpace("projection needs a motional mode".into())),
    };
    if fit_levels > space.n_max() {
        return Err(Error::SpaceTooSmall {
            required: fit_levels,
            n_max: space.n_max(),
        });
    }
    let joint = matches!(op.domain(), Domain::Joint(_));
    let spin_count = if joint { 2 } else { 1 };
    let levels = fit_levels + 1;

    let mut monos = Vec::new();
    for &s in &spins {
        for d in 0..=max_degree {
            for p in 0..=d {
                monos.push((s, p, d - p));
            }
        }
    }
    let spin_mats: Vec<OperatorMatrix<f64>> = spins.iter().map(|&s| spin_op(s)).collect();

    let rows = (spin_count * levels).pow(2);
    let mut a = DMatrix::<Cplx<f64>>::zeros(rows, monos.len());
    let mut b = DVector::<Cplx<f64>>::zeros(rows);
    let index = |s: usize, n: usize| if joint { s * space.levels() + n } else { n };
    let mut r = 0;
    for s1 in 0..spin_count {
        for m in 0..levels {
            for s2 in 0..spin_count {
                for n in 0..levels {
                    let v = op.entry(index(s1, m), index(s2, n));
                    b[r] = Cplx::new(v.re.to_f64_lossy(), v.im.to_f64_lossy());
                    for (c, &(s, p, q)) in monos.iter().enumerate() {
                        let si = spins.iter().position(|&x| x == s).unwrap();
                        let sv = if joint {
                            spin_mats[si].entry(s1, s2)
                        } else {
                            Cplx::new(1.0, 0.0)
                        };
                        a[(r, c)] = sv * ladder_element(p, q, m, n);
                    }
                    r += 1;
                }
            }
        }
    }
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Numerical(format!("monomial projection failed: {e}")))?;
    let terms = monos
        .iter()
        .zip(x.iter())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(&(s, p, q), c)| Term::new(s, p, q, Cplx::new(T::lit(c.re), T::lit(c.im))))
        .collect();
    Ok(OperatorExpr::new(terms, false))
}
