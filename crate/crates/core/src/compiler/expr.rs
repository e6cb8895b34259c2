//! Sum-of-terms operator IR with normal-ordered symbolic algebra.
//!
//! A term is `coeff * S * (a^dagger)^p a^q` with `S` one of `I`, `sigma_+`,
//! `sigma_-`, `sigma_z` (with `sigma_± = sigma_x ± i sigma_y`). Products are
//! reduced to normal order with
//!
//! ```text
//! a^q (a^dagger)^r = sum_k C(q,k) C(r,k) k! (a^dagger)^(r-k) a^(q-k)
//! ```
//!
//! so every expression has a unique canonical form keyed by `(S, p, q)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{embed, monomial_op, spin_op, Domain, HilbertSpace, OperatorMatrix, SpinOp};
use crate::scalar::{Cplx, Real};

/// Canonical key of a term: spin factor and normal-ordered exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub spin: SpinOp,
    /// Power of `a^dagger`.
    pub p: u32,
    /// Power of `a`.
    pub q: u32,
}

impl Monomial {
    pub fn new(spin: SpinOp, p: u32, q: u32) -> Self {
        Self { spin, p, q }
    }

    /// Motional degree `p + q`.
    pub fn degree(&self) -> u32 {
        self.p + self.q
    }

    pub fn adjoint(&self) -> Self {
        let spin = match self.spin {
            SpinOp::SigmaPlus => SpinOp::SigmaMinus,
            SpinOp::SigmaMinus => SpinOp::SigmaPlus,
            s => s,
        };
        Self {
            spin,
            p: self.q,
            q: self.p,
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.adjoint() == *self
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spin = match self.spin {
            SpinOp::Identity => "I",
            SpinOp::SigmaPlus => "SP",
            SpinOp::SigmaMinus => "SM",
            SpinOp::SigmaZ => "SZ",
        };
        write!(f, "{spin}")?;
        match self.p {
            0 => {}
            1 => write!(f, " adag")?,
            p => write!(f, " adag^{p}")?,
        }
        match self.q {
            0 => {}
            1 => write!(f, " a")?,
            q => write!(f, " a^{q}")?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<T: Real> {
    pub spin: SpinOp,
    pub p: u32,
    pub q: u32,
    pub coeff: Cplx<T>,
}

impl<T: Real> Term<T> {
    pub fn new(spin: SpinOp, p: u32, q: u32, coeff: Cplx<T>) -> Self {
        Self { spin, p, q, coeff }
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::new(self.spin, self.p, self.q)
    }
}

/// Canonical coefficient map.
pub type Canonical<T> = BTreeMap<Monomial, Cplx<T>>;

/// Operator expression; with `hermitize` set it denotes `terms + h.c.`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr<T: Real> {
    pub terms: Vec<Term<T>>,
    pub hermitize: bool,
}

impl<T: Real> Default for OperatorExpr<T> {
    fn default() -> Self {
        Self::zero()
    }
}

fn czero<T: Real>() -> Cplx<T> {
    Cplx::new(T::zero(), T::zero())
}

fn creal<T: Real>(x: T) -> Cplx<T> {
    Cplx::new(x, T::zero())
}

/// Product of two spin factors as a linear combination of spin factors.
fn spin_product<T: Real>(a: SpinOp, b: SpinOp) -> Vec<(SpinOp, Cplx<T>)> {
    use SpinOp::*;
    let one = creal(T::one());
    let two = creal(T::lit(2.0));
    match (a, b) {
        (Identity, x) | (x, Identity) => vec![(x, one)],
        (SigmaZ, SigmaZ) => vec![(Identity, one)],
        (SigmaZ, SigmaPlus) => vec![(SigmaPlus, one)],
        (SigmaPlus, SigmaZ) => vec![(SigmaPlus, -one)],
        (SigmaZ, SigmaMinus) => vec![(SigmaMinus, -one)],
        (SigmaMinus, SigmaZ) => vec![(SigmaMinus, one)],
        (SigmaPlus, SigmaPlus) | (SigmaMinus, SigmaMinus) => vec![],
        (SigmaPlus, SigmaMinus) => vec![(Identity, two), (SigmaZ, two)],
        (SigmaMinus, SigmaPlus) => vec![(Identity, two), (SigmaZ, -two)],
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normal-ordered expansion of `(a^dag)^p a^q (a^dag)^r a^s`.
fn motion_product(p: u32, q: u32, r: u32, s: u32) -> Vec<(u32, u32, f64)> {
    (0..=q.min(r))
        .map(|k| {
            let w = binomial(q, k) * binomial(r, k) * (1..=k).fold(1.0, |acc, i| acc * i as f64);
            (p + r - k, q + s - k, w)
        })
        .collect()
}

impl<T: Real> OperatorExpr<T> {
    pub fn new(terms: Vec<Term<T>>, hermitize: bool) -> Self {
        Self { terms, hermitize }
    }

    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            hermitize: false,
        }
    }

    /// Single term `coeff * spin * (a^dag)^p a^q`.
    pub fn term(spin: SpinOp, p: u32, q: u32, coeff: Cplx<T>) -> Self {
        Self::new(vec![Term::new(spin, p, q, coeff)], false)
    }

    /// Single term plus its Hermitian conjugate.
    pub fn hermitian_term(spin: SpinOp, p: u32, q: u32, coeff: Cplx<T>) -> Self {
        Self::new(vec![Term::new(spin, p, q, coeff)], true)
    }

    pub fn from_canonical(map: &Canonical<T>) -> Self {
        let terms = map
            .iter()
            .filter(|(_, c)| c.norm_sqr() > T::zero())
            .map(|(m, c)| Term::new(m.spin, m.p, m.q, *c))
            .collect();
        Self::new(terms, false)
    }

    /// Explicit term list, including the conjugates when `hermitize` is set.
    pub fn expanded_terms(&self) -> Vec<Term<T>> {
        let mut out = self.terms.clone();
        if self.hermitize {
            for t in &self.terms {
                let m = t.monomial().adjoint();
                out.push(Term::new(m.spin, m.p, m.q, t.coeff.conj()));
            }
        }
        out
    }

    /// Canonical map with like terms combined and exact zeros removed.
    pub fn canonical(&self) -> Canonical<T> {
        let mut map = Canonical::new();
        for t in self.expanded_terms() {
            *map.entry(t.monomial()).or_insert_with(czero) += t.coeff;
        }
        map.retain(|_, c| c.norm_sqr() > T::zero());
        map
    }

    /// Canonical form as a new expression.
    pub fn normalized(&self) -> Self {
        Self::from_canonical(&self.canonical())
    }

    pub fn coefficient(&self, m: Monomial) -> Cplx<T> {
        self.canonical().get(&m).copied().unwrap_or_else(czero)
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().is_empty()
    }

    /// Highest motional order `max(p, q)` over all terms.
    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.p.max(t.q)).max().unwrap_or(0)
    }

    /// Highest motional degree `p + q`.
    pub fn max_degree(&self) -> u32 {
        self.canonical().keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        let map: Canonical<T> = self
            .canonical()
            .into_iter()
            .map(|(m, c)| (m.adjoint(), c.conj()))
            .collect();
        Self::from_canonical(&map)
    }

    pub fn scale(&self, factor: Cplx<T>) -> Self {
        let map: Canonical<T> = self.canonical().into_iter().map(|(m, c)| (m, c * factor)).collect();
        Self::from_canonical(&map)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map = self.canonical();
        for (m, c) in other.canonical() {
            *map.entry(m).or_insert_with(czero) += c;
        }
        map.retain(|_, c| c.norm_sqr() > T::zero());
        Self::from_canonical(&map)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(creal(-T::one())))
    }

    /// Normal-ordered operator product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        let lhs = self.canonical();
        let rhs = other.canonical();
        let mut map = Canonical::new();
        for (ma, ca) in &lhs {
            for (mb, cb) in &rhs {
                let spins = spin_product::<T>(ma.spin, mb.spin);
                if spins.is_empty() {
                    continue;
                }
                let motion = motion_product(ma.p, ma.q, mb.p, mb.q);
                for (s, cs) in &spins {
                    for &(p, q, w) in &motion {
                        let c = *ca * *cb * *cs * creal(T::lit(w));
                        *map.entry(Monomial::new(*s, p, q)).or_insert_with(czero) += c;
                    }
                }
            }
        }
        map.retain(|_, c| c.norm_sqr() > T::zero());
        Self::from_canonical(&map)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest coefficient modulus in canonical form.
    pub fn max_coeff(&self) -> T {
        self.canonical()
            .values()
            .fold(T::zero(), |m, c| m.max(c.norm_sqr().sqrt()))
    }

    /// Symbolic Hermiticity: canonical form equals that of the adjoint
    /// within `tol` relative to the largest coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_coeff().max(T::one());
        let diff = self.sub(&self.adjoint());
        diff.max_coeff() <= T::lit(tol) * scale
    }

    /// Keeps the terms of motional degree `>= min_degree`.
    pub fn filter_degree(&self, min_degree: u32) -> Self {
        let mut map = self.canonical();
        map.retain(|m, _| m.degree() >= min_degree);
        Self::from_canonical(&map)
    }

    /// Drops canonical coefficients below `tol` in modulus.
    pub fn chop(&self, tol: T) -> Self {
        let mut map = self.canonical();
        map.retain(|_, c| c.norm_sqr().sqrt() > tol);
        Self::from_canonical(&map)
    }

    /// Converts every coefficient to another scalar type.
    pub fn cast<U: Real>(&self) -> OperatorExpr<U> {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    Term::new(
                        t.spin,
                        t.p,
                        t.q,
                        Cplx::new(U::lit(t.coeff.re.to_f64_lossy()), U::lit(t.coeff.im.to_f64_lossy())),
                    )
                })
                .collect(),
            hermitize: self.hermitize,
        }
    }

    /// Parses the line-oriented text format (see [`OperatorExpr::to_text`]).
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut hermitize = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(content);
            if tokens.is_empty() {
                continue;
            }
            let err = |col: usize, message: String| Error::Parse {
                line: line_no,
                column: col,
                message,
            };
            if tokens[0].1.eq_ignore_ascii_case("HERMITIZE") {
                if tokens.len() > 1 {
                    return Err(err(tokens[1].0, "HERMITIZE takes no arguments".into()));
                }
                hermitize = true;
                continue;
            }
            let spin = match tokens[0].1 {
                "I" => SpinOp::Identity,
                "SP" => SpinOp::SigmaPlus,
                "SM" => SpinOp::SigmaMinus,
                "SZ" => SpinOp::SigmaZ,
                other => {
                    return Err(err(
                        tokens[0].0,
                        format!("unknown spin factor `{other}` (expected I, SP, SM, SZ or HERMITIZE)"),
                    ))
                }
            };
            if tokens.len() != 5 {
                let col = tokens.get(5).map(|t| t.0).unwrap_or(content.trim_end().len() + 1);
                return Err(err(
                    col,
                    format!("expected `SPIN p q RE IM` (5 fields), found {}", tokens.len()),
                ));
            }
            let exponent = |k: usize| -> Result<u32> {
                tokens[k]
                    .1
                    .parse::<u32>()
                    .map_err(|_| err(tokens[k].0, format!("invalid exponent `{}`", tokens[k].1)))
            };
            let number = |k: usize| -> Result<T> {
                let v: f64 = tokens[k]
                    .1
                    .parse()
                    .map_err(|_| err(tokens[k].0, format!("invalid number `{}`", tokens[k].1)))?;
                if !v.is_finite() {
                    return Err(err(tokens[k].0, format!("non-finite number `{}`", tokens[k].1)));
                }
                Ok(T::lit(v))
            };
            let p = exponent(1)?;
            let q = exponent(2)?;
            let re = number(3)?;
            let im = number(4)?;
            terms.push(Term::new(spin, p, q, Cplx::new(re, im)));
        }
        Ok(Self::new(terms, hermitize))
    }

    /// One `SPIN p q RE IM` line per term, then `HERMITIZE` if set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let spin = match t.spin {
                SpinOp::Identity => "I",
                SpinOp::SigmaPlus => "SP",
                SpinOp::SigmaMinus => "SM",
                SpinOp::SigmaZ => "SZ",
            };
            out.push_str(&format!("{spin} {} {} {} {}\n", t.p, t.q, t.coeff.re, t.coeff.im));
        }
        if self.hermitize {
            out.push_str("HERMITIZE\n");
        }
        out
    }
}

impl<T: Real> fmt::Display for OperatorExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let map = self.canonical();
        if map.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in map.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i) {m}", c.re, c.im)?;
        }
        Ok(())
    }
}

/// Whitespace tokens with their 1-based starting column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Dense matrix of an expression on the joint space.
pub fn expr_to_matrix<T: Real>(expr: &OperatorExpr<T>, space: HilbertSpace) -> Result<OperatorMatrix<T>> {
    space.require_n_max(expr.max_order() as usize + 2)?;
    let mut acc = OperatorMatrix::zeros(Domain::Joint(space));
    for (m, c) in expr.canonical() {
        let motion = monomial_op::<T>(space, m.p, m.q);
        let term = embed(&spin_op(m.spin), &motion)?.scale(c);
        acc = acc.add(&term)?;
    }
    Ok(acc.resolve_flags())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{lowering_op, Flag};

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    #[test]
    fn number_operator_term() {
        let s = HilbertSpace::new(5).unwrap();
        let e = OperatorExpr::term(SpinOp::Identity, 1, 1, c(1.0, 0.0));
        let m = expr_to_matrix(&e, s).unwrap();
        for spin in 0..2 {
            for n in 0..=5 {
                let i = spin * 6 + n;
                assert!((m.entry(i, i) - c(n as f64, 0.0)).norm() < 1e-14);
            }
        }
        assert_eq!(m.hermitian_flag(), Flag::Yes);
    }

    #[test]
    fn hermitized_red_coupling() {
        // direct assembly oracle: Omega (sigma_+ ⊗ a + sigma_- ⊗ a^dagger)
        let s = HilbertSpace::new(4).unwrap();
        let omega = 0.7;
        let e = OperatorExpr::hermitian_term(SpinOp::SigmaPlus, 0, 1, c(omega, 0.0));
        let m = expr_to_matrix(&e, s).unwrap();
        let a = lowering_op::<f64>(s);
        let x = embed(&spin_op(SpinOp::SigmaPlus), &a).unwrap();
        let want = x.add(&x.adjoint()).unwrap().scale_real(omega);
        assert!(m.sub(&want).unwrap().spectral_norm() < 1e-14);
        assert_eq!(m.hermitian_flag(), Flag::Yes);
    }

    #[test]
    fn empty_expression_is_zero_matrix() {
        let s = HilbertSpace::new(3).unwrap();
        let m = expr_to_matrix(&OperatorExpr::<f64>::zero(), s).unwrap();
        assert_eq!(m.spectral_norm(), 0.0);
    }

    #[test]
    fn order_must_fit_space() {
        let s = HilbertSpace::new(4).unwrap();
        let e = OperatorExpr::term(SpinOp::Identity, 3, 0, c(1.0, 0.0));
        assert!(matches!(expr_to_matrix(&e, s), Err(Error::SpaceTooSmall { .. })));
    }

    #[test]
    fn canonical_commutation_relation() {
        let a = OperatorExpr::term(SpinOp::Identity, 0, 1, c(1.0, 0.0));
        let ad = OperatorExpr::term(SpinOp::Identity, 1, 0, c(1.0, 0.0));
        let comm = a.commutator(&ad);
        assert_eq!(comm.canonical().len(), 1);
        assert_eq!(comm.coefficient(Monomial::new(SpinOp::Identity, 0, 0)), c(1.0, 0.0));
    }

    #[test]
    fn pauli_algebra() {
        let sz = OperatorExpr::term(SpinOp::SigmaZ, 0, 0, c(1.0, 0.0));
        let sp = OperatorExpr::term(SpinOp::SigmaPlus, 0, 0, c(1.0, 0.0));
        let comm = sz.commutator(&sp);
        assert_eq!(comm, sp.scale(c(2.0, 0.0)));
        let sm = sp.adjoint();
        // [sigma_+, sigma_-] = 4 sigma_z in the sigma_x ± i sigma_y convention
        assert_eq!(sp.commutator(&sm), sz.scale(c(4.0, 0.0)));
    }

    #[test]
    fn cubic_commutator_matches_hand_expansion() {
        // [a^3, adag^2] = 6 adag a^2 + 6 a
        let a3 = OperatorExpr::term(SpinOp::Identity, 0, 3, c(1.0, 0.0));
        let ad2 = OperatorExpr::term(SpinOp::Identity, 2, 0, c(1.0, 0.0));
        let comm = a3.commutator(&ad2);
        let mut want = Canonical::new();
        want.insert(Monomial::new(SpinOp::Identity, 1, 2), c(6.0, 0.0));
        want.insert(Monomial::new(SpinOp::Identity, 0, 1), c(6.0, 0.0));
        assert_eq!(comm.canonical(), want);
    }

    #[test]
    fn symbolic_product_matches_matrices_below_truncation() {
        let s = HilbertSpace::new(12).unwrap();
        let x = OperatorExpr::new(
            vec![
                Term::new(SpinOp::SigmaPlus, 1, 2, c(0.3, -0.2)),
                Term::new(SpinOp::SigmaZ, 0, 1, c(1.1, 0.0)),
            ],
            true,
        );
        let y = OperatorExpr::new(
            vec![
                Term::new(SpinOp::Identity, 2, 1, c(0.0, 0.5)),
                Term::new(SpinOp::SigmaMinus, 1, 0, c(0.4, 0.4)),
            ],
            false,
        );
        let sym = expr_to_matrix(&x.mul(&y), s).unwrap();
        let num = expr_to_matrix(&x, s)
            .unwrap()
            .mul(&expr_to_matrix(&y, s).unwrap())
            .unwrap();
        // compare away from the truncation edge
        let levels = s.levels();
        for si in 0..2 {
            for sj in 0..2 {
                for i in 0..6 {
                    for j in 0..6 {
                        let (r, cidx) = (si * levels + i, sj * levels + j);
                        assert!((sym.entry(r, cidx) - num.entry(r, cidx)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let text = "# cubic target\nI 1 2 0 0.25\n\nSZ 0 0 -1.5 0\nHERMITIZE\n";
        let e = OperatorExpr::<f64>::parse(text).unwrap();
        assert!(e.hermitize);
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.terms[0].coeff, c(0.0, 0.25));
        let again = OperatorExpr::<f64>::parse(&e.to_text()).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = OperatorExpr::<f64>::parse("I 1 1 1 0\nSX 0 0 1 0\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                column: 1,
                message: "unknown spin factor `SX` (expected I, SP, SM, SZ or HERMITIZE)".into()
            }
        );
        match OperatorExpr::<f64>::parse("  SP 1 x 1 0").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 8)),
            e => panic!("{e}"),
        }
        match OperatorExpr::<f64>::parse("SP 1 1 1").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("{e}"),
        }
        match OperatorExpr::<f64>::parse("I 0 0 1 0\nHERMITIZE now").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 11)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn hermiticity_check() {
        let h = OperatorExpr::hermitian_term(SpinOp::Identity, 1, 2, c(0.0, 0.3));
        assert!(h.is_hermitian(1e-12));
        let nh = OperatorExpr::term(SpinOp::Identity, 1, 2, c(0.0, 0.3));
        assert!(!nh.is_hermitian(1e-12));
        let sz = OperatorExpr::term(SpinOp::SigmaZ, 2, 2, c(1.0, 0.0));
        assert!(sz.is_hermitian(1e-12));
        let bad = OperatorExpr::term(SpinOp::SigmaZ, 2, 2, c(1.0, 1.0));
        assert!(!bad.is_hermitian(1e-12));
    }

    #[test]
    fn monomial_display() {
        assert_eq!(Monomial::new(SpinOp::Identity, 1, 2).to_string(), "I adag a^2");
        assert_eq!(Monomial::new(SpinOp::SigmaZ, 0, 0).to_string(), "SZ");
        assert_eq!(Monomial::new(SpinOp::SigmaPlus, 5, 0).to_string(), "SP adag^5");
    }
}
