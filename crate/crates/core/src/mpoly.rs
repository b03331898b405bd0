//! Sparse multivariate polynomials over a prime field, plus a univariate view.
//!
//! A [`MultiPoly`] is kept in sparse normal form: no stored coefficient is
//! zero and no monomial stores a zero exponent, so structural equality is
//! polynomial equality.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{sample_uniform, Fe, Modulus};

/// Variable identifier (`x1` is `1`).
pub type Var = u32;

/// Partial assignment of variables to field elements.
pub type Substitution = BTreeMap<Var, Fe>;

/// Builds a substitution from `(variable, residue)` pairs.
pub fn subst(m: Modulus, pairs: &[(Var, u64)]) -> Substitution {
    pairs.iter().map(|&(v, x)| (v, m.elem(x))).collect()
}

/// `rho ++ sigma`: `rho` updated with `sigma` (entries of `sigma` win).
pub fn override_with(rho: &Substitution, sigma: &Substitution) -> Substitution {
    let mut out = rho.clone();
    out.extend(sigma.iter().map(|(&k, &v)| (k, v)));
    out
}

/// A power product `x_i^e_i` with only positive exponents stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(BTreeMap::from([(v, 1)]))
    }

    /// Builds a monomial, dropping zero exponents and merging repeated variables.
    pub fn from_exponents<I: IntoIterator<Item = (Var, u32)>>(exps: I) -> Self {
        let mut map = BTreeMap::new();
        for (v, e) in exps {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Monomial(map)
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.get(&v).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.0.iter().map(|(&v, &e)| (v, e))
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.keys().copied()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

impl Ord for Monomial {
    /// Graded order: total degree first, then exponent vectors compared
    /// lexicographically in ascending variable order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let mut a = self.0.iter().peekable();
            let mut b = other.0.iter().peekable();
            loop {
                match (a.peek(), b.peek()) {
                    (None, None) => return Ordering::Equal,
                    // the side with no variable left has exponent 0 at the other's next var
                    (None, Some(_)) => return Ordering::Less,
                    (Some(_), None) => return Ordering::Greater,
                    (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(vb) {
                        Ordering::Less => return Ordering::Greater,
                        Ordering::Greater => return Ordering::Less,
                        Ordering::Equal => {
                            if ea != eb {
                                return ea.cmp(eb);
                            }
                            a.next();
                            b.next();
                        }
                    },
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in self.exponents() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{v}")?;
            } else {
                write!(f, "x{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Coefficient picked up by `m` under `sigma`: the product of `sigma(v)^m(v)`
/// over the substituted variables.
pub fn inst_mon_coeff(m: &Monomial, sigma: &Substitution, modulus: Modulus) -> Result<Fe> {
    let mut c = modulus.one();
    for (v, e) in m.exponents() {
        if let Some(&x) = sigma.get(&v) {
            c = c.checked_mul(x.pow(e as u64))?;
        }
    }
    Ok(c)
}

/// What remains of `m` once the substituted variables are removed.
pub fn inst_mon_resid(m: &Monomial, sigma: &Substitution) -> Monomial {
    Monomial(m.0.iter().filter(|(v, _)| !sigma.contains_key(v)).map(|(&v, &e)| (v, e)).collect())
}

/// Sparse multivariate polynomial over `F_p`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    modulus: Modulus,
    terms: BTreeMap<Monomial, Fe>,
}

impl MultiPoly {
    pub fn zero(modulus: Modulus) -> Self {
        MultiPoly { modulus, terms: BTreeMap::new() }
    }

    pub fn constant(c: Fe) -> Self {
        Self::monomial(c, Monomial::one())
    }

    pub fn var(modulus: Modulus, v: Var) -> Self {
        Self::monomial(modulus.one(), Monomial::var(v))
    }

    pub fn monomial(c: Fe, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { modulus: c.modulus(), terms }
    }

    /// Sums the given terms into canonical form.
    pub fn from_terms<I>(modulus: Modulus, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Fe)>,
    {
        let mut p = MultiPoly::zero(modulus);
        for (m, c) in terms {
            if c.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus.value(), c.modulus().value()));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: Fe) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Terms in canonical (ascending graded) order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, Fe)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Fe {
        self.terms.get(m).copied().unwrap_or(self.modulus.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Union of the monomial supports.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// Largest monomial degree; 0 for the zero polynomial and constants.
    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree() as usize).max().unwrap_or(0)
    }

    /// Constant value of a polynomial without variables.
    pub fn as_constant(&self) -> Option<Fe> {
        match self.terms.len() {
            0 => Some(self.modulus.zero()),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    fn check_modulus(&self, other: Modulus) -> Result<()> {
        if self.modulus == other {
            Ok(())
        } else {
            Err(Error::ModulusMismatch(self.modulus.value(), other.value()))
        }
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_modulus(other.modulus)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly { modulus: self.modulus, terms: self.terms.iter().map(|(m, &c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: Fe) -> Result<MultiPoly> {
        self.check_modulus(k.modulus())?;
        if k.is_zero() {
            return Ok(MultiPoly::zero(self.modulus));
        }
        Ok(MultiPoly { modulus: self.modulus, terms: self.terms.iter().map(|(m, &c)| (m.clone(), c * k)).collect() })
    }

    fn check_subst(&self, sigma: &Substitution) -> Result<()> {
        for x in sigma.values() {
            self.check_modulus(x.modulus())?;
        }
        Ok(())
    }

    /// Full evaluation; every variable of `self` must be assigned.
    pub fn eval(&self, sigma: &Substitution) -> Result<Fe> {
        self.check_subst(sigma)?;
        let mut acc = self.modulus.zero();
        for (m, c) in self.terms() {
            let mut t = c;
            for (v, e) in m.exponents() {
                let x = sigma.get(&v).ok_or(Error::UncoveredVariable(v))?;
                t *= x.pow(e as u64);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Partial evaluation: substitutes the assigned variables and regroups
    /// terms by their residual monomials.
    pub fn inst(&self, sigma: &Substitution) -> Result<MultiPoly> {
        self.check_subst(sigma)?;
        let mut out = MultiPoly::zero(self.modulus);
        for (m, c) in self.terms() {
            let k = inst_mon_coeff(m, sigma, self.modulus)?;
            out.add_term(inst_mon_resid(m, sigma), c * k);
        }
        Ok(out)
    }

    /// Sum over `h` of `eval(self, [v -> h])` for a polynomial univariate in `v`.
    pub fn sum_over(&self, v: Var, h: &[Fe]) -> Result<Fe> {
        let mut acc = self.modulus.zero();
        for &x in h {
            acc = acc.checked_add(self.eval(&Substitution::from([(v, x)]))?)?;
        }
        Ok(acc)
    }

    /// Univariate view of a polynomial whose variables lie in `{v}`.
    pub fn to_uni(&self, v: Var) -> Result<UniPoly> {
        let extra: Vec<Var> = self.vars().into_iter().filter(|&w| w != v).collect();
        if !extra.is_empty() {
            return Err(Error::NotUnivariate { var: v, extra });
        }
        let coeffs = self.terms().map(|(m, c)| (m.exponent(v), c)).collect();
        Ok(UniPoly { modulus: self.modulus, coeffs })
    }

    pub fn from_uni(q: &UniPoly, v: Var) -> MultiPoly {
        MultiPoly {
            modulus: q.modulus,
            terms: q.coeffs.iter().map(|(&e, &c)| (Monomial::from_exponents([(v, e)]), c)).collect(),
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (m.is_one(), c.value()) {
                (true, _) => write!(f, "{c}")?,
                (false, 1) => write!(f, "{m}")?,
                (false, _) => write!(f, "{c}*{m}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self, self.modulus)
    }
}

/// Univariate polynomial as a sparse exponent -> coefficient map.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UniPoly {
    modulus: Modulus,
    coeffs: BTreeMap<u32, Fe>,
}

impl UniPoly {
    pub fn zero(modulus: Modulus) -> Self {
        UniPoly { modulus, coeffs: BTreeMap::new() }
    }

    /// From residues `c0, c1, ...` (lowest degree first).
    pub fn from_dense(modulus: Modulus, coeffs: &[u64]) -> Self {
        UniPoly {
            modulus,
            coeffs: coeffs
                .iter()
                .enumerate()
                .map(|(e, &c)| (e as u32, modulus.elem(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// `x - a`
    pub fn linear_root(a: Fe) -> Self {
        let mut coeffs = BTreeMap::from([(1, a.modulus().one())]);
        if !a.is_zero() {
            coeffs.insert(0, -a);
        }
        UniPoly { modulus: a.modulus(), coeffs }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn coeff(&self, e: u32) -> Fe {
        self.coeffs.get(&e).copied().unwrap_or(self.modulus.zero())
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (u32, Fe)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest stored exponent; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    fn dense(&self) -> Vec<Fe> {
        let mut d = vec![self.modulus.zero(); self.degree() as usize + 1];
        for (&e, &c) in &self.coeffs {
            d[e as usize] = c;
        }
        d
    }

    fn from_dense_fe(modulus: Modulus, d: &[Fe]) -> Self {
        UniPoly {
            modulus,
            coeffs: d.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(e, &c)| (e as u32, c)).collect(),
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, a: Fe) -> Result<Fe> {
        if a.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus.value(), a.modulus().value()));
        }
        Ok(self.dense().iter().rev().fold(self.modulus.zero(), |acc, &c| acc * a + c))
    }

    pub fn add(&self, other: &UniPoly) -> Result<UniPoly> {
        if other.modulus != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus.value(), other.modulus.value()));
        }
        let n = self.degree().max(other.degree()) as usize + 1;
        let (a, b) = (self.dense(), other.dense());
        let z = self.modulus.zero();
        let sum: Vec<Fe> = (0..n).map(|i| *a.get(i).unwrap_or(&z) + *b.get(i).unwrap_or(&z)).collect();
        Ok(Self::from_dense_fe(self.modulus, &sum))
    }

    pub fn scale(&self, k: Fe) -> UniPoly {
        UniPoly {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, c * k)).filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    /// Schoolbook product.
    pub fn mul(&self, other: &UniPoly) -> Result<UniPoly> {
        if other.modulus != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus.value(), other.modulus.value()));
        }
        let mut out = BTreeMap::<u32, Fe>::new();
        for (&ea, &ca) in &self.coeffs {
            for (&eb, &cb) in &other.coeffs {
                let slot = out.entry(ea + eb).or_insert(self.modulus.zero());
                *slot += ca * cb;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Ok(UniPoly { modulus: self.modulus, coeffs: out })
    }

    /// Number of `a` in the field with `q(a) = 0`, by exhaustive enumeration.
    pub fn roots_count(&self) -> Result<usize> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut n = 0;
        for a in self.modulus.elements() {
            if self.eval(a)?.is_zero() {
                n += 1;
            }
        }
        Ok(n)
    }

    /// Divides by `x - a`, returning quotient and remainder.
    fn synthetic_division(&self, a: Fe) -> (UniPoly, Fe) {
        let d = self.dense();
        let n = d.len();
        if n == 1 {
            return (UniPoly::zero(self.modulus), d[0]);
        }
        let mut quot = vec![self.modulus.zero(); n - 1];
        let mut carry = self.modulus.zero();
        for i in (1..n).rev() {
            carry = d[i] + carry * a;
            quot[i - 1] = carry;
        }
        let rem = d[0] + carry * a;
        (Self::from_dense_fe(self.modulus, &quot), rem)
    }

    /// Multiplicity of `a` as a root: the largest `k` with `(x - a)^k | q`.
    pub fn root_order(&self, a: Fe) -> Result<u32> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if a.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus.value(), a.modulus().value()));
        }
        let mut q = self.clone();
        let mut k = 0;
        loop {
            let (quot, rem) = q.synthetic_division(a);
            if !rem.is_zero() {
                return Ok(k);
            }
            k += 1;
            q = quot;
        }
    }
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", MultiPoly::from_uni(self, 0), self.modulus)
    }
}

/// Shape of randomly generated polynomials.
#[derive(Clone, Debug)]
pub struct RandomPolyParams {
    /// Variables that may appear.
    pub vars: Vec<Var>,
    /// Bound on each monomial's total degree.
    pub max_degree: u32,
    /// Bound on the number of terms drawn (before cancellation).
    pub max_terms: usize,
    /// Probability of returning the zero polynomial outright.
    pub zero_weight: f64,
    /// Probability of returning a constant outright.
    pub constant_weight: f64,
}

impl RandomPolyParams {
    pub fn new(vars: Vec<Var>, max_degree: u32, max_terms: usize) -> Self {
        RandomPolyParams { vars, max_degree, max_terms, zero_weight: 0.05, constant_weight: 0.05 }
    }
}

fn random_monomial<R: Rng + ?Sized>(rng: &mut R, vars: &[Var], max_degree: u32) -> Monomial {
    if vars.is_empty() || max_degree == 0 {
        return Monomial::one();
    }
    let budget = rng.gen_range(0..=max_degree);
    let mut exps = Vec::new();
    for _ in 0..budget {
        exps.push((vars[rng.gen_range(0..vars.len())], 1));
    }
    Monomial::from_exponents(exps)
}

/// Draws a random sparse polynomial with uniform nonzero coefficients.
pub fn random_poly<R: Rng + ?Sized>(m: Modulus, params: &RandomPolyParams, rng: &mut R) -> MultiPoly {
    let roll: f64 = rng.gen();
    if roll < params.zero_weight {
        return MultiPoly::zero(m);
    }
    if roll < params.zero_weight + params.constant_weight {
        return MultiPoly::constant(sample_uniform(m, rng));
    }
    let n = rng.gen_range(1..=params.max_terms.max(1));
    let mut p = MultiPoly::zero(m);
    for _ in 0..n {
        let mono = random_monomial(rng, &params.vars, params.max_degree);
        let c = m.elem(rng.gen_range(1..m.value()));
        p.add_term(mono, c);
    }
    p
}

/// Draws a univariate polynomial in `v` of degree at most `d`.
pub fn random_univariate<R: Rng + ?Sized>(m: Modulus, v: Var, d: u32, rng: &mut R) -> MultiPoly {
    let coeffs: Vec<u64> = (0..=d).map(|_| rng.gen_range(0..m.value())).collect();
    MultiPoly::from_uni(&UniPoly::from_dense(m, &coeffs), v)
}
