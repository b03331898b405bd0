//! The abstract polynomial structure the protocol runs over, substitution
//! enumeration, and an executable conformance kit for the structure laws.
//!
//! Any type implementing [`PolynomialStructure`] can be plugged into the
//! protocol. The laws in [`Law`] and [`Lemma`] are what the protocol's
//! security relies on; [`check_axiom`] and [`check_derived_lemma`] test them
//! on randomly sampled inputs and report the first counterexample found.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::doc::poly_to_json;
use crate::error::{Error, Result};
use crate::field::{sample_uniform, Fe, Modulus, SeededRng};
use crate::mpoly::{self, MultiPoly, RandomPolyParams, Var};

/// Substitution type of a structure: a finite map from variables to arguments.
pub type Subst<S> = BTreeMap<<S as PolynomialStructure>::Var, <S as PolynomialStructure>::Arg>;

/// Operations a polynomial-like type must provide to run the sumcheck
/// protocol over it.
///
/// `Arg` is the argument type (and the verifier's randomness universe);
/// `Value` is the result type of evaluation. Polynomials and values each
/// form an additive commutative monoid.
pub trait PolynomialStructure: Clone + Debug + PartialEq + Eq + Send + Sync {
    type Var: Ord + Clone + Debug + Send + Sync;
    type Arg: Clone + Eq + Debug + Send + Sync;
    type Value: Clone + Eq + Debug + Send + Sync;
    type Poly: Clone + Eq + Debug + Send + Sync;

    fn zero(&self) -> Self::Poly;
    fn add(&self, p: &Self::Poly, q: &Self::Poly) -> Result<Self::Poly>;
    fn value_zero(&self) -> Self::Value;
    fn value_add(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;

    fn vars(&self, p: &Self::Poly) -> BTreeSet<Self::Var>;
    fn deg(&self, p: &Self::Poly) -> usize;
    fn eval(&self, p: &Self::Poly, sigma: &Subst<Self>) -> Result<Self::Value>;
    fn inst(&self, p: &Self::Poly, sigma: &Subst<Self>) -> Result<Self::Poly>;

    /// Every element of the (finite) argument type, in a fixed order.
    fn universe(&self) -> Vec<Self::Arg>;

    fn universe_size(&self) -> usize {
        self.universe().len()
    }

    /// Rejects instance components that do not belong to this structure.
    fn validate_instance(&self, _h: &[Self::Arg], _p: &Self::Poly, _v: &Self::Value) -> Result<()> {
        Ok(())
    }

    fn sum_polys<'a, I>(&self, polys: I) -> Result<Self::Poly>
    where
        I: IntoIterator<Item = &'a Self::Poly>,
        Self::Poly: 'a,
    {
        polys.into_iter().try_fold(self.zero(), |acc, p| self.add(&acc, p))
    }

    fn sum_values<I>(&self, values: I) -> Result<Self::Value>
    where
        I: IntoIterator<Item = Self::Value>,
    {
        values.into_iter().try_fold(self.value_zero(), |acc, v| self.value_add(&acc, &v))
    }
}

/// Sparse multivariate polynomials over `F_p`; argument and result roles
/// are both the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MPolyStructure {
    modulus: Modulus,
}

impl MPolyStructure {
    pub fn new(modulus: Modulus) -> Self {
        MPolyStructure { modulus }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }
}

impl PolynomialStructure for MPolyStructure {
    type Var = Var;
    type Arg = Fe;
    type Value = Fe;
    type Poly = MultiPoly;

    fn zero(&self) -> MultiPoly {
        MultiPoly::zero(self.modulus)
    }

    fn add(&self, p: &MultiPoly, q: &MultiPoly) -> Result<MultiPoly> {
        p.add(q)
    }

    fn value_zero(&self) -> Fe {
        self.modulus.zero()
    }

    fn value_add(&self, a: &Fe, b: &Fe) -> Result<Fe> {
        a.checked_add(*b)
    }

    fn vars(&self, p: &MultiPoly) -> BTreeSet<Var> {
        p.vars()
    }

    fn deg(&self, p: &MultiPoly) -> usize {
        p.total_degree()
    }

    fn eval(&self, p: &MultiPoly, sigma: &Subst<Self>) -> Result<Fe> {
        p.eval(sigma)
    }

    fn inst(&self, p: &MultiPoly, sigma: &Subst<Self>) -> Result<MultiPoly> {
        p.inst(sigma)
    }

    fn universe(&self) -> Vec<Fe> {
        self.modulus.elements().collect()
    }

    fn universe_size(&self) -> usize {
        self.modulus.order()
    }

    fn validate_instance(&self, h: &[Fe], p: &MultiPoly, v: &Fe) -> Result<()> {
        let m = self.modulus.value();
        let mismatch = |other: Modulus| Error::ModulusMismatch(m, other.value());
        if p.modulus() != self.modulus {
            return Err(mismatch(p.modulus()));
        }
        if v.modulus() != self.modulus {
            return Err(mismatch(v.modulus()));
        }
        if let Some(x) = h.iter().find(|x| x.modulus() != self.modulus) {
            return Err(mismatch(x.modulus()));
        }
        Ok(())
    }
}

/// Lazily enumerates every substitution with domain exactly `vars` and
/// values in `h`, odometer style (last variable varies fastest).
#[derive(Clone, Debug)]
pub struct Substitutions<V, A> {
    vars: Vec<V>,
    h: Vec<A>,
    digits: Vec<usize>,
    done: bool,
}

impl<V: Ord + Clone, A: Clone> Iterator for Substitutions<V, A> {
    type Item = BTreeMap<V, A>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.vars.iter().zip(&self.digits).map(|(v, &d)| (v.clone(), self.h[d].clone())).collect();
        // advance
        let mut i = self.vars.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.h.len() {
                break;
            }
            self.digits[i] = 0;
        }
        Some(item)
    }
}

/// All `|h|^|vars|` substitutions of `vars` into `h`. With no variables this
/// is the single empty substitution, whatever `h` is.
pub fn substitutions<V: Ord + Clone, A: Clone>(vars: &BTreeSet<V>, h: &[A]) -> Result<Substitutions<V, A>> {
    if h.is_empty() && !vars.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    Ok(Substitutions { vars: vars.iter().cloned().collect(), h: h.to_vec(), digits: vec![0; vars.len()], done: false })
}

pub fn enumerate_substitutions<V: Ord + Clone, A: Clone>(vars: &BTreeSet<V>, h: &[A]) -> Result<Vec<BTreeMap<V, A>>> {
    Ok(substitutions(vars, h)?.collect())
}

/// `base^exp` without overflow.
pub fn checked_count(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// All `p^n` tuples over `F_p` in lexicographic order, subject to `budget`.
pub fn enumerate_tuples(n: usize, m: Modulus, budget: u64) -> Result<Vec<Vec<Fe>>> {
    let needed = checked_count(m.order(), n);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let vars: BTreeSet<usize> = (0..n).collect();
    let elems: Vec<Fe> = m.elements().collect();
    Ok(substitutions(&vars, &elems)?.map(|s| s.into_values().collect()).collect())
}

// ---------------------------------------------------------------------------
// Conformance kit

/// Randomized input generation and rendering needed to check the laws on a
/// concrete structure.
pub trait LawSampler: PolynomialStructure {
    /// Finite pool of variables laws draw from (at least two entries).
    fn var_pool(&self) -> Vec<Self::Var>;
    fn random_poly(&self, vars: &[Self::Var], rng: &mut SeededRng) -> Self::Poly;
    /// A polynomial in `x` alone of degree at most `d`.
    fn random_univariate(&self, x: &Self::Var, d: usize, rng: &mut SeededRng) -> Self::Poly;
    fn random_arg(&self, rng: &mut SeededRng) -> Self::Arg;
    /// Largest degree bound used by the roots law.
    fn max_roots_degree(&self) -> usize {
        6
    }

    fn describe(&self) -> serde_json::Value;
    fn render_poly(&self, p: &Self::Poly) -> serde_json::Value;
    fn render_var(&self, v: &Self::Var) -> serde_json::Value;
    fn render_arg(&self, a: &Self::Arg) -> serde_json::Value;
    fn render_value(&self, v: &Self::Value) -> serde_json::Value;

    fn render_subst(&self, s: &Subst<Self>) -> serde_json::Value {
        serde_json::Value::Array(
            s.iter().map(|(k, v)| serde_json::json!([self.render_var(k), self.render_arg(v)])).collect(),
        )
    }

    fn render_vars(&self, vs: &BTreeSet<Self::Var>) -> serde_json::Value {
        serde_json::Value::Array(vs.iter().map(|v| self.render_var(v)).collect())
    }
}

impl LawSampler for MPolyStructure {
    fn var_pool(&self) -> Vec<Var> {
        vec![1, 2, 3, 4]
    }

    fn random_poly(&self, vars: &[Var], rng: &mut SeededRng) -> MultiPoly {
        mpoly::random_poly(self.modulus, &RandomPolyParams::new(vars.to_vec(), 6, 8), rng)
    }

    fn random_univariate(&self, x: &Var, d: usize, rng: &mut SeededRng) -> MultiPoly {
        mpoly::random_univariate(self.modulus, *x, d as u32, rng)
    }

    fn random_arg(&self, rng: &mut SeededRng) -> Fe {
        sample_uniform(self.modulus, rng)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "modulus": self.modulus.value() })
    }

    fn render_poly(&self, p: &MultiPoly) -> serde_json::Value {
        poly_to_json(p)
    }

    fn render_var(&self, v: &Var) -> serde_json::Value {
        (*v).into()
    }

    fn render_arg(&self, a: &Fe) -> serde_json::Value {
        a.value().into()
    }

    fn render_value(&self, v: &Fe) -> serde_json::Value {
        v.value().into()
    }
}

/// Negative control: a structure whose `inst` ignores the substitution.
/// It violates `vars_inst` (and `eval_inst`) and must be caught.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrokenInst<S>(pub S);

impl<S: PolynomialStructure> PolynomialStructure for BrokenInst<S> {
    type Var = S::Var;
    type Arg = S::Arg;
    type Value = S::Value;
    type Poly = S::Poly;

    fn zero(&self) -> S::Poly {
        self.0.zero()
    }
    fn add(&self, p: &S::Poly, q: &S::Poly) -> Result<S::Poly> {
        self.0.add(p, q)
    }
    fn value_zero(&self) -> S::Value {
        self.0.value_zero()
    }
    fn value_add(&self, a: &S::Value, b: &S::Value) -> Result<S::Value> {
        self.0.value_add(a, b)
    }
    fn vars(&self, p: &S::Poly) -> BTreeSet<S::Var> {
        self.0.vars(p)
    }
    fn deg(&self, p: &S::Poly) -> usize {
        self.0.deg(p)
    }
    fn eval(&self, p: &S::Poly, sigma: &Subst<Self>) -> Result<S::Value> {
        self.0.eval(p, sigma)
    }
    fn inst(&self, p: &S::Poly, _sigma: &Subst<Self>) -> Result<S::Poly> {
        Ok(p.clone())
    }
    fn universe(&self) -> Vec<S::Arg> {
        self.0.universe()
    }
}

impl<S: LawSampler> LawSampler for BrokenInst<S> {
    fn var_pool(&self) -> Vec<S::Var> {
        self.0.var_pool()
    }
    fn random_poly(&self, vars: &[S::Var], rng: &mut SeededRng) -> S::Poly {
        self.0.random_poly(vars, rng)
    }
    fn random_univariate(&self, x: &S::Var, d: usize, rng: &mut SeededRng) -> S::Poly {
        self.0.random_univariate(x, d, rng)
    }
    fn random_arg(&self, rng: &mut SeededRng) -> S::Arg {
        self.0.random_arg(rng)
    }
    fn describe(&self) -> serde_json::Value {
        self.0.describe()
    }
    fn render_poly(&self, p: &S::Poly) -> serde_json::Value {
        self.0.render_poly(p)
    }
    fn render_var(&self, v: &S::Var) -> serde_json::Value {
        self.0.render_var(v)
    }
    fn render_arg(&self, a: &S::Arg) -> serde_json::Value {
        self.0.render_arg(a)
    }
    fn render_value(&self, v: &S::Value) -> serde_json::Value {
        self.0.render_value(v)
    }
}

/// The structure axioms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Law {
    VarsFinite,
    VarsZero,
    VarsAdd,
    VarsInst,
    DegZero,
    DegAdd,
    DegInst,
    EvalZero,
    EvalAdd,
    EvalInst,
    Roots,
}

impl Law {
    pub const ALL: [Law; 11] = [
        Law::VarsFinite,
        Law::VarsZero,
        Law::VarsAdd,
        Law::VarsInst,
        Law::DegZero,
        Law::DegAdd,
        Law::DegInst,
        Law::EvalZero,
        Law::EvalAdd,
        Law::EvalInst,
        Law::Roots,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::VarsFinite => "vars_finite",
            Law::VarsZero => "vars_zero",
            Law::VarsAdd => "vars_add",
            Law::VarsInst => "vars_inst",
            Law::DegZero => "deg_zero",
            Law::DegAdd => "deg_add",
            Law::DegInst => "deg_inst",
            Law::EvalZero => "eval_zero",
            Law::EvalAdd => "eval_add",
            Law::EvalInst => "eval_inst",
            Law::Roots => "roots",
        }
    }

    /// Laws without universally quantified inputs.
    fn is_nullary(self) -> bool {
        matches!(self, Law::VarsZero | Law::DegZero)
    }
}

/// Lemmas derived from the axioms, relating evaluation, instantiation and
/// finite sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lemma {
    EvalSumInst,
    EvalSumInstCommute,
    SumMerge,
}

impl Lemma {
    pub const ALL: [Lemma; 3] = [Lemma::EvalSumInst, Lemma::EvalSumInstCommute, Lemma::SumMerge];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::EvalSumInst => "eval_sum_inst",
            Lemma::EvalSumInstCommute => "eval_sum_inst_commute",
            Lemma::SumMerge => "sum_merge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawStatus {
    Pass,
    Fail,
}

/// A falsifying input, with enough detail to replay it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub case: usize,
    pub structure: serde_json::Value,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub observed: serde_json::Value,
    pub expected: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub law: String,
    pub cases: usize,
    pub status: LawStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.status == LawStatus::Pass
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            LawStatus::Pass => "PASS",
            LawStatus::Fail => "FAIL",
        };
        write!(f, "{status} {:<22} cases={}", self.law, self.cases)?;
        if let Some(c) = &self.counterexample {
            write!(
                f,
                "\n    case {} on {}: observed {} expected {}\n    inputs {}",
                c.case,
                c.structure,
                c.observed,
                c.expected,
                serde_json::to_string(&c.inputs).unwrap_or_default()
            )?;
        }
        Ok(())
    }
}

/// Outcome of one law instance.
pub(crate) struct Violation {
    inputs: Vec<(&'static str, serde_json::Value)>,
    observed: serde_json::Value,
    expected: serde_json::Value,
}

pub(crate) type CaseResult = Option<Violation>;

fn err_json(e: &Error) -> serde_json::Value {
    serde_json::json!({ "error": e.to_string() })
}

fn random_subset<T: Clone>(items: &[T], rng: &mut SeededRng) -> Vec<T> {
    items.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

fn random_h<S: LawSampler>(s: &S, rng: &mut SeededRng) -> Vec<S::Arg> {
    let mut u = s.universe();
    u.shuffle(rng);
    let k = rng.gen_range(1..=u.len().min(3));
    u.truncate(k);
    u
}

fn random_subst<S: LawSampler>(s: &S, vars: &[S::Var], rng: &mut SeededRng) -> Subst<S> {
    vars.iter().map(|v| (v.clone(), s.random_arg(rng))).collect()
}

fn set_of<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}

fn run_cases<S, F>(structures: &[S], name: &str, cases: usize, rng: &mut SeededRng, mut case: F) -> LawReport
where
    S: LawSampler,
    F: FnMut(&S, &mut SeededRng) -> CaseResult,
{
    assert!(!structures.is_empty(), "at least one structure is required");
    for i in 0..cases {
        let s = &structures[i % structures.len()];
        if let Some(v) = case(s, rng) {
            return LawReport {
                law: name.to_string(),
                cases: i + 1,
                status: LawStatus::Fail,
                counterexample: Some(Counterexample {
                    case: i,
                    structure: s.describe(),
                    inputs: v.inputs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                    observed: v.observed,
                    expected: v.expected,
                }),
            };
        }
    }
    LawReport { law: name.to_string(), cases, status: LawStatus::Pass, counterexample: None }
}

/// Checks one axiom on `cases` random instances, cycling through
/// `structures`. Laws without quantified inputs run once per structure.
pub fn check_axiom<S: LawSampler>(structures: &[S], law: Law, cases: usize, rng: &mut SeededRng) -> LawReport {
    let cases = if law.is_nullary() { cases.min(structures.len()) } else { cases };
    run_cases(structures, law.name(), cases, rng, |s, rng| axiom_case(s, law, rng))
}

fn axiom_case<S: LawSampler>(s: &S, law: Law, rng: &mut SeededRng) -> CaseResult {
    let pool = s.var_pool();
    match law {
        Law::VarsFinite => {
            // a finite substitution over vars(p) must cover p
            let p = s.random_poly(&pool, rng);
            let vs: Vec<_> = s.vars(&p).into_iter().collect();
            let sigma = random_subst(s, &vs, rng);
            match s.eval(&p, &sigma) {
                Ok(_) if vs.len() <= pool.len() => None,
                Ok(_) => Some(Violation {
                    inputs: vec![("p", s.render_poly(&p))],
                    observed: s.render_vars(&set_of(&vs)),
                    expected: "subset of the variable pool".into(),
                }),
                Err(e) => Some(Violation {
                    inputs: vec![("p", s.render_poly(&p)), ("sigma", s.render_subst(&sigma))],
                    observed: err_json(&e),
                    expected: "evaluation over vars(p) succeeds".into(),
                }),
            }
        }
        Law::VarsZero => {
            let vs = s.vars(&s.zero());
            (!vs.is_empty()).then(|| Violation {
                inputs: vec![],
                observed: s.render_vars(&vs),
                expected: serde_json::json!([]),
            })
        }
        Law::VarsAdd => {
            let p = s.random_poly(&pool, rng);
            let q = s.random_poly(&pool, rng);
            let inputs = || vec![("p", s.render_poly(&p)), ("q", s.render_poly(&q))];
            match s.add(&p, &q) {
                Ok(sum) => {
                    let lhs = s.vars(&sum);
                    let rhs: BTreeSet<_> = s.vars(&p).union(&s.vars(&q)).cloned().collect();
                    (!lhs.is_subset(&rhs)).then(|| Violation {
                        inputs: inputs(),
                        observed: s.render_vars(&lhs),
                        expected: serde_json::json!({ "subset_of": s.render_vars(&rhs) }),
                    })
                }
                Err(e) => Some(Violation { inputs: inputs(), observed: err_json(&e), expected: "p + q".into() }),
            }
        }
        Law::VarsInst => {
            let p = s.random_poly(&pool, rng);
            let sigma = random_subst(s, &random_subset(&pool, rng), rng);
            let inputs = || vec![("p", s.render_poly(&p)), ("sigma", s.render_subst(&sigma))];
            match s.inst(&p, &sigma) {
                Ok(r) => {
                    let lhs = s.vars(&r);
                    let rhs: BTreeSet<_> = s.vars(&p).into_iter().filter(|v| !sigma.contains_key(v)).collect();
                    (!lhs.is_subset(&rhs)).then(|| Violation {
                        inputs: inputs(),
                        observed: s.render_vars(&lhs),
                        expected: serde_json::json!({ "subset_of": s.render_vars(&rhs) }),
                    })
                }
                Err(e) => Some(Violation { inputs: inputs(), observed: err_json(&e), expected: "inst p sigma".into() }),
            }
        }
        Law::DegZero => {
            let d = s.deg(&s.zero());
            (d != 0).then(|| Violation { inputs: vec![], observed: d.into(), expected: 0.into() })
        }
        Law::DegAdd => {
            let p = s.random_poly(&pool, rng);
            let q = s.random_poly(&pool, rng);
            let inputs = || vec![("p", s.render_poly(&p)), ("q", s.render_poly(&q))];
            match s.add(&p, &q) {
                Ok(sum) => {
                    let (lhs, bound) = (s.deg(&sum), s.deg(&p).max(s.deg(&q)));
                    (lhs > bound).then(|| Violation {
                        inputs: inputs(),
                        observed: lhs.into(),
                        expected: serde_json::json!({ "at_most": bound }),
                    })
                }
                Err(e) => Some(Violation { inputs: inputs(), observed: err_json(&e), expected: "p + q".into() }),
            }
        }
        Law::DegInst => {
            let p = s.random_poly(&pool, rng);
            let sigma = random_subst(s, &random_subset(&pool, rng), rng);
            let inputs = || vec![("p", s.render_poly(&p)), ("sigma", s.render_subst(&sigma))];
            match s.inst(&p, &sigma) {
                Ok(r) => {
                    let (lhs, bound) = (s.deg(&r), s.deg(&p));
                    (lhs > bound).then(|| Violation {
                        inputs: inputs(),
                        observed: lhs.into(),
                        expected: serde_json::json!({ "at_most": bound }),
                    })
                }
                Err(e) => Some(Violation { inputs: inputs(), observed: err_json(&e), expected: "inst p sigma".into() }),
            }
        }
        Law::EvalZero => {
            let sigma = random_subst(s, &random_subset(&pool, rng), rng);
            let inputs = || vec![("sigma", s.render_subst(&sigma))];
            match s.eval(&s.zero(), &sigma) {
                Ok(v) if v == s.value_zero() => None,
                Ok(v) => Some(Violation {
                    inputs: inputs(),
                    observed: s.render_value(&v),
                    expected: s.render_value(&s.value_zero()),
                }),
                Err(e) => Some(Violation {
                    inputs: inputs(),
                    observed: err_json(&e),
                    expected: s.render_value(&s.value_zero()),
                }),
            }
        }
        Law::EvalAdd => {
            let p = s.random_poly(&pool, rng);
            let q = s.random_poly(&pool, rng);
            // domain: vars p ∪ vars q, plus random extras
            let mut dom: BTreeSet<_> = s.vars(&p).union(&s.vars(&q)).cloned().collect();
            dom.extend(random_subset(&pool, rng));
            let sigma = random_subst(s, &dom.into_iter().collect::<Vec<_>>(), rng);
            let inputs = || vec![("p", s.render_poly(&p)), ("q", s.render_poly(&q)), ("sigma", s.render_subst(&sigma))];
            let lhs = s.add(&p, &q).and_then(|sum| s.eval(&sum, &sigma));
            let rhs = s.eval(&p, &sigma).and_then(|a| s.eval(&q, &sigma).and_then(|b| s.value_add(&a, &b)));
            compare_values(s, lhs, rhs, inputs)
        }
        Law::EvalInst => {
            let p = s.random_poly(&pool, rng);
            // every pool variable lands in sigma, rho, or both
            let (mut sv, mut rv) = (Vec::new(), Vec::new());
            for v in &pool {
                match rng.gen_range(0..3) {
                    0 => sv.push(v.clone()),
                    1 => rv.push(v.clone()),
                    _ => {
                        sv.push(v.clone());
                        rv.push(v.clone());
                    }
                }
            }
            let sigma = random_subst(s, &sv, rng);
            let rho = random_subst(s, &rv, rng);
            let inputs =
                || vec![("p", s.render_poly(&p)), ("sigma", s.render_subst(&sigma)), ("rho", s.render_subst(&rho))];
            let lhs = s.inst(&p, &sigma).and_then(|i| s.eval(&i, &rho));
            let rhs = s.eval(&p, &override_subst::<S>(&rho, &sigma));
            compare_values(s, lhs, rhs, inputs)
        }
        Law::Roots => {
            let x = pool[rng.gen_range(0..pool.len())].clone();
            let d = rng.gen_range(0..=s.max_roots_degree());
            let p = s.random_univariate(&x, d, rng);
            let mut q = s.random_univariate(&x, d, rng);
            while q == p {
                q = s.random_univariate(&x, d, rng);
            }
            let inputs =
                || vec![("x", s.render_var(&x)), ("d", d.into()), ("p", s.render_poly(&p)), ("q", s.render_poly(&q))];
            let mut agree = 0usize;
            for r in s.universe() {
                let point = Subst::<S>::from([(x.clone(), r)]);
                match (s.eval(&p, &point), s.eval(&q, &point)) {
                    (Ok(a), Ok(b)) => agree += usize::from(a == b),
                    (Err(e), _) | (_, Err(e)) => {
                        return Some(Violation {
                            inputs: inputs(),
                            observed: err_json(&e),
                            expected: "evaluation".into(),
                        })
                    }
                }
            }
            (agree > d).then(|| Violation {
                inputs: inputs(),
                observed: agree.into(),
                expected: serde_json::json!({ "at_most": d }),
            })
        }
    }
}

fn override_subst<S: PolynomialStructure>(rho: &Subst<S>, sigma: &Subst<S>) -> Subst<S> {
    let mut out = rho.clone();
    out.extend(sigma.iter().map(|(k, v)| (k.clone(), v.clone())));
    out
}

fn compare_values<S: LawSampler>(
    s: &S,
    lhs: Result<S::Value>,
    rhs: Result<S::Value>,
    inputs: impl Fn() -> Vec<(&'static str, serde_json::Value)>,
) -> CaseResult {
    match (lhs, rhs) {
        (Ok(a), Ok(b)) if a == b => None,
        (Ok(a), Ok(b)) => {
            Some(Violation { inputs: inputs(), observed: s.render_value(&a), expected: s.render_value(&b) })
        }
        (Err(e), Ok(b)) => Some(Violation { inputs: inputs(), observed: err_json(&e), expected: s.render_value(&b) }),
        (_, Err(e)) => Some(Violation { inputs: inputs(), observed: "lhs".into(), expected: err_json(&e) }),
    }
}

fn sum_inst<S: PolynomialStructure>(s: &S, p: &S::Poly, vars: &BTreeSet<S::Var>, h: &[S::Arg]) -> Result<S::Poly> {
    let mut acc = s.zero();
    for sigma in substitutions(vars, h)? {
        acc = s.add(&acc, &s.inst(p, &sigma)?)?;
    }
    Ok(acc)
}

/// Checks one derived lemma on `cases` random instances meeting its hypotheses.
pub fn check_derived_lemma<S: LawSampler>(
    structures: &[S],
    lemma: Lemma,
    cases: usize,
    rng: &mut SeededRng,
) -> LawReport {
    run_cases(structures, lemma.name(), cases, rng, |s, rng| lemma_case(s, lemma, rng))
}

fn lemma_case<S: LawSampler>(s: &S, lemma: Lemma, rng: &mut SeededRng) -> CaseResult {
    let pool = s.var_pool();
    let h = random_h(s, rng);
    match lemma {
        Lemma::EvalSumInst => {
            // vars p ⊆ V ∪ dom rho; rho may overlap V
            let p = s.random_poly(&pool, rng);
            let v = set_of(&random_subset(&pool, rng));
            let mut rho_dom: Vec<_> = pool.iter().filter(|x| !v.contains(x)).cloned().collect();
            rho_dom.extend(random_subset(&v.iter().cloned().collect::<Vec<_>>(), rng));
            let rho = random_subst(s, &rho_dom, rng);
            eval_sum_inst_sides(s, &p, &v, &h, &rho)
        }
        Lemma::EvalSumInstCommute => {
            let x = pool[rng.gen_range(0..pool.len())].clone();
            let rest: Vec<_> = pool.iter().filter(|&w| *w != x).cloned().collect();
            let v = set_of(&random_subset(&rest, rng));
            let mut pvars = vec![x.clone()];
            pvars.extend(v.iter().cloned());
            let p = s.random_poly(&pvars, rng);
            let r = s.random_arg(rng);
            eval_sum_inst_commute_sides(s, &p, &x, &v, &h, &r)
        }
        Lemma::SumMerge => {
            let x = pool[rng.gen_range(0..pool.len())].clone();
            let rest: Vec<_> = pool.iter().filter(|&w| *w != x).cloned().collect();
            let v = set_of(&random_subset(&rest, rng));
            let mut pvars = vec![x.clone()];
            pvars.extend(v.iter().cloned());
            let p = s.random_poly(&pvars, rng);
            sum_merge_sides(s, &p, &x, &v, &h)
        }
    }
}

/// `eval (Σ_{σ ∈ substs V H} inst p σ) ρ` against `Σ_σ eval p (ρ ++ σ)`.
pub(crate) fn eval_sum_inst_sides<S: LawSampler>(
    s: &S,
    p: &S::Poly,
    v: &BTreeSet<S::Var>,
    h: &[S::Arg],
    rho: &Subst<S>,
) -> CaseResult {
    let inputs = || {
        vec![
            ("p", s.render_poly(p)),
            ("V", s.render_vars(v)),
            ("H", serde_json::Value::Array(h.iter().map(|a| s.render_arg(a)).collect())),
            ("rho", s.render_subst(rho)),
        ]
    };
    let lhs = sum_inst(s, p, v, h).and_then(|q| s.eval(&q, rho));
    let rhs = substitutions(v, h).and_then(|subs| {
        let mut acc = s.value_zero();
        for sigma in subs {
            acc = s.value_add(&acc, &s.eval(p, &override_subst::<S>(rho, &sigma))?)?;
        }
        Ok(acc)
    });
    compare_values(s, lhs, rhs, inputs)
}

/// `eval (Σ_σ inst p σ) [x ↦ r]` against `Σ_σ eval (inst p [x ↦ r]) σ`.
pub(crate) fn eval_sum_inst_commute_sides<S: LawSampler>(
    s: &S,
    p: &S::Poly,
    x: &S::Var,
    v: &BTreeSet<S::Var>,
    h: &[S::Arg],
    r: &S::Arg,
) -> CaseResult {
    let inputs = || {
        vec![
            ("p", s.render_poly(p)),
            ("x", s.render_var(x)),
            ("V", s.render_vars(v)),
            ("H", serde_json::Value::Array(h.iter().map(|a| s.render_arg(a)).collect())),
            ("r", s.render_arg(r)),
        ]
    };
    let point = Subst::<S>::from([(x.clone(), r.clone())]);
    let lhs = sum_inst(s, p, v, h).and_then(|q| s.eval(&q, &point));
    let rhs = s.inst(p, &point).and_then(|px| {
        let mut acc = s.value_zero();
        for sigma in substitutions(v, h)? {
            acc = s.value_add(&acc, &s.eval(&px, &sigma)?)?;
        }
        Ok(acc)
    });
    compare_values(s, lhs, rhs, inputs)
}

/// `Σ_h Σ_σ eval p ([x ↦ h] ++ σ)` against `Σ_{σ ∈ substs ({x} ∪ V) H} eval p σ`.
pub(crate) fn sum_merge_sides<S: LawSampler>(
    s: &S,
    p: &S::Poly,
    x: &S::Var,
    v: &BTreeSet<S::Var>,
    h: &[S::Arg],
) -> CaseResult {
    let inputs = || {
        vec![
            ("p", s.render_poly(p)),
            ("x", s.render_var(x)),
            ("V", s.render_vars(v)),
            ("H", serde_json::Value::Array(h.iter().map(|a| s.render_arg(a)).collect())),
        ]
    };
    let lhs = (|| {
        let mut acc = s.value_zero();
        for hx in h {
            let single = Subst::<S>::from([(x.clone(), hx.clone())]);
            for sigma in substitutions(v, h)? {
                acc = s.value_add(&acc, &s.eval(p, &override_subst::<S>(&single, &sigma))?)?;
            }
        }
        Ok(acc)
    })();
    let mut merged = v.clone();
    merged.insert(x.clone());
    let rhs = substitutions(&merged, h).and_then(|subs| {
        let mut acc = s.value_zero();
        for sigma in subs {
            acc = s.value_add(&acc, &s.eval(p, &sigma)?)?;
        }
        Ok(acc)
    });
    compare_values(s, lhs, rhs, inputs)
}

/// Runs all eleven axioms and three lemmas with `cases` each. Every law
/// gets its own generator stream derived from `seed`, so the reports do
/// not depend on execution order.
pub fn run_conformance<S: LawSampler + Sync>(structures: &[S], cases: usize, seed: u64) -> Vec<LawReport> {
    enum Item {
        Axiom(Law),
        Lemma(Lemma),
    }
    let items: Vec<Item> =
        Law::ALL.into_iter().map(Item::Axiom).chain(Lemma::ALL.into_iter().map(Item::Lemma)).collect();
    let run = |(i, item): (usize, &Item)| {
        let mut rng = crate::field::seeded_rng(seed);
        rng.set_stream(i as u64);
        match item {
            Item::Axiom(law) => check_axiom(structures, *law, cases, &mut rng),
            Item::Lemma(lemma) => check_derived_lemma(structures, *lemma, cases, &mut rng),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(run).collect()
    }
}

/// The standard conformance moduli.
pub fn default_moduli() -> Vec<Modulus> {
    [2u64, 3, 5, 7, 11, 13].into_iter().map(|p| Modulus::new(p).expect("prime")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::seeded_rng;
    use crate::mpoly::subst;

    fn m(p: u64) -> Modulus {
        Modulus::new(p).unwrap()
    }

    #[test]
    fn substitution_counts() {
        let f = m(5);
        let h01 = [f.zero(), f.one()];
        assert_eq!(enumerate_substitutions(&BTreeSet::from([1u32, 2]), &h01).unwrap().len(), 4);
        let empty = enumerate_substitutions(&BTreeSet::<u32>::new(), &h01).unwrap();
        assert_eq!(empty, vec![BTreeMap::new()]);
        // no variables: the empty substitution even when H is empty
        let none: [Fe; 0] = [];
        assert_eq!(enumerate_substitutions(&BTreeSet::<u32>::new(), &none).unwrap().len(), 1);
        assert_eq!(enumerate_substitutions(&BTreeSet::from([1u32]), &none), Err(Error::EmptyEvaluationSet));
        let h012 = [f.elem(0), f.elem(1), f.elem(2)];
        let one_var = enumerate_substitutions(&BTreeSet::from([1u32]), &h012).unwrap();
        assert_eq!(one_var, vec![subst(f, &[(1, 0)]), subst(f, &[(1, 1)]), subst(f, &[(1, 2)])]);
    }

    #[test]
    fn substitutions_are_distinct_with_exact_domain() {
        let f = m(7);
        let h = [f.elem(2), f.elem(5), f.elem(6)];
        let vars = BTreeSet::from([1u32, 4, 9]);
        let all = enumerate_substitutions(&vars, &h).unwrap();
        assert_eq!(all.len(), 27);
        let uniq: BTreeSet<Vec<u64>> = all.iter().map(|s| s.values().map(|x| x.value()).collect()).collect();
        assert_eq!(uniq.len(), 27);
        assert!(all.iter().all(|s| s.keys().copied().collect::<BTreeSet<_>>() == vars));
    }

    #[test]
    fn tuples() {
        assert_eq!(enumerate_tuples(2, m(3), 1000).unwrap().len(), 9);
        assert_eq!(enumerate_tuples(0, m(3), 1000).unwrap(), vec![Vec::<Fe>::new()]);
        let t = enumerate_tuples(3, m(5), 1000).unwrap();
        assert_eq!(t.len(), 125);
        assert!(t[0].iter().all(|x| x.is_zero()));
        assert_eq!(t[1].iter().map(|x| x.value()).collect::<Vec<_>>(), vec![0, 0, 1]);
        assert!(matches!(enumerate_tuples(3, m(5), 100), Err(Error::BudgetExceeded { needed: 125, .. })));
    }

    #[test]
    fn nullary_laws_run_once_per_structure() {
        let mut rng = seeded_rng(1);
        let r = check_axiom(&[MPolyStructure::new(m(5))], Law::VarsZero, 1000, &mut rng);
        assert!(r.passed());
        assert_eq!(r.cases, 1);
    }

    #[test]
    fn every_law_passes_on_a_few_cases() {
        let structures: Vec<_> = default_moduli().into_iter().map(MPolyStructure::new).collect();
        for r in run_conformance(&structures, 50, 3) {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn broken_inst_is_caught() {
        let s = [BrokenInst(MPolyStructure::new(m(7)))];
        let mut rng = seeded_rng(9);
        let r = check_axiom(&s, Law::VarsInst, 200, &mut rng);
        assert_eq!(r.status, LawStatus::Fail);
        let c = r.counterexample.unwrap();
        assert!(c.inputs.contains_key("p") && c.inputs.contains_key("sigma"));
    }

    #[test]
    fn eval_sum_inst_with_empty_domain_collapses() {
        let s = MPolyStructure::new(m(5));
        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            let p = s.random_poly(&[1, 2], &mut rng);
            let rho = random_subst(&s, &[1, 2], &mut rng);
            let h = [s.modulus().zero(), s.modulus().one()];
            assert!(eval_sum_inst_sides(&s, &p, &BTreeSet::new(), &h, &rho).is_none());
            let sum = sum_inst(&s, &p, &BTreeSet::new(), &h).unwrap();
            assert_eq!(s.eval(&sum, &rho).unwrap(), s.eval(&p, &rho).unwrap());
        }
    }

    #[test]
    fn sum_merge_brute_force() {
        // V = {2}, H = {0, 1}, x = 1 over F_5
        let s = MPolyStructure::new(m(5));
        let f = s.modulus();
        let mut rng = seeded_rng(11);
        for _ in 0..50 {
            let p = s.random_poly(&[1, 2], &mut rng);
            let h = [f.zero(), f.one()];
            assert!(sum_merge_sides(&s, &p, &1, &BTreeSet::from([2]), &h).is_none());
            let mut brute = f.zero();
            for a in 0..2 {
                for b in 0..2 {
                    brute += p.eval(&subst(f, &[(1, a), (2, b)])).unwrap();
                }
            }
            let mut nested = f.zero();
            for hx in h {
                for sigma in substitutions(&BTreeSet::from([2u32]), &h).unwrap() {
                    let mut full = sigma.clone();
                    full.insert(1, hx);
                    nested += p.eval(&full).unwrap();
                }
            }
            assert_eq!(brute, nested);
        }
    }

    #[test]
    fn roots_law_on_f7_degree_two() {
        let s = MPolyStructure::new(m(7));
        let mut rng = seeded_rng(21);
        for _ in 0..200 {
            let p = s.random_univariate(&1, 2, &mut rng);
            let q = s.random_univariate(&1, 2, &mut rng);
            if p == q {
                continue;
            }
            let agree = (0..7)
                .filter(|&r| {
                    let pt = subst(s.modulus(), &[(1, r)]);
                    p.eval(&pt).unwrap() == q.eval(&pt).unwrap()
                })
                .count();
            assert!(agree <= 2);
        }
    }
}
