//! Protocol execution.
//!
//! [`sumcheck_run`] drives the sumcheck protocol round by round and records a
//! [`Transcript`]. [`generic_prove`] is the protocol-agnostic public-coin
//! runner; [`sumcheck_as_generic`] wires the sumcheck verifier into it. The
//! two formulations must always agree on the verdict.

use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::{substitutions, PolynomialStructure, Subst};

/// A sumcheck claim: `v` is the sum of `p` over `H^vars(p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumcheckInstance<S: PolynomialStructure> {
    pub h: Vec<S::Arg>,
    pub p: S::Poly,
    pub v: S::Value,
}

impl<S: PolynomialStructure> SumcheckInstance<S> {
    /// Validates `H ≠ ∅`, distinct elements of `H`, and structure membership.
    pub fn new(s: &S, h: Vec<S::Arg>, p: S::Poly, v: S::Value) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        for (i, a) in h.iter().enumerate() {
            if h[..i].contains(a) {
                return Err(Error::Document(format!("H contains duplicate element {a:?}")));
            }
        }
        s.validate_instance(&h, &p, &v)?;
        Ok(SumcheckInstance { h, p, v })
    }
}

/// A prover strategy. Strategies are pure given their inputs and state.
pub trait Prover<S: PolynomialStructure>: Sync {
    type State: Clone + Debug + Send + Sync;

    fn name(&self) -> String;

    fn initial_state(&self) -> Self::State;

    /// Message for the round that eliminates `x`; `xs` are the variables of
    /// the remaining rounds and `r` the verifier's previous randomness.
    fn next_message(
        &self,
        s: &S,
        inst: &SumcheckInstance<S>,
        x: &S::Var,
        xs: &[S::Var],
        r: &S::Arg,
        state: Self::State,
    ) -> Result<(S::Poly, Self::State)>;

    /// Optional remark about the state, copied into transcripts.
    fn note(&self, _state: &Self::State) -> Option<String> {
        None
    }
}

impl<S: PolynomialStructure, P: Prover<S>> Prover<S> for &P {
    type State = P::State;

    fn name(&self) -> String {
        (**self).name()
    }
    fn initial_state(&self) -> P::State {
        (**self).initial_state()
    }
    fn next_message(
        &self,
        s: &S,
        inst: &SumcheckInstance<S>,
        x: &S::Var,
        xs: &[S::Var],
        r: &S::Arg,
        state: P::State,
    ) -> Result<(S::Poly, P::State)> {
        (**self).next_message(s, inst, x, xs, r, state)
    }
    fn note(&self, state: &P::State) -> Option<String> {
        (**self).note(state)
    }
}

/// Sends `Σ_{σ ∈ substs xs H} inst p σ`, the polynomial the protocol prescribes.
#[derive(Clone, Copy, Debug, Default)]
pub struct HonestProver;

/// The honest message, shared by the honest prover and the adversaries.
pub fn honest_message<S: PolynomialStructure>(
    s: &S,
    inst: &SumcheckInstance<S>,
    x: &S::Var,
    xs: &[S::Var],
) -> Result<S::Poly> {
    let rest: BTreeSet<S::Var> = xs.iter().cloned().collect();
    if rest.contains(x) {
        return Err(Error::ProverPrecondition(format!("{x:?} occurs in the remaining variables")));
    }
    let uncovered: Vec<_> = s.vars(&inst.p).into_iter().filter(|v| v != x && !rest.contains(v)).collect();
    if !uncovered.is_empty() {
        return Err(Error::ProverPrecondition(format!("variables {uncovered:?} not scheduled")));
    }
    let mut acc = s.zero();
    for sigma in substitutions(&rest, &inst.h)? {
        acc = s.add(&acc, &s.inst(&inst.p, &sigma)?)?;
    }
    Ok(acc)
}

impl<S: PolynomialStructure> Prover<S> for HonestProver {
    type State = ();

    fn name(&self) -> String {
        "honest".into()
    }

    fn initial_state(&self) {}

    fn next_message(
        &self,
        s: &S,
        inst: &SumcheckInstance<S>,
        x: &S::Var,
        xs: &[S::Var],
        _r: &S::Arg,
        _state: (),
    ) -> Result<(S::Poly, ())> {
        Ok((honest_message(s, inst, x, xs)?, ()))
    }
}

/// The verifier checks, in the order they are made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Variable,
    Degree,
    Evaluation,
    Final,
}

/// One round of a protocol run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(bound(serialize = "S::Var: Serialize, S::Arg: Serialize, S::Poly: Serialize, S::Value: Serialize"))]
pub struct RoundRecord<S: PolynomialStructure> {
    pub variable: S::Var,
    pub message: S::Poly,
    pub randomness: S::Arg,
    pub variable_ok: bool,
    pub degree_ok: bool,
    pub evaluation_ok: bool,
    pub reduced_poly: S::Poly,
    pub reduced_value: S::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<S: PolynomialStructure> RoundRecord<S> {
    pub fn ok(&self) -> bool {
        self.variable_ok && self.degree_ok && self.evaluation_ok
    }

    /// First failing check of this round, in verification order.
    pub fn first_failure(&self) -> Option<Check> {
        if !self.variable_ok {
            Some(Check::Variable)
        } else if !self.degree_ok {
            Some(Check::Degree)
        } else if !self.evaluation_ok {
            Some(Check::Evaluation)
        } else {
            None
        }
    }
}

/// Full record of a run. `final_check` is `None` when a short-circuited run
/// stopped before the base case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(bound(serialize = "S::Var: Serialize, S::Arg: Serialize, S::Poly: Serialize, S::Value: Serialize"))]
pub struct Transcript<S: PolynomialStructure> {
    pub rounds: Vec<RoundRecord<S>>,
    pub final_check: Option<bool>,
    pub accept: bool,
}

impl<S: PolynomialStructure> Transcript<S> {
    /// Round index and check of the first failure, if any.
    pub fn first_failure(&self) -> Option<(usize, Check)> {
        for (i, r) in self.rounds.iter().enumerate() {
            if let Some(c) = r.first_failure() {
                return Some((i, c));
            }
        }
        match self.final_check {
            Some(false) => Some((self.rounds.len(), Check::Final)),
            _ => None,
        }
    }

    /// Each reduction must shrink the variables (dropping the round's
    /// variable) and must not raise the degree.
    pub fn reduction_invariant_holds(&self, s: &S, inst: &SumcheckInstance<S>) -> bool {
        let mut p = inst.p.clone();
        for r in &self.rounds {
            let mut allowed = s.vars(&p);
            allowed.remove(&r.variable);
            if !s.vars(&r.reduced_poly).is_subset(&allowed) || s.deg(&r.reduced_poly) > s.deg(&p) {
                return false;
            }
            p = r.reduced_poly.clone();
        }
        true
    }
}

/// Whether a run stops at the first failed check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RunMode {
    /// Evaluate and record every round (the verdict is the conjunction).
    #[default]
    Full,
    /// Stop at the first failure; same verdict, shorter transcript.
    ShortCircuit,
}

/// Converts structure variables into numeric ids for error messages.
pub trait VarId {
    fn var_id(&self) -> u32;
}

impl VarId for u32 {
    fn var_id(&self) -> u32 {
        *self
    }
}

/// Checks the preconditions shared by every runner: `H ≠ ∅`, distinct
/// schedule variables that cover `vars(p)`.
pub fn validate_schedule<S>(s: &S, inst: &SumcheckInstance<S>, schedule_vars: &[S::Var]) -> Result<()>
where
    S: PolynomialStructure,
    S::Var: VarId,
{
    if inst.h.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let mut seen = BTreeSet::new();
    for v in schedule_vars {
        if !seen.insert(v.clone()) {
            return Err(Error::DuplicateScheduleVariable(v.var_id()));
        }
    }
    let missing: Vec<u32> = s.vars(&inst.p).iter().filter(|v| !seen.contains(*v)).map(VarId::var_id).collect();
    if !missing.is_empty() {
        return Err(Error::ScheduleDoesNotCover(missing));
    }
    Ok(())
}

fn check_preconditions<S>(s: &S, inst: &SumcheckInstance<S>, schedule: &[(S::Var, S::Arg)]) -> Result<()>
where
    S: PolynomialStructure,
    S::Var: VarId,
{
    let vars: Vec<S::Var> = schedule.iter().map(|(x, _)| x.clone()).collect();
    validate_schedule(s, inst, &vars)
}

/// Outcome of the verifier's round checks on message `q` for variable `x`
/// with next randomness `r_next`.
struct RoundVerdict<S: PolynomialStructure> {
    variable_ok: bool,
    degree_ok: bool,
    evaluation_ok: bool,
    reduced: SumcheckInstance<S>,
}

/// The verifier side of one round: variable, degree and evaluation checks,
/// then the reduced instance `(H, inst p [x ↦ r'], eval q [x ↦ r'])`.
///
/// A message with foreign variables cannot be evaluated at a point; its
/// evaluation check fails and the reduced claim becomes the zero value.
fn verify_round<S: PolynomialStructure>(
    s: &S,
    inst: &SumcheckInstance<S>,
    q: &S::Poly,
    x: &S::Var,
    r_next: &S::Arg,
) -> Result<RoundVerdict<S>> {
    let qvars = s.vars(q);
    let variable_ok = qvars.iter().all(|v| v == x);
    let degree_ok = s.deg(q) <= s.deg(&inst.p);
    let point = |a: &S::Arg| Subst::<S>::from([(x.clone(), a.clone())]);
    let (evaluation_ok, reduced_value) = if variable_ok {
        let mut sum = s.value_zero();
        for hx in &inst.h {
            sum = s.value_add(&sum, &s.eval(q, &point(hx))?)?;
        }
        (sum == inst.v, s.eval(q, &point(r_next))?)
    } else {
        (false, s.value_zero())
    };
    let reduced_poly = s.inst(&inst.p, &point(r_next))?;
    Ok(RoundVerdict {
        variable_ok,
        degree_ok,
        evaluation_ok,
        reduced: SumcheckInstance { h: inst.h.clone(), p: reduced_poly, v: reduced_value },
    })
}

fn final_verdict<S: PolynomialStructure>(s: &S, inst: &SumcheckInstance<S>) -> Result<bool> {
    // preconditions guarantee p is variable-free here
    debug_assert!(s.vars(&inst.p).is_empty(), "base case reached with free variables");
    Ok(s.eval(&inst.p, &Subst::<S>::new())? == inst.v)
}

/// Runs the sumcheck protocol with `prover` on `inst`.
///
/// `r0` is handed to the prover in the first round; `schedule` pairs each
/// round's variable with the randomness the verifier sends after it.
pub fn sumcheck_run<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    r0: &S::Arg,
    schedule: &[(S::Var, S::Arg)],
    mode: RunMode,
) -> Result<(bool, Transcript<S>)>
where
    S: PolynomialStructure,
    S::Var: VarId,
    P: Prover<S>,
{
    check_preconditions(s, inst, schedule)?;
    let mut cur = inst.clone();
    let mut state = state;
    let mut r = r0.clone();
    let mut rounds = Vec::with_capacity(schedule.len());
    let mut accept = true;
    for (i, (x, r_next)) in schedule.iter().enumerate() {
        let xs: Vec<S::Var> = schedule[i + 1..].iter().map(|(v, _)| v.clone()).collect();
        let (q, next_state) = prover.next_message(s, &cur, x, &xs, &r, state)?;
        let verdict = verify_round(s, &cur, &q, x, r_next)?;
        let record = RoundRecord {
            variable: x.clone(),
            message: q,
            randomness: r_next.clone(),
            variable_ok: verdict.variable_ok,
            degree_ok: verdict.degree_ok,
            evaluation_ok: verdict.evaluation_ok,
            reduced_poly: verdict.reduced.p.clone(),
            reduced_value: verdict.reduced.v.clone(),
            note: prover.note(&next_state),
        };
        accept &= record.ok();
        rounds.push(record);
        if !accept && mode == RunMode::ShortCircuit {
            return Ok((false, Transcript { rounds, final_check: None, accept: false }));
        }
        cur = verdict.reduced;
        state = next_state;
        r = r_next.clone();
    }
    let final_ok = final_verdict(s, &cur)?;
    accept &= final_ok;
    Ok((accept, Transcript { rounds, final_check: Some(final_ok), accept }))
}

/// Result of running a single round in isolation.
#[derive(Clone, Debug)]
pub struct Step<S: PolynomialStructure, St> {
    pub ok: bool,
    pub reduced: SumcheckInstance<S>,
    pub state: St,
}

/// Runs only the round for `x` (with `xs` left afterwards) and returns the
/// reduced instance the remaining rounds would start from.
#[allow(clippy::too_many_arguments)]
pub fn sumcheck_step<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    r: &S::Arg,
    x: &S::Var,
    xs: &[S::Var],
    r_next: &S::Arg,
) -> Result<Step<S, P::State>>
where
    S: PolynomialStructure,
    P: Prover<S>,
{
    let (q, state) = prover.next_message(s, inst, x, xs, r, state)?;
    let v = verify_round(s, inst, &q, x, r_next)?;
    Ok(Step { ok: v.variable_ok && v.degree_ok && v.evaluation_ok, reduced: v.reduced, state })
}

/// Verdict only, short-circuiting. Used by the probability harness.
pub fn sumcheck_accepts<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    r0: &S::Arg,
    schedule: &[(S::Var, S::Arg)],
) -> Result<bool>
where
    S: PolynomialStructure,
    S::Var: VarId,
    P: Prover<S>,
{
    Ok(sumcheck_run(s, prover, state, inst, r0, schedule, RunMode::ShortCircuit)?.0)
}

// ---------------------------------------------------------------------------
// Generic public-coin proofs

/// Verifier of a public-coin protocol: a final check and a per-round check
/// that also produces the next instance and verifier state.
pub trait PublicCoinVerifier {
    type Instance;
    type Response;
    type Rand;
    type Info;
    type State;

    fn ver0(&self, inst: &Self::Instance, vs: &Self::State) -> bool;

    fn ver1(
        &self,
        inst: &Self::Instance,
        resp: &Self::Response,
        r_next: &Self::Rand,
        x: &Self::Info,
        rest: &[Self::Info],
        vs: Self::State,
    ) -> Result<(bool, Self::Instance, Self::State)>;
}

/// Prover of a public-coin protocol.
pub trait PublicCoinProver<V: PublicCoinVerifier> {
    type State;

    fn respond(
        &self,
        inst: &V::Instance,
        x: &V::Info,
        rest: &[V::Info],
        r: &V::Rand,
        ps: Self::State,
    ) -> Result<(V::Response, Self::State)>;
}

/// Generic public-coin interaction: with no rounds left the verdict is
/// `ver0`; otherwise the prover answers, `ver1` judges the round and the
/// verdict is that judgement conjoined with the rest of the run.
pub fn generic_prove<V, P>(
    ver: &V,
    vs: V::State,
    prv: &P,
    ps: P::State,
    inst: V::Instance,
    r: V::Rand,
    rounds: &[(V::Info, V::Rand)],
) -> Result<bool>
where
    V: PublicCoinVerifier,
    V::Info: Clone,
    V::Rand: Clone,
    P: PublicCoinProver<V>,
{
    match rounds.split_first() {
        None => Ok(ver.ver0(&inst, &vs)),
        Some(((x, r_next), rm)) => {
            let rest: Vec<V::Info> = rm.iter().map(|(i, _)| i.clone()).collect();
            let (resp, ps_next) = prv.respond(&inst, x, &rest, &r, ps)?;
            let (ok, inst_next, vs_next) = ver.ver1(&inst, &resp, r_next, x, &rest, vs)?;
            let tail = generic_prove(ver, vs_next, prv, ps_next, inst_next, r_next.clone(), rm)?;
            Ok(ok && tail)
        }
    }
}

/// The sumcheck verifier as a public-coin verifier (stateless).
pub struct SumcheckVerifier<'a, S>(pub &'a S);

impl<S: PolynomialStructure> PublicCoinVerifier for SumcheckVerifier<'_, S> {
    type Instance = SumcheckInstance<S>;
    type Response = S::Poly;
    type Rand = S::Arg;
    type Info = S::Var;
    type State = ();

    fn ver0(&self, inst: &SumcheckInstance<S>, _vs: &()) -> bool {
        self.0.eval(&inst.p, &Subst::<S>::new()).is_ok_and(|v| v == inst.v)
    }

    fn ver1(
        &self,
        inst: &SumcheckInstance<S>,
        q: &S::Poly,
        r_next: &S::Arg,
        x: &S::Var,
        _rest: &[S::Var],
        _vs: (),
    ) -> Result<(bool, SumcheckInstance<S>, ())> {
        let v = verify_round(self.0, inst, q, x, r_next)?;
        Ok((v.variable_ok && v.degree_ok && v.evaluation_ok, v.reduced, ()))
    }
}

/// Adapts a sumcheck [`Prover`] to the public-coin prover interface.
pub struct GenericProverAdapter<'a, S, P> {
    pub structure: &'a S,
    pub prover: &'a P,
}

impl<'a, S, P> PublicCoinProver<SumcheckVerifier<'a, S>> for GenericProverAdapter<'a, S, P>
where
    S: PolynomialStructure,
    P: Prover<S>,
{
    type State = P::State;

    fn respond(
        &self,
        inst: &SumcheckInstance<S>,
        x: &S::Var,
        rest: &[S::Var],
        r: &S::Arg,
        ps: P::State,
    ) -> Result<(S::Poly, P::State)> {
        self.prover.next_message(self.structure, inst, x, rest, r, ps)
    }
}

/// Sumcheck expressed through [`generic_prove`]; same verdict as
/// [`sumcheck_run`] on identical inputs.
pub fn sumcheck_as_generic<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    r0: &S::Arg,
    schedule: &[(S::Var, S::Arg)],
) -> Result<bool>
where
    S: PolynomialStructure,
    S::Var: VarId,
    P: Prover<S>,
{
    check_preconditions(s, inst, schedule)?;
    let adapter = GenericProverAdapter { structure: s, prover };
    generic_prove(&SumcheckVerifier(s), (), &adapter, state, inst.clone(), r0.clone(), schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fe, Modulus};
    use crate::mpoly::{subst, Monomial, MultiPoly};
    use crate::structure::MPolyStructure;

    fn setup(p: u64) -> (MPolyStructure, Modulus) {
        let m = Modulus::new(p).unwrap();
        (MPolyStructure::new(m), m)
    }

    fn x1_plus_x2(m: Modulus) -> MultiPoly {
        MultiPoly::var(m, 1).add(&MultiPoly::var(m, 2)).unwrap()
    }

    fn h01(m: Modulus) -> Vec<Fe> {
        vec![m.zero(), m.one()]
    }

    #[test]
    fn constant_base_case() {
        let (s, m) = setup(5);
        let inst = SumcheckInstance::new(&s, h01(m), MultiPoly::constant(m.elem(3)), m.elem(3)).unwrap();
        let (ok, t) = sumcheck_run(&s, &HonestProver, (), &inst, &m.zero(), &[], RunMode::Full).unwrap();
        assert!(ok);
        assert_eq!(t.final_check, Some(true));
        assert!(t.rounds.is_empty());
        assert!(sumcheck_as_generic(&s, &HonestProver, (), &inst, &m.zero(), &[]).unwrap());
    }

    #[test]
    fn honest_message_example() {
        // sum over x2 ∈ {0,1} of (x1 + x2) = 2 x1 + 1
        let (s, m) = setup(5);
        let inst = SumcheckInstance::new(&s, h01(m), x1_plus_x2(m), m.elem(4)).unwrap();
        let q = honest_message(&s, &inst, &1, &[2]).unwrap();
        let expected = MultiPoly::from_terms(m, [(Monomial::var(1), m.elem(2)), (Monomial::one(), m.elem(1))]).unwrap();
        assert_eq!(q, expected);
        // brute force: inst at x2=0 plus inst at x2=1
        let brute = x1_plus_x2(m)
            .inst(&subst(m, &[(2, 0)]))
            .unwrap()
            .add(&x1_plus_x2(m).inst(&subst(m, &[(2, 1)])).unwrap())
            .unwrap();
        assert_eq!(q, brute);
        // no remaining variables: the message is p itself
        let single = SumcheckInstance::new(&s, h01(m), MultiPoly::var(m, 1), m.one()).unwrap();
        assert_eq!(honest_message(&s, &single, &1, &[]).unwrap(), MultiPoly::var(m, 1));
    }

    #[test]
    fn honest_prover_preconditions() {
        let (s, m) = setup(5);
        let inst = SumcheckInstance::new(&s, h01(m), x1_plus_x2(m), m.elem(4)).unwrap();
        assert!(matches!(honest_message(&s, &inst, &1, &[1, 2]), Err(Error::ProverPrecondition(_))));
        assert!(matches!(honest_message(&s, &inst, &1, &[]), Err(Error::ProverPrecondition(_))));
    }

    #[test]
    fn two_variable_runs() {
        let (s, m) = setup(5);
        let good = SumcheckInstance::new(&s, h01(m), x1_plus_x2(m), m.elem(4)).unwrap();
        let bad = SumcheckInstance { v: m.elem(3), ..good.clone() };
        for (a, b) in [(0, 0), (1, 3), (4, 2)] {
            for order in [[1u32, 2], [2, 1]] {
                let sched = [(order[0], m.elem(a)), (order[1], m.elem(b))];
                let (ok, t) = sumcheck_run(&s, &HonestProver, (), &good, &m.zero(), &sched, RunMode::Full).unwrap();
                assert!(ok);
                assert!(t.reduction_invariant_holds(&s, &good));
                let (ok, t) = sumcheck_run(&s, &HonestProver, (), &bad, &m.zero(), &sched, RunMode::Full).unwrap();
                assert!(!ok);
                assert_eq!(t.first_failure(), Some((0, Check::Evaluation)));
                assert_eq!(t.rounds.len(), 2);
                assert!(t.rounds[1].ok());
                let (ok2, t2) =
                    sumcheck_run(&s, &HonestProver, (), &bad, &m.zero(), &sched, RunMode::ShortCircuit).unwrap();
                assert!(!ok2);
                assert_eq!(t2.rounds.len(), 1);
                assert_eq!(t2.final_check, None);
            }
        }
    }

    #[test]
    fn precondition_errors() {
        let (s, m) = setup(5);
        let inst = SumcheckInstance::new(&s, h01(m), x1_plus_x2(m), m.elem(4)).unwrap();
        let r = m.zero();
        assert_eq!(
            sumcheck_run(&s, &HonestProver, (), &inst, &r, &[(1, r)], RunMode::Full).unwrap_err(),
            Error::ScheduleDoesNotCover(vec![2])
        );
        assert_eq!(
            sumcheck_run(&s, &HonestProver, (), &inst, &r, &[(1, r), (2, r), (1, r)], RunMode::Full).unwrap_err(),
            Error::DuplicateScheduleVariable(1)
        );
        assert_eq!(SumcheckInstance::new(&s, vec![], x1_plus_x2(m), m.zero()).unwrap_err(), Error::EmptyEvaluationSet);
    }

    #[test]
    fn arity_can_drop_by_more_than_one() {
        // x1 * x2 instantiated at x1 = 0 vanishes entirely
        let (s, m) = setup(5);
        let p = MultiPoly::monomial(m.one(), Monomial::from_exponents([(1, 1), (2, 1)]));
        let inst = SumcheckInstance::new(&s, h01(m), p, m.one()).unwrap();
        let sched = [(1, m.zero()), (2, m.elem(3))];
        let (ok, t) = sumcheck_run(&s, &HonestProver, (), &inst, &m.zero(), &sched, RunMode::Full).unwrap();
        assert!(ok);
        assert!(t.rounds[0].reduced_poly.is_zero());
        assert!(t.reduction_invariant_holds(&s, &inst));
    }

    #[test]
    fn padded_schedule_still_complete() {
        let (s, m) = setup(7);
        let inst = SumcheckInstance::new(&s, h01(m), MultiPoly::var(m, 1), m.one()).unwrap();
        // true sum over {x1, x9} is 2 * (0 + 1) = 2
        let padded = SumcheckInstance { v: m.elem(2), ..inst };
        let sched = [(9, m.elem(4)), (1, m.elem(6))];
        assert!(sumcheck_run(&s, &HonestProver, (), &padded, &m.zero(), &sched, RunMode::Full).unwrap().0);
    }

    struct Liar;

    impl Prover<MPolyStructure> for Liar {
        type State = ();
        fn name(&self) -> String {
            "liar".into()
        }
        fn initial_state(&self) {}
        fn next_message(
            &self,
            s: &MPolyStructure,
            inst: &SumcheckInstance<MPolyStructure>,
            x: &u32,
            xs: &[u32],
            _r: &Fe,
            _state: (),
        ) -> Result<(MultiPoly, ())> {
            // honest message plus a foreign variable
            let q = honest_message(s, inst, x, xs)?;
            Ok((q.add(&MultiPoly::var(s.modulus(), 99))?, ()))
        }
    }

    #[test]
    fn malformed_messages_are_rejected_by_both_runners() {
        let (s, m) = setup(5);
        let inst = SumcheckInstance::new(&s, h01(m), x1_plus_x2(m), m.elem(4)).unwrap();
        let sched = [(1, m.elem(2)), (2, m.elem(3))];
        let (ok, t) = sumcheck_run(&s, &Liar, (), &inst, &m.zero(), &sched, RunMode::Full).unwrap();
        assert!(!ok);
        assert_eq!(t.first_failure(), Some((0, Check::Variable)));
        assert!(!sumcheck_as_generic(&s, &Liar, (), &inst, &m.zero(), &sched).unwrap());
    }

    /// A toy protocol: the instance is a counter, the prover echoes it and the
    /// verifier's per-round verdict comes from a fixed list.
    struct Toy {
        verdicts: Vec<bool>,
        final_ok: bool,
    }

    impl PublicCoinVerifier for Toy {
        type Instance = usize;
        type Response = usize;
        type Rand = u8;
        type Info = ();
        type State = ();
        fn ver0(&self, _inst: &usize, _vs: &()) -> bool {
            self.final_ok
        }
        fn ver1(
            &self,
            inst: &usize,
            _resp: &usize,
            _r: &u8,
            _x: &(),
            _rest: &[()],
            _vs: (),
        ) -> Result<(bool, usize, ())> {
            Ok((self.verdicts[*inst], inst + 1, ()))
        }
    }

    struct Echo;

    impl PublicCoinProver<Toy> for Echo {
        type State = ();
        fn respond(&self, inst: &usize, _x: &(), _rest: &[()], _r: &u8, _ps: ()) -> Result<(usize, ())> {
            Ok((*inst, ()))
        }
    }

    #[test]
    fn generic_runner_is_a_conjunction() {
        let yes = Toy { verdicts: vec![], final_ok: true };
        assert!(generic_prove(&yes, (), &Echo, (), 0, 0, &[]).unwrap());
        let first_bad = Toy { verdicts: vec![false], final_ok: true };
        assert!(!generic_prove(&first_bad, (), &Echo, (), 0, 0, &[((), 1)]).unwrap());
        let all_good = Toy { verdicts: vec![true, true], final_ok: true };
        assert!(generic_prove(&all_good, (), &Echo, (), 0, 0, &[((), 1), ((), 2)]).unwrap());
        let final_bad = Toy { verdicts: vec![true, true], final_ok: false };
        assert!(!generic_prove(&final_bad, (), &Echo, (), 0, 0, &[((), 1), ((), 2)]).unwrap());
    }
}
