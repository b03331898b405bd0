//! Probability harness: membership oracle, exact acceptance by exhaustive
//! enumeration of the verifier's randomness, Monte-Carlo estimation,
//! instance generation and bound reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::adversary::Strategy;
use crate::doc::InstanceDocument;
use crate::error::{Error, Result};
use crate::field::{seeded_rng, Modulus};
use crate::mpoly::{random_poly, RandomPolyParams, Var};
use crate::protocol::{
    honest_message, sumcheck_accepts, sumcheck_run, validate_schedule, Check, Prover, RunMode, SumcheckInstance, VarId,
};
use crate::structure::{checked_count, substitutions, MPolyStructure, PolynomialStructure};

/// Default cap on protocol runs (or substitutions) per exact computation.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489;

/// How enumeration and sampling loops are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over rayon's global pool. Without the `parallel`
    /// feature this runs sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub budget: u64,
    pub execution: Execution,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { budget: DEFAULT_BUDGET, execution: Execution::default() }
    }
}

impl AnalysisConfig {
    pub fn with_budget(budget: u64) -> Self {
        AnalysisConfig { budget, ..Default::default() }
    }

    pub fn sequential(self) -> Self {
        AnalysisConfig { execution: Execution::Sequential, ..self }
    }
}

/// Maps every index in `0..total` and folds the results with `combine`.
/// Results are independent of `exec` whenever `combine` is associative and
/// commutative.
fn fold_indices<T, M, C>(
    total: u64,
    exec: Execution,
    identity: impl Fn() -> T + Sync + Send,
    map: M,
    combine: C,
) -> Result<T>
where
    T: Send,
    M: Fn(u64) -> Result<T> + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            const CHUNK: u64 = 64;
            (0..total.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| fold_range(c * CHUNK..total.min((c + 1) * CHUNK), &identity, &map, &combine))
                .try_reduce(&identity, |a, b| Ok(combine(a, b)))
        }
        _ => fold_range(0..total, &identity, &map, &combine),
    }
}

fn fold_range<T>(
    range: std::ops::Range<u64>,
    identity: &impl Fn() -> T,
    map: &impl Fn(u64) -> Result<T>,
    combine: &impl Fn(T, T) -> T,
) -> Result<T> {
    range.into_iter().try_fold(identity(), |acc, i| Ok(combine(acc, map(i)?)))
}

fn check_budget(needed: u128, budget: u64) -> Result<u64> {
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(needed as u64)
}

/// `Σ_{σ ∈ substs (vars p) H} eval p σ`.
pub fn true_sum<S: PolynomialStructure>(s: &S, inst: &SumcheckInstance<S>, budget: u64) -> Result<S::Value> {
    true_sum_over(s, inst, &s.vars(&inst.p), budget)
}

/// `Σ_{σ ∈ substs vars H} eval p σ` for a superset `vars` of `vars(p)`.
/// This is the claim a run over a schedule on `vars` verifies.
pub fn true_sum_over<S: PolynomialStructure>(
    s: &S,
    inst: &SumcheckInstance<S>,
    vars: &BTreeSet<S::Var>,
    budget: u64,
) -> Result<S::Value> {
    check_budget(checked_count(inst.h.len(), vars.len()), budget)?;
    let mut acc = s.value_zero();
    for sigma in substitutions(vars, &inst.h)? {
        acc = s.value_add(&acc, &s.eval(&inst.p, &sigma)?)?;
    }
    Ok(acc)
}

/// Whether the claim `v` is the true sum.
pub fn membership<S: PolynomialStructure>(s: &S, inst: &SumcheckInstance<S>, budget: u64) -> Result<bool> {
    Ok(true_sum(s, inst, budget)? == inst.v)
}

/// Whether `v` is the sum over the schedule's variables. Agrees with
/// [`membership`] when the schedule is exactly `vars(p)`.
pub fn membership_over<S: PolynomialStructure>(
    s: &S,
    inst: &SumcheckInstance<S>,
    schedule_vars: &[S::Var],
    budget: u64,
) -> Result<bool> {
    let vars: BTreeSet<S::Var> = schedule_vars.iter().cloned().collect();
    Ok(true_sum_over(s, inst, &vars, budget)? == inst.v)
}

/// The same instance with its claim moved from `vars(p)` to `vars`, keeping
/// the discrepancy: a true claim stays true and a false one stays false by
/// the same amount.
pub fn reclaim_over(
    inst: &SumcheckInstance<MPolyStructure>,
    vars: &BTreeSet<Var>,
    budget: u64,
) -> Result<SumcheckInstance<MPolyStructure>> {
    let s = MPolyStructure::new(inst.p.modulus());
    let offset = inst.v - true_sum(&s, inst, budget)?;
    Ok(SumcheckInstance { v: true_sum_over(&s, inst, vars, budget)? + offset, ..inst.clone() })
}

/// `accepting / total` over every randomness tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactProbability {
    pub accepting: u64,
    pub total: u64,
}

impl ExactProbability {
    pub fn value(&self) -> Ratio<u64> {
        Ratio::new(self.accepting, self.total)
    }
}

impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}/{})", self.value(), self.accepting, self.total)
    }
}

impl Serialize for ExactProbability {
    fn serialize<Z: Serializer>(&self, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
        use serde::ser::SerializeStruct;
        let mut st = z.serialize_struct("ExactProbability", 3)?;
        st.serialize_field("accepting", &self.accepting)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("value", &self.value().to_string())?;
        st.end()
    }
}

/// Serializes a ratio as `"n/d"` (or `"n"` for integers).
pub fn serialize_ratio<Z: Serializer>(r: &Ratio<u64>, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
    z.serialize_str(&r.to_string())
}

fn decode_tuple<A: Clone>(mut index: u64, universe: &[A], len: usize) -> Vec<A> {
    let base = universe.len() as u64;
    let mut out = vec![universe[0].clone(); len];
    for slot in out.iter_mut().rev() {
        *slot = universe[(index % base) as usize].clone();
        index /= base;
    }
    out
}

fn schedule_for<S: PolynomialStructure>(vars: &[S::Var], rs: Vec<S::Arg>) -> Vec<(S::Var, S::Arg)> {
    vars.iter().cloned().zip(rs).collect()
}

fn enumeration_size<S: PolynomialStructure>(s: &S, len: usize, budget: u64) -> Result<u64> {
    check_budget(checked_count(s.universe_size(), len), budget)
}

/// Exact acceptance probability: one run per tuple in `universe^len`, tuples
/// in lexicographic order.
pub fn exact_acceptance<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    schedule_vars: &[S::Var],
    r0: &S::Arg,
    config: AnalysisConfig,
) -> Result<ExactProbability>
where
    S: PolynomialStructure + Sync,
    S::Var: VarId,
    P: Prover<S>,
{
    validate_schedule(s, inst, schedule_vars)?;
    let total = enumeration_size(s, schedule_vars.len(), config.budget)?;
    let universe = s.universe();
    let accepting = fold_indices(
        total,
        config.execution,
        || 0u64,
        |i| {
            let sched = schedule_for::<S>(schedule_vars, decode_tuple(i, &universe, schedule_vars.len()));
            Ok(sumcheck_accepts(s, prover, state.clone(), inst, r0, &sched)? as u64)
        },
        |a, b| a + b,
    )?;
    Ok(ExactProbability { accepting, total })
}

/// Where runs failed, and how accepted runs split on the first message.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    /// Runs whose first failing check was in round `i` (1-based), keyed
    /// `"round<i>.<check>"` or `"final"`.
    pub first_failures: BTreeMap<String, u64>,
    /// Accepted runs whose first message equalled the honest one.
    pub accepted_honest_first: u64,
    /// Accepted runs whose first message differed from the honest one.
    pub accepted_dishonest_first: u64,
}

impl Breakdown {
    fn merge(mut self, other: Breakdown) -> Breakdown {
        for (k, v) in other.first_failures {
            *self.first_failures.entry(k).or_default() += v;
        }
        self.accepted_honest_first += other.accepted_honest_first;
        self.accepted_dishonest_first += other.accepted_dishonest_first;
        self
    }
}

fn failure_key(round: usize, check: Check) -> String {
    match check {
        Check::Final => "final".into(),
        Check::Variable => format!("round{}.variable", round + 1),
        Check::Degree => format!("round{}.degree", round + 1),
        Check::Evaluation => format!("round{}.evaluation", round + 1),
    }
}

/// Exact probability together with its [`Breakdown`].
pub fn exact_breakdown<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    schedule_vars: &[S::Var],
    r0: &S::Arg,
    config: AnalysisConfig,
) -> Result<(ExactProbability, Breakdown)>
where
    S: PolynomialStructure + Sync,
    S::Var: VarId,
    P: Prover<S>,
{
    validate_schedule(s, inst, schedule_vars)?;
    let total = enumeration_size(s, schedule_vars.len(), config.budget)?;
    let universe = s.universe();
    let honest_first = match schedule_vars.split_first() {
        Some((x, rest)) => Some(honest_message(s, inst, x, rest)?),
        None => None,
    };
    let (accepting, breakdown) = fold_indices(
        total,
        config.execution,
        || (0u64, Breakdown::default()),
        |i| {
            let sched = schedule_for::<S>(schedule_vars, decode_tuple(i, &universe, schedule_vars.len()));
            let (ok, t) = sumcheck_run(s, prover, state.clone(), inst, r0, &sched, RunMode::ShortCircuit)?;
            let mut b = Breakdown::default();
            if ok {
                let same = match (&honest_first, t.rounds.first()) {
                    (Some(q), Some(r)) => *q == r.message,
                    _ => true,
                };
                if same {
                    b.accepted_honest_first = 1;
                } else {
                    b.accepted_dishonest_first = 1;
                }
            } else if let Some((round, check)) = t.first_failure() {
                b.first_failures.insert(failure_key(round, check), 1);
            }
            Ok((ok as u64, b))
        },
        |(a, x), (b, y)| (a + b, x.merge(y)),
    )?;
    Ok((ExactProbability { accepting, total }, breakdown))
}

/// Monte-Carlo estimate with a 99% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub accepting: u64,
    pub trials: u64,
    pub seed: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl MonteCarloEstimate {
    pub fn new(accepting: u64, trials: u64, seed: u64) -> Self {
        let (lower, upper) = wilson_interval(accepting, trials, Z_99);
        MonteCarloEstimate { accepting, trials, seed, estimate: accepting as f64 / trials as f64, lower, upper }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

impl fmt::Display for MonteCarloEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} [{:.6}, {:.6}] ({}/{})", self.estimate, self.lower, self.upper, self.accepting, self.trials)
    }
}

/// Wilson score interval for `k` successes in `n` trials. The endpoints
/// are exactly 0 and 1 when every trial fails or succeeds.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0, "at least one trial");
    let nf = n as f64;
    let phat = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (phat + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lower = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lower, upper)
}

/// Samples `trials` uniform randomness tuples. Trial `i` draws from the
/// generator seeded with `seed` on stream `i`, so the result does not
/// depend on the execution order.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_acceptance<S, P>(
    s: &S,
    prover: &P,
    state: P::State,
    inst: &SumcheckInstance<S>,
    schedule_vars: &[S::Var],
    r0: &S::Arg,
    trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<MonteCarloEstimate>
where
    S: PolynomialStructure + Sync,
    S::Var: VarId,
    P: Prover<S>,
{
    if trials == 0 {
        return Err(Error::Infeasible("Monte-Carlo needs at least one trial".into()));
    }
    validate_schedule(s, inst, schedule_vars)?;
    let universe = s.universe();
    let accepting = fold_indices(
        trials,
        execution,
        || 0u64,
        |i| {
            let mut rng = seeded_rng(seed);
            rng.set_stream(i);
            let rs = schedule_vars.iter().map(|_| universe[rng.gen_range(0..universe.len())].clone()).collect();
            Ok(sumcheck_accepts(s, prover, state.clone(), inst, r0, &schedule_for::<S>(schedule_vars, rs))? as u64)
        },
        |a, b| a + b,
    )?;
    Ok(MonteCarloEstimate::new(accepting, trials, seed))
}

/// `deg(p) · len / |universe|`.
pub fn soundness_bound<S: PolynomialStructure>(s: &S, inst: &SumcheckInstance<S>, schedule_len: usize) -> Ratio<u64> {
    Ratio::new((s.deg(&inst.p) * schedule_len) as u64, s.universe_size() as u64)
}

/// Whether a generated instance's claim is true.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Valid,
    False,
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(InstanceKind::Valid),
            "false" => Ok(InstanceKind::False),
            _ => Err(Error::Document(format!("unknown instance kind {s:?}; expected valid|false"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub modulus: u64,
    pub arity: usize,
    pub max_degree: u32,
    pub h_size: usize,
    pub max_terms: usize,
}

impl GenParams {
    pub fn new(modulus: u64, arity: usize, max_degree: u32, h_size: usize) -> Self {
        GenParams { modulus, arity, max_degree, h_size, max_terms: 6 }
    }
}

/// Random instance over variables `1..=arity` with `H` a random subset of
/// the field. A false instance's claim is the true sum plus a uniform
/// nonzero offset.
pub fn generate_instance(
    kind: InstanceKind,
    params: GenParams,
    seed: u64,
    budget: u64,
) -> Result<SumcheckInstance<MPolyStructure>> {
    let m = Modulus::new(params.modulus)?;
    if params.h_size == 0 || params.h_size > m.order() {
        return Err(Error::Infeasible(format!("|H| = {} must lie in 1..={}", params.h_size, m.order())));
    }
    if params.arity > u32::MAX as usize - 1 {
        return Err(Error::Infeasible("arity too large".into()));
    }
    check_budget(checked_count(params.h_size, params.arity), budget)?;
    let s = MPolyStructure::new(m);
    let mut rng = seeded_rng(seed);
    let vars: Vec<Var> = (1..=params.arity as Var).collect();
    let p = random_poly(m, &RandomPolyParams::new(vars, params.max_degree, params.max_terms), &mut rng);
    let mut h: Vec<_> = m.elements().collect::<Vec<_>>().choose_multiple(&mut rng, params.h_size).copied().collect();
    h.sort_by_key(|x| x.value());
    let probe = SumcheckInstance::new(&s, h, p, m.zero())?;
    let sum = true_sum(&s, &probe, budget)?;
    let v = match kind {
        InstanceKind::Valid => sum,
        InstanceKind::False => sum + m.elem(rng.gen_range(1..m.value())),
    };
    Ok(SumcheckInstance { v, ..probe })
}

/// Pads `vars(p)` (ascending) with unused variables above its largest id.
pub fn padded_schedule(p_vars: &BTreeSet<Var>, extra: usize) -> Vec<Var> {
    let top = p_vars.iter().next_back().copied().unwrap_or(0);
    p_vars.iter().copied().chain((1..=extra as Var).map(|i| top + i)).collect()
}

/// How a report computes probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

/// What a strategy row is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    /// Honest prover on a true instance: probability 1.
    Completeness,
    /// Any prover on a false instance: probability at most the bound.
    Soundness,
    /// Adversary on a true instance: reported, not checked.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Probability {
    Exact {
        #[serde(flatten)]
        probability: ExactProbability,
        breakdown: Breakdown,
    },
    MonteCarlo {
        #[serde(flatten)]
        estimate: MonteCarloEstimate,
    },
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact { probability, .. } => write!(f, "{probability}"),
            Probability::MonteCarlo { estimate } => write!(f, "{estimate}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow {
    pub strategy: Strategy,
    pub claim: Claim,
    pub probability: Probability,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub digest: String,
    pub modulus: u64,
    pub degree: usize,
    pub schedule: Vec<Var>,
    pub membership: bool,
    #[serde(serialize_with = "serialize_ratio")]
    pub bound: Ratio<u64>,
    pub rows: Vec<StrategyRow>,
    pub pass: bool,
}

/// Short content hash of the canonical instance document.
pub fn instance_digest(inst: &SumcheckInstance<MPolyStructure>, schedule: &[Var]) -> String {
    let doc = InstanceDocument::from_instance(inst, Some(schedule.to_vec()));
    let bytes = serde_json::to_vec(&doc).expect("document serializes");
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn row_passes(claim: Claim, probability: &Probability, bound: Ratio<u64>) -> bool {
    match (claim, probability) {
        (Claim::None, _) => true,
        (Claim::Completeness, Probability::Exact { probability, .. }) => probability.accepting == probability.total,
        (Claim::Completeness, Probability::MonteCarlo { estimate }) => estimate.accepting == estimate.trials,
        (Claim::Soundness, Probability::Exact { probability, .. }) => probability.value() <= bound,
        (Claim::Soundness, Probability::MonteCarlo { estimate }) => {
            estimate.lower <= *bound.numer() as f64 / *bound.denom() as f64
        }
    }
}

/// Checks every strategy against the claim that applies to it. Strategy
/// errors (for example an uninvertible `|H|`) fail the row and are recorded.
pub fn bound_report(
    s: &MPolyStructure,
    inst: &SumcheckInstance<MPolyStructure>,
    schedule_vars: &[Var],
    strategies: &[Strategy],
    mode: ReportMode,
    config: AnalysisConfig,
) -> Result<BoundReport> {
    validate_schedule(s, inst, schedule_vars)?;
    let member = membership_over(s, inst, schedule_vars, config.budget)?;
    let bound = soundness_bound(s, inst, schedule_vars.len());
    let r0 = s.modulus().zero();
    let mut rows = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let claim = match (member, strategy.is_honest()) {
            (true, true) => Claim::Completeness,
            (true, false) => Claim::None,
            (false, _) => Claim::Soundness,
        };
        let state = strategy.initial_state();
        let outcome = match mode {
            ReportMode::Exact => exact_breakdown(s, &strategy, state, inst, schedule_vars, &r0, config)
                .map(|(probability, breakdown)| Probability::Exact { probability, breakdown }),
            ReportMode::MonteCarlo { trials, seed } => {
                monte_carlo_acceptance(s, &strategy, state, inst, schedule_vars, &r0, trials, seed, config.execution)
                    .map(|estimate| Probability::MonteCarlo { estimate })
            }
        };
        let row = match outcome {
            Ok(probability) => {
                StrategyRow { strategy, claim, pass: row_passes(claim, &probability, bound), probability, error: None }
            }
            Err(e @ Error::BudgetExceeded { .. }) => return Err(e),
            Err(e) => {
                let empty = match mode {
                    ReportMode::Exact => Probability::Exact {
                        probability: ExactProbability { accepting: 0, total: 0 },
                        breakdown: Breakdown::default(),
                    },
                    ReportMode::MonteCarlo { trials, seed } => {
                        Probability::MonteCarlo { estimate: MonteCarloEstimate::new(0, trials.max(1), seed) }
                    }
                };
                StrategyRow { strategy, claim, probability: empty, pass: false, error: Some(e.to_string()) }
            }
        };
        rows.push(row);
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(BoundReport {
        digest: instance_digest(inst, schedule_vars),
        modulus: s.modulus().value(),
        degree: inst.p.total_degree(),
        schedule: schedule_vars.to_vec(),
        membership: member,
        bound,
        rows,
        pass,
    })
}
