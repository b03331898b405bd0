//! Dishonest provers.
//!
//! Each adversary tracks the discrepancy `δ = v − Σ_{h∈H} q(h)` between the
//! current claim and the honest message `q`. While `δ ≠ 0` it sends a message
//! `q̃ ≠ q` that still passes every round check; once a lucky challenge makes
//! `δ` vanish it continues honestly.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{seeded_rng, Fe, Modulus};
use crate::mpoly::{random_univariate, MultiPoly, UniPoly, Var};
use crate::protocol::{honest_message, HonestProver, Prover, SumcheckInstance};
use crate::structure::MPolyStructure;

/// Subsets examined by the root-planting search before giving up.
pub const ROOT_SEARCH_BUDGET: usize = 10_000;

/// Per-run adversary state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversaryState {
    pub round: u32,
    /// Discrepancy of the claim the last message was built against.
    pub delta: Option<Fe>,
    pub note: Option<String>,
}

fn h_size_inverse(m: Modulus, h: &[Fe]) -> Result<Fe> {
    m.elem(h.len() as u64).inv().map_err(|_| Error::HSizeNotInvertible { size: h.len(), modulus: m.value() })
}

/// Honest message and the discrepancy of the current claim against it.
fn honest_and_delta(
    s: &MPolyStructure,
    inst: &SumcheckInstance<MPolyStructure>,
    x: Var,
    xs: &[Var],
) -> Result<(MultiPoly, Fe)> {
    let q = honest_message(s, inst, &x, xs)?;
    Ok((q.clone(), inst.v - q.sum_over(x, &inst.h)?))
}

fn advance(state: AdversaryState, delta: Fe, note: Option<String>) -> AdversaryState {
    AdversaryState { round: state.round + 1, delta: Some(delta), note }
}

/// Adds `δ·|H|⁻¹` to the honest message's constant term.
#[derive(Clone, Copy, Debug, Default)]
pub struct SumFixConstant;

impl SumFixConstant {
    fn fix(s: &MPolyStructure, q: &MultiPoly, delta: Fe, h: &[Fe]) -> Result<MultiPoly> {
        let shift = delta * h_size_inverse(s.modulus(), h)?;
        q.add(&MultiPoly::constant(shift))
    }
}

impl Prover<MPolyStructure> for SumFixConstant {
    type State = AdversaryState;

    fn name(&self) -> String {
        "sum-fix".into()
    }

    fn initial_state(&self) -> AdversaryState {
        AdversaryState::default()
    }

    fn next_message(
        &self,
        s: &MPolyStructure,
        inst: &SumcheckInstance<MPolyStructure>,
        x: &Var,
        xs: &[Var],
        _r: &Fe,
        state: AdversaryState,
    ) -> Result<(MultiPoly, AdversaryState)> {
        let (q, delta) = honest_and_delta(s, inst, *x, xs)?;
        if delta.is_zero() {
            return Ok((q, advance(state, delta, None)));
        }
        Ok((Self::fix(s, &q, delta, &inst.h)?, advance(state, delta, None)))
    }

    fn note(&self, state: &AdversaryState) -> Option<String> {
        state.note.clone()
    }
}

/// Adds `δ·c(X)` where `c = α·∏(X − a_i)` has as many roots as the degree
/// check allows and `Σ_{h∈H} c(h) = 1`. The verifier is fooled exactly when
/// its challenge hits one of the planted roots.
#[derive(Clone, Copy, Debug)]
pub struct RootPlanting {
    pub root_budget: u32,
}

impl Default for RootPlanting {
    fn default() -> Self {
        RootPlanting { root_budget: u32::MAX }
    }
}

impl RootPlanting {
    pub fn new(root_budget: u32) -> Result<Self> {
        if root_budget == 0 {
            return Err(Error::Infeasible("root budget must be at least 1".into()));
        }
        Ok(RootPlanting { root_budget })
    }

    /// Searches root sets of size `k`, then smaller sizes, in lexicographic
    /// order, sharing one budget. Returns `c` with `Σ_{h∈H} c(h) = 1`.
    pub fn plant(m: Modulus, h: &[Fe], k: usize) -> Option<UniPoly> {
        let mut examined = 0;
        for size in (1..=k.min(m.order())).rev() {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                if examined == ROOT_SEARCH_BUDGET {
                    return None;
                }
                examined += 1;
                let roots: Vec<Fe> = idx.iter().map(|&i| m.elem(i as u64)).collect();
                let sum = h.iter().fold(m.zero(), |acc, &hx| acc + roots.iter().fold(m.one(), |p, &a| p * (hx - a)));
                if let Ok(alpha) = sum.inv() {
                    let c = roots
                        .iter()
                        .try_fold(UniPoly::from_dense(m, &[1]), |acc, &a| acc.mul(&UniPoly::linear_root(a)))
                        .expect("same modulus");
                    return Some(c.scale(alpha));
                }
                if !next_combination(&mut idx, m.order()) {
                    break;
                }
            }
        }
        None
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl Prover<MPolyStructure> for RootPlanting {
    type State = AdversaryState;

    fn name(&self) -> String {
        "root-plant".into()
    }

    fn initial_state(&self) -> AdversaryState {
        AdversaryState::default()
    }

    fn next_message(
        &self,
        s: &MPolyStructure,
        inst: &SumcheckInstance<MPolyStructure>,
        x: &Var,
        xs: &[Var],
        _r: &Fe,
        state: AdversaryState,
    ) -> Result<(MultiPoly, AdversaryState)> {
        let (q, delta) = honest_and_delta(s, inst, *x, xs)?;
        if delta.is_zero() {
            return Ok((q, advance(state, delta, None)));
        }
        let k = (self.root_budget as usize).min(inst.p.total_degree());
        match Self::plant(s.modulus(), &inst.h, k) {
            Some(c) => {
                let planted = MultiPoly::from_uni(&c.scale(delta), *x);
                Ok((q.add(&planted)?, advance(state, delta, None)))
            }
            None => {
                let note = format!("no root set within budget for degree {k}; fell back to sum-fix");
                Ok((SumFixConstant::fix(s, &q, delta, &inst.h)?, advance(state, delta, Some(note))))
            }
        }
    }

    fn note(&self, state: &AdversaryState) -> Option<String> {
        state.note.clone()
    }
}

/// Sends a random polynomial in `x` of admissible degree, shifted by a
/// constant so the evaluation check passes. Messages depend only on the seed
/// and the round index.
#[derive(Clone, Copy, Debug)]
pub struct RandomValid {
    pub seed: u64,
}

impl Prover<MPolyStructure> for RandomValid {
    type State = AdversaryState;

    fn name(&self) -> String {
        format!("random:{}", self.seed)
    }

    fn initial_state(&self) -> AdversaryState {
        AdversaryState::default()
    }

    fn next_message(
        &self,
        s: &MPolyStructure,
        inst: &SumcheckInstance<MPolyStructure>,
        x: &Var,
        xs: &[Var],
        _r: &Fe,
        state: AdversaryState,
    ) -> Result<(MultiPoly, AdversaryState)> {
        let (q, delta) = honest_and_delta(s, inst, *x, xs)?;
        if delta.is_zero() {
            return Ok((q, advance(state, delta, None)));
        }
        let mut rng = seeded_rng(self.seed);
        rng.set_stream(state.round as u64);
        let raw = random_univariate(s.modulus(), *x, inst.p.total_degree() as u32, &mut rng);
        let shift = (inst.v - raw.sum_over(*x, &inst.h)?) * h_size_inverse(s.modulus(), &inst.h)?;
        Ok((raw.add(&MultiPoly::constant(shift))?, advance(state, delta, None)))
    }

    fn note(&self, state: &AdversaryState) -> Option<String> {
        state.note.clone()
    }
}

/// Any prover selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum Strategy {
    Honest,
    SumFix,
    RootPlant { root_budget: u32 },
    Random { seed: u64 },
}

impl Strategy {
    /// The three adversaries, with the given seed for the random one.
    pub fn adversaries(seed: u64) -> [Strategy; 3] {
        [Strategy::SumFix, Strategy::RootPlant { root_budget: u32::MAX }, Strategy::Random { seed }]
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, Strategy::Honest)
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Honest => write!(f, "honest"),
            Strategy::SumFix => write!(f, "sum-fix"),
            Strategy::RootPlant { root_budget: u32::MAX } => write!(f, "root-plant"),
            Strategy::RootPlant { root_budget } => write!(f, "root-plant:{root_budget}"),
            Strategy::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Document(format!("unknown prover {s:?}; expected honest|sum-fix|root-plant|random:<seed>"));
        match s.split_once(':') {
            None => match s {
                "honest" => Ok(Strategy::Honest),
                "sum-fix" => Ok(Strategy::SumFix),
                "root-plant" => Ok(Strategy::RootPlant { root_budget: u32::MAX }),
                _ => Err(bad()),
            },
            Some(("random", seed)) => seed.parse().map(|seed| Strategy::Random { seed }).map_err(|_| bad()),
            Some(("root-plant", k)) => {
                let k: u32 = k.parse().map_err(|_| bad())?;
                RootPlanting::new(k)?;
                Ok(Strategy::RootPlant { root_budget: k })
            }
            Some(_) => Err(bad()),
        }
    }
}

impl Prover<MPolyStructure> for Strategy {
    type State = AdversaryState;

    fn name(&self) -> String {
        self.to_string()
    }

    fn initial_state(&self) -> AdversaryState {
        AdversaryState::default()
    }

    fn next_message(
        &self,
        s: &MPolyStructure,
        inst: &SumcheckInstance<MPolyStructure>,
        x: &Var,
        xs: &[Var],
        r: &Fe,
        state: AdversaryState,
    ) -> Result<(MultiPoly, AdversaryState)> {
        match *self {
            Strategy::Honest => {
                let (q, ()) = HonestProver.next_message(s, inst, x, xs, r, ())?;
                Ok((q, advance(state, s.modulus().zero(), None)))
            }
            Strategy::SumFix => SumFixConstant.next_message(s, inst, x, xs, r, state),
            Strategy::RootPlant { root_budget } => RootPlanting { root_budget }.next_message(s, inst, x, xs, r, state),
            Strategy::Random { seed } => RandomValid { seed }.next_message(s, inst, x, xs, r, state),
        }
    }

    fn note(&self, state: &AdversaryState) -> Option<String> {
        state.note.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::Monomial;
    use crate::protocol::{sumcheck_run, RunMode};

    fn f5_example() -> (MPolyStructure, Modulus, SumcheckInstance<MPolyStructure>) {
        let m = Modulus::new(5).unwrap();
        let s = MPolyStructure::new(m);
        let inst = SumcheckInstance::new(&s, vec![m.zero(), m.one()], MultiPoly::var(m, 1), m.elem(2)).unwrap();
        (s, m, inst)
    }

    fn x_plus(m: Modulus, c: u64) -> MultiPoly {
        MultiPoly::var(m, 1).add(&MultiPoly::constant(m.elem(c))).unwrap()
    }

    #[test]
    fn sum_fix_example() {
        let (s, m, inst) = f5_example();
        let (q, st) = SumFixConstant.next_message(&s, &inst, &1, &[], &m.zero(), AdversaryState::default()).unwrap();
        assert_eq!(q, x_plus(m, 3));
        assert_eq!(st.delta, Some(m.one()));
        // 3 + 4 = 2 mod 5
        assert_eq!(q.sum_over(1, &inst.h).unwrap(), m.elem(2));
    }

    #[test]
    fn no_correction_on_true_claims() {
        let (s, m, inst) = f5_example();
        let honest = SumcheckInstance { v: m.one(), ..inst };
        for strat in [Strategy::SumFix, Strategy::RootPlant { root_budget: 3 }, Strategy::Random { seed: 4 }] {
            let (q, _) = strat.next_message(&s, &honest, &1, &[], &m.zero(), AdversaryState::default()).unwrap();
            assert_eq!(q, MultiPoly::var(m, 1), "{strat}");
        }
    }

    #[test]
    fn root_plant_example() {
        let (s, m, inst) = f5_example();
        let rp = RootPlanting::default();
        let (q, _) = rp.next_message(&s, &inst, &1, &[], &m.zero(), AdversaryState::default()).unwrap();
        assert_eq!(q, MultiPoly::monomial(m.elem(2), Monomial::var(1)));
        // accepted exactly when r' = 0
        let accepted: Vec<u64> = m
            .elements()
            .filter(|r| {
                sumcheck_run(&s, &rp, rp.initial_state(), &inst, &m.zero(), &[(1, *r)], RunMode::Full).unwrap().0
            })
            .map(|r| r.value())
            .collect();
        assert_eq!(accepted, vec![0]);
    }

    #[test]
    fn plant_respects_sum_and_root_count() {
        for p in [5u64, 7, 11] {
            let m = Modulus::new(p).unwrap();
            for hs in [vec![0, 1], vec![1, 2, 3]] {
                let h: Vec<Fe> = hs.iter().map(|&x| m.elem(x)).collect();
                for k in 1..=3 {
                    let c = RootPlanting::plant(m, &h, k).unwrap();
                    let sum = h.iter().fold(m.zero(), |acc, &x| acc + c.eval(x).unwrap());
                    assert_eq!(sum, m.one());
                    assert_eq!(c.degree() as usize, k);
                    assert_eq!(c.roots_count().unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn plant_over_whole_field_steps_down() {
        // every full-field product vanishes on H; a smaller root set is used
        let m = Modulus::new(3).unwrap();
        let h = vec![m.zero(), m.one()];
        let c = RootPlanting::plant(m, &h, 3).unwrap();
        assert!(c.degree() < 3);
    }

    #[test]
    fn h_size_not_invertible() {
        let m = Modulus::new(2).unwrap();
        let s = MPolyStructure::new(m);
        let inst = SumcheckInstance::new(&s, vec![m.zero(), m.one()], MultiPoly::var(m, 1), m.zero()).unwrap();
        let err = SumFixConstant.next_message(&s, &inst, &1, &[], &m.zero(), AdversaryState::default()).unwrap_err();
        assert_eq!(err, Error::HSizeNotInvertible { size: 2, modulus: 2 });
        assert!(err.to_string().contains("H size"));
        assert!(err.to_string().contains("not invertible"));
    }

    #[test]
    fn random_valid_is_reproducible_and_passes_checks() {
        let m = Modulus::new(7).unwrap();
        let s = MPolyStructure::new(m);
        let p = MultiPoly::from_terms(
            m,
            [(Monomial::from_exponents([(1, 2), (2, 1)]), m.elem(3)), (Monomial::var(2), m.one())],
        )
        .unwrap();
        // true sum is 5
        let inst = SumcheckInstance::new(&s, vec![m.zero(), m.one(), m.elem(2)], p, m.elem(6)).unwrap();
        let rv = RandomValid { seed: 11 };
        let run = || rv.next_message(&s, &inst, &1, &[2], &m.zero(), AdversaryState::default()).unwrap().0;
        let q = run();
        assert_eq!(q, run());
        assert!(q.vars().iter().all(|v| *v == 1));
        assert!(q.total_degree() <= inst.p.total_degree());
        assert_eq!(q.sum_over(1, &inst.h).unwrap(), inst.v);
        let distinct: std::collections::BTreeSet<String> = (0..20)
            .map(|seed| {
                let rv = RandomValid { seed };
                rv.next_message(&s, &inst, &1, &[2], &m.zero(), AdversaryState::default()).unwrap().0.to_string()
            })
            .collect();
        assert!(distinct.len() > 10, "{distinct:?}");
    }

    #[test]
    fn strategy_parsing() {
        for text in ["honest", "sum-fix", "root-plant", "root-plant:2", "random:42"] {
            assert_eq!(text.parse::<Strategy>().unwrap().to_string(), text);
        }
        for bad in ["", "random:", "random:x", "root-plant:0", "sneaky", "honest:1"] {
            assert!(bad.parse::<Strategy>().is_err(), "{bad}");
        }
    }
}
