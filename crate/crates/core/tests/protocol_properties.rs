use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;

use sumcheck_core::adversary::Strategy;
use sumcheck_core::analysis::{
    exact_acceptance, generate_instance, membership, monte_carlo_acceptance, reclaim_over, soundness_bound,
    AnalysisConfig, Execution, GenParams, InstanceKind, DEFAULT_BUDGET,
};
use sumcheck_core::doc::{poly_from_terms, poly_to_terms, InstanceDocument};
use sumcheck_core::field::{Fe, Modulus};
use sumcheck_core::mpoly::{random_poly, RandomPolyParams, Var};
use sumcheck_core::protocol::{sumcheck_run, Prover, RunMode, SumcheckInstance};
use sumcheck_core::structure::{enumerate_tuples, MPolyStructure};

fn instances(kind: InstanceKind, p: u64, n: usize, count: u64) -> Vec<SumcheckInstance<MPolyStructure>> {
    (0..count).map(|seed| generate_instance(kind, GenParams::new(p, n, 3, 2), seed, DEFAULT_BUDGET).unwrap()).collect()
}

fn all_runs(inst: &SumcheckInstance<MPolyStructure>, order: &[Var]) -> Vec<Vec<(Var, Fe)>> {
    enumerate_tuples(order.len(), inst.p.modulus(), DEFAULT_BUDGET)
        .unwrap()
        .into_iter()
        .map(|rs| order.iter().copied().zip(rs).collect())
        .collect()
}

#[test]
fn completeness_exhaustive_small_fields() {
    for p in [2u64, 3, 5] {
        for n in 0..=3 {
            for inst in instances(InstanceKind::Valid, p, n, 6) {
                let s = MPolyStructure::new(inst.p.modulus());
                let mut order: Vec<Var> = (1..=n as Var).collect();
                order.reverse();
                // the claim has to cover every scheduled variable
                let inst = reclaim_over(&inst, &order.iter().copied().collect(), DEFAULT_BUDGET).unwrap();
                for sched in all_runs(&inst, &order) {
                    for r0 in inst.p.modulus().elements() {
                        let (ok, t) =
                            sumcheck_run(&s, &Strategy::Honest, Default::default(), &inst, &r0, &sched, RunMode::Full)
                                .unwrap();
                        assert!(ok, "p={p} n={n} {inst:?} {sched:?}");
                        assert!(t.reduction_invariant_holds(&s, &inst));
                    }
                }
            }
        }
    }
}

#[test]
fn short_circuit_matches_full_mode() {
    for inst in instances(InstanceKind::False, 5, 2, 15).into_iter().chain(instances(InstanceKind::Valid, 5, 2, 5)) {
        let s = MPolyStructure::new(inst.p.modulus());
        for strat in
            [Strategy::Honest, Strategy::SumFix, Strategy::RootPlant { root_budget: 2 }, Strategy::Random { seed: 3 }]
        {
            for sched in all_runs(&inst, &[2, 1]) {
                let r0 = inst.p.modulus().zero();
                let full = sumcheck_run(&s, &strat, strat.initial_state(), &inst, &r0, &sched, RunMode::Full).unwrap();
                let short =
                    sumcheck_run(&s, &strat, strat.initial_state(), &inst, &r0, &sched, RunMode::ShortCircuit).unwrap();
                assert_eq!(full.0, short.0);
                assert_eq!(full.1.first_failure(), short.1.first_failure());
                assert!(short.1.rounds.len() <= full.1.rounds.len());
                assert_eq!(full.1.rounds.len(), sched.len());
            }
        }
    }
}

#[test]
fn adversary_messages_pass_variable_and_degree_checks() {
    for p in [5u64, 7, 11] {
        for inst in instances(InstanceKind::False, p, 3, 10) {
            let s = MPolyStructure::new(inst.p.modulus());
            let m = inst.p.modulus();
            for strat in Strategy::adversaries(p) {
                for seed in 0..5u64 {
                    let sched: Vec<(Var, Fe)> = (1..=3).map(|x| (x, m.elem((seed * 7 + x as u64 * 3) % p))).collect();
                    let (_, t) =
                        sumcheck_run(&s, &strat, strat.initial_state(), &inst, &m.zero(), &sched, RunMode::Full)
                            .unwrap();
                    for r in &t.rounds {
                        assert!(r.variable_ok && r.degree_ok, "{strat}: {r:?}");
                    }
                    assert!(t.reduction_invariant_holds(&s, &inst));
                }
            }
        }
    }
}

#[test]
fn root_planting_dominates() {
    let cfg = AnalysisConfig::default();
    for p in [5u64, 7, 11] {
        for inst in instances(InstanceKind::False, p, 2, 15) {
            let s = MPolyStructure::new(inst.p.modulus());
            let sched: Vec<Var> = inst.p.vars().into_iter().collect();
            let r0 = inst.p.modulus().zero();
            let prob = |strat: Strategy| {
                exact_acceptance(&s, &strat, strat.initial_state(), &inst, &sched, &r0, cfg).unwrap().value()
            };
            let root = prob(Strategy::RootPlant { root_budget: u32::MAX });
            let fix = prob(Strategy::SumFix);
            assert_eq!(fix, Ratio::from_integer(0));
            let random_mean = (0..8u64).map(|seed| prob(Strategy::Random { seed })).sum::<Ratio<u64>>() / 8;
            assert!(root >= random_mean, "{inst:?}: root-plant {root} < random mean {random_mean}");
            assert!(root <= soundness_bound(&s, &inst, sched.len()));
        }
    }
}

#[test]
fn monte_carlo_tracks_exact() {
    let cfg = AnalysisConfig::default();
    let mut cases = 0;
    for (i, p) in [5u64, 7].into_iter().cycle().take(20).enumerate() {
        let kind = if i % 4 == 0 { InstanceKind::Valid } else { InstanceKind::False };
        let inst = generate_instance(kind, GenParams::new(p, 2, 2, 2), 50 + i as u64, DEFAULT_BUDGET).unwrap();
        let s = MPolyStructure::new(inst.p.modulus());
        let sched: Vec<Var> = inst.p.vars().into_iter().collect();
        let r0 = inst.p.modulus().zero();
        let strat = [Strategy::Honest, Strategy::RootPlant { root_budget: u32::MAX }][i % 2];
        let exact = exact_acceptance(&s, &strat, strat.initial_state(), &inst, &sched, &r0, cfg).unwrap();
        let est = monte_carlo_acceptance(
            &s,
            &strat,
            strat.initial_state(),
            &inst,
            &sched,
            &r0,
            100_000,
            i as u64,
            Execution::default(),
        )
        .unwrap();
        let target = exact.accepting as f64 / exact.total as f64;
        assert!(est.contains(target), "case {i}: exact {exact:?}, estimate {est:?}");
        cases += 1;
    }
    assert_eq!(cases, 20);
}

#[test]
fn generated_kinds_match_membership() {
    for p in [3u64, 5, 7, 11] {
        for inst in instances(InstanceKind::Valid, p, 3, 10) {
            let s = MPolyStructure::new(inst.p.modulus());
            assert!(membership(&s, &inst, DEFAULT_BUDGET).unwrap());
        }
        for inst in instances(InstanceKind::False, p, 3, 10) {
            let s = MPolyStructure::new(inst.p.modulus());
            assert!(!membership(&s, &inst, DEFAULT_BUDGET).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn canonical_terms_round_trip(p in prop::sample::select(vec![2u64, 3, 5, 7, 101]), seed in any::<u64>()) {
        let m = Modulus::new(p).unwrap();
        let mut rng = sumcheck_core::field::seeded_rng(seed);
        let poly = random_poly(m, &RandomPolyParams::new(vec![1, 2, 3, 9], 5, 8), &mut rng);
        let terms = poly_to_terms(&poly);
        prop_assert_eq!(poly_from_terms(m, &terms).unwrap(), poly.clone());
        let s = MPolyStructure::new(m);
        let inst = SumcheckInstance::new(&s, vec![m.zero()], poly, m.one()).unwrap();
        let doc = InstanceDocument::from_instance(&inst, Some(vec![9, 3, 2, 1]));
        let text = doc.to_json();
        let back = InstanceDocument::parse(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), text);
        let vars: BTreeSet<Var> = back.to_instance().unwrap().instance.p.vars();
        prop_assert!(vars.is_subset(&BTreeSet::from([1, 2, 3, 9])));
    }
}
