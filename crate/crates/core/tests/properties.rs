mod common;

use std::collections::BTreeSet;

use collab_auction::chain::check_chain;
use collab_auction::demand::{demand, demand_all};
use collab_auction::io::{emit_instance, parse_instance};
use collab_auction::market::LocalMask;
use collab_auction::oracles::supermodularity_violation_pairwise;
use collab_auction::{
    adjust_prices, efficient_sets, find_chain, find_disjoint_chains, is_equilibrium_price,
    is_supermodular, lyapunov, run_auction, verify_prices, AgentId, ContractSet, DemandSets,
    Instance, Market, MarketInstance, Valuation, Verdict,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance_and_prices(seed: u64) -> (Instance, collab_auction::Prices) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = common::small_instance(&mut rng, seed);
    let p = common::prices(&inst, &mut rng);
    (inst, p)
}

fn all_subsets(market: &Market) -> impl Iterator<Item = ContractSet> + '_ {
    let n = market.contract_count();
    (0u32..1 << n).map(move |g| market.contracts().filter(|c| g & (1 << c.0) != 0).collect())
}

fn reports(inst: &Instance, p: &collab_auction::Prices) -> Vec<DemandSets> {
    demand_all(inst, p)
        .unwrap()
        .into_iter()
        .map(|r| r.sets)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn utility_is_affine_in_own_prices(seed in any::<u64>(), delta in -5i64..=5) {
        let (inst, p) = instance_and_prices(seed);
        let m = inst.market();
        for a in m.agents() {
            let Some(&w) = m.contracts_of(a).first() else { continue };
            let mut shifted = p.clone();
            shifted.shift(m, a, w, delta).unwrap();
            let (base, moved) = (p.for_agent(m, a), shifted.for_agent(m, a));
            for k in 0..1u32 << m.contracts_of(a).len() {
                let bundle = m.from_local(a, k);
                let expected = inst.utility(a, &bundle, &base).unwrap()
                    - if bundle.contains(w) { delta } else { 0 };
                prop_assert_eq!(inst.utility(a, &bundle, &moved).unwrap(), expected);
            }
        }
    }

    #[test]
    fn balanced_prices_cancel_in_aggregate(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let m = inst.market();
        for phi in all_subsets(m) {
            let total: i64 = m
                .agents()
                .map(|a| {
                    let own = phi.intersection(&m.contract_set_of(a));
                    inst.utility(a, &own, &p.for_agent(m, a)).unwrap()
                })
                .sum();
            prop_assert_eq!(total, inst.aggregate_valuation(&phi).unwrap());
        }
    }

    #[test]
    fn lyapunov_bounds_every_aggregate(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let l = lyapunov(&inst, &p).unwrap();
        for phi in all_subsets(inst.market()) {
            prop_assert!(l >= inst.aggregate_valuation(&phi).unwrap());
        }
        let eff = efficient_sets(&inst).unwrap();
        prop_assert_eq!(l == eff.max_value, is_equilibrium_price(&inst, &p).unwrap().is_some());
    }

    #[test]
    fn demand_is_a_lattice(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        for r in reports(&inst, &p) {
            for x in r.sets() {
                for y in r.sets() {
                    prop_assert!(r.contains_set(&x.union(y)));
                    prop_assert!(r.contains_set(&x.intersection(y)));
                }
            }
        }
    }

    #[test]
    fn efficient_sets_form_a_lattice(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let eff = efficient_sets(&inst).unwrap();
        prop_assert!(eff.maximizers.contains(&eff.largest));
        for x in &eff.maximizers {
            for y in &eff.maximizers {
                prop_assert!(eff.maximizers.contains(&x.union(y)));
                prop_assert!(eff.maximizers.contains(&x.intersection(y)));
            }
        }
        if let Some(phi) = is_equilibrium_price(&inst, &p).unwrap() {
            prop_assert_eq!(inst.aggregate_valuation(&phi).unwrap(), eff.max_value);
        }
    }

    #[test]
    fn chains_exist_exactly_off_equilibrium(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let m = inst.market();
        let (_, trace) = verify_prices(&inst, &p).unwrap();
        let sets = reports(&inst, &p);
        let equilibrium = is_equilibrium_price(&inst, &p).unwrap().is_some();
        match find_chain(m, &trace, &sets, &BTreeSet::new()) {
            Ok(chain) => {
                prop_assert!(!equilibrium);
                let chain = chain.expect("a chain exists off equilibrium");
                prop_assert_eq!(check_chain(m, &trace, &sets, &chain), Ok(()));
            }
            Err(_) => prop_assert!(equilibrium),
        }
    }

    #[test]
    fn each_chain_lowers_lyapunov_by_one(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let m = inst.market();
        let (_, trace) = verify_prices(&inst, &p).unwrap();
        prop_assume!(!trace.is_equilibrium());
        let sets = reports(&inst, &p);
        let chains = find_disjoint_chains(m, &trace, &sets).unwrap();
        let l = lyapunov(&inst, &p).unwrap();
        let mut agents = BTreeSet::new();
        for chain in &chains {
            prop_assert_eq!(check_chain(m, &trace, &sets, chain), Ok(()));
            for a in chain.agent_set() {
                prop_assert!(agents.insert(a), "agent shared between chains");
            }
            let q = adjust_prices(m, &p, std::slice::from_ref(chain)).unwrap();
            prop_assert_eq!(lyapunov(&inst, &q).unwrap(), l - 1);
        }
        let q = adjust_prices(m, &p, &chains).unwrap();
        prop_assert_eq!(lyapunov(&inst, &q).unwrap(), l - chains.len() as i64);
    }

    #[test]
    fn equilibrium_support_attains_lyapunov(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        let (_, trace) = verify_prices(&inst, &p).unwrap();
        if let Verdict::Equilibrium { support } = &trace.verdict {
            prop_assert_eq!(lyapunov(&inst, &p).unwrap(), inst.aggregate_valuation(support).unwrap());
        }
    }

    #[test]
    fn auction_is_deterministic(seed in any::<u64>()) {
        let (inst, p) = instance_and_prices(seed);
        prop_assert_eq!(run_auction(&inst, &p).unwrap(), run_auction(&inst, &p).unwrap());
    }

    #[test]
    fn generated_instances_round_trip(seed in any::<u64>()) {
        let (inst, _) = instance_and_prices(seed);
        let text = emit_instance(&inst);
        let back: Instance = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(emit_instance(&back), text);
    }

    #[test]
    fn local_and_pairwise_supermodularity_agree(values in prop::collection::vec(-6i64..=6, 16)) {
        let m = Market::new(
            ["a", "b"],
            ["w", "x", "y", "z"].map(|c| (c.to_string(), ["a", "b"])),
        )
        .unwrap();
        let table = |vals: &[i64]| {
            Valuation::table(&m, AgentId(0), (0..16u32).map(|k: LocalMask| (m.from_local(AgentId(0), k), vals[k as usize]))).unwrap()
        };
        let inst = MarketInstance::new(m.clone(), vec![table(&values), table(&[0; 16])]).unwrap();
        prop_assert_eq!(
            is_supermodular(&inst, AgentId(0)).is_ok(),
            supermodularity_violation_pairwise(&inst, AgentId(0)).unwrap().is_none()
        );
    }
}

#[test]
fn demand_matches_a_direct_scan() {
    let (inst, p) = instance_and_prices(11);
    let m = inst.market();
    for a in m.agents() {
        let slice = p.for_agent(m, a);
        let r = demand(&inst, a, &slice).unwrap();
        let utilities: Vec<i64> = (0..1u32 << m.contracts_of(a).len())
            .map(|k| inst.utility(a, &m.from_local(a, k), &slice).unwrap())
            .collect();
        let best = *utilities.iter().max().unwrap();
        assert_eq!(r.optimum, best);
        let expected: Vec<ContractSet> = (0..utilities.len())
            .filter(|&k| utilities[k] == best)
            .map(|k| m.from_local(a, k as LocalMask))
            .collect();
        assert_eq!(r.sets, DemandSets::new(m, a, expected).unwrap());
    }
}
