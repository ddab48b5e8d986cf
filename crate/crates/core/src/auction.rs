//! The dynamic auction: collect demand, verify, and move prices one unit
//! along complements chains until the prices support a stable outcome.

use std::collections::BTreeSet;

use crate::chain::{find_disjoint_chains, ComplementsChain};
use crate::demand::{demand_all, DemandSets};
use crate::error::{Error, Result};
use crate::market::{AgentId, Market, MarketInstance};
use crate::oracles::require_gross_complements;
use crate::prices::{Outcome, PriceVector};
use crate::scalar::Scalar;
use crate::set::ContractSet;
use crate::verifier::{equilibrium_outcome, verify, VerificationTrace};

/// Applies one unit of adjustment per chain link: the agent refusing `wˡ`
/// pays one less for it and the agent keeping it pays one more.
pub fn adjust_prices<V: Scalar>(
    market: &Market,
    prices: &PriceVector<V>,
    chains: &[ComplementsChain],
) -> Result<PriceVector<V>> {
    let mut seen = BTreeSet::new();
    for chain in chains {
        for a in chain.agent_set() {
            if !seen.insert(a) {
                return Err(Error::OverlappingChains {
                    agent: market.agent_name(a).to_owned(),
                });
            }
        }
    }
    let mut next = prices.clone();
    for (left, w, right) in chains.iter().flat_map(|c| c.links()) {
        next.shift(market, left, w, -V::one())?;
        next.shift(market, right, w, V::one())?;
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandSummary<V> {
    pub agent: AgentId,
    pub demand_sets: usize,
    pub optimum: V,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round<V> {
    /// 1-based round number.
    pub index: usize,
    pub prices: PriceVector<V>,
    pub demand: Vec<DemandSummary<V>>,
    pub verification: VerificationTrace,
    /// Empty on the final round.
    pub chains: Vec<ComplementsChain>,
    pub lyapunov: V,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionTrace<V> {
    pub rounds: Vec<Round<V>>,
    pub outcome: Outcome<V>,
}

impl<V: Scalar> AuctionTrace<V> {
    pub fn total_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn lyapunov_values(&self) -> Vec<V> {
        self.rounds.iter().map(|r| r.lyapunov).collect()
    }

    pub fn final_prices(&self) -> &PriceVector<V> {
        &self.rounds.last().expect("at least one round").prices
    }
}

/// Runs the auction from `initial` until the verifier certifies an
/// equilibrium.
///
/// Each round lowers the Lyapunov value by exactly the number of chains
/// applied; a deviation is reported as an internal error. The loop is capped
/// at `L(p⁰) − Σ_i v_i(∅) + 1` rounds, which bounds the decrease available
/// before the Lyapunov value meets the maximum aggregate valuation.
pub fn run_auction<V: Scalar>(
    instance: &MarketInstance<V>,
    initial: &PriceVector<V>,
) -> Result<AuctionTrace<V>> {
    let market = instance.market();
    initial.validate_balanced(market)?;
    require_gross_complements(instance)?;

    let floor = instance.aggregate_valuation(&ContractSet::new())?;
    let mut prices = initial.clone();
    let mut rounds: Vec<Round<V>> = Vec::new();
    let mut cap = None;

    loop {
        let reports = demand_all(instance, &prices)?;
        let lyapunov: V = reports.iter().map(|r| r.optimum).sum();
        let cap = *cap.get_or_insert_with(|| {
            usize::try_from(lyapunov.widen() - floor.widen() + 1).unwrap_or(usize::MAX)
        });
        if let Some(prev) = rounds.last() {
            let drop = prev.lyapunov.widen() - lyapunov.widen();
            if drop != prev.chains.len() as i128 {
                return Err(Error::Invariant(format!(
                    "round {} applied {} chains but the Lyapunov value fell by {drop}",
                    prev.index,
                    prev.chains.len()
                )));
            }
        }

        let sets: Vec<DemandSets> = reports.iter().map(|r| r.sets.clone()).collect();
        let verification = verify(market, &sets)?;
        let demand = reports
            .iter()
            .map(|r| DemandSummary {
                agent: r.agent(),
                demand_sets: r.sets.sets().len(),
                optimum: r.optimum,
            })
            .collect();
        let index = rounds.len() + 1;

        if verification.is_equilibrium() {
            let outcome = equilibrium_outcome(&verification, &prices)?;
            rounds.push(Round {
                index,
                prices,
                demand,
                verification,
                chains: Vec::new(),
                lyapunov,
            });
            return Ok(AuctionTrace { rounds, outcome });
        }
        if index >= cap {
            return Err(Error::RoundCap { cap });
        }

        let chains = find_disjoint_chains(market, &verification, &sets)?;
        let next = adjust_prices(market, &prices, &chains)?;
        rounds.push(Round {
            index,
            prices,
            demand,
            verification,
            chains,
            lyapunov,
        });
        prices = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::market::ContractId;
    use crate::verifier::verify;

    #[test]
    fn adjust_along_example_one_chain() {
        let (market, reports) = fixtures::example_one();
        let trace = verify(&market, &reports).unwrap();
        let chains = find_disjoint_chains(&market, &trace, &reports).unwrap();
        let p0 = PriceVector::<i64>::zero(&market);
        let p1 = adjust_prices(&market, &p0, &chains).unwrap();
        let get = |a: &str, w: &str| {
            p1.get(
                &market,
                market.agent(a).unwrap(),
                market.contract(w).unwrap(),
            )
            .unwrap()
        };
        let expected = [
            ("i1", "w5", -1),
            ("i2", "w5", 1),
            ("i2", "w4", -1),
            ("i1", "w4", 1),
            ("i1", "w3", -1),
            ("i3", "w3", 1),
            ("i3", "w2", -1),
            ("i1", "w2", 1),
            ("i1", "w1", 0),
            ("i2", "w1", 0),
        ];
        for (a, w, delta) in expected {
            assert_eq!(get(a, w), delta, "({a}, {w})");
        }
        p1.validate_balanced(&market).unwrap();
    }

    #[test]
    fn empty_chain_list_is_identity() {
        let inst = fixtures::ana_bob();
        let p = fixtures::ana_bob_prices(inst.market(), 3);
        assert_eq!(adjust_prices(inst.market(), &p, &[]).unwrap(), p);
    }

    #[test]
    fn ana_bob_single_step() {
        let inst = fixtures::ana_bob();
        let m = inst.market();
        let chain =
            ComplementsChain::new(vec![AgentId(0), AgentId(1)], vec![ContractId(0)]).unwrap();
        let p = adjust_prices(m, &fixtures::ana_bob_prices(m, 3), &[chain]).unwrap();
        assert_eq!(p, fixtures::ana_bob_prices(m, 2));
    }

    #[test]
    fn overlapping_chains_are_rejected() {
        let inst = fixtures::ana_bob();
        let m = inst.market();
        let chain =
            ComplementsChain::new(vec![AgentId(0), AgentId(1)], vec![ContractId(0)]).unwrap();
        let err =
            adjust_prices(m, &PriceVector::<i64>::zero(m), &[chain.clone(), chain]).unwrap_err();
        assert!(matches!(err, Error::OverlappingChains { .. }));
    }

    #[test]
    fn coordinates_outside_the_domain_are_rejected() {
        let (market, _) = fixtures::example_one();
        // i3 does not sign w1.
        let chain =
            ComplementsChain::new(vec![AgentId(0), AgentId(2)], vec![ContractId(0)]).unwrap();
        let err = adjust_prices(&market, &PriceVector::<i64>::zero(&market), &[chain]).unwrap_err();
        assert!(matches!(err, Error::NotAParticipant { .. }));
    }

    #[test]
    fn ana_bob_from_zero_stops_immediately() {
        let inst = fixtures::ana_bob();
        let m = inst.market();
        let trace = run_auction(&inst, &PriceVector::zero(m)).unwrap();
        assert_eq!(trace.total_rounds(), 1);
        assert_eq!(
            trace.outcome,
            Outcome::from_prices(&m.all_contracts(), &PriceVector::zero(m))
        );
    }

    #[test]
    fn ana_bob_from_three() {
        let inst = fixtures::ana_bob();
        let m = inst.market();
        let trace = run_auction(&inst, &fixtures::ana_bob_prices(m, 3)).unwrap();
        assert_eq!(trace.total_rounds(), 2);
        assert_eq!(trace.lyapunov_values(), vec![6, 5]);
        let w = m.contract("w").unwrap();
        assert_eq!(trace.outcome.transfer(m, AgentId(0), w), Some(2));
        assert_eq!(trace.outcome.transfer(m, AgentId(1), w), Some(-2));
    }

    #[test]
    fn two_contracts_from_zero() {
        let inst = fixtures::two_contracts();
        let trace = run_auction(&inst, &PriceVector::zero(inst.market())).unwrap();
        assert_eq!(trace.total_rounds(), 1);
        assert_eq!(trace.outcome.support(), inst.market().all_contracts());
    }

    #[test]
    fn non_supermodular_instances_are_refused() {
        let inst = fixtures::substitutes();
        let err = run_auction(&inst, &PriceVector::zero(inst.market())).unwrap_err();
        assert!(err.is_precondition(), "{err}");
    }
}
