//! Demand correspondences, indirect utilities and the Lyapunov function.
//!
//! Demand is computed by enumerating every subset of the agent's contracts,
//! so it is exact but exponential in `|Ω_i|`.

use crate::error::{Error, Result};
use crate::market::{AgentId, ContractId, LocalMask, Market, MarketInstance, MAX_AGENT_CONTRACTS};
use crate::prices::{AgentPrices, PriceVector};
use crate::scalar::Scalar;
use crate::set::ContractSet;

/// Default bound on `|Ω_i|` for demand enumeration.
pub const DEMAND_ENUMERATION_CAP: usize = MAX_AGENT_CONTRACTS;

/// The demand sets one agent reports at some price, in canonical order
/// (cardinality, then lexicographic by contract index).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DemandSets {
    agent: AgentId,
    sets: Vec<ContractSet>,
}

impl DemandSets {
    /// Wraps a reported family. The family must be nonempty and every member
    /// must lie inside the agent's contracts; duplicates are dropped.
    pub fn new(market: &Market, agent: AgentId, mut sets: Vec<ContractSet>) -> Result<Self> {
        if agent.0 >= market.agent_count() {
            return Err(Error::UnknownAgent(format!("#{}", agent.0)));
        }
        let held = market.contract_set_of(agent);
        for s in &sets {
            if let Some(c) = s.difference(&held).iter().next() {
                return Err(market.not_a_participant(agent, c));
            }
        }
        if sets.is_empty() {
            return Err(Error::Schema {
                path: format!("reports.{}", market.agent_name(agent)),
                message: "an agent reports at least one demand set".into(),
            });
        }
        sets.sort_by(|a, b| a.canonical_cmp(b));
        sets.dedup();
        Ok(Self { agent, sets })
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn sets(&self) -> &[ContractSet] {
        &self.sets
    }

    pub fn contains_set(&self, set: &ContractSet) -> bool {
        self.sets.iter().any(|s| s == set)
    }

    /// Whether the agent demands `c`, i.e. `c` lies in some demand set.
    pub fn demands(&self, c: ContractId) -> bool {
        self.sets.iter().any(|s| s.contains(c))
    }

    /// Union of all demand sets, the largest demand set under gross
    /// complements.
    pub fn largest(&self) -> ContractSet {
        self.sets.iter().collect()
    }

    /// Intersection of all demand sets: the strongly demanded contracts.
    pub fn smallest(&self) -> ContractSet {
        let (first, rest) = self.sets.split_first().expect("nonempty family");
        rest.iter()
            .fold(first.clone(), |acc, s| acc.intersection(s))
    }

    pub fn largest_and_smallest(&self) -> (ContractSet, ContractSet) {
        (self.largest(), self.smallest())
    }

    /// Union of the demand sets contained in `allowed`; `None` when no demand
    /// set fits.
    pub fn confined_largest(&self, allowed: &ContractSet) -> Option<ContractSet> {
        let mut fitting = self.sets.iter().filter(|s| s.is_subset(allowed)).peekable();
        fitting.peek()?;
        Some(fitting.collect())
    }

    /// Intersection of the demand sets containing `w`; `None` when `w` is not
    /// demanded. Contracts in the result are complements to `w`.
    pub fn anchored_intersection(&self, w: ContractId) -> Option<ContractSet> {
        self.sets
            .iter()
            .filter(|s| s.contains(w))
            .fold(None, |acc: Option<ContractSet>, s| {
                Some(match acc {
                    None => s.clone(),
                    Some(a) => a.intersection(s),
                })
            })
    }
}

/// Full demand correspondence `D_i(p_i)` with the indirect utility `V_i(p_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DemandReport<V> {
    pub sets: DemandSets,
    pub optimum: V,
}

impl<V> DemandReport<V> {
    pub fn agent(&self) -> AgentId {
        self.sets.agent
    }
}

pub fn demand<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
    prices: &AgentPrices<V>,
) -> Result<DemandReport<V>> {
    demand_with_cap(instance, agent, prices, DEMAND_ENUMERATION_CAP)
}

/// Enumerates all `2^|Ω_agent|` bundles and keeps every maximizer.
pub fn demand_with_cap<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
    prices: &AgentPrices<V>,
    cap: usize,
) -> Result<DemandReport<V>> {
    let market = instance.market();
    if agent.0 >= market.agent_count() {
        return Err(Error::UnknownAgent(format!("#{}", agent.0)));
    }
    if prices.agent() != agent {
        return Err(Error::Invariant(
            "price slice belongs to another agent".into(),
        ));
    }
    let n = market.contracts_of(agent).len();
    if n > cap {
        return Err(Error::EnumerationCap {
            what: format!("agent {}", market.agent_name(agent)),
            size: n,
            cap,
        });
    }

    let valuation = instance.valuation(agent);
    let (optimum, argmax) = maximize(n, |mask| valuation.value(mask), prices.values());
    let sets = argmax
        .into_iter()
        .map(|mask| market.from_local(agent, mask))
        .collect();
    Ok(DemandReport {
        sets: DemandSets::new(market, agent, sets)?,
        optimum,
    })
}

/// Maximizes `value(mask) − Σ price` over all masks of `n` bits, returning
/// the optimum and every maximizing mask in ascending mask order.
pub(crate) fn maximize<V: Scalar>(
    n: usize,
    value: impl Fn(LocalMask) -> V,
    prices: &[V],
) -> (V, Vec<LocalMask>) {
    let size = 1usize << n;
    let mut cost = vec![V::zero(); size];
    let mut best = value(0);
    let mut argmax = vec![0];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        cost[mask] = cost[mask & (mask - 1)] + prices[low];
        let u = value(mask as LocalMask) - cost[mask];
        if u > best {
            best = u;
            argmax.clear();
        }
        if u == best {
            argmax.push(mask as LocalMask);
        }
    }
    (best, argmax)
}

/// Demand reports of all agents in declaration order.
pub fn demand_all<V: Scalar>(
    instance: &MarketInstance<V>,
    prices: &PriceVector<V>,
) -> Result<Vec<DemandReport<V>>> {
    let market = instance.market();
    market
        .agents()
        .map(|a| demand(instance, a, &prices.for_agent(market, a)))
        .collect()
}

/// `L(p) = Σ_i V_i(p_i)`.
pub fn lyapunov<V: Scalar>(instance: &MarketInstance<V>, prices: &PriceVector<V>) -> Result<V> {
    prices.validate_balanced(instance.market())?;
    Ok(demand_all(instance, prices)?
        .iter()
        .map(|r| r.optimum)
        .sum())
}
