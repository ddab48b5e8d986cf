//! Level-by-level test of whether a balanced price vector supports a
//! competitive equilibrium.
//!
//! At level `k` every agent keeps the union `d̄^k_i` of its demand sets that
//! fit inside the surviving contracts `Ω^k`. A contract is partially
//! agreeable at that level (`G^k`) when one participant keeps it and another
//! does not. The procedure stops with an equilibrium when `G^k` is empty,
//! with a non-equilibrium when `G^k` meets the strongly demanded contracts
//! `H`, and otherwise removes `G^k` and descends a level.

use crate::demand::{demand_all, DemandReport, DemandSets};
use crate::error::{Error, Result};
use crate::market::{AgentId, ContractId, Market, MarketInstance};
use crate::prices::{Outcome, PriceVector};
use crate::scalar::Scalar;
use crate::set::ContractSet;

/// First participant pair showing that a contract is partially agreeable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub contract: ContractId,
    pub demanding: AgentId,
    pub refusing: AgentId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    /// 1-based level number `k`.
    pub index: usize,
    /// `Ω^k`.
    pub remaining: ContractSet,
    /// `d̄^k_i` for every agent, in agent order.
    pub confined: Vec<ContractSet>,
    /// `G^k`.
    pub partially_agreeable: ContractSet,
    pub disagreements: Vec<Disagreement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The prices support `support`, the largest efficient set.
    Equilibrium { support: ContractSet },
    /// `G^level ∩ H = witness` is nonempty.
    NonEquilibrium { level: usize, witness: ContractSet },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationTrace {
    /// `H(p)`.
    pub strongly_demanded: ContractSet,
    pub levels: Vec<Level>,
    pub verdict: Verdict,
}

impl VerificationTrace {
    pub fn is_equilibrium(&self) -> bool {
        matches!(self.verdict, Verdict::Equilibrium { .. })
    }

    /// Level `k`, 1-based.
    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k - 1]
    }

    pub fn final_level(&self) -> &Level {
        self.levels.last().expect("a trace has at least one level")
    }

    /// `|G^1|, …, |G^s|`.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.partially_agreeable.len())
            .collect()
    }
}

/// `H(p)`: contracts that lie in every demand set of at least one agent.
pub fn strongly_demanded(reports: &[DemandSets]) -> ContractSet {
    reports
        .iter()
        .map(|r| r.smallest())
        .fold(ContractSet::new(), |acc, s| acc.union(&s))
}

/// Runs the level procedure on one demand report per agent.
pub fn verify(market: &Market, reports: &[DemandSets]) -> Result<VerificationTrace> {
    if reports.len() != market.agent_count()
        || reports
            .iter()
            .enumerate()
            .any(|(i, r)| r.agent() != AgentId(i))
    {
        return Err(Error::Invariant(
            "verification needs one report per agent in agent order".into(),
        ));
    }

    let strongly_demanded = strongly_demanded(reports);
    let mut remaining = market.all_contracts();
    let mut levels = Vec::new();
    let max_levels = market.contract_count() + 1;

    for index in 1..=max_levels {
        let confined = reports
            .iter()
            .map(|r| {
                r.confined_largest(&remaining)
                    .ok_or_else(|| Error::NotGrossComplements {
                        agent: market.agent_name(r.agent()).to_owned(),
                        reason: format!("reports have no demand set confined to level {index}"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;

        let disagreements: Vec<Disagreement> = market
            .contracts()
            .filter_map(|c| {
                let members = market.participants(c);
                let demanding = members.iter().find(|a| confined[a.0].contains(c))?;
                let refusing = members.iter().find(|a| !confined[a.0].contains(c))?;
                Some(Disagreement {
                    contract: c,
                    demanding: *demanding,
                    refusing: *refusing,
                })
            })
            .collect();
        let partially_agreeable: ContractSet = disagreements.iter().map(|d| d.contract).collect();

        let verdict = if partially_agreeable.is_empty() {
            Some(Verdict::Equilibrium {
                support: confined.iter().collect(),
            })
        } else {
            let witness = partially_agreeable.intersection(&strongly_demanded);
            (!witness.is_empty()).then_some(Verdict::NonEquilibrium {
                level: index,
                witness,
            })
        };

        let next = remaining.difference(&partially_agreeable);
        levels.push(Level {
            index,
            remaining,
            confined,
            partially_agreeable,
            disagreements,
        });
        if let Some(verdict) = verdict {
            return Ok(VerificationTrace {
                strongly_demanded,
                levels,
                verdict,
            });
        }
        remaining = next;
    }
    Err(Error::Invariant(format!(
        "verification did not stop within {max_levels} levels"
    )))
}

/// Computes every agent's demand at `prices` and verifies them.
pub fn verify_prices<V: Scalar>(
    instance: &MarketInstance<V>,
    prices: &PriceVector<V>,
) -> Result<(Vec<DemandReport<V>>, VerificationTrace)> {
    prices.validate_balanced(instance.market())?;
    let reports = demand_all(instance, prices)?;
    let sets: Vec<DemandSets> = reports.iter().map(|r| r.sets.clone()).collect();
    let trace = verify(instance.market(), &sets)?;
    Ok((reports, trace))
}

/// The stable outcome read off an equilibrium trace: the support is signed
/// with transfers equal to the prices.
pub fn equilibrium_outcome<V: Scalar>(
    trace: &VerificationTrace,
    prices: &PriceVector<V>,
) -> Result<Outcome<V>> {
    match &trace.verdict {
        Verdict::Equilibrium { support } => Ok(Outcome::from_prices(support, prices)),
        Verdict::NonEquilibrium { .. } => Err(Error::WrongVerdict {
            expected: "an equilibrium",
        }),
    }
}
