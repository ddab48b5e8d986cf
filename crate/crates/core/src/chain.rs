//! Complements chains at a non-equilibrium price vector.
//!
//! A chain `i¹ w¹ i² w² … wˢ iˢ⁺¹` starts with a level-1 partially agreeable
//! contract its first agent refuses and ends with a strongly demanded
//! contract of level `s`. Each inner agent `iˡ` only takes `wˡ` together with
//! `wˡ⁻¹`. Chains are built backwards from the terminating level.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::demand::DemandSets;
use crate::error::{Error, Result};
use crate::market::{AgentId, ContractId, Market};
use crate::verifier::{Verdict, VerificationTrace};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComplementsChain {
    /// `i¹ … iˢ⁺¹`.
    agents: Vec<AgentId>,
    /// `w¹ … wˢ`.
    contracts: Vec<ContractId>,
}

impl ComplementsChain {
    pub fn new(agents: Vec<AgentId>, contracts: Vec<ContractId>) -> Result<Self> {
        if contracts.is_empty() || agents.len() != contracts.len() + 1 {
            return Err(Error::Invariant(format!(
                "a chain alternates agents and contracts; got {} agents and {} contracts",
                agents.len(),
                contracts.len()
            )));
        }
        Ok(Self { agents, contracts })
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn contracts(&self) -> &[ContractId] {
        &self.contracts
    }

    /// Number of contracts `s`.
    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    /// `iˢ⁺¹`, the agent who strongly demands the last contract.
    pub fn terminal(&self) -> AgentId {
        *self.agents.last().expect("chains are nonempty")
    }

    /// `(iˡ, wˡ, iˡ⁺¹)` for `l = 1..=s`.
    pub fn links(&self) -> impl Iterator<Item = (AgentId, ContractId, AgentId)> + '_ {
        self.contracts
            .iter()
            .enumerate()
            .map(|(l, &w)| (self.agents[l], w, self.agents[l + 1]))
    }

    pub fn agent_set(&self) -> BTreeSet<AgentId> {
        self.agents.iter().copied().collect()
    }

    /// Space-separated ids, e.g. `i1 w5 i2`.
    pub fn display(&self, market: &Market) -> String {
        let mut out = market.agent_name(self.agents[0]).to_owned();
        for (_, w, next) in self.links() {
            let _ = write!(
                out,
                " {} {}",
                market.contract_name(w),
                market.agent_name(next)
            );
        }
        out
    }
}

fn require_non_equilibrium(trace: &VerificationTrace) -> Result<usize> {
    match trace.verdict {
        Verdict::NonEquilibrium { level, .. } => Ok(level),
        Verdict::Equilibrium { .. } => Err(Error::WrongVerdict {
            expected: "a non-equilibrium",
        }),
    }
}

struct Search<'a> {
    market: &'a Market,
    trace: &'a VerificationTrace,
    reports: &'a [DemandSets],
    excluded: &'a BTreeSet<AgentId>,
    dead: HashSet<(usize, ContractId)>,
}

impl Search<'_> {
    /// Completes a chain backwards from `wˡ = w`, returning `i¹ … iˡ` and
    /// `w¹ … wˡ`. Whether this succeeds depends only on `(l, w)`, so failures
    /// are memoized.
    fn backward(&mut self, l: usize, w: ContractId) -> Option<(Vec<AgentId>, Vec<ContractId>)> {
        if self.dead.contains(&(l, w)) {
            return None;
        }
        let level = self.trace.level(l);
        for &i in self.market.participants(w) {
            if self.excluded.contains(&i) || level.confined[i.0].contains(w) {
                continue;
            }
            if l == 1 {
                return Some((vec![i], vec![w]));
            }
            let Some(complements) = self.reports[i.0].anchored_intersection(w) else {
                continue;
            };
            let below = self.trace.level(l - 1);
            let candidates = complements
                .intersection(&below.partially_agreeable)
                .intersection(&below.confined[i.0]);
            for prev in candidates.iter() {
                if let Some((mut agents, mut contracts)) = self.backward(l - 1, prev) {
                    agents.push(i);
                    contracts.push(w);
                    return Some((agents, contracts));
                }
            }
        }
        self.dead.insert((l, w));
        None
    }
}

/// Builds one complements chain avoiding `excluded` agents, with every choice
/// taken in declaration order and depth-first backtracking on dead ends.
pub fn find_chain(
    market: &Market,
    trace: &VerificationTrace,
    reports: &[DemandSets],
    excluded: &BTreeSet<AgentId>,
) -> Result<Option<ComplementsChain>> {
    let s = require_non_equilibrium(trace)?;
    let mut search = Search {
        market,
        trace,
        reports,
        excluded,
        dead: HashSet::new(),
    };
    let top = trace
        .level(s)
        .partially_agreeable
        .intersection(&trace.strongly_demanded);
    for w in top.iter() {
        for &terminal in market.participants(w) {
            if excluded.contains(&terminal) || !reports[terminal.0].smallest().contains(w) {
                continue;
            }
            if let Some((mut agents, contracts)) = search.backward(s, w) {
                agents.push(terminal);
                return ComplementsChain::new(agents, contracts).map(Some);
            }
        }
    }
    Ok(None)
}

/// Greedily collects chains with pairwise disjoint agent sets; each new chain
/// avoids every agent of the earlier ones.
pub fn find_disjoint_chains(
    market: &Market,
    trace: &VerificationTrace,
    reports: &[DemandSets],
) -> Result<Vec<ComplementsChain>> {
    let mut excluded = BTreeSet::new();
    let mut chains = Vec::new();
    while let Some(chain) = find_chain(market, trace, reports, &excluded)? {
        excluded.extend(chain.agents.iter().copied());
        chains.push(chain);
    }
    if chains.is_empty() {
        return Err(Error::ChainNotFound);
    }
    Ok(chains)
}

/// Checks every defining condition of a complements chain against the trace
/// it was built from, returning a description of the first failure.
pub fn check_chain(
    market: &Market,
    trace: &VerificationTrace,
    reports: &[DemandSets],
    chain: &ComplementsChain,
) -> std::result::Result<(), String> {
    let s = require_non_equilibrium(trace).map_err(|e| e.to_string())?;
    if chain.len() != s {
        return Err(format!("chain has {} contracts, expected {s}", chain.len()));
    }
    let distinct: BTreeSet<_> = chain.contracts.iter().collect();
    if distinct.len() != chain.len() {
        return Err("chain repeats a contract".into());
    }
    for (k, (left, w, right)) in chain.links().enumerate() {
        let l = k + 1;
        let level = trace.level(l);
        if !market.participates(left, w) || !market.participates(right, w) {
            return Err(format!("link {l} joins a non-participant"));
        }
        if left == right {
            return Err(format!("link {l} repeats its agent"));
        }
        if !level.partially_agreeable.contains(w) {
            return Err(format!("w{l} is not level-{l} partially agreeable"));
        }
        if level.confined[left.0].contains(w) {
            return Err(format!("left agent of link {l} keeps w{l}"));
        }
        if !level.confined[right.0].contains(w) {
            return Err(format!("right agent of link {l} does not keep w{l}"));
        }
        if l >= 2 {
            let prev = chain.contracts[l - 2];
            let anchored = reports[left.0].anchored_intersection(w);
            if !anchored.is_some_and(|a| a.contains(prev)) {
                return Err(format!(
                    "w{} is not a complement to w{l} for its agent",
                    l - 1
                ));
            }
        }
    }
    let last = chain.contracts[s - 1];
    if !trace.strongly_demanded.contains(last) {
        return Err("last contract is not strongly demanded".into());
    }
    if !reports[chain.terminal().0].smallest().contains(last) {
        return Err("terminal agent does not strongly demand the last contract".into());
    }
    Ok(())
}
