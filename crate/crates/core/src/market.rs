//! Agents, primitive contracts, participation and integer valuations.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::prices::AgentPrices;
use crate::scalar::Scalar;
use crate::set::ContractSet;

/// Largest number of contracts a single agent may hold. Valuations are stored
/// as dense tables over subsets, indexed by `u32` bitmasks.
pub const MAX_AGENT_CONTRACTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContractId(pub usize);

/// Subset of one agent's contracts, bit `k` standing for the `k`-th entry of
/// [`Market::contracts_of`].
pub type LocalMask = u32;

/// Who may sign what. Ids are opaque strings; every internal ordering follows
/// the declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Market {
    agents: Vec<String>,
    contracts: Vec<String>,
    participants: Vec<Vec<AgentId>>,
    holdings: Vec<Vec<ContractId>>,
    agent_index: HashMap<String, AgentId>,
    contract_index: HashMap<String, ContractId>,
}

impl Market {
    /// Builds the participation structure. Participants of each contract are
    /// kept in agent declaration order.
    pub fn new<A, C, P>(agents: A, contracts: C) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        C: IntoIterator<Item = (String, P)>,
        P: IntoIterator,
        P::Item: AsRef<str>,
    {
        let agents: Vec<String> = agents.into_iter().map(Into::into).collect();
        let mut agent_index = HashMap::new();
        for (i, a) in agents.iter().enumerate() {
            if agent_index.insert(a.clone(), AgentId(i)).is_some() {
                return Err(Error::DuplicateId(a.clone()));
            }
        }

        let mut names = Vec::new();
        let mut participants = Vec::new();
        let mut contract_index = HashMap::new();
        let mut holdings = vec![Vec::new(); agents.len()];
        for (id, members) in contracts {
            let c = ContractId(names.len());
            if contract_index.insert(id.clone(), c).is_some() || agent_index.contains_key(&id) {
                return Err(Error::DuplicateId(id));
            }
            let mut members = members
                .into_iter()
                .map(|m| {
                    agent_index
                        .get(m.as_ref())
                        .copied()
                        .ok_or_else(|| Error::UnknownAgent(m.as_ref().to_owned()))
                })
                .collect::<Result<Vec<_>>>()?;
            members.sort();
            if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateId(format!("{}/{}", id, agents[w[0].0])));
            }
            if members.len() < 2 {
                return Err(Error::TooFewParticipants { contract: id });
            }
            for &a in &members {
                holdings[a.0].push(c);
            }
            names.push(id);
            participants.push(members);
        }

        for (a, held) in holdings.iter().enumerate() {
            if held.len() > MAX_AGENT_CONTRACTS {
                return Err(Error::EnumerationCap {
                    what: format!("agent {}", agents[a]),
                    size: held.len(),
                    cap: MAX_AGENT_CONTRACTS,
                });
            }
        }

        Ok(Self {
            agents,
            contracts: names,
            participants,
            holdings,
            agent_index,
            contract_index,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn contract_count(&self) -> usize {
        self.contracts.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn contracts(&self) -> impl Iterator<Item = ContractId> + Clone {
        (0..self.contracts.len()).map(ContractId)
    }

    pub fn all_contracts(&self) -> ContractSet {
        ContractSet::full(self.contracts.len())
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0]
    }

    pub fn contract_name(&self, c: ContractId) -> &str {
        &self.contracts[c.0]
    }

    pub fn agent(&self, name: &str) -> Result<AgentId> {
        self.agent_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAgent(name.to_owned()))
    }

    pub fn contract(&self, name: &str) -> Result<ContractId> {
        self.contract_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownContract(name.to_owned()))
    }

    /// `N(w)`, in agent declaration order.
    pub fn participants(&self, c: ContractId) -> &[AgentId] {
        &self.participants[c.0]
    }

    /// `Ω_i`, in contract declaration order.
    pub fn contracts_of(&self, a: AgentId) -> &[ContractId] {
        &self.holdings[a.0]
    }

    pub fn contract_set_of(&self, a: AgentId) -> ContractSet {
        self.holdings[a.0].iter().copied().collect()
    }

    pub fn participates(&self, a: AgentId, c: ContractId) -> bool {
        self.position(c, a).is_some()
    }

    /// Index of `a` within `N(c)`.
    pub fn position(&self, c: ContractId, a: AgentId) -> Option<usize> {
        self.participants.get(c.0)?.binary_search(&a).ok()
    }

    /// Index of `c` within `Ω_a`.
    pub fn local_index(&self, a: AgentId, c: ContractId) -> Option<usize> {
        self.holdings[a.0].binary_search(&c).ok()
    }

    /// Encodes `set ⊆ Ω_a` as a local bitmask.
    pub fn local_mask(&self, a: AgentId, set: &ContractSet) -> Result<LocalMask> {
        set.iter().try_fold(0, |mask, c| {
            self.local_index(a, c)
                .map(|k| mask | (1 << k))
                .ok_or_else(|| self.not_a_participant(a, c))
        })
    }

    /// Local bitmask of `set ∩ Ω_a`.
    pub fn restrict_mask(&self, a: AgentId, set: &ContractSet) -> LocalMask {
        self.holdings[a.0]
            .iter()
            .enumerate()
            .filter(|(_, &c)| set.contains(c))
            .fold(0, |mask, (k, _)| mask | (1 << k))
    }

    pub fn from_local(&self, a: AgentId, mask: LocalMask) -> ContractSet {
        self.holdings[a.0]
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &c)| c)
            .collect()
    }

    pub fn contract_names(&self, set: &ContractSet) -> Vec<String> {
        set.iter()
            .map(|c| self.contract_name(c).to_owned())
            .collect()
    }

    pub fn set_from_names<S: AsRef<str>>(&self, names: &[S]) -> Result<ContractSet> {
        names.iter().map(|n| self.contract(n.as_ref())).collect()
    }

    /// Renders a set as `{a,b}` using contract ids.
    pub fn show_set(&self, set: &ContractSet) -> String {
        format!("{{{}}}", self.contract_names(set).join(","))
    }

    pub(crate) fn not_a_participant(&self, a: AgentId, c: ContractId) -> Error {
        Error::NotAParticipant {
            agent: self.agent_name(a).to_owned(),
            contract: self
                .contracts
                .get(c.0)
                .cloned()
                .unwrap_or_else(|| format!("#{}", c.0)),
        }
    }
}

/// How a valuation was written down. Kept so that instances re-emit in the
/// encoding they were loaded from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValuationSource<V> {
    Table,
    /// Additive per-contract values (aligned with `Ω_i`) plus nonnegative
    /// bonuses paid when a whole set is signed.
    Synergy {
        additive: Vec<V>,
        bonuses: Vec<(LocalMask, V)>,
    },
}

/// Complete table `v_i : 2^{Ω_i} → Z`, indexed by local mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation<V> {
    values: Vec<V>,
    source: ValuationSource<V>,
}

impl<V: Scalar> Valuation<V> {
    /// Builds a table valuation. Every subset of `Ω_a` must be listed exactly
    /// once.
    pub fn table<I>(market: &Market, a: AgentId, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ContractSet, V)>,
    {
        let n = market.contracts_of(a).len();
        let mut values: Vec<Option<V>> = vec![None; 1 << n];
        for (set, v) in entries {
            let mask = market.local_mask(a, &set)?;
            if values[mask as usize].replace(v).is_some() {
                return Err(Error::DuplicateValuation {
                    agent: market.agent_name(a).to_owned(),
                    subset: market.contract_names(&set),
                });
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(mask, v)| {
                v.ok_or_else(|| Error::MissingValuation {
                    agent: market.agent_name(a).to_owned(),
                    subset: market.contract_names(&market.from_local(a, mask as LocalMask)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            values,
            source: ValuationSource::Table,
        })
    }

    /// Builds `v(T) = Σ_{w∈T} additive(w) + Σ_{B⊆T} bonus(B)` from a
    /// complete additive map and nonnegative bonuses on nonempty sets.
    pub fn synergy<I, J>(market: &Market, a: AgentId, additive: I, bonuses: J) -> Result<Self>
    where
        I: IntoIterator<Item = (ContractId, V)>,
        J: IntoIterator<Item = (ContractSet, V)>,
    {
        let held = market.contracts_of(a);
        let mut add: Vec<Option<V>> = vec![None; held.len()];
        for (c, v) in additive {
            let k = market
                .local_index(a, c)
                .ok_or_else(|| market.not_a_participant(a, c))?;
            if add[k].replace(v).is_some() {
                return Err(Error::DuplicateValuation {
                    agent: market.agent_name(a).to_owned(),
                    subset: vec![market.contract_name(c).to_owned()],
                });
            }
        }
        let additive = add
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Error::MissingValuation {
                    agent: market.agent_name(a).to_owned(),
                    subset: vec![market.contract_name(held[k]).to_owned()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let bonuses = bonuses
            .into_iter()
            .map(|(set, v)| {
                let mask = market.local_mask(a, &set)?;
                if mask == 0 || v < V::zero() {
                    return Err(Error::Schema {
                        path: format!("valuations.{}.synergy.bonuses", market.agent_name(a)),
                        message: "bonuses need a nonempty set and a nonnegative value".into(),
                    });
                }
                Ok((mask, v))
            })
            .collect::<Result<Vec<_>>>()?;

        let values = (0..1u32 << held.len())
            .map(|mask| {
                let base: V = (0..held.len())
                    .filter(|k| mask & (1 << k) != 0)
                    .map(|k| additive[k])
                    .sum();
                bonuses
                    .iter()
                    .filter(|(b, _)| b & mask == *b)
                    .fold(base, |acc, (_, v)| acc + *v)
            })
            .collect();
        Ok(Self {
            values,
            source: ValuationSource::Synergy { additive, bonuses },
        })
    }

    pub fn value(&self, mask: LocalMask) -> V {
        self.values[mask as usize]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn source(&self) -> &ValuationSource<V> {
        &self.source
    }
}

/// A market together with every agent's valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance<V> {
    market: Market,
    valuations: Vec<Valuation<V>>,
}

impl<V: Scalar> MarketInstance<V> {
    pub fn new(market: Market, valuations: Vec<Valuation<V>>) -> Result<Self> {
        if valuations.len() != market.agent_count() {
            return Err(Error::Invariant(format!(
                "{} valuations for {} agents",
                valuations.len(),
                market.agent_count()
            )));
        }
        for (a, v) in valuations.iter().enumerate() {
            if v.values.len() != 1 << market.contracts_of(AgentId(a)).len() {
                return Err(Error::Invariant(format!(
                    "valuation of {} has the wrong size",
                    market.agent_name(AgentId(a))
                )));
            }
        }
        Ok(Self { market, valuations })
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn valuation(&self, a: AgentId) -> &Valuation<V> {
        &self.valuations[a.0]
    }

    /// `v_a(bundle)`; the bundle must lie inside `Ω_a`.
    pub fn value_of(&self, a: AgentId, bundle: &ContractSet) -> Result<V> {
        self.check_agent(a)?;
        let mask = self.market.local_mask(a, bundle)?;
        Ok(self.valuations[a.0].value(mask))
    }

    /// `U_a(Ψ, p_a) = v_a(Ψ) − Σ_{w∈Ψ} p_a^w`.
    pub fn utility(&self, a: AgentId, bundle: &ContractSet, prices: &AgentPrices<V>) -> Result<V> {
        self.check_agent(a)?;
        if prices.agent() != a {
            return Err(Error::Invariant(
                "price slice belongs to another agent".into(),
            ));
        }
        let mask = self.market.local_mask(a, bundle)?;
        Ok(self.valuations[a.0].value(mask) - prices.cost(mask))
    }

    /// `Σ_i v_i(Φ ∩ Ω_i)`.
    pub fn aggregate_valuation(&self, set: &ContractSet) -> Result<V> {
        if let Some(c) = set.iter().find(|c| c.0 >= self.market.contract_count()) {
            return Err(Error::UnknownContract(format!("#{}", c.0)));
        }
        Ok(self
            .market
            .agents()
            .map(|a| self.valuations[a.0].value(self.market.restrict_mask(a, set)))
            .sum())
    }

    fn check_agent(&self, a: AgentId) -> Result<()> {
        if a.0 < self.market.agent_count() {
            Ok(())
        } else {
            Err(Error::UnknownAgent(format!("#{}", a.0)))
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent#{}", self.0)
    }
}

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "contract#{}", self.0)
    }
}
