//! Balanced price vectors, per-agent price slices and outcomes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::market::{AgentId, ContractId, LocalMask, Market};
use crate::scalar::Scalar;
use crate::set::ContractSet;

/// One integer price per pair `(i, w)` with `i ∈ N(w)`.
///
/// Entries are stored per contract, aligned with [`Market::participants`],
/// so the domain is exactly the participation pairs by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriceVector<V> {
    entries: Vec<Vec<V>>,
}

impl<V: Scalar> PriceVector<V> {
    pub fn zero(market: &Market) -> Self {
        Self {
            entries: market
                .contracts()
                .map(|c| vec![V::zero(); market.participants(c).len()])
                .collect(),
        }
    }

    /// Builds a vector from explicit `(agent, contract, price)` triples, which
    /// must cover every participation pair exactly once.
    pub fn from_entries<I>(market: &Market, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (AgentId, ContractId, V)>,
    {
        let mut slots: Vec<Vec<Option<V>>> = market
            .contracts()
            .map(|c| vec![None; market.participants(c).len()])
            .collect();
        for (a, c, v) in entries {
            if c.0 >= market.contract_count() {
                return Err(Error::UnknownContract(format!("#{}", c.0)));
            }
            let pos = market
                .position(c, a)
                .ok_or_else(|| market.not_a_participant(a, c))?;
            if slots[c.0][pos].replace(v).is_some() {
                return Err(Error::DuplicateId(format!(
                    "{}/{}",
                    market.contract_name(c),
                    market.agent_name(a)
                )));
            }
        }
        let entries = slots
            .into_iter()
            .enumerate()
            .map(|(c, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(pos, v)| {
                        let c = ContractId(c);
                        v.ok_or_else(|| Error::MissingPrice {
                            agent: market.agent_name(market.participants(c)[pos]).to_owned(),
                            contract: market.contract_name(c).to_owned(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn get(&self, market: &Market, a: AgentId, c: ContractId) -> Option<V> {
        market.position(c, a).map(|pos| self.entries[c.0][pos])
    }

    /// Adds `delta` to the `(a, c)` coordinate.
    pub fn shift(&mut self, market: &Market, a: AgentId, c: ContractId, delta: V) -> Result<()> {
        let pos = market
            .position(c, a)
            .ok_or_else(|| market.not_a_participant(a, c))?;
        let slot = &mut self.entries[c.0][pos];
        *slot = slot
            .checked_add(&delta)
            .ok_or(Error::Overflow(slot.widen() + delta.widen()))?;
        Ok(())
    }

    /// Prices of contract `c`, aligned with its participants.
    pub fn contract_prices(&self, c: ContractId) -> &[V] {
        &self.entries[c.0]
    }

    /// `p_a`, the slice of prices agent `a` faces.
    pub fn for_agent(&self, market: &Market, a: AgentId) -> AgentPrices<V> {
        let values = market
            .contracts_of(a)
            .iter()
            .map(|&c| self.get(market, a, c).expect("holdings match participants"))
            .collect();
        AgentPrices { agent: a, values }
    }

    /// Checks that prices within every contract sum to zero and that the
    /// vector has the shape of `market`.
    pub fn validate_balanced(&self, market: &Market) -> Result<()> {
        let shaped = self.entries.len() == market.contract_count()
            && market
                .contracts()
                .all(|c| self.entries[c.0].len() == market.participants(c).len());
        if !shaped {
            return Err(Error::Schema {
                path: "prices".into(),
                message: "price vector does not match the market's participation pairs".into(),
            });
        }
        let unbalanced: Vec<(String, i128)> = market
            .contracts()
            .filter_map(|c| {
                let sum: i128 = self.entries[c.0].iter().map(|v| v.widen()).sum();
                (sum != 0).then(|| (market.contract_name(c).to_owned(), sum))
            })
            .collect();
        if unbalanced.is_empty() {
            Ok(())
        } else {
            Err(Error::Unbalanced(unbalanced))
        }
    }

    /// All `(agent, contract, price)` triples in contract-then-agent order.
    pub fn iter<'a>(
        &'a self,
        market: &'a Market,
    ) -> impl Iterator<Item = (AgentId, ContractId, V)> + 'a {
        market.contracts().flat_map(move |c| {
            market
                .participants(c)
                .iter()
                .zip(&self.entries[c.0])
                .map(move |(&a, &v)| (a, c, v))
        })
    }
}

/// Prices one agent faces, aligned with [`Market::contracts_of`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgentPrices<V> {
    agent: AgentId,
    values: Vec<V>,
}

impl<V: Scalar> AgentPrices<V> {
    /// Complete price slice for agent `a`, one entry per held contract.
    pub fn from_pairs<I>(market: &Market, a: AgentId, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ContractId, V)>,
    {
        let mut values = vec![None; market.contracts_of(a).len()];
        for (c, v) in pairs {
            let k = market
                .local_index(a, c)
                .ok_or_else(|| market.not_a_participant(a, c))?;
            values[k] = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Error::MissingPrice {
                    agent: market.agent_name(a).to_owned(),
                    contract: market.contract_name(market.contracts_of(a)[k]).to_owned(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { agent: a, values })
    }

    pub fn zero(market: &Market, a: AgentId) -> Self {
        Self {
            agent: a,
            values: vec![V::zero(); market.contracts_of(a).len()],
        }
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    /// Price of the `k`-th held contract.
    pub fn local(&self, k: usize) -> V {
        self.values[k]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    /// Total price of a local bundle.
    pub fn cost(&self, mask: LocalMask) -> V {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &v)| v)
            .sum()
    }
}

/// Signed primitive contracts with their transfer vectors. Each transfer
/// vector is aligned with the contract's participants and sums to zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome<V> {
    signed: BTreeMap<ContractId, Vec<V>>,
}

impl<V: Scalar> Outcome<V> {
    pub fn empty() -> Self {
        Self {
            signed: BTreeMap::new(),
        }
    }

    /// Builds an outcome from per-contract transfer maps. Each contract may
    /// appear once, every participant needs a transfer, and the transfers of
    /// a contract must sum to zero.
    pub fn new<I, T>(market: &Market, contracts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ContractId, T)>,
        T: IntoIterator<Item = (AgentId, V)>,
    {
        let mut signed = BTreeMap::new();
        for (c, transfers) in contracts {
            if c.0 >= market.contract_count() {
                return Err(Error::UnknownContract(format!("#{}", c.0)));
            }
            let mut row = vec![None; market.participants(c).len()];
            for (a, t) in transfers {
                let pos = market
                    .position(c, a)
                    .ok_or_else(|| market.not_a_participant(a, c))?;
                if row[pos].replace(t).is_some() {
                    return Err(Error::DuplicateId(format!(
                        "{}/{}",
                        market.contract_name(c),
                        market.agent_name(a)
                    )));
                }
            }
            let row = row
                .into_iter()
                .enumerate()
                .map(|(pos, t)| {
                    t.ok_or_else(|| Error::MissingPrice {
                        agent: market.agent_name(market.participants(c)[pos]).to_owned(),
                        contract: market.contract_name(c).to_owned(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let sum: i128 = row.iter().map(|t| t.widen()).sum();
            if sum != 0 {
                return Err(Error::Unbalanced(vec![(
                    market.contract_name(c).to_owned(),
                    sum,
                )]));
            }
            if signed.insert(c, row).is_some() {
                return Err(Error::DuplicateId(market.contract_name(c).to_owned()));
            }
        }
        Ok(Self { signed })
    }

    /// Signs `support` with transfers copied from `prices`.
    pub fn from_prices(support: &ContractSet, prices: &PriceVector<V>) -> Self {
        Self {
            signed: support
                .iter()
                .map(|c| (c, prices.contract_prices(c).to_vec()))
                .collect(),
        }
    }

    /// `τ(Y)`.
    pub fn support(&self) -> ContractSet {
        self.signed.keys().copied().collect()
    }

    pub fn transfer(&self, market: &Market, a: AgentId, c: ContractId) -> Option<V> {
        let pos = market.position(c, a)?;
        self.signed.get(&c).map(|row| row[pos])
    }

    /// Signed contracts with transfers aligned to participants.
    pub fn iter(&self) -> impl Iterator<Item = (ContractId, &[V])> {
        self.signed.iter().map(|(&c, row)| (c, row.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.signed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signed.is_empty()
    }
}
