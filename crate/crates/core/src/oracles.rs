//! Brute-force reference checks: efficiency, equilibrium prices,
//! supermodularity, the demand-side forms of gross complements, and
//! stability of outcomes.
//!
//! Everything here enumerates subsets directly and is meant for small
//! markets; the other modules are tested against these answers.

use crate::demand::{demand, demand_all};
use crate::error::{Error, Result};
use crate::market::{AgentId, LocalMask, Market, MarketInstance};
use crate::prices::{AgentPrices, Outcome, PriceVector};
use crate::scalar::Scalar;
use crate::set::ContractSet;

/// Largest `|Ω|` accepted by the whole-market enumerations.
pub const ORACLE_ENUMERATION_CAP: usize = 16;

/// Largest `|Ω_i|` accepted by the definitional supermodularity check.
pub const PAIRWISE_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficientSets<V> {
    pub max_value: V,
    /// Every maximizer of the aggregate valuation, in canonical order.
    pub maximizers: Vec<ContractSet>,
    /// Union of the maximizers.
    pub largest: ContractSet,
}

/// A pair `(Φ, Ψ)` with `v(Φ) + v(Ψ) > v(Φ ∪ Ψ) + v(Φ ∩ Ψ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupermodularityViolation {
    pub agent: AgentId,
    pub phi: ContractSet,
    pub psi: ContractSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeGap {
    /// `Φ ∩ Ψ ∉ D(p)`.
    Intersection,
    /// `Φ ∪ Ψ ∉ D(q)`.
    Union,
}

/// `Φ ∈ D(p)` and `Ψ ∈ D(q)` whose meet or join is missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntitoneViolation {
    pub phi: ContractSet,
    pub psi: ContractSet,
    pub gap: LatticeGap,
}

/// Why an outcome is not stable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instability {
    /// The signed contracts are not the largest efficient set.
    NotLargestEfficient {
        signed: ContractSet,
        largest: ContractSet,
    },
    /// The agent gains by dropping some of its signed contracts; `keep` is
    /// the best subset to hold on to.
    NotIndividuallyRational { agent: AgentId, keep: ContractSet },
}

fn check_market_cap(market: &Market) -> Result<()> {
    let n = market.contract_count();
    if n > ORACLE_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            what: "the market".into(),
            size: n,
            cap: ORACLE_ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// Maps a global bitmask over contract indices to an agent's local mask.
fn localize(market: &Market, a: AgentId, global: u32) -> LocalMask {
    market
        .contracts_of(a)
        .iter()
        .enumerate()
        .filter(|(_, c)| global & (1 << c.0) != 0)
        .fold(0, |m, (k, _)| m | (1 << k))
}

fn globalize(global: u32) -> ContractSet {
    (0..u32::BITS as usize)
        .filter(|i| global & (1 << i) != 0)
        .map(crate::market::ContractId)
        .collect()
}

fn first_canonical(mut sets: Vec<ContractSet>) -> Option<ContractSet> {
    sets.sort_by(|a, b| a.canonical_cmp(b));
    sets.into_iter().next()
}

/// Maximizes the aggregate valuation over every subset of `Ω`.
pub fn efficient_sets<V: Scalar>(instance: &MarketInstance<V>) -> Result<EfficientSets<V>> {
    let market = instance.market();
    check_market_cap(market)?;
    let mut best: Option<V> = None;
    let mut argmax = Vec::new();
    for g in 0..(1u32 << market.contract_count()) {
        let mut total = V::zero();
        for a in market.agents() {
            let v = instance.valuation(a).value(localize(market, a, g));
            total = total
                .checked_add(&v)
                .ok_or(Error::Overflow(total.widen() + v.widen()))?;
        }
        match best {
            Some(b) if total < b => continue,
            Some(b) if total == b => {}
            _ => {
                best = Some(total);
                argmax.clear();
            }
        }
        argmax.push(g);
    }
    let mut maximizers: Vec<ContractSet> = argmax.into_iter().map(globalize).collect();
    maximizers.sort_by(|a, b| a.canonical_cmp(b));
    let largest = maximizers.iter().collect();
    Ok(EfficientSets {
        max_value: best.expect("the empty set is always a candidate"),
        maximizers,
        largest,
    })
}

fn lift(market: &Market, a: AgentId, s: LocalMask, x: usize, y: usize) -> SupermodularityViolation {
    SupermodularityViolation {
        agent: a,
        phi: market.from_local(a, s | (1 << x)),
        psi: market.from_local(a, s | (1 << y)),
    }
}

/// Local supermodularity test: for every `S` and `x ≠ y` outside it,
/// `v(S+x) + v(S+y) ≤ v(S+x+y) + v(S)`. The first failure in mask order is
/// returned as `(S+x, S+y)`.
pub fn is_supermodular<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
) -> std::result::Result<(), SupermodularityViolation> {
    let market = instance.market();
    let v = instance.valuation(agent);
    let n = market.contracts_of(agent).len();
    for s in 0..(1 as LocalMask) << n {
        for x in (0..n).filter(|x| s & (1 << x) == 0) {
            for y in (x + 1..n).filter(|y| s & (1 << y) == 0) {
                let lhs = v.value(s | 1 << x).widen() + v.value(s | 1 << y).widen();
                let rhs = v.value(s | 1 << x | 1 << y).widen() + v.value(s).widen();
                if lhs > rhs {
                    return Err(lift(market, agent, s, x, y));
                }
            }
        }
    }
    Ok(())
}

/// Definitional supermodularity test over all pairs of subsets. Returns the
/// first violating pair in mask order.
pub fn supermodularity_violation_pairwise<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
) -> Result<Option<SupermodularityViolation>> {
    let market = instance.market();
    let n = market.contracts_of(agent).len();
    if n > PAIRWISE_CAP {
        return Err(Error::EnumerationCap {
            what: format!("agent {}", market.agent_name(agent)),
            size: n,
            cap: PAIRWISE_CAP,
        });
    }
    let v = instance.valuation(agent);
    let size: LocalMask = 1 << n;
    for phi in 0..size {
        for psi in 0..size {
            let lhs = v.value(phi).widen() + v.value(psi).widen();
            let rhs = v.value(phi | psi).widen() + v.value(phi & psi).widen();
            if lhs > rhs {
                return Ok(Some(SupermodularityViolation {
                    agent,
                    phi: market.from_local(agent, phi),
                    psi: market.from_local(agent, psi),
                }));
            }
        }
    }
    Ok(None)
}

/// Fails with [`Error::NotGrossComplements`] naming the first agent whose
/// valuation is not supermodular.
pub fn require_gross_complements<V: Scalar>(instance: &MarketInstance<V>) -> Result<()> {
    let market = instance.market();
    for a in market.agents() {
        if let Err(w) = is_supermodular(instance, a) {
            return Err(Error::NotGrossComplements {
                agent: market.agent_name(a).to_owned(),
                reason: format!(
                    "v({}) + v({}) exceeds v(union) + v(intersection)",
                    market.show_set(&w.phi),
                    market.show_set(&w.psi)
                ),
            });
        }
    }
    Ok(())
}

/// Returns the first `Φ` in canonical order that every agent demands, or
/// `None` when `prices` support no allocation.
pub fn is_equilibrium_price<V: Scalar>(
    instance: &MarketInstance<V>,
    prices: &PriceVector<V>,
) -> Result<Option<ContractSet>> {
    let market = instance.market();
    check_market_cap(market)?;
    prices.validate_balanced(market)?;
    let reports = demand_all(instance, prices)?;
    let demanded: Vec<Vec<LocalMask>> = reports
        .iter()
        .map(|r| {
            r.sets
                .sets()
                .iter()
                .map(|s| market.restrict_mask(r.agent(), s))
                .collect()
        })
        .collect();
    let supporting = (0..(1u32 << market.contract_count()))
        .filter(|&g| {
            market
                .agents()
                .all(|a| demanded[a.0].contains(&localize(market, a, g)))
        })
        .map(globalize)
        .collect();
    Ok(first_canonical(supporting))
}

fn require_ordered<V: Scalar>(
    market: &Market,
    agent: AgentId,
    p: &AgentPrices<V>,
    q: &AgentPrices<V>,
) -> Result<()> {
    if p.agent() != agent || q.agent() != agent {
        return Err(Error::Invariant(
            "price slice belongs to another agent".into(),
        ));
    }
    for (k, (hi, lo)) in p.values().iter().zip(q.values()).enumerate() {
        if hi < lo {
            return Err(Error::PriceOrder {
                agent: market.agent_name(agent).to_owned(),
                contract: market
                    .contract_name(market.contracts_of(agent)[k])
                    .to_owned(),
            });
        }
    }
    Ok(())
}

/// For `p ≥ q`: every `Φ ∈ D(p)`, `Ψ ∈ D(q)` must have `Φ ∩ Ψ ∈ D(p)` and
/// `Φ ∪ Ψ ∈ D(q)`. Returns the first failing pair.
pub fn check_antitone<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
    p: &AgentPrices<V>,
    q: &AgentPrices<V>,
) -> Result<Option<AntitoneViolation>> {
    require_ordered(instance.market(), agent, p, q)?;
    let dp = demand(instance, agent, p)?.sets;
    let dq = demand(instance, agent, q)?.sets;
    for phi in dp.sets() {
        for psi in dq.sets() {
            let gap = if !dp.contains_set(&phi.intersection(psi)) {
                LatticeGap::Intersection
            } else if !dq.contains_set(&phi.union(psi)) {
                LatticeGap::Union
            } else {
                continue;
            };
            return Ok(Some(AntitoneViolation {
                phi: phi.clone(),
                psi: psi.clone(),
                gap,
            }));
        }
    }
    Ok(None)
}

/// For `p ≥ q`: each `Φ ∈ D(p)` must extend to some `Ψ ∈ D(q)` containing
/// the contracts of `Φ` whose price did not fall. Returns the first `Φ`
/// without such a `Ψ`.
pub fn check_gc_lowering<V: Scalar>(
    instance: &MarketInstance<V>,
    agent: AgentId,
    p: &AgentPrices<V>,
    q: &AgentPrices<V>,
) -> Result<Option<ContractSet>> {
    let market = instance.market();
    require_ordered(market, agent, p, q)?;
    let unchanged: LocalMask = p
        .values()
        .iter()
        .zip(q.values())
        .enumerate()
        .filter(|(_, (a, b))| a == b)
        .fold(0, |m, (k, _)| m | (1 << k));
    let dp = demand(instance, agent, p)?.sets;
    let dq = demand(instance, agent, q)?.sets;
    for phi in dp.sets() {
        let kept = market.from_local(agent, market.restrict_mask(agent, phi) & unchanged);
        if !dq.sets().iter().any(|psi| kept.is_subset(psi)) {
            return Ok(Some(phi.clone()));
        }
    }
    Ok(None)
}

/// Builds prices `p = q` at which the demand of `violation.agent` fails to
/// be a lattice, turning a local supermodularity witness `(S+x, S+y)` into
/// an antitonicity failure.
///
/// Contracts in `S` are priced far below any valuation gap and contracts
/// outside `S+x+y` far above, so demand is confined to `S..S+x+y`. The
/// prices of `x` and `y` are then searched on a small grid around their
/// marginal values at `S`. Returns `None` when the witness is not of the
/// local form or no grid point works.
pub fn antitone_counterexample<V: Scalar>(
    instance: &MarketInstance<V>,
    violation: &SupermodularityViolation,
) -> Result<Option<AgentPrices<V>>> {
    let market = instance.market();
    let agent = violation.agent;
    let base = violation.phi.intersection(&violation.psi);
    let (Some(x), Some(y)) = (
        single(&violation.phi.difference(&base)),
        single(&violation.psi.difference(&base)),
    ) else {
        return Ok(None);
    };
    let v = instance.valuation(agent);
    let span = v
        .values()
        .iter()
        .map(|x| x.widen().abs())
        .max()
        .unwrap_or(0);
    let far = 8 * span + 8;
    let s = market.local_mask(agent, &base)?;
    let (kx, ky) = (
        market.local_index(agent, x).expect("witness lies in Ω_i"),
        market.local_index(agent, y).expect("witness lies in Ω_i"),
    );
    let marginal = |k: usize| v.value(s | 1 << k).widen() - v.value(s).widen();
    let (mx, my) = (marginal(kx), marginal(ky));

    let narrow = |x: i128| V::narrow(x).ok_or(Error::Overflow(x));
    const RADIUS: i128 = 2;
    for px in mx - RADIUS..=mx + RADIUS {
        for py in my - RADIUS..=my + RADIUS {
            let pairs = market
                .contracts_of(agent)
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let price = if k == kx {
                        px
                    } else if k == ky {
                        py
                    } else if s & (1 << k) != 0 {
                        -far
                    } else {
                        far
                    };
                    narrow(price).map(|p| (c, p))
                })
                .collect::<Result<Vec<_>>>()?;
            let p = AgentPrices::from_pairs(market, agent, pairs)?;
            if check_antitone(instance, agent, &p, &p)?.is_some() {
                return Ok(Some(p));
            }
        }
    }
    Ok(None)
}

fn single(set: &ContractSet) -> Option<crate::market::ContractId> {
    let mut it = set.iter();
    let first = it.next()?;
    it.next().is_none().then_some(first)
}

/// Checks that `outcome` is stable, assuming every valuation is
/// supermodular (verified first).
///
/// An outcome is stable exactly when its signed set is the largest efficient
/// set and some balanced price vector agreeing with its transfers supports
/// it. Under supermodular valuations the second part reduces to individual
/// rationality: if every agent's signed set `Y_i` is its best subset at the
/// transfers, then `Y_i` is also its best choice once any unsigned contracts
/// are added, so extra contracts only ever change total surplus by
/// `v(Y ∪ S) − v(Y) ≤ 0` and supporting prices for the unsigned contracts
/// exist.
pub fn is_stable<V: Scalar>(
    instance: &MarketInstance<V>,
    outcome: &Outcome<V>,
) -> Result<Option<Instability>> {
    let market = instance.market();
    require_gross_complements(instance)?;
    let signed = outcome.support();
    let efficient = efficient_sets(instance)?;
    if signed != efficient.largest {
        return Ok(Some(Instability::NotLargestEfficient {
            signed,
            largest: efficient.largest,
        }));
    }

    for a in market.agents() {
        let held = market.restrict_mask(a, &signed);
        let transfers: Vec<i128> = market
            .contracts_of(a)
            .iter()
            .map(|&c| outcome.transfer(market, a, c).map_or(0, Scalar::widen))
            .collect();
        let v = instance.valuation(a);
        let utility = |m: LocalMask| -> i128 {
            let paid: i128 = (0..transfers.len())
                .filter(|k| m & (1 << k) != 0)
                .map(|k| transfers[k])
                .sum();
            v.value(m).widen() - paid
        };
        let best = (0..=held)
            .filter(|m| m & !held == 0)
            .max_by_key(|&m| (utility(m), std::cmp::Reverse(m)))
            .expect("the empty bundle is a candidate");
        if utility(best) > utility(held) {
            return Ok(Some(Instability::NotIndividuallyRational {
                agent: a,
                keep: market.from_local(a, best),
            }));
        }
    }
    Ok(None)
}
