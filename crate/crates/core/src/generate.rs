//! Seeded random markets whose valuations are supermodular by construction.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{LocalMask, Market, MarketInstance, Valuation};
use crate::prices::PriceVector;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub agents: usize,
    pub contracts: usize,
    /// Upper bound on participants per contract, at least 2.
    pub max_participants: usize,
    /// Inclusive range for the additive per-contract values.
    pub value_range: (i64, i64),
    /// Probability in `[0, 1]` of each synergy bonus attempt succeeding.
    pub synergy_density: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            agents: 3,
            contracts: 4,
            max_participants: 2,
            value_range: (-10, 10),
            synergy_density: 0.3,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Generator(m));
        if self.max_participants < 2 {
            return fail(format!(
                "max participants must be at least 2, got {}",
                self.max_participants
            ));
        }
        if self.contracts > 0 && self.agents < 2 {
            return fail(format!(
                "contracts need two participants but only {} agent(s) exist",
                self.agents
            ));
        }
        if self.value_range.0 > self.value_range.1 {
            return fail(format!(
                "empty value range {}:{}",
                self.value_range.0, self.value_range.1
            ));
        }
        if !(0.0..=1.0).contains(&self.synergy_density) {
            return fail(format!(
                "synergy density {} is outside [0, 1]",
                self.synergy_density
            ));
        }
        Ok(())
    }
}

/// Draws a market and valuations from `params`.
///
/// Each contract gets between 2 and `max_participants` distinct agents.
/// Every agent values each of its contracts additively and receives
/// `2·|Ω_i|` chances, each taken with probability `synergy_density`, of a
/// bonus in `[0, hi − lo]` on a random subset of at least two of its
/// contracts. `v(∅) = 0`. Identical parameters give identical instances.
pub fn generate<V: Scalar>(params: &GeneratorParams) -> Result<MarketInstance<V>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let agents: Vec<String> = (1..=params.agents).map(|i| format!("a{i}")).collect();
    let top = params.max_participants.min(params.agents);

    let contracts: Vec<(String, Vec<String>)> = (1..=params.contracts)
        .map(|j| {
            let k = rng.gen_range(2..=top);
            let mut members = sample(&mut rng, params.agents, k).into_vec();
            members.sort_unstable();
            let names = members.into_iter().map(|i| agents[i].clone()).collect();
            (format!("w{j}"), names)
        })
        .collect();
    let market = Market::new(&agents, contracts)?;

    let (lo, hi) = params.value_range;
    let scalar = |x: i64| V::from(x).ok_or(Error::Overflow(x as i128));
    let mut valuations = Vec::with_capacity(market.agent_count());
    for a in market.agents() {
        let held = market.contracts_of(a);
        let n = held.len();
        let additive = held
            .iter()
            .map(|&c| Ok((c, scalar(rng.gen_range(lo..=hi))?)))
            .collect::<Result<Vec<_>>>()?;
        let mut bonuses = Vec::new();
        if n >= 2 {
            for _ in 0..2 * n {
                if !rng.gen_bool(params.synergy_density) {
                    continue;
                }
                let size = rng.gen_range(2..=n);
                let mask: LocalMask = sample(&mut rng, n, size)
                    .into_iter()
                    .fold(0, |m, k| m | (1 << k));
                let value = scalar(rng.gen_range(0..=hi - lo))?;
                bonuses.push((market.from_local(a, mask), value));
            }
        }
        valuations.push(Valuation::synergy(&market, a, additive, bonuses)?);
    }
    MarketInstance::new(market, valuations)
}

/// Uniform balanced prices: for every contract, all participants but the
/// last draw a price from `[lo, hi]` and the last pays the negated sum.
pub fn random_balanced_prices<V: Scalar, R: Rng + ?Sized>(
    market: &Market,
    (lo, hi): (i64, i64),
    rng: &mut R,
) -> Result<PriceVector<V>> {
    let mut entries = Vec::new();
    for c in market.contracts() {
        let members = market.participants(c);
        let mut sum = 0i128;
        for (pos, &a) in members.iter().enumerate() {
            let p = if pos + 1 == members.len() {
                -sum
            } else {
                rng.gen_range(lo..=hi) as i128
            };
            sum += p;
            entries.push((a, c, V::narrow(p).ok_or(Error::Overflow(p))?));
        }
    }
    PriceVector::from_entries(market, entries)
}
