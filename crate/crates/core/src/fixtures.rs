//! Small reference markets with known answers.

use crate::demand::DemandSets;
use crate::market::{AgentId, Market, MarketInstance, Valuation};
use crate::prices::PriceVector;
use crate::set::ContractSet;

fn table(market: &Market, agent: &str, rows: &[(&[&str], i64)]) -> Valuation<i64> {
    let a = market.agent(agent).unwrap();
    Valuation::table(
        market,
        a,
        rows.iter()
            .map(|(set, v)| (market.set_from_names(set).unwrap(), *v)),
    )
    .unwrap()
}

/// Three agents; `w1, w4, w5` between `i1, i2` and `w2, w3` between `i1, i3`.
/// Returns the market and the demand reports of all three agents at a
/// non-equilibrium price vector.
pub fn example_one() -> (Market, Vec<DemandSets>) {
    let pair = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
    let market = Market::new(
        ["i1", "i2", "i3"],
        [
            ("w1".to_string(), pair("i1", "i2")),
            ("w2".to_string(), pair("i1", "i3")),
            ("w3".to_string(), pair("i1", "i3")),
            ("w4".to_string(), pair("i1", "i2")),
            ("w5".to_string(), pair("i1", "i2")),
        ],
    )
    .unwrap();
    let sets = |families: &[&[&str]]| -> Vec<ContractSet> {
        families
            .iter()
            .map(|f| market.set_from_names(f).unwrap())
            .collect()
    };
    let reports = vec![
        DemandSets::new(
            &market,
            AgentId(0),
            sets(&[&["w1", "w2"], &["w1", "w2", "w3", "w4"]]),
        )
        .unwrap(),
        DemandSets::new(&market, AgentId(1), sets(&[&["w1"], &["w1", "w4", "w5"]])).unwrap(),
        DemandSets::new(&market, AgentId(2), sets(&[&[], &["w2", "w3"]])).unwrap(),
    ];
    (market, reports)
}

/// Ana and Bob share one contract `w`; `v_Ana({w}) = 2`, `v_Bob({w}) = 3`.
pub fn ana_bob() -> MarketInstance<i64> {
    let market = Market::new(["Ana", "Bob"], [("w".to_string(), ["Ana", "Bob"])]).unwrap();
    let vals = vec![
        table(&market, "Ana", &[(&[], 0), (&["w"], 2)]),
        table(&market, "Bob", &[(&[], 0), (&["w"], 3)]),
    ];
    MarketInstance::new(market, vals).unwrap()
}

/// Prices `(Ana: ana, Bob: -ana)` on `w`.
pub fn ana_bob_prices(market: &Market, ana: i64) -> PriceVector<i64> {
    let w = market.contract("w").unwrap();
    PriceVector::from_entries(
        market,
        [
            (market.agent("Ana").unwrap(), w, ana),
            (market.agent("Bob").unwrap(), w, -ana),
        ],
    )
    .unwrap()
}

/// Agents `a1, a2` sharing contracts `u, v`, both with supermodular
/// valuations; the efficient set is `{u, v}` with value 7.
pub fn two_contracts() -> MarketInstance<i64> {
    let market = Market::new(
        ["a1", "a2"],
        [
            ("u".to_string(), ["a1", "a2"]),
            ("v".to_string(), ["a1", "a2"]),
        ],
    )
    .unwrap();
    let vals = vec![
        table(
            &market,
            "a1",
            &[(&[], 0), (&["u"], 1), (&["v"], -1), (&["u", "v"], 4)],
        ),
        table(
            &market,
            "a2",
            &[(&[], 0), (&["u"], 2), (&["v"], 1), (&["u", "v"], 3)],
        ),
    ];
    MarketInstance::new(market, vals).unwrap()
}

/// Like [`two_contracts`] but `a1` values `u` and `v` as substitutes:
/// `∅→0, {u}→2, {v}→2, {u,v}→3`.
pub fn substitutes() -> MarketInstance<i64> {
    let inst = two_contracts();
    let market = inst.market().clone();
    let vals = vec![
        table(
            &market,
            "a1",
            &[(&[], 0), (&["u"], 2), (&["v"], 2), (&["u", "v"], 3)],
        ),
        inst.valuation(AgentId(1)).clone(),
    ];
    MarketInstance::new(market, vals).unwrap()
}

/// Two agent-disjoint copies of the Ana/Bob market.
pub fn two_ana_bobs() -> MarketInstance<i64> {
    let market = Market::new(
        ["Ana", "Bob", "Ana2", "Bob2"],
        [
            ("w".to_string(), ["Ana", "Bob"]),
            ("w2".to_string(), ["Ana2", "Bob2"]),
        ],
    )
    .unwrap();
    let vals = vec![
        table(&market, "Ana", &[(&[], 0), (&["w"], 2)]),
        table(&market, "Bob", &[(&[], 0), (&["w"], 3)]),
        table(&market, "Ana2", &[(&[], 0), (&["w2"], 2)]),
        table(&market, "Bob2", &[(&[], 0), (&["w2"], 3)]),
    ];
    MarketInstance::new(market, vals).unwrap()
}
