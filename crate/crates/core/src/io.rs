//! JSON documents for instances, prices, outcomes and demand reports, plus
//! trace and summary emission.
//!
//! Emission is canonical: map keys are sorted, participants follow agent
//! declaration order, table rows follow the canonical subset order, and the
//! output is pretty-printed with a trailing newline. Parsing a canonical
//! document and emitting it again reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::auction::AuctionTrace;
use crate::demand::DemandSets;
use crate::error::{Error, Result};
use crate::market::{AgentId, ContractId, Market, MarketInstance, Valuation, ValuationSource};
use crate::prices::{Outcome, PriceVector};
use crate::scalar::Scalar;
use crate::set::ContractSet;
use crate::verifier::{Verdict, VerificationTrace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc<V> {
    pub agents: Vec<String>,
    pub contracts: Vec<ContractDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuations: Option<BTreeMap<String, ValuationDoc<V>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractDoc {
    pub id: String,
    pub participants: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ValuationDoc<V> {
    Table(Vec<SetValue<V>>),
    Synergy(SynergyDoc<V>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetValue<V> {
    pub set: Vec<String>,
    pub value: V,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynergyDoc<V> {
    pub additive: BTreeMap<String, V>,
    #[serde(default = "Vec::new")]
    pub bonuses: Vec<SetValue<V>>,
}

/// `contract → agent → amount`.
pub type ContractMap<V> = BTreeMap<String, BTreeMap<String, V>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricesDoc<V> {
    pub prices: ContractMap<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDoc<V> {
    pub outcome: ContractMap<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportsDoc {
    pub reports: BTreeMap<String, Vec<Vec<String>>>,
}

/// Deserializes with the failing location reported as a document path.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema {
            path: if path == "." {
                "$".into()
            } else {
                format!("$.{path}")
            },
            message: e.into_inner().to_string(),
        }
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("documents serialize");
    out.push('\n');
    out
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn market_from_doc<V>(doc: &InstanceDoc<V>) -> Result<Market> {
    Market::new(
        doc.agents.iter().cloned(),
        doc.contracts
            .iter()
            .map(|c| (c.id.clone(), c.participants.iter().map(String::as_str))),
    )
}

fn valuation_from_doc<V: Scalar>(
    market: &Market,
    a: AgentId,
    doc: &ValuationDoc<V>,
) -> Result<Valuation<V>> {
    match doc {
        ValuationDoc::Table(rows) => Valuation::table(
            market,
            a,
            rows.iter()
                .map(|r| Ok((market.set_from_names(&r.set)?, r.value)))
                .collect::<Result<Vec<_>>>()?,
        ),
        ValuationDoc::Synergy(s) => Valuation::synergy(
            market,
            a,
            s.additive
                .iter()
                .map(|(c, v)| Ok((market.contract(c)?, *v)))
                .collect::<Result<Vec<_>>>()?,
            s.bonuses
                .iter()
                .map(|b| Ok((market.set_from_names(&b.set)?, b.value)))
                .collect::<Result<Vec<_>>>()?,
        ),
    }
}

/// Validates an instance document into a market with valuations.
pub fn instance_from_doc<V: Scalar>(doc: &InstanceDoc<V>) -> Result<MarketInstance<V>> {
    let market = market_from_doc(doc)?;
    let Some(docs) = &doc.valuations else {
        return Err(Error::Schema {
            path: "$.valuations".into(),
            message: "the instance has no valuations".into(),
        });
    };
    for name in docs.keys() {
        market.agent(name)?;
    }
    let valuations = market
        .agents()
        .map(|a| {
            let name = market.agent_name(a);
            let v = docs.get(name).ok_or_else(|| Error::Schema {
                path: format!("$.valuations.{name}"),
                message: "missing valuation".into(),
            })?;
            valuation_from_doc(&market, a, v)
        })
        .collect::<Result<Vec<_>>>()?;
    MarketInstance::new(market, valuations)
}

fn rows<V: Scalar>(
    market: &Market,
    pairs: impl Iterator<Item = (ContractSet, V)>,
) -> Vec<SetValue<V>> {
    pairs
        .map(|(set, value)| SetValue {
            set: market.contract_names(&set),
            value,
        })
        .collect()
}

/// The canonical document of an instance, keeping each valuation in the
/// encoding it was built from.
pub fn instance_to_doc<V: Scalar>(instance: &MarketInstance<V>) -> InstanceDoc<V> {
    let market = instance.market();
    let contracts = market
        .contracts()
        .map(|c| ContractDoc {
            id: market.contract_name(c).to_owned(),
            participants: market
                .participants(c)
                .iter()
                .map(|&a| market.agent_name(a).to_owned())
                .collect(),
        })
        .collect();
    let valuations = market
        .agents()
        .map(|a| {
            let v = instance.valuation(a);
            let doc = match v.source() {
                ValuationSource::Table => {
                    let mut sets: Vec<ContractSet> = (0..v.values().len() as u32)
                        .map(|m| market.from_local(a, m))
                        .collect();
                    sets.sort_by(|x, y| x.canonical_cmp(y));
                    let pairs = sets.into_iter().map(|s| {
                        let m = market.restrict_mask(a, &s);
                        (s, v.value(m))
                    });
                    ValuationDoc::Table(rows(market, pairs))
                }
                ValuationSource::Synergy { additive, bonuses } => {
                    ValuationDoc::Synergy(SynergyDoc {
                        additive: market
                            .contracts_of(a)
                            .iter()
                            .zip(additive)
                            .map(|(&c, &x)| (market.contract_name(c).to_owned(), x))
                            .collect(),
                        bonuses: rows(
                            market,
                            bonuses.iter().map(|&(m, x)| (market.from_local(a, m), x)),
                        ),
                    })
                }
            };
            (market.agent_name(a).to_owned(), doc)
        })
        .collect();
    InstanceDoc {
        agents: market
            .agents()
            .map(|a| market.agent_name(a).to_owned())
            .collect(),
        contracts,
        valuations: Some(valuations),
    }
}

pub fn parse_instance<V: Scalar + DeserializeOwned>(text: &str) -> Result<MarketInstance<V>> {
    instance_from_doc(&from_json::<InstanceDoc<V>>(text)?)
}

pub fn read_instance<V: Scalar + DeserializeOwned>(path: &Path) -> Result<MarketInstance<V>> {
    parse_instance(&read(path)?)
}

/// Reads only the participation structure; valuations may be absent.
pub fn parse_market(text: &str) -> Result<Market> {
    market_from_doc(&from_json::<InstanceDoc<serde_json::Value>>(text)?)
}

pub fn read_market(path: &Path) -> Result<Market> {
    parse_market(&read(path)?)
}

pub fn emit_instance<V: Scalar + Serialize>(instance: &MarketInstance<V>) -> String {
    to_json(&instance_to_doc(instance))
}

type Rows<V> = Vec<(ContractId, Vec<(AgentId, V)>)>;

fn contract_entries<V: Copy>(market: &Market, map: &ContractMap<V>) -> Result<Rows<V>> {
    map.iter()
        .map(|(c, row)| {
            let c = market.contract(c)?;
            let row = row
                .iter()
                .map(|(a, v)| Ok((market.agent(a)?, *v)))
                .collect::<Result<Vec<_>>>()?;
            Ok((c, row))
        })
        .collect()
}

fn contract_map<V: Copy>(
    market: &Market,
    rows: impl Iterator<Item = (ContractId, Vec<V>)>,
) -> ContractMap<V> {
    rows.map(|(c, values)| {
        let row = market
            .participants(c)
            .iter()
            .zip(values)
            .map(|(&a, v)| (market.agent_name(a).to_owned(), v))
            .collect();
        (market.contract_name(c).to_owned(), row)
    })
    .collect()
}

/// Parses a complete, balanced price vector for `market`.
pub fn parse_prices<V: Scalar + DeserializeOwned>(
    text: &str,
    market: &Market,
) -> Result<PriceVector<V>> {
    let doc: PricesDoc<V> = from_json(text)?;
    let entries = contract_entries(market, &doc.prices)?
        .into_iter()
        .flat_map(|(c, row)| row.into_iter().map(move |(a, v)| (a, c, v)));
    let prices = PriceVector::from_entries(market, entries)?;
    prices.validate_balanced(market)?;
    Ok(prices)
}

pub fn read_prices<V: Scalar + DeserializeOwned>(
    path: &Path,
    market: &Market,
) -> Result<PriceVector<V>> {
    parse_prices(&read(path)?, market)
}

pub fn prices_to_doc<V: Scalar>(market: &Market, prices: &PriceVector<V>) -> PricesDoc<V> {
    PricesDoc {
        prices: contract_map(
            market,
            market
                .contracts()
                .map(|c| (c, prices.contract_prices(c).to_vec())),
        ),
    }
}

pub fn emit_prices<V: Scalar + Serialize>(market: &Market, prices: &PriceVector<V>) -> String {
    to_json(&prices_to_doc(market, prices))
}

pub fn parse_outcome<V: Scalar + DeserializeOwned>(
    text: &str,
    market: &Market,
) -> Result<Outcome<V>> {
    let doc: OutcomeDoc<V> = from_json(text)?;
    Outcome::new(market, contract_entries(market, &doc.outcome)?)
}

pub fn read_outcome<V: Scalar + DeserializeOwned>(
    path: &Path,
    market: &Market,
) -> Result<Outcome<V>> {
    parse_outcome(&read(path)?, market)
}

pub fn outcome_to_doc<V: Scalar>(market: &Market, outcome: &Outcome<V>) -> OutcomeDoc<V> {
    OutcomeDoc {
        outcome: contract_map(market, outcome.iter().map(|(c, t)| (c, t.to_vec()))),
    }
}

pub fn emit_outcome<V: Scalar + Serialize>(market: &Market, outcome: &Outcome<V>) -> String {
    to_json(&outcome_to_doc(market, outcome))
}

/// Parses one demand report per agent, returned in agent order.
pub fn parse_reports(text: &str, market: &Market) -> Result<Vec<DemandSets>> {
    let doc: ReportsDoc = from_json(text)?;
    for name in doc.reports.keys() {
        market.agent(name)?;
    }
    market
        .agents()
        .map(|a| {
            let name = market.agent_name(a);
            let family = doc.reports.get(name).ok_or_else(|| Error::Schema {
                path: format!("$.reports.{name}"),
                message: "missing demand report".into(),
            })?;
            let sets = family
                .iter()
                .map(|s| market.set_from_names(s))
                .collect::<Result<Vec<_>>>()?;
            DemandSets::new(market, a, sets)
        })
        .collect()
}

pub fn read_reports(path: &Path, market: &Market) -> Result<Vec<DemandSets>> {
    parse_reports(&read(path)?, market)
}

#[derive(Serialize)]
struct LevelDoc {
    level: usize,
    remaining: Vec<String>,
    partially_agreeable: Vec<String>,
    confined: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum VerdictDoc {
    Equilibrium { support: Vec<String> },
    NonEquilibrium { level: usize, witness: Vec<String> },
}

#[derive(Serialize)]
struct VerificationDoc {
    strongly_demanded: Vec<String>,
    levels: Vec<LevelDoc>,
    verdict: VerdictDoc,
}

#[derive(Serialize)]
struct DemandDoc<V> {
    agent: String,
    demand_sets: usize,
    optimum: V,
}

#[derive(Serialize)]
struct RoundDoc<V> {
    round: usize,
    lyapunov: V,
    prices: ContractMap<V>,
    demand: Vec<DemandDoc<V>>,
    verification: VerificationDoc,
    chains: Vec<String>,
}

#[derive(Serialize)]
struct AuctionDoc<V> {
    total_rounds: usize,
    rounds: Vec<RoundDoc<V>>,
    outcome: ContractMap<V>,
}

fn verification_doc(market: &Market, trace: &VerificationTrace) -> VerificationDoc {
    let names = |s: &ContractSet| market.contract_names(s);
    VerificationDoc {
        strongly_demanded: names(&trace.strongly_demanded),
        levels: trace
            .levels
            .iter()
            .map(|l| LevelDoc {
                level: l.index,
                remaining: names(&l.remaining),
                partially_agreeable: names(&l.partially_agreeable),
                confined: market
                    .agents()
                    .map(|a| (market.agent_name(a).to_owned(), names(&l.confined[a.0])))
                    .collect(),
            })
            .collect(),
        verdict: match &trace.verdict {
            Verdict::Equilibrium { support } => VerdictDoc::Equilibrium {
                support: names(support),
            },
            Verdict::NonEquilibrium { level, witness } => VerdictDoc::NonEquilibrium {
                level: *level,
                witness: names(witness),
            },
        },
    }
}

pub fn verification_trace_json(market: &Market, trace: &VerificationTrace) -> String {
    to_json(&verification_doc(market, trace))
}

pub fn auction_trace_json<V: Scalar + Serialize>(
    market: &Market,
    trace: &AuctionTrace<V>,
) -> String {
    let rounds = trace
        .rounds
        .iter()
        .map(|r| RoundDoc {
            round: r.index,
            lyapunov: r.lyapunov,
            prices: prices_to_doc(market, &r.prices).prices,
            demand: r
                .demand
                .iter()
                .map(|d| DemandDoc {
                    agent: market.agent_name(d.agent).to_owned(),
                    demand_sets: d.demand_sets,
                    optimum: d.optimum,
                })
                .collect(),
            verification: verification_doc(market, &r.verification),
            chains: r.chains.iter().map(|c| c.display(market)).collect(),
        })
        .collect();
    to_json(&AuctionDoc {
        total_rounds: trace.total_rounds(),
        rounds,
        outcome: outcome_to_doc(market, &trace.outcome).outcome,
    })
}

/// One CSV row per round: `round,lyapunov,chains,levels`, where `levels`
/// lists `|G^1|;…;|G^s|`.
pub fn summary_csv<V: Scalar>(trace: &AuctionTrace<V>) -> String {
    let mut out = String::from("round,lyapunov,chains,levels\n");
    for r in &trace.rounds {
        let levels: Vec<String> = r
            .verification
            .level_sizes()
            .iter()
            .map(ToString::to_string)
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.index,
            r.lyapunov,
            r.chains.len(),
            levels.join(";")
        );
    }
    out
}

pub enum TraceRef<'a, V> {
    Auction(&'a AuctionTrace<V>),
    Verification(&'a VerificationTrace),
}

pub fn emit_trace<V: Scalar + Serialize>(
    market: &Market,
    trace: TraceRef<'_, V>,
    path: &Path,
) -> Result<()> {
    let text = match trace {
        TraceRef::Auction(t) => auction_trace_json(market, t),
        TraceRef::Verification(t) => verification_trace_json(market, t),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn emit_summary<V: Scalar>(trace: &AuctionTrace<V>, path: &Path) -> Result<()> {
    std::fs::write(path, summary_csv(trace))?;
    Ok(())
}
