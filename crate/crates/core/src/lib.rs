//! Dynamic auction for stable outcomes in multilateral collaboration markets.
//!
//! Agents sign primitive contracts, each shared by two or more participants,
//! and value bundles of contracts through supermodular valuations (gross
//! complements). Starting from any balanced price vector the auction asks
//! every agent for its demand, checks whether the prices already support a
//! competitive equilibrium, and otherwise shifts prices by one unit along
//! disjoint complements chains. It stops at an equilibrium, which yields a
//! stable outcome.
//!
//! ```
//! use collab_auction::{fixtures, run_auction, PriceVector};
//!
//! let instance = fixtures::ana_bob();
//! let start = fixtures::ana_bob_prices(instance.market(), 3);
//! let trace = run_auction(&instance, &start).unwrap();
//! assert_eq!(trace.total_rounds(), 2);
//! assert_eq!(trace.lyapunov_values(), vec![6, 5]);
//! # let _ = PriceVector::<i64>::zero(instance.market());
//! ```
//!
//! All arithmetic is exact over a signed integer type chosen through
//! [`Scalar`]; the aliases at the crate root fix it to `i64`.

pub mod auction;
pub mod chain;
pub mod demand;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod market;
pub mod oracles;
pub mod prices;
pub mod scalar;
pub mod set;
pub mod verifier;

pub use auction::{adjust_prices, run_auction, AuctionTrace, DemandSummary, Round};
pub use chain::{check_chain, find_chain, find_disjoint_chains, ComplementsChain};
pub use demand::{demand, demand_all, lyapunov, DemandReport, DemandSets};
pub use error::{Error, Result};
pub use generate::{generate, random_balanced_prices, GeneratorParams};
pub use market::{AgentId, ContractId, Market, MarketInstance, Valuation};
pub use oracles::{
    check_antitone, check_gc_lowering, efficient_sets, is_equilibrium_price, is_stable,
    is_supermodular, EfficientSets, Instability,
};
pub use prices::{AgentPrices, Outcome, PriceVector};
pub use scalar::Scalar;
pub use set::ContractSet;
pub use verifier::{verify, verify_prices, Verdict, VerificationTrace};

/// Market instance with `i64` valuations.
pub type Instance = MarketInstance<i64>;
pub type Prices = PriceVector<i64>;
pub type Transfers = Outcome<i64>;
pub type Trace = AuctionTrace<i64>;
