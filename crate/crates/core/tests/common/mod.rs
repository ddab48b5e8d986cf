#![allow(dead_code)]

use collab_auction::{generate, random_balanced_prices, GeneratorParams, Instance, Prices};
use rand::Rng;

/// Parameters for a small random instance: 2 to 4 agents, 1 to 6 contracts,
/// additive values in [-10, 10].
pub fn small_params<R: Rng>(rng: &mut R, seed: u64) -> GeneratorParams {
    let agents = rng.gen_range(2..=4);
    GeneratorParams {
        agents,
        contracts: rng.gen_range(1..=6),
        max_participants: rng.gen_range(2..=agents),
        value_range: (-10, 10),
        synergy_density: [0.0, 0.3, 0.6, 1.0][rng.gen_range(0..4)],
        seed,
    }
}

pub fn small_instance<R: Rng>(rng: &mut R, seed: u64) -> Instance {
    generate(&small_params(rng, seed)).expect("valid parameters")
}

pub fn prices<R: Rng>(instance: &Instance, rng: &mut R) -> Prices {
    random_balanced_prices(instance.market(), (-10, 10), rng).expect("in range")
}
