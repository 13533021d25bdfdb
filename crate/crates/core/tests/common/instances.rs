//! Randomized small instances for oracle comparisons.

use padplan::network::{InstanceParams, NetworkInstance, Route};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// At most 3 routes, 2 sites, 2 lengths and 3 periods; cycles allowed.
pub fn random_small(seed: u64) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = rng.random_range(2..=4u32);
    let nodes: Vec<u32> = (1..=n_nodes).collect();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for a in 1..=n_nodes {
        for b in 1..=n_nodes {
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    let n_routes = rng.random_range(1..=3usize.min(pairs.len()));
    let mut routes = Vec::new();
    while routes.len() < n_routes {
        let (a, b) = pairs.swap_remove(rng.random_range(0..pairs.len()));
        routes.push(Route::new(a, b));
    }
    let sites = rng.random_range(0..=2usize);
    let lengths = rng.random_range(1..=2usize);
    let horizon = rng.random_range(1..=3usize);
    let (nr, nn) = (routes.len(), nodes.len());

    let mut draw = |n: usize, lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };
    let cc = draw(nr * horizon, 0.02, 0.15);
    let w = draw(nr * horizon, 0.5, 5.0);
    let wo = draw(nn, 0.5, 2.0);
    let uo = draw(nn * horizon, 0.3, 0.8);
    let wc = draw(nr * sites * lengths * horizon, 0.02, 0.25);
    let we = draw(nr * horizon, 0.8, 1.0);
    let ccv = draw(nr * sites * horizon, 5.0, 15.0);
    let ccf = draw(nr * sites * horizon, 50.0, 110.0);
    let ccc = draw(nr * sites * lengths, 500.0, 10000.0);
    let ma = draw(1, 0.2, 0.75)[0];

    NetworkInstance {
        name: format!("random-{seed}"),
        nodes,
        routes,
        horizon,
        sites_per_route: sites,
        lengths,
        params: InstanceParams { cc, ahd: None, w: Some(w), wo, uo, wc, we, ccv, ccf, ccc, ma, budget: None, big_m: None },
        provenance: None,
    }
}
