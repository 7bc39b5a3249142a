//! Inducing-path and d-separability complementarity over random graphs.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_dag;
use csid_core::sep::verma_equivalence_check;

/// On 1000 random graphs (up to 10 vertices, latents included), every
/// non-adjacent observed pair must satisfy: inducing path exists XOR
/// d-separable given the observed ancestors of the pair. The check is
/// asserted inside `verma_equivalence_check`, which errors on violation.
#[test]
fn inducing_path_complements_ancestral_separability() {
    let mut rng = ChaCha8Rng::seed_from_u64(1717);
    let mut pairs = 0usize;
    for _ in 0..1000 {
        let n_obs = rng.gen_range(2..=7);
        let n_lat = rng.gen_range(0..=3);
        let g = random_dag(&mut rng, n_obs, n_lat, 0.35);
        let observed: Vec<_> = g.observed_vertices().into_iter().collect();
        for (i, &x) in observed.iter().enumerate() {
            for &y in &observed[i + 1..] {
                if g.has_edge(x, y) || g.has_edge(y, x) {
                    continue;
                }
                verma_equivalence_check(&g, x, y)
                    .expect("complementarity must hold on every pair");
                pairs += 1;
            }
        }
    }
    assert!(pairs > 5000, "exercised {pairs} pairs");
}
