//! Perturbation ensembles for data-robustness experiments.
//!
//! Each datum `q` becomes `q·(1+ε)` with `ε ~ Uniform(−ρ, ρ)`. Randomness
//! comes from SplitMix64: a master generator seeded with the user seed
//! emits one 64-bit seed per trial, and trial `i` draws its `ε` values, in
//! data order, from its own SplitMix64 stream. Trials run in parallel and
//! results are returned in trial order.

use hgm_core::operator::DataPoint;
use hgm_core::Real;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

pub const DEFAULT_REL: f64 = 1e-3;

pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = SplitMix64::seed_from_u64(master);
    (0..trials).map(|_| rng.next_u64()).collect()
}

pub fn perturb_data<R: Real>(data: &[DataPoint<R>], rel: f64, seed: u64) -> Vec<DataPoint<R>> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    data.iter()
        .map(|d| {
            let eps: f64 = if rel > 0.0 { rng.gen_range(-rel..rel) } else { 0.0 };
            DataPoint { q: d.q * (R::one() + R::from_f64(eps)), ..*d }
        })
        .collect()
}

/// Run `solve` on `trials` perturbed copies of `data`.
pub fn run_ensemble<R, T, E, F>(data: &[DataPoint<R>], rel: f64, seed: u64, trials: usize, solve: F) -> Vec<Result<T, E>>
where
    R: Real,
    T: Send,
    E: Send,
    F: Fn(usize, &[DataPoint<R>]) -> Result<T, E> + Sync,
{
    trial_seeds(seed, trials)
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| solve(i, &perturb_data(data, rel, s)))
        .collect()
}
