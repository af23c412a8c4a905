//! Random obstacle fields.

use flatfw_core::{Obstacle, Vec2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Horizontal rectangle `[x0, x1] × [y0, y1]` in meters (north, east).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub north: (f64, f64),
    pub east: (f64, f64),
}

impl Region {
    pub fn new(north: (f64, f64), east: (f64, f64)) -> Self {
        Self { north, east }
    }

    /// Area in km².
    pub fn area_km2(&self) -> f64 {
        (self.north.1 - self.north.0) * (self.east.1 - self.east.0) / 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSpec {
    pub region: Region,
    /// Obstacles per km².
    pub density: f64,
    pub radius: (f64, f64),
}

impl EnvSpec {
    pub fn count(&self) -> usize {
        (self.density * self.region.area_km2()).round() as usize
    }
}

/// `n` points in the unit square, one per row and one per column stratum.
pub fn latin_hypercube(n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    let mut cols: Vec<Vec<usize>> = (0..2).map(|_| (0..n).collect()).collect();
    for c in &mut cols {
        c.shuffle(rng);
    }
    (0..n)
        .map(|i| std::array::from_fn(|d| (cols[d][i] as f64 + rng.gen::<f64>()) / n as f64))
        .collect()
}

/// Obstacle field with Latin-hypercube centers and uniform radii.
pub fn gen_random_env(spec: &EnvSpec, seed: u64) -> Vec<Obstacle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_env(spec, &mut rng)
}

fn sample_env(spec: &EnvSpec, rng: &mut ChaCha8Rng) -> Vec<Obstacle> {
    let r = spec.region;
    latin_hypercube(spec.count(), rng)
        .into_iter()
        .map(|[u, v]| {
            let radius = rng.gen_range(spec.radius.0..=spec.radius.1);
            Obstacle::new(r.north.0 + u * (r.north.1 - r.north.0), r.east.0 + v * (r.east.1 - r.east.0), radius)
        })
        .collect()
}

/// Like [`gen_random_env`] but redraws the whole field until no inflated
/// obstacle (radius plus `clearance`) contains any of `keep_clear`.
pub fn gen_env_clear_of(spec: &EnvSpec, seed: u64, keep_clear: &[Vec2], clearance: f64) -> Vec<Obstacle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let env = sample_env(spec, &mut rng);
        let blocked = env.iter().any(|o| keep_clear.iter().any(|p| (p - o.center).norm() < o.radius + clearance));
        if !blocked {
            return env;
        }
    }
}
