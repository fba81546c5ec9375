#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skdv::{make_grid, Field, Grid, GridKind, State};

pub fn line(n: usize, half: f64) -> Grid {
    make_grid(GridKind::Line, n, half, 1).unwrap()
}

pub fn radial(n: usize, r: f64, dim: usize) -> Grid {
    make_grid(GridKind::Radial, n, r, dim).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(amplitude, centre, width)` of Gaussian bumps.
pub type Bumps = Vec<(f64, f64, f64)>;

pub fn bump_params(line: bool, rng: &mut impl Rng, amp: f64) -> Bumps {
    (0..4)
        .map(|_| {
            let a = amp * rng.gen_range(-1.0..1.0);
            let c = if line { rng.gen_range(-4.0..4.0) } else { rng.gen_range(0.0..4.0) };
            let w = rng.gen_range(0.8..2.5);
            (a, c, w)
        })
        .collect()
}

pub fn sample(g: &Grid, parts: &Bumps) -> Field {
    g.field_from_fn(|x| parts.iter().map(|&(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())
}

/// A few Gaussian bumps of random sign; smooth on the grid scale.
pub fn bumps(g: &Grid, rng: &mut impl Rng, amp: f64) -> Field {
    sample(g, &bump_params(g.kind() == GridKind::Line, rng, amp))
}

pub fn random_state(g: &Grid, rng: &mut impl Rng) -> State {
    State::new(bumps(g, rng, 2.0), bumps(g, rng, 2.0)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
