#![allow(dead_code)]

use klcal::grid::Grid;
use klcal::transcript::{Round, Transcript};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random grid with `size` points: padded when it has a matching K, else
/// sorted uniforms.
pub fn random_grid(rng: &mut ChaCha8Rng, size: usize) -> Grid {
    if size >= 3 && rng.random_bool(0.5) {
        return Grid::padded(size - 1).unwrap();
    }
    loop {
        let mut pts: Vec<f64> = (0..size).map(|_| rng.random_range(0.01..0.99)).collect();
        pts.sort_by(f64::total_cmp);
        if let Ok(g) = Grid::custom(pts) {
            return g;
        }
    }
}

/// Random distribution over `n` indices with at most `support` nonzeros.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize, support: usize) -> Vec<f64> {
    let mut m = vec![0.0; n];
    for _ in 0..support.max(1) {
        m[rng.random_range(0..n)] += rng.random_range(0.05..1.0);
    }
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= total);
    m
}

/// A transcript on a random grid of at most `max_size` points. With
/// `pseudo`, forecasts are mixed and `sampled` is drawn from them; labels
/// have a per-transcript bias so some buckets end up all-0 or all-1.
pub fn random_transcript(
    rng: &mut ChaCha8Rng,
    max_size: usize,
    max_t: usize,
    pseudo: bool,
) -> Transcript {
    let size = rng.random_range(2..=max_size);
    let grid = random_grid(rng, size);
    let t = rng.random_range(1..=max_t);
    let bias: f64 = rng.random();
    let mut out = Transcript::new(grid);
    for _ in 0..t {
        let n = out.grid().len();
        let y = rng.random_bool(bias);
        if pseudo {
            let distribution = random_distribution(rng, n, 3);
            let sampled = klcal::forecaster::sample_index(&distribution, rng.random());
            out.push(Round { distribution, sampled, y }).unwrap();
        } else {
            let i = rng.random_range(0..n);
            out.push_point(i, y).unwrap();
        }
    }
    out
}
