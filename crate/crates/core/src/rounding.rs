//! Randomized rounding of a probability onto a padded grid, tuned for log
//! loss.
//!
//! A point `p` in `[z_i, z_{i+1})` is sent to `z_i` with weight
//! `(z_{i+1} - p) / (z_{i+1}(1 - z_{i+1}))` and to `z_{i+1}` with weight
//! `(p - z_i) / (z_i(1 - z_i))`. Dividing each distance by the variance of the
//! far endpoint keeps the expected log loss within `O(1/K^2)` of `l(p, y)`.
//! Nearest-point and distance-proportional rounding are kept as baselines;
//! both can lose a constant amount near the boundary.

use crate::error::Result;
use crate::grid::Grid;

/// A distribution supported on two consecutive grid indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointDistribution {
    pub lower_index: usize,
    pub upper_index: usize,
    pub lower_mass: f64,
    pub upper_mass: f64,
}

impl TwoPointDistribution {
    fn from_weights(lower_index: usize, lower_weight: f64, upper_weight: f64) -> Self {
        let total = lower_weight + upper_weight;
        let lower_mass = lower_weight / total;
        TwoPointDistribution {
            lower_index,
            upper_index: lower_index + 1,
            lower_mass,
            upper_mass: 1.0 - lower_mass,
        }
    }

    /// Point mass on `index`, expressed on a consecutive pair of a grid with
    /// `len` points.
    pub fn point_mass(index: usize, len: usize) -> Self {
        if index + 1 < len {
            TwoPointDistribution {
                lower_index: index,
                upper_index: index + 1,
                lower_mass: 1.0,
                upper_mass: 0.0,
            }
        } else {
            TwoPointDistribution {
                lower_index: index - 1,
                upper_index: index,
                lower_mass: 0.0,
                upper_mass: 1.0,
            }
        }
    }

    /// Nonzero `(index, mass)` entries.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> {
        [
            (self.lower_index, self.lower_mass),
            (self.upper_index, self.upper_mass),
        ]
        .into_iter()
        .filter(|&(_, m)| m > 0.0)
    }

    /// `E[g(q)]` for the grid value `q` drawn from this distribution.
    pub fn expect(&self, grid: &Grid, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.support().map(|(i, m)| m * g(grid.point(i))).sum()
    }

    pub fn mean(&self, grid: &Grid) -> f64 {
        self.expect(grid, |z| z)
    }
}

fn variance(z: f64) -> f64 {
    z * (1.0 - z)
}

fn log_loss(p: f64, y: bool) -> f64 {
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Clamps `p` into the grid's range and returns it with its bracket.
fn clamped_bracket(grid: &Grid, p: f64) -> Result<(f64, usize, usize)> {
    let p = grid.clamp(p);
    let (lo, hi) = grid.bracket(p)?;
    Ok((p, lo, hi))
}

/// The log-loss rounding distribution for `p`, after clamping `p` into
/// `[z_0, z_K]`.
pub fn rounding_distribution(grid: &Grid, p: f64) -> Result<TwoPointDistribution> {
    let (p, lo, hi) = clamped_bracket(grid, p)?;
    let (z_lo, z_hi) = (grid.point(lo), grid.point(hi));
    let lower_weight = (z_hi - p) / variance(z_hi);
    let upper_weight = (p - z_lo) / variance(z_lo);
    Ok(TwoPointDistribution::from_weights(lo, lower_weight, upper_weight))
}

/// Upper bound on `E[l(q, y)] - l(p, y)` for log loss, valid for both labels:
///
/// ```text
/// (p+ - p)(p - p-) / (p + p- p+ - p(p- + p+))
/// ```
pub fn overhead_bound(grid: &Grid, p: f64) -> Result<f64> {
    let (p, lo, hi) = clamped_bracket(grid, p)?;
    let (a, b) = (grid.point(lo), grid.point(hi));
    Ok((b - p) * (p - a) / (p + a * b - p * (a + b)))
}

/// Exact `E[l(q, y)] - l(p, y)` for log loss under [`rounding_distribution`].
pub fn actual_overhead(grid: &Grid, p: f64, y: bool) -> Result<f64> {
    let dist = rounding_distribution(grid, p)?;
    Ok(expected_overhead(grid, &dist, grid.clamp(p), y))
}

/// `E[l(q, y)] - l(p, y)` for log loss under an arbitrary two-point rounding.
pub fn expected_overhead(grid: &Grid, dist: &TwoPointDistribution, p: f64, y: bool) -> f64 {
    dist.expect(grid, |z| log_loss(z, y)) - log_loss(p, y)
}

/// One-hot rounding to the nearest grid point.
pub fn baseline_nearest(grid: &Grid, p: f64) -> TwoPointDistribution {
    TwoPointDistribution::point_mass(grid.nearest_index(p), grid.len())
}

/// Distance-proportional rounding onto the bracketing pair.
pub fn baseline_linear(grid: &Grid, p: f64) -> Result<TwoPointDistribution> {
    let (p, lo, hi) = clamped_bracket(grid, p)?;
    Ok(TwoPointDistribution::from_weights(
        lo,
        grid.point(hi) - p,
        p - grid.point(lo),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> Grid {
        Grid::padded(2).unwrap()
    }

    #[test]
    fn rounding_examples() {
        let g = k2();
        let d = rounding_distribution(&g, 0.3).unwrap();
        assert_eq!((d.lower_index, d.upper_index), (0, 1));
        assert!((d.lower_mass - 0.394_394_252_689_803_3).abs() < 1e-12);
        assert!((d.upper_mass - 0.605_605_747_310_196_7).abs() < 1e-12);

        let d = rounding_distribution(&g, g.point(0)).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let d = rounding_distribution(&g, 0.5).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(1, 1.0)]);
        let d = rounding_distribution(&g, g.point(2)).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(2, 1.0)]);
    }

    #[test]
    fn out_of_range_inputs_are_clamped() {
        let g = k2();
        let d = rounding_distribution(&g, 0.01).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let d = rounding_distribution(&g, 0.999).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(2, 1.0)]);
    }

    #[test]
    fn overhead_examples() {
        let g = k2();
        let b = overhead_bound(&g, 0.3).unwrap();
        assert!((b - 0.171_291_172_259_434_74).abs() < 1e-12);
        let d = rounding_distribution(&g, 0.3).unwrap();
        let brute = 0.3 * d.expect(&g, |z| 1.0 / z) - 1.0;
        assert!((b - brute).abs() < 1e-12);
        for j in 0..g.len() {
            assert_eq!(overhead_bound(&g, g.point(j)).unwrap(), 0.0);
            for y in [false, true] {
                assert_eq!(actual_overhead(&g, g.point(j), y).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn actual_overhead_examples() {
        let g = k2();
        let a0 = actual_overhead(&g, 0.3, false).unwrap();
        let a1 = actual_overhead(&g, 0.3, true).unwrap();
        assert!((a0 - 0.125_550_191_568_600_76).abs() < 1e-12);
        assert!((a1 + 0.026_530_314_432_394_95).abs() < 1e-12);
    }

    #[test]
    fn bound_peaks_inside_each_bracket() {
        let g = k2();
        for (a, b) in [(g.point(0), g.point(1)), (g.point(1), g.point(2))] {
            let n = 2000;
            let values: Vec<f64> = (0..=n)
                .map(|j| overhead_bound(&g, a + (b - a) * j as f64 / n as f64).unwrap())
                .collect();
            let argmax = values
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .unwrap()
                .0;
            assert!(argmax > 0 && argmax < n);
            assert!(values[argmax] > values[0] && values[argmax] > values[n]);
        }
    }

    #[test]
    fn baselines() {
        let g = k2();
        let mid = 0.5 * (g.point(0) + g.point(1));
        let d = baseline_nearest(&g, mid);
        assert_eq!(d.support().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let d = baseline_linear(&g, 0.3).unwrap();
        assert!((d.lower_mass - 0.565_685_424_949_238_1).abs() < 1e-12);
        for j in 0..g.len() {
            let d = baseline_nearest(&g, g.point(j));
            assert_eq!(d.support().collect::<Vec<_>>(), vec![(j, 1.0)]);
        }
    }
}
