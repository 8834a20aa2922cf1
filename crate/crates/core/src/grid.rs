//! The non-uniform `sin^2` discretization of `[0, 1]`.
//!
//! Points `z_i = sin^2(pi i / 2K)` crowd toward 0 and 1, where Bernoulli
//! distributions are most sensitive. The interior variant keeps
//! `z_1..z_{K-1}`; the padded variant adds `z_0 = sin^2(pi / 4K)` and
//! `z_K = cos^2(pi / 4K)` so every probability in `[z_0, z_K]` is bracketed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::kl_bernoulli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridVariant {
    Interior,
    Padded,
    /// Caller-supplied points, used for hand-built transcripts.
    Custom,
}

/// Strictly increasing grid points in `(0, 1)`. The sin² variants are symmetric about 1/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    k: usize,
    variant: GridVariant,
    points: Vec<f64>,
}

/// `K = max(2, round((T / ln T)^(1/3)))`.
pub fn default_k(horizon: usize) -> usize {
    if horizon < 3 {
        return 2;
    }
    let t = horizon as f64;
    ((t / t.ln()).cbrt().round() as usize).max(2)
}

impl Grid {
    pub fn new(k: usize, variant: GridVariant) -> Result<Self> {
        if variant == GridVariant::Custom {
            return Err(Error::Config("custom grids are built with Grid::custom".into()));
        }
        if k < 2 {
            return Err(Error::Config(format!("grid resolution K must be >= 2, got {k}")));
        }
        // z_i for i in 0..=K on the full index range, then trimmed per variant.
        // The upper half mirrors the lower half so z_i + z_{K-i} = 1 exactly
        // up to the rounding of the subtraction.
        let kf = k as f64;
        let mut z = vec![0.0; k + 1];
        for (i, zi) in z.iter_mut().enumerate().take(k / 2 + 1) {
            *zi = (PI * i as f64 / (2.0 * kf)).sin().powi(2);
        }
        if k % 2 == 0 {
            z[k / 2] = 0.5;
        }
        for i in (k / 2 + 1)..=k {
            z[i] = 1.0 - z[k - i];
        }
        let points = match variant {
            GridVariant::Interior => z[1..k].to_vec(),
            GridVariant::Padded => {
                let z0 = (PI / (4.0 * kf)).sin().powi(2);
                z[0] = z0;
                z[k] = 1.0 - z0;
                z
            }
            GridVariant::Custom => unreachable!(),
        };
        Ok(Grid { k, variant, points })
    }

    pub fn interior(k: usize) -> Result<Self> {
        Self::new(k, GridVariant::Interior)
    }

    pub fn padded(k: usize) -> Result<Self> {
        Self::new(k, GridVariant::Padded)
    }

    /// Arbitrary strictly increasing points in `(0, 1)`; `k` is the point count.
    pub fn custom(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("custom grid needs at least one point".into()));
        }
        if points.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
            return Err(Error::Config("custom grid points must lie in (0, 1)".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("custom grid points must be strictly increasing".into()));
        }
        Ok(Grid {
            k: points.len(),
            variant: GridVariant::Custom,
            points,
        })
    }

    /// Rebuilds a grid and checks the supplied points against it.
    pub fn from_parts(k: usize, variant: GridVariant, points: &[f64]) -> Result<Self> {
        if variant == GridVariant::Custom {
            let grid = Self::custom(points.to_vec())?;
            if grid.k != k {
                return Err(Error::Parse {
                    context: "grid header".into(),
                    message: format!("custom grid with {} points declares K = {k}", grid.k),
                });
            }
            return Ok(grid);
        }
        let grid = Self::new(k, variant)?;
        let matches = grid.points.len() == points.len()
            && grid
                .points
                .iter()
                .zip(points)
                .all(|(a, b)| (a - b).abs() <= 1e-12);
        if !matches {
            return Err(Error::Parse {
                context: "grid header".into(),
                message: format!("points do not match a {variant:?} grid with K = {k}"),
            });
        }
        Ok(grid)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> GridVariant {
        self.variant
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> f64 {
        self.points[index]
    }

    /// Consecutive differences `points[j + 1] - points[j]`.
    pub fn gaps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index of the grid point closest to `p`.
    ///
    /// Ties, including near-ties within a few ulps, go to the lower index.
    pub fn nearest_index(&self, p: f64) -> usize {
        let above = self.points.partition_point(|&z| z <= p);
        if above == 0 {
            return 0;
        }
        if above == self.points.len() {
            return above - 1;
        }
        let lo = above - 1;
        let below_dist = p - self.points[lo];
        let above_dist = self.points[above] - p;
        if above_dist < below_dist - 4.0 * f64::EPSILON {
            above
        } else {
            lo
        }
    }

    /// Consecutive pair `(i, i + 1)` with `z_i <= p < z_{i+1}`; the top point
    /// maps to the last pair.
    pub fn bracket(&self, p: f64) -> Result<(usize, usize)> {
        let n = self.points.len();
        if n < 2 {
            return Err(Error::Config("bracketing needs at least two grid points".into()));
        }
        if !(p >= self.points[0] && p <= self.points[n - 1]) {
            return Err(Error::domain("p", p, "[z_0, z_K]"));
        }
        let above = self.points.partition_point(|&z| z <= p);
        let lo = (above - 1).min(n - 2);
        Ok((lo, lo + 1))
    }

    /// Clamps `p` into `[z_0, z_K]`.
    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.points[0], self.points[self.points.len() - 1])
    }

    /// Smallest KL divergence from Bernoulli(rho) to a grid point.
    pub fn min_kl_to_grid(&self, rho: f64) -> Result<f64> {
        // KL(rho, z) decreases in z below rho and increases above it, so the
        // minimizer is one of the two neighbours of rho.
        let above = self.points.partition_point(|&z| z <= rho);
        let mut best = f64::INFINITY;
        for j in [above.wrapping_sub(1), above] {
            if let Some(&z) = self.points.get(j) {
                best = best.min(kl_bernoulli(rho, z)?);
            }
        }
        Ok(best)
    }

    /// Worst-case quantization error `max_rho min_z KL(rho, z)` over the
    /// sweep `rho = j / resolution`, `j = 0..=resolution`.
    pub fn max_grid_kl_gap(&self, resolution: usize) -> Result<f64> {
        let resolution = resolution.max(1);
        let rhos = (0..=resolution).map(|j| j as f64 / resolution as f64);
        self.max_kl_gap_over(rhos)
    }

    /// As [`Grid::max_grid_kl_gap`] over caller-chosen targets.
    pub fn max_kl_gap_over(&self, rhos: impl IntoIterator<Item = f64>) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for rho in rhos {
            worst = worst.max(self.min_kl_to_grid(rho)?);
        }
        Ok(worst)
    }

    /// Quantization bound `(2 - sqrt 2) pi^2 / K^2`.
    pub fn kl_quantization_bound(&self) -> f64 {
        (2.0 - std::f64::consts::SQRT_2) * PI * PI / (self.k as f64).powi(2)
    }
}
