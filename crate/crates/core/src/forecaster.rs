//! Blum-Mansour swap-regret forecaster for log loss.
//!
//! One EWOO learner per padded grid point. Each round every learner's
//! prediction is rounded onto the grid, the rounded distributions become
//! the columns of `Q_t`, and the forecast distribution is a fixed point
//! `Q_t p_t = p_t`. After the label arrives, learner `i` is fed the log loss
//! scaled by `p_t[i]`.


use crate::error::{Error, Result};
use crate::ewoo::EwooState;
use crate::grid::Grid;
use crate::rounding::{rounding_distribution, TwoPointDistribution};
use crate::stationary::{stationary_distribution, SolverPath, SparseColumns, StationaryConfig};

/// The forecast distribution of one round and the columns that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDistribution {
    pub masses: Vec<f64>,
    pub columns: Vec<TwoPointDistribution>,
    pub path: SolverPath,
    pub iterations: usize,
}

impl RoundDistribution {
    pub fn matrix(&self) -> SparseColumns {
        columns_to_matrix(&self.columns)
    }

    /// `||Q p - p||_1` recomputed from the stored columns.
    pub fn residual(&self) -> f64 {
        self.matrix().residual(&self.masses)
    }

    /// Inverse-CDF draw for a uniform `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        sample_index(&self.masses, u)
    }
}

/// Smallest index whose cumulative mass exceeds `u`, skipping zero-mass
/// entries when rounding pushes `u` past the total.
pub fn sample_index(masses: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &m) in masses.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        acc += m;
        last_positive = i;
        if u < acc {
            return i;
        }
    }
    last_positive
}

fn columns_to_matrix(columns: &[TwoPointDistribution]) -> SparseColumns {
    let cols = columns.iter().map(|c| c.support().collect()).collect();
    SparseColumns::new(cols).expect("rounding columns are stochastic")
}

#[derive(Clone, Debug)]
pub struct ForecasterState {
    grid: Grid,
    experts: Vec<EwooState>,
    config: StationaryConfig,
}

impl ForecasterState {
    /// Fresh learners on the padded grid with resolution `k`.
    pub fn new(k: usize, config: StationaryConfig) -> Result<Self> {
        config.validate()?;
        let grid = Grid::padded(k)?;
        let experts = vec![EwooState::new(); grid.len()];
        Ok(ForecasterState {
            grid,
            experts,
            config,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn experts(&self) -> &[EwooState] {
        &self.experts
    }

    pub fn config(&self) -> &StationaryConfig {
        &self.config
    }

    /// Rounded EWOO prediction of every learner.
    pub fn columns(&self) -> Result<Vec<TwoPointDistribution>> {
        self.experts
            .iter()
            .map(|e| rounding_distribution(&self.grid, e.predict()))
            .collect()
    }

    pub fn step_distribution(&self) -> Result<RoundDistribution> {
        let columns = self.columns()?;
        let matrix = columns_to_matrix(&columns);
        let found = stationary_distribution(&matrix, &self.config)?;
        Ok(RoundDistribution {
            masses: found.distribution,
            columns,
            path: found.path,
            iterations: found.iterations,
        })
    }

    /// Feeds learner `i` the log loss scaled by `masses[i]`.
    pub fn update(&mut self, realized: &RoundDistribution, y: bool) -> Result<()> {
        if realized.masses.len() != self.experts.len() {
            return Err(Error::Config(format!(
                "distribution has {} entries for {} learners",
                realized.masses.len(),
                self.experts.len()
            )));
        }
        for (expert, &mass) in self.experts.iter_mut().zip(&realized.masses) {
            expert.update(mass.clamp(0.0, 1.0), y)?;
        }
        Ok(())
    }
}
