//! Label sources and the mean-revealing dual-game baseline.
//!
//! Oblivious kinds draw from their own ChaCha stream (stream 1 of the seed),
//! one uniform per round whether or not the kind is random, so their label
//! sequence does not depend on the forecaster.

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// ChaCha stream used by adversaries; forecasters use stream 0.
pub const ADVERSARY_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryKind {
    FixedSequence(Vec<bool>),
    IidBernoulli(f64),
    /// Round `t` (counted from 1) uses `means[j]` where `j` is the number of
    /// breakpoints strictly below `t`.
    PiecewiseDrift {
        breakpoints: Vec<usize>,
        means: Vec<f64>,
    },
    /// Label 1 when the forecast distribution's mean grid value is at most
    /// 1/2, else 0.
    AdaptiveAntiMode,
    FromFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    pub seed: u64,
}

fn check_mean(mean: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mean) {
        Ok(())
    } else {
        Err(Error::domain("adversary mean", mean, "[0, 1]"))
    }
}

impl AdversaryKind {
    /// Drift through `means` in equal-length segments over `horizon` rounds.
    pub fn even_drift(horizon: usize, means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Config("drift needs at least one mean".into()));
        }
        let s = means.len();
        let breakpoints = (1..s).map(|j| j * horizon / s).collect();
        let kind = AdversaryKind::PiecewiseDrift { breakpoints, means };
        kind.validate()?;
        Ok(kind)
    }

    /// Parses a CLI name and optional parameter.
    ///
    /// `fixed` takes labels as `1,0,1` or `101`; `iid` a mean (default 0.5);
    /// `drift` comma-separated means spread evenly over `horizon` (default
    /// `0.2,0.8`); `anti-mode` nothing; `file` a path.
    pub fn parse(name: &str, param: Option<&str>, horizon: usize) -> Result<Self> {
        let bad = |m: String| Error::Parse {
            context: format!("adversary {name}"),
            message: m,
        };
        let float = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("{s:?}: {e}")))
        };
        let kind = match name {
            "fixed" => {
                let p = param.ok_or_else(|| bad("missing label sequence".into()))?;
                let labels = p
                    .chars()
                    .filter(|c| !matches!(c, ',' | ' '))
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(bad(format!("label {c:?} is not 0 or 1"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                AdversaryKind::FixedSequence(labels)
            }
            "iid" => AdversaryKind::IidBernoulli(param.map(float).transpose()?.unwrap_or(0.5)),
            "drift" => {
                let means = param
                    .unwrap_or("0.2,0.8")
                    .split(',')
                    .map(float)
                    .collect::<Result<Vec<_>>>()?;
                AdversaryKind::even_drift(horizon, means)?
            }
            "anti-mode" => AdversaryKind::AdaptiveAntiMode,
            "file" => AdversaryKind::FromFile(PathBuf::from(
                param.ok_or_else(|| bad("missing path".into()))?,
            )),
            other => return Err(bad(format!("unknown adversary {other:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AdversaryKind::IidBernoulli(mean) => check_mean(*mean),
            AdversaryKind::PiecewiseDrift { breakpoints, means } => {
                if means.len() != breakpoints.len() + 1 {
                    return Err(Error::Config(format!(
                        "{} breakpoints need {} means, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        means.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("drift breakpoints must increase".into()));
                }
                means.iter().try_for_each(|&m| check_mean(m))
            }
            _ => Ok(()),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, AdversaryKind::AdaptiveAntiMode)
    }

    /// `E[y_t]` for kinds that expose it.
    pub fn revealed_mean(&self, round: usize) -> Option<f64> {
        match self {
            AdversaryKind::IidBernoulli(mean) => Some(*mean),
            AdversaryKind::PiecewiseDrift { breakpoints, means } => {
                Some(means[breakpoints.partition_point(|&b| b < round)])
            }
            _ => None,
        }
    }
}

/// A running adversary.
#[derive(Clone, Debug)]
pub struct Adversary {
    kind: AdversaryKind,
    rng: ChaCha8Rng,
    file_labels: Vec<bool>,
}

impl Adversary {
    pub fn new(spec: &AdversarySpec) -> Result<Self> {
        spec.kind.validate()?;
        let file_labels = match &spec.kind {
            AdversaryKind::FromFile(path) => read_labels(path)?,
            _ => Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(ADVERSARY_STREAM);
        Ok(Adversary {
            kind: spec.kind.clone(),
            rng,
            file_labels,
        })
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    pub fn revealed_mean(&self, round: usize) -> Option<f64> {
        self.kind.revealed_mean(round)
    }

    /// Label for round `round` (counted from 1). `forecast` is the current
    /// distribution over `grid`; only adaptive kinds look at it.
    pub fn next_label(&mut self, round: usize, grid: &Grid, forecast: &[f64]) -> Result<bool> {
        let u: f64 = self.rng.random();
        match &self.kind {
            AdversaryKind::FixedSequence(labels) => labels
                .get(round - 1)
                .copied()
                .ok_or(Error::Exhausted { round }),
            AdversaryKind::FromFile(_) => self
                .file_labels
                .get(round - 1)
                .copied()
                .ok_or(Error::Exhausted { round }),
            AdversaryKind::IidBernoulli(_) | AdversaryKind::PiecewiseDrift { .. } => {
                let mean = self.kind.revealed_mean(round).unwrap_or(0.0);
                Ok(u < mean)
            }
            AdversaryKind::AdaptiveAntiMode => {
                let mean: f64 = forecast
                    .iter()
                    .zip(grid.points())
                    .map(|(m, z)| m * z)
                    .sum();
                Ok(mean <= 0.5)
            }
        }
    }
}

/// One `0` or `1` per line; blank lines are skipped.
pub fn read_labels(path: &PathBuf) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Parse {
                context: format!("{}:{}", path.display(), n + 1),
                message: format!("expected 0 or 1, got {other:?}"),
            }),
        })
        .collect()
}

/// Theorem 4.1 Step I: predict the grid point nearest the revealed mean.
pub fn dualgame_forecast(grid: &Grid, revealed_mean: f64) -> usize {
    grid.nearest_index(revealed_mean)
}
