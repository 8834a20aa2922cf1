//! Per-round records of a forecasting run and their JSON-lines form.
//!
//! The first line is a grid header `{"K": .., "variant": .., "points": [..]}`;
//! every following line is one round `{"t": .., "P": [..], "i": .., "y": 0|1}`
//! with `t` counted from 1.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridVariant};

/// Tolerance on `sum P_t = 1`.
pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    /// Forecast distribution over grid indices.
    pub distribution: Vec<f64>,
    /// Index of the realized forecast.
    pub sampled: usize,
    pub y: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    grid: Grid,
    rounds: Vec<Round>,
}

impl Transcript {
    pub fn new(grid: Grid) -> Self {
        Transcript {
            grid,
            rounds: Vec::new(),
        }
    }

    pub fn with_rounds(grid: Grid, rounds: Vec<Round>) -> Result<Self> {
        let mut t = Transcript::new(grid);
        for r in rounds {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, round: Round) -> Result<()> {
        let n = self.grid.len();
        if round.distribution.len() != n {
            return Err(Error::Config(format!(
                "round distribution has {} entries, grid has {n}",
                round.distribution.len()
            )));
        }
        if round.sampled >= n {
            return Err(Error::Config(format!("sampled index {} out of range", round.sampled)));
        }
        if round.distribution.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::Config("negative or NaN mass in round distribution".into()));
        }
        let total: f64 = round.distribution.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Config(format!("round distribution sums to {total}")));
        }
        self.rounds.push(round);
        Ok(())
    }

    /// Appends a deterministic round with all mass on `index`.
    pub fn push_point(&mut self, index: usize, y: bool) -> Result<()> {
        let mut distribution = vec![0.0; self.grid.len()];
        if let Some(m) = distribution.get_mut(index) {
            *m = 1.0;
        }
        self.push(Round {
            distribution,
            sampled: index,
            y,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.rounds.iter().map(|r| r.y)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            k: self.grid.k(),
            variant: self.grid.variant(),
            points: self.grid.points().to_vec(),
        };
        serde_json::to_writer(&mut out, &header)?;
        writeln!(out).map_err(|e| Error::io("<transcript>", e))?;
        for (t, r) in self.rounds.iter().enumerate() {
            let line = RoundLine {
                t: t + 1,
                p: r.distribution.clone(),
                i: r.sampled,
                y: u8::from(r.y),
            };
            serde_json::to_writer(&mut out, &line)?;
            writeln!(out).map_err(|e| Error::io("<transcript>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| {
            l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true)
        });
        let (_, first) = lines.next().ok_or_else(|| Error::Parse {
            context: "transcript".into(),
            message: "missing grid header".into(),
        })?;
        let first = first.map_err(|e| Error::io("<transcript>", e))?;
        let header: Header = serde_json::from_str(&first)?;
        let grid = Grid::from_parts(header.k, header.variant, &header.points)?;
        let mut transcript = Transcript::new(grid);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io("<transcript>", e))?;
            let round: RoundLine = serde_json::from_str(&line)?;
            if round.t != transcript.len() + 1 || round.y > 1 {
                return Err(Error::Parse {
                    context: format!("transcript line {}", lineno + 1),
                    message: format!("unexpected round t = {} y = {}", round.t, round.y),
                });
            }
            transcript.push(Round {
                distribution: round.p,
                sampled: round.i,
                y: round.y == 1,
            })?;
        }
        Ok(transcript)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "K")]
    k: usize,
    variant: GridVariant,
    points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RoundLine {
    t: usize,
    #[serde(rename = "P")]
    p: Vec<f64>,
    i: usize,
    y: u8,
}
