//! Calibration errors and swap regrets of a transcript.
//!
//! Buckets are grid points. For bucket `p`, the realized statistics use
//! `n_p = #{t : p_t = p}` and `rho_p`, the label mean over those rounds; the
//! pseudo statistics replace indicators by the forecast masses `P_t(p)`.
//! Empty buckets contribute zero.
//!
//! For a proper loss the swap regret is a sum of Bregman divergences,
//! `sum_p n_p BREG(rho_p, p)` ([`swap_regret`]). [`swap_regret_bruteforce`]
//! evaluates the same supremum from pointwise losses over a candidate set,
//! and [`swap_regret_enumerated`] enumerates every swap function on tiny
//! inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{kl_bernoulli, LossSpec};
use crate::transcript::Transcript;

/// Realized forecasts (indicators) or forecast distributions (masses).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Realized,
    Pseudo,
}

/// Per-bucket sums: total weight and label-weighted total.
#[derive(Clone, Debug, PartialEq)]
pub struct Buckets {
    pub weight: Vec<f64>,
    pub label_weight: Vec<f64>,
}

impl Buckets {
    pub fn new(transcript: &Transcript, weighting: Weighting) -> Self {
        let n = transcript.grid().len();
        let mut weight = vec![0.0; n];
        let mut label_weight = vec![0.0; n];
        for round in transcript.rounds() {
            match weighting {
                Weighting::Realized => {
                    weight[round.sampled] += 1.0;
                    if round.y {
                        label_weight[round.sampled] += 1.0;
                    }
                }
                Weighting::Pseudo => {
                    for (i, &m) in round.distribution.iter().enumerate() {
                        weight[i] += m;
                        if round.y {
                            label_weight[i] += m;
                        }
                    }
                }
            }
        }
        Buckets {
            weight,
            label_weight,
        }
    }

    /// Conditional label frequency of bucket `i`, zero for empty buckets.
    pub fn mean(&self, i: usize) -> f64 {
        if self.weight[i] > 0.0 {
            (self.label_weight[i] / self.weight[i]).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.weight.len()).filter(move |&i| self.weight[i] > 0.0)
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("q", q, "[1, inf)"))
    }
}

fn calibration(transcript: &Transcript, q: f64, weighting: Weighting) -> Result<f64> {
    check_exponent(q)?;
    let b = Buckets::new(transcript, weighting);
    let grid = transcript.grid();
    Ok(b.occupied()
        .map(|i| b.weight[i] * (grid.point(i) - b.mean(i)).abs().powf(q))
        .sum())
}

/// `sum_p n_p |p - rho_p|^q`.
pub fn cal_q(transcript: &Transcript, q: f64) -> Result<f64> {
    calibration(transcript, q, Weighting::Realized)
}

/// Pseudo calibration error, weighting buckets by forecast mass.
pub fn pcal_q(transcript: &Transcript, q: f64) -> Result<f64> {
    calibration(transcript, q, Weighting::Pseudo)
}

fn kl_calibration(transcript: &Transcript, weighting: Weighting) -> Result<f64> {
    let b = Buckets::new(transcript, weighting);
    let grid = transcript.grid();
    b.occupied()
        .map(|i| Ok(b.weight[i] * kl_bernoulli(b.mean(i), grid.point(i))?))
        .sum()
}

/// `sum_p n_p KL(rho_p, p)`.
pub fn klcal(transcript: &Transcript) -> Result<f64> {
    kl_calibration(transcript, Weighting::Realized)
}

pub fn pklcal(transcript: &Transcript) -> Result<f64> {
    kl_calibration(transcript, Weighting::Pseudo)
}

/// Swap regret through the Bregman identity `sum_p w_p BREG(rho_p, p)`.
pub fn swap_regret(transcript: &Transcript, loss: &LossSpec, weighting: Weighting) -> Result<f64> {
    let b = Buckets::new(transcript, weighting);
    let grid = transcript.grid();
    b.occupied()
        .map(|i| Ok(b.weight[i] * loss.bregman(b.mean(i), grid.point(i))?))
        .sum()
}

/// Replacement targets considered by [`swap_regret_bruteforce`] and
/// [`external_regret`].
#[derive(Clone, Debug, PartialEq)]
pub enum Candidates {
    /// The conditional label frequencies of all occupied buckets.
    BucketMeans,
    /// The transcript's grid points.
    Grid,
    /// The grid points plus the overall label mean.
    GridAndMean,
    Values(Vec<f64>),
}

impl Candidates {
    fn resolve(&self, transcript: &Transcript, buckets: &Buckets) -> Vec<f64> {
        match self {
            Candidates::BucketMeans => buckets.occupied().map(|i| buckets.mean(i)).collect(),
            Candidates::Grid => transcript.grid().points().to_vec(),
            Candidates::GridAndMean => {
                let mut v = transcript.grid().points().to_vec();
                if !transcript.is_empty() {
                    let ones = transcript.labels().filter(|&y| y).count();
                    v.push(ones as f64 / transcript.len() as f64);
                }
                v
            }
            Candidates::Values(v) => v.clone(),
        }
    }
}

/// `a1 l(v, 1) + a0 l(v, 0)`, skipping zero coefficients so that log loss at
/// an endpoint stays finite when the losing label never occurs. A loss that
/// is infinite with positive weight yields `+inf`.
fn weighted_loss(loss: &LossSpec, v: f64, a1: f64, a0: f64) -> Result<f64> {
    let mut total = 0.0;
    for (coef, y) in [(a1, true), (a0, false)] {
        if coef > 0.0 {
            match loss.value(v, y) {
                Ok(l) => total += coef * l,
                Err(Error::Domain { .. }) if (0.0..=1.0).contains(&v) => return Ok(f64::INFINITY),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(total)
}

/// `sum_p max_v sum_t w_t(p) (l(p, y_t) - l(v, y_t))` over the candidate set,
/// evaluated from pointwise losses.
pub fn swap_regret_bruteforce(
    transcript: &Transcript,
    loss: &LossSpec,
    candidates: &Candidates,
    weighting: Weighting,
) -> Result<f64> {
    let b = Buckets::new(transcript, weighting);
    let targets = candidates.resolve(transcript, &b);
    let grid = transcript.grid();
    let mut total = 0.0;
    for i in b.occupied() {
        let a1 = b.label_weight[i];
        let a0 = b.weight[i] - a1;
        let own = weighted_loss(loss, grid.point(i), a1, a0)?;
        let mut best = f64::NEG_INFINITY;
        for &v in &targets {
            best = best.max(own - weighted_loss(loss, v, a1, a0)?);
        }
        if best.is_finite() {
            total += best;
        }
    }
    Ok(total)
}

/// Upper limit on `|targets|^|Z|` for [`swap_regret_enumerated`].
pub const ENUMERATION_LIMIT: usize = 1 << 20;

/// Literal supremum over every swap function `sigma: Z -> C`, where `C` is the
/// grid together with all bucket means, summing losses round by round.
pub fn swap_regret_enumerated(
    transcript: &Transcript,
    loss: &LossSpec,
    weighting: Weighting,
) -> Result<f64> {
    let grid = transcript.grid();
    let n = grid.len();
    let b = Buckets::new(transcript, weighting);
    let mut targets = grid.points().to_vec();
    targets.extend(b.occupied().map(|i| b.mean(i)));
    let m = targets.len();
    let count = (m as f64).powi(n as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::Config(format!("{m}^{n} swap functions is too many to enumerate")));
    }
    let count = count as usize;

    let pointwise = |v: f64, y: bool| -> Result<f64> {
        match loss.value(v, y) {
            Ok(l) => Ok(l),
            Err(Error::Domain { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let mut sigma = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    for code in 0..count {
        let mut c = code;
        for s in sigma.iter_mut() {
            *s = c % m;
            c /= m;
        }
        let mut regret = 0.0;
        for round in transcript.rounds() {
            let weights: Vec<(usize, f64)> = match weighting {
                Weighting::Realized => vec![(round.sampled, 1.0)],
                Weighting::Pseudo => round.distribution.iter().copied().enumerate().collect(),
            };
            for (i, w) in weights {
                if w == 0.0 {
                    continue;
                }
                let own = pointwise(grid.point(i), round.y)?;
                let swapped = pointwise(targets[sigma[i]], round.y)?;
                regret += w * (own - swapped);
            }
        }
        if !regret.is_nan() {
            best = best.max(regret);
        }
    }
    Ok(best)
}

/// `sum_t E[l(p_t, y_t)] - min_v sum_t l(v, y_t)` over the candidate set.
pub fn external_regret(
    transcript: &Transcript,
    loss: &LossSpec,
    candidates: &Candidates,
    weighting: Weighting,
) -> Result<f64> {
    let b = Buckets::new(transcript, weighting);
    let grid = transcript.grid();
    let mut incurred = 0.0;
    for i in b.occupied() {
        let a1 = b.label_weight[i];
        incurred += weighted_loss(loss, grid.point(i), a1, b.weight[i] - a1)?;
    }
    let ones = transcript.labels().filter(|&y| y).count() as f64;
    let zeros = transcript.len() as f64 - ones;
    let mut best = f64::INFINITY;
    for v in candidates.resolve(transcript, &b) {
        best = best.min(weighted_loss(loss, v, ones, zeros)?);
    }
    if transcript.is_empty() {
        return Ok(0.0);
    }
    Ok(incurred - best)
}

/// `6 PCal_2 + 96 |Z| ln(4 |Z| / delta) - Cal_2`; nonnegative when the
/// high-probability relation between realized and pseudo calibration holds.
pub fn hp_margin(transcript: &Transcript, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", delta, "(0, 1)"));
    }
    let z = transcript.grid().len() as f64;
    Ok(6.0 * pcal_q(transcript, 2.0)? + 96.0 * z * (4.0 * z / delta).ln() - cal_q(transcript, 2.0)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossMetrics {
    pub loss: String,
    pub swap_regret: f64,
    pub pseudo_swap_regret: f64,
    pub external_regret: f64,
    pub pseudo_external_regret: f64,
}

/// All metrics of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub horizon: usize,
    pub k: usize,
    pub grid_size: usize,
    pub cal_1: f64,
    pub cal_2: f64,
    pub klcal: f64,
    pub pcal_1: f64,
    pub pcal_2: f64,
    pub pklcal: f64,
    pub losses: Vec<LossMetrics>,
    pub hp_delta: f64,
    pub hp_margin: f64,
}

/// Default confidence level for [`MetricReport::hp_margin`].
pub const DEFAULT_HP_DELTA: f64 = 0.1;

impl MetricReport {
    pub fn compute(transcript: &Transcript, losses: &[LossSpec], hp_delta: f64) -> Result<Self> {
        let losses = losses
            .iter()
            .map(|loss| {
                Ok(LossMetrics {
                    loss: loss.name(),
                    swap_regret: swap_regret(transcript, loss, Weighting::Realized)?,
                    pseudo_swap_regret: swap_regret(transcript, loss, Weighting::Pseudo)?,
                    external_regret: external_regret(
                        transcript,
                        loss,
                        &Candidates::GridAndMean,
                        Weighting::Realized,
                    )?,
                    pseudo_external_regret: external_regret(
                        transcript,
                        loss,
                        &Candidates::GridAndMean,
                        Weighting::Pseudo,
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricReport {
            horizon: transcript.len(),
            k: transcript.grid().k(),
            grid_size: transcript.grid().len(),
            cal_1: cal_q(transcript, 1.0)?,
            cal_2: cal_q(transcript, 2.0)?,
            klcal: klcal(transcript)?,
            pcal_1: pcal_q(transcript, 1.0)?,
            pcal_2: pcal_q(transcript, 2.0)?,
            pklcal: pklcal(transcript)?,
            losses,
            hp_delta,
            hp_margin: hp_margin(transcript, hp_delta)?,
        })
    }

    /// Flat `(name, value)` list: the scalar metrics followed by
    /// `swap:<loss>`, `pseudo_swap:<loss>`, `external:<loss>` and
    /// `pseudo_external:<loss>` for each loss.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("cal_1".to_string(), self.cal_1),
            ("cal_2".to_string(), self.cal_2),
            ("klcal".to_string(), self.klcal),
            ("pcal_1".to_string(), self.pcal_1),
            ("pcal_2".to_string(), self.pcal_2),
            ("pklcal".to_string(), self.pklcal),
            ("hp_margin".to_string(), self.hp_margin),
        ];
        for l in &self.losses {
            out.push((format!("swap:{}", l.loss), l.swap_regret));
            out.push((format!("pseudo_swap:{}", l.loss), l.pseudo_swap_regret));
            out.push((format!("external:{}", l.loss), l.external_regret));
            out.push((format!("pseudo_external:{}", l.loss), l.pseudo_external_regret));
        }
        out
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        if name == "horizon" {
            return Some(self.horizon as f64);
        }
        self.entries().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}
