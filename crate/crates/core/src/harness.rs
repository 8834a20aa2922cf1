//! Single runs, multi-seed sweeps with a log-log rate fit, and report files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{dualgame_forecast, Adversary, AdversaryKind, AdversarySpec};
use crate::error::{Error, Result};
use crate::forecaster::ForecasterState;
use crate::grid::{default_k, Grid};
use crate::losses::LossSpec;
use crate::metrics::{MetricReport, DEFAULT_HP_DELTA};
use crate::stationary::StationaryConfig;
use crate::transcript::{Round, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecasterKind {
    /// Blum-Mansour over EWOO learners on the padded grid.
    Bm,
    /// Nearest interior grid point to the adversary's revealed mean.
    DualGame,
}

impl FromStr for ForecasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm" => Ok(ForecasterKind::Bm),
            "dualgame" | "dual-game" => Ok(ForecasterKind::DualGame),
            _ => Err(Error::Parse {
                context: "forecaster".into(),
                message: format!("unknown forecaster {s:?} (expected bm or dualgame)"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json-lines" | "json" => Ok(OutputFormat::Jsonl),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Parse {
                context: "format".into(),
                message: format!("unknown format {s:?} (expected jsonl or csv)"),
            }),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Jsonl => "jsonl",
            OutputFormat::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub horizon: usize,
    /// Grid resolution; `None` means [`default_k`] of the horizon.
    pub k: Option<usize>,
    pub forecaster: ForecasterKind,
    pub adversary: AdversaryKind,
    pub losses: Vec<LossSpec>,
    pub seed: u64,
    /// Directory receiving `transcript.jsonl` and `report.<format>`.
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub stationary: StationaryConfig,
    pub hp_delta: f64,
}

pub fn default_losses() -> Vec<LossSpec> {
    vec![
        LossSpec::squared(),
        LossSpec::log(),
        LossSpec::spherical(),
        LossSpec::tsallis(2.0).expect("alpha = 2 is valid"),
    ]
}

impl RunConfig {
    pub fn new(horizon: usize, adversary: AdversaryKind) -> Self {
        RunConfig {
            horizon,
            k: None,
            forecaster: ForecasterKind::Bm,
            adversary,
            losses: default_losses(),
            seed: 0,
            output: None,
            format: OutputFormat::Jsonl,
            stationary: StationaryConfig::default(),
            hp_delta: DEFAULT_HP_DELTA,
        }
    }

    pub fn resolved_k(&self) -> usize {
        self.k.unwrap_or_else(|| default_k(self.horizon))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config(format!("T = {} must be at least 2", self.horizon)));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err(Error::Config(format!("K = {k} must be at least 2")));
            }
        }
        if let AdversaryKind::FixedSequence(labels) = &self.adversary {
            if labels.len() < self.horizon {
                return Err(Error::Config(format!(
                    "fixed sequence has {} labels for T = {}",
                    labels.len(),
                    self.horizon
                )));
            }
        }
        if self.forecaster == ForecasterKind::DualGame && self.adversary.revealed_mean(1).is_none() {
            return Err(Error::Config(
                "the dual-game baseline needs an iid or drift adversary".into(),
            ));
        }
        if !(self.hp_delta > 0.0 && self.hp_delta < 1.0) {
            return Err(Error::domain("hp_delta", self.hp_delta, "(0, 1)"));
        }
        self.adversary.validate()?;
        self.stationary.validate()
    }
}

/// Runs the protocol for `horizon` rounds, writing files when
/// `config.output` is set.
pub fn run_experiment(config: &RunConfig) -> Result<(Transcript, MetricReport)> {
    let transcript = simulate(config)?;
    let report = MetricReport::compute(&transcript, &config.losses, config.hp_delta)?;
    if let Some(dir) = &config.output {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("transcript.jsonl");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        transcript.write_jsonl(&mut out)?;
        out.flush().map_err(|e| Error::io(&path, e))?;
        let run = RunRecord {
            seed: config.seed,
            report: report.clone(),
        };
        emit_report(
            std::slice::from_ref(&run),
            config.format,
            &dir.join(format!("report.{}", config.format.extension())),
        )?;
    }
    Ok((transcript, report))
}

/// The transcript of one run without metrics or files.
pub fn simulate(config: &RunConfig) -> Result<Transcript> {
    config.validate()?;
    let k = config.resolved_k();
    let mut adversary = Adversary::new(&AdversarySpec {
        kind: config.adversary.clone(),
        seed: config.seed,
    })?;
    match config.forecaster {
        ForecasterKind::Bm => {
            let mut forecaster = ForecasterState::new(k, config.stationary)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut transcript = Transcript::new(forecaster.grid().clone());
            for t in 1..=config.horizon {
                let dist = forecaster.step_distribution()?;
                let sampled = dist.sample(rng.random());
                let y = adversary.next_label(t, forecaster.grid(), &dist.masses)?;
                forecaster.update(&dist, y)?;
                transcript.push(Round {
                    distribution: dist.masses,
                    sampled,
                    y,
                })?;
            }
            Ok(transcript)
        }
        ForecasterKind::DualGame => {
            let grid = Grid::interior(k)?;
            let mut transcript = Transcript::new(grid.clone());
            for t in 1..=config.horizon {
                let mean = adversary.revealed_mean(t).ok_or_else(|| {
                    Error::Config("adversary does not reveal its mean".into())
                })?;
                let i = dualgame_forecast(&grid, mean);
                let mut distribution = vec![0.0; grid.len()];
                distribution[i] = 1.0;
                let y = adversary.next_label(t, &grid, &distribution)?;
                transcript.push(Round {
                    distribution,
                    sampled: i,
                    y,
                })?;
            }
            Ok(transcript)
        }
    }
}

/// One line of a report file: the run's seed and its metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive value {v} in log-log fit")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: String,
    /// Sorted by `(horizon, seed)`.
    pub runs: Vec<RunRecord>,
    /// `(T, mean metric across seeds)` in increasing `T`.
    pub means: Vec<(usize, f64)>,
    pub fit: RateFit,
}

impl SweepResult {
    /// Per-horizon means of `metric` and their log-log fit.
    pub fn fit_metric(runs: &[RunRecord], metric: &str) -> Result<(Vec<(usize, f64)>, RateFit)> {
        let mut horizons: Vec<usize> = runs.iter().map(|r| r.report.horizon).collect();
        horizons.sort_unstable();
        horizons.dedup();
        let mut means = Vec::with_capacity(horizons.len());
        for t in horizons {
            let values = runs
                .iter()
                .filter(|r| r.report.horizon == t)
                .map(|r| {
                    r.report.get(metric).ok_or_else(|| {
                        Error::Config(format!("unknown metric {metric:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            means.push((t, values.iter().sum::<f64>() / values.len() as f64));
        }
        let xs: Vec<f64> = means.iter().map(|m| m.0 as f64).collect();
        let ys: Vec<f64> = means.iter().map(|m| m.1).collect();
        let fit = fit_log_log(&xs, &ys)?;
        Ok((means, fit))
    }
}

/// Minimum number of distinct horizons in a sweep.
pub const MIN_SWEEP_HORIZONS: usize = 4;
/// Minimum number of seeds per horizon.
pub const MIN_SWEEP_SEEDS: usize = 5;

/// Runs `base` at every `(T, seed)` in parallel and fits the slope of
/// `ln(mean metric)` against `ln T`. `base.horizon`, `base.seed` and
/// `base.output` are ignored; `base.k` applies to every horizon when set.
pub fn sweep_and_fit_rate(
    base: &RunConfig,
    horizons: &[usize],
    seeds: &[u64],
    metric: &str,
) -> Result<SweepResult> {
    let mut hs = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    if hs.len() < MIN_SWEEP_HORIZONS {
        return Err(Error::Config(format!(
            "sweep needs at least {MIN_SWEEP_HORIZONS} distinct horizons, got {}",
            hs.len()
        )));
    }
    let mut ss = seeds.to_vec();
    ss.sort_unstable();
    ss.dedup();
    if ss.len() < MIN_SWEEP_SEEDS {
        return Err(Error::Config(format!(
            "sweep needs at least {MIN_SWEEP_SEEDS} seeds, got {}",
            ss.len()
        )));
    }
    let jobs: Vec<(usize, u64)> = hs
        .iter()
        .flat_map(|&t| ss.iter().map(move |&s| (t, s)))
        .collect();
    let probe = RunConfig {
        horizon: hs[0],
        ..base.clone()
    };
    probe.validate()?;
    let empty = Transcript::new(Grid::padded(2)?);
    if MetricReport::compute(&empty, &base.losses, base.hp_delta)?.get(metric).is_none() {
        return Err(Error::Config(format!("unknown metric {metric:?}")));
    }
    let runs = jobs
        .par_iter()
        .map(|&(horizon, seed)| run_job(base, horizon, seed))
        .collect::<Result<Vec<_>>>()?;
    let (means, fit) = SweepResult::fit_metric(&runs, metric)?;
    Ok(SweepResult {
        metric: metric.to_string(),
        runs,
        means,
        fit,
    })
}

fn run_job(base: &RunConfig, horizon: usize, seed: u64) -> Result<RunRecord> {
    let mut config = base.clone();
    config.horizon = horizon;
    config.seed = seed;
    config.output = None;
    if let AdversaryKind::PiecewiseDrift { means, .. } = &base.adversary {
        // Keep drift segments proportional to the horizon.
        config.adversary = AdversaryKind::even_drift(horizon, means.clone())?;
    }
    let transcript = simulate(&config)?;
    let report = MetricReport::compute(&transcript, &config.losses, config.hp_delta)?;
    Ok(RunRecord { seed, report })
}

pub const CSV_HEADER: [&str; 5] = ["T", "seed", "K", "metric", "value"];

pub fn write_jsonl<W: Write>(runs: &[RunRecord], mut out: W) -> Result<()> {
    for run in runs {
        serde_json::to_writer(&mut out, run)?;
        writeln!(out).map_err(|e| Error::io("<report>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<report>", e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// One row per run and metric under [`CSV_HEADER`].
pub fn write_csv<W: Write>(runs: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for run in runs {
        let r = &run.report;
        for (name, value) in r.entries() {
            w.write_record([
                r.horizon.to_string(),
                run.seed.to_string(),
                r.k.to_string(),
                name,
                value.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

/// Writes `runs` to `path` in `format`, sorted by `(T, seed)`.
pub fn emit_report(runs: &[RunRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let mut sorted = runs.to_vec();
    sorted.sort_by_key(|r| (r.report.horizon, r.seed));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Jsonl => write_jsonl(&sorted, &mut out)?,
        OutputFormat::Csv => write_csv(&sorted, &mut out)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file))
}

/// Settings shared by the config file and the command line. Unset fields
/// fall back to [`RunConfig::new`] defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub t: Option<usize>,
    pub k: Option<usize>,
    pub forecaster: Option<String>,
    pub adversary: Option<String>,
    pub adversary_param: Option<String>,
    pub seed: Option<u64>,
    pub losses: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub t_grid: Option<String>,
    pub seeds: Option<usize>,
    pub metric: Option<String>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay_fields!(
            base, top, t, k, forecaster, adversary, adversary_param, seed, losses, out, format,
            t_grid, seeds, metric
        )
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let horizon = self
            .t
            .ok_or_else(|| Error::Config("the horizon --t is required".into()))?;
        let adversary = AdversaryKind::parse(
            self.adversary.as_deref().unwrap_or("iid"),
            self.adversary_param.as_deref(),
            horizon,
        )?;
        let mut config = RunConfig::new(horizon, adversary);
        config.k = self.k;
        if let Some(f) = &self.forecaster {
            config.forecaster = f.parse()?;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(l) = &self.losses {
            config.losses = parse_losses(l)?;
        }
        config.output = self.out.clone();
        if let Some(f) = &self.format {
            config.format = f.parse()?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Horizons from `t_grid`, default `2^10..2^17`.
    pub fn horizons(&self) -> Result<Vec<usize>> {
        parse_t_grid(self.t_grid.as_deref().unwrap_or("2^10..2^17"))
    }

    /// `seeds` consecutive seeds starting at `seed`, default 10.
    pub fn seed_list(&self) -> Vec<u64> {
        let start = self.seed.unwrap_or(0);
        (0..self.seeds.unwrap_or(10) as u64).map(|i| start + i).collect()
    }
}

pub fn parse_losses(list: &str) -> Result<Vec<LossSpec>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect()
}

fn parse_horizon(s: &str) -> Result<usize> {
    let bad = |m: String| Error::Parse {
        context: "t-grid".into(),
        message: m,
    };
    let s = s.trim();
    if let Some(e) = s.strip_prefix("2^") {
        let e: u32 = e.parse().map_err(|_| bad(format!("bad exponent in {s:?}")))?;
        1usize
            .checked_shl(e)
            .filter(|_| e < usize::BITS)
            .ok_or_else(|| bad(format!("{s} overflows")))
    } else {
        s.parse().map_err(|_| bad(format!("bad horizon {s:?}")))
    }
}

/// A comma-separated list of horizons; `a..b` expands to the doubling
/// sequence from `a` up to `b`, and `2^e` is accepted for any entry.
pub fn parse_t_grid(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (mut t, end) = (parse_horizon(a)?, parse_horizon(b)?);
            if t == 0 || t > end {
                return Err(Error::Parse {
                    context: "t-grid".into(),
                    message: format!("empty range {part:?}"),
                });
            }
            while t <= end {
                out.push(t);
                t *= 2;
            }
        } else {
            out.push(parse_horizon(part)?);
        }
    }
    Ok(out)
}
