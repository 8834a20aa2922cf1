//! Exponentially weighted online optimization over `[0, 1]` for scaled log
//! losses `f_t(w) = weight_t * l(w, y_t)`.
//!
//! The exponential weights after a history are `w^gamma (1 - w)^delta` with
//! `gamma = sum weight_t y_t` and `delta = sum weight_t (1 - y_t)`, so the
//! weighted mean is a ratio of Beta integrals:
//!
//! ```text
//! B(gamma + 2, delta + 1) / B(gamma + 1, delta + 1) = (gamma + 1) / (gamma + delta + 2)
//! ```
//!
//! Only the two sufficient statistics are stored. The integral form is kept
//! as [`quadrature_prediction`] for cross-checking.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EwooState {
    pub gamma: f64,
    pub delta: f64,
}

impl EwooState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn predict(&self) -> f64 {
        (self.gamma + 1.0) / (self.gamma + self.delta + 2.0)
    }

    /// Feeds `f(w) = weight * l(w, y)`.
    pub fn update(&mut self, weight: f64, y: bool) -> Result<()> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain("weight", weight, "[0, 1]"));
        }
        if y {
            self.gamma += weight;
        } else {
            self.delta += weight;
        }
        Ok(())
    }

    /// Total weight fed so far.
    pub fn mass(&self) -> f64 {
        self.gamma + self.delta
    }
}

/// Scaled log loss `weight * l(w, y)`, infinite at the losing endpoint.
pub fn scaled_log_loss(w: f64, weight: f64, y: bool) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let v = if y { -w.ln() } else { -(1.0 - w).ln() };
    weight * v
}

/// Absolute tolerance of the adaptive quadrature on the normalized integrands.
pub const QUADRATURE_TOL: f64 = 1e-12;

const MAX_PANELS: usize = 10_000;

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kr = WGK[7] * fc;
    let mut ga = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kr += WGK[j] * s;
        if j % 2 == 1 {
            ga += WG[j / 2] * s;
        }
    }
    (kr * half, (kr - ga).abs() * half)
}

/// Global adaptive Gauss-Kronrod: repeatedly bisects the panel with the
/// largest error estimate until the summed estimate is within `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (value, err) = kronrod(&f, a, b);
    let mut panels = BinaryHeap::from([Panel { a, b, value, err }]);
    let mut total_err = err;
    while total_err > tol {
        if panels.len() >= MAX_PANELS {
            return Err(Error::Quadrature { estimate: total_err });
        }
        let worst = panels.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        total_err -= worst.err;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = kronrod(&f, lo, hi);
            total_err += err;
            panels.push(Panel { a: lo, b: hi, value, err });
        }
        // Re-sum occasionally so the running error does not drift.
        if panels.len() % 64 == 0 {
            total_err = panels.iter().map(|p| p.err).sum();
        }
    }
    Ok(panels.iter().map(|p| p.value).sum())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// The EWOO output evaluated directly as `int w mu(w) dw / int mu(w) dw`.
///
/// The weight `w^gamma (1 - w)^delta` is evaluated in log space and divided
/// by its maximum so large exponents do not underflow.
pub fn quadrature_prediction(state: &EwooState) -> Result<f64> {
    let EwooState { gamma, delta } = *state;
    let log_weight = |w: f64| {
        let mut v = 0.0;
        if gamma > 0.0 {
            v += gamma * w.ln();
        }
        if delta > 0.0 {
            v += delta * (1.0 - w).ln();
        }
        v
    };
    let mode = if gamma + delta > 0.0 {
        gamma / (gamma + delta)
    } else {
        0.5
    };
    let peak = log_weight(mode.clamp(1e-300, 1.0 - 1e-16));
    let weight = |w: f64| (log_weight(w) - peak).exp();

    // Cut at the mode and at multiples of the posterior spread around it so
    // no panel is much wider than the peak it contains.
    let mean = state.predict();
    let spread = (mean * (1.0 - mean) / (gamma + delta + 3.0)).sqrt();
    let mut cuts = vec![0.0, 1.0];
    if mode > 0.0 && mode < 1.0 {
        cuts.push(mode);
    }
    for m in [1.0, 4.0, 16.0, 64.0] {
        cuts.extend([mode - m * spread, mode + m * spread]);
    }
    cuts.retain(|&c| (0.0..=1.0).contains(&c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut num = 0.0;
    let mut den = 0.0;
    for w in cuts.windows(2) {
        num += integrate(|x| x * weight(x), w[0], w[1], QUADRATURE_TOL)?;
        den += integrate(weight, w[0], w[1], QUADRATURE_TOL)?;
    }
    Ok(num / den)
}
