//! Proper losses for binary outcomes.
//!
//! Every loss here is described through its univariate form
//! `f(p) = E_{y~p}[l(p, y)]`, which is concave for proper losses. The
//! pointwise loss is recovered as `l(p, y) = f(p) + f'(p)(y - p)` and the
//! Bregman divergence of `-f` is
//!
//! ```text
//! BREG(p_hat, p) = f(p) - f(p_hat) + f'(p)(p_hat - p)  >= 0
//! ```
//!
//! For log loss this divergence is the Bernoulli KL divergence and for
//! squared loss it is `(p_hat - p)^2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A scalar function on `[0, 1]` supplied by the caller.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of intervals in the concavity sweep used by [`LossSpec::from_univariate`].
pub const CONCAVITY_SWEEP: usize = 1000;

/// Step of the central finite difference used for caller-supplied forms.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub enum LossKind {
    Squared,
    Log,
    Spherical,
    /// Univariate form `-c p^alpha`.
    Tsallis { alpha: f64, c: f64 },
    FromUnivariate {
        name: String,
        f: ScalarFn,
        f_prime: ScalarFn,
    },
}

impl fmt::Debug for LossKind {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Squared => write!(fmt, "Squared"),
            LossKind::Log => write!(fmt, "Log"),
            LossKind::Spherical => write!(fmt, "Spherical"),
            LossKind::Tsallis { alpha, c } => {
                write!(fmt, "Tsallis {{ alpha: {alpha}, c: {c} }}")
            }
            LossKind::FromUnivariate { name, .. } => write!(fmt, "FromUnivariate({name})"),
        }
    }
}

/// A proper loss together with an optional bound `G = sup |f''|`.
#[derive(Clone, Debug)]
pub struct LossSpec {
    kind: LossKind,
    smoothness_bound: Option<f64>,
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(what, p, "[0, 1]"))
    }
}

fn y_f64(y: bool) -> f64 {
    if y {
        1.0
    } else {
        0.0
    }
}

/// `x ln(x / y)` with the convention `0 ln 0 = 0`.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Binary entropy in nats, zero at the endpoints.
fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// KL divergence between Bernoulli(q) and Bernoulli(p), in nats.
///
/// One-sided terms are used when `q` is 0 or 1; `p` must be interior.
pub fn kl_bernoulli(q: f64, p: f64) -> Result<f64> {
    check_probability("q", q)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("p", p, "(0, 1)"));
    }
    let kl = xlogx_over(q, p) + xlogx_over(1.0 - q, 1.0 - p);
    Ok(kl.max(0.0))
}

impl LossSpec {
    pub fn squared() -> Self {
        LossSpec {
            kind: LossKind::Squared,
            smoothness_bound: Some(2.0),
        }
    }

    pub fn log() -> Self {
        LossSpec {
            kind: LossKind::Log,
            smoothness_bound: None,
        }
    }

    pub fn spherical() -> Self {
        LossSpec {
            kind: LossKind::Spherical,
            smoothness_bound: Some(2.0 * std::f64::consts::SQRT_2),
        }
    }

    /// Tsallis loss with the largest constant keeping `l(p, y)` in `[-1, 1]`.
    ///
    /// On `[0, 1]` the loss ranges over `[-c, c (alpha - 1)]`, so the
    /// constant is `1 / max(1, alpha - 1)`.
    pub fn tsallis(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::domain("alpha", alpha, "(1, inf)"));
        }
        Self::tsallis_with_constant(alpha, 1.0 / (alpha - 1.0).max(1.0))
    }

    pub fn tsallis_with_constant(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::domain("alpha", alpha, "(1, inf)"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain("c", c, "(0, inf)"));
        }
        // |f''| = c alpha (alpha - 1) p^(alpha - 2), bounded only for alpha >= 2.
        let smoothness_bound = (alpha >= 2.0).then(|| c * alpha * (alpha - 1.0));
        Ok(LossSpec {
            kind: LossKind::Tsallis { alpha, c },
            smoothness_bound,
        })
    }

    /// Builds the proper loss `l(p, y) = f(p) + f'(p)(y - p)` from a concave
    /// univariate form and its derivative.
    ///
    /// `f` is checked for midpoint concavity on a 1001-point sweep of `[0, 1]`.
    pub fn from_univariate(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let values: Vec<f64> = (0..=CONCAVITY_SWEEP)
            .map(|i| f(i as f64 / CONCAVITY_SWEEP as f64))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                at: i as f64 / CONCAVITY_SWEEP as f64,
            });
        }
        for i in 1..CONCAVITY_SWEEP {
            let mid = values[i];
            let chord = 0.5 * (values[i - 1] + values[i + 1]);
            let tol = 1e-12 * (1.0 + mid.abs().max(chord.abs()));
            if mid < chord - tol {
                return Err(Error::NotConcave {
                    at: i as f64 / CONCAVITY_SWEEP as f64,
                });
            }
        }
        Ok(LossSpec {
            kind: LossKind::FromUnivariate {
                name: name.into(),
                f: Arc::new(f),
                f_prime: Arc::new(f_prime),
            },
            smoothness_bound: None,
        })
    }

    /// Attaches a known `sup |f''|` to a caller-built loss.
    pub fn with_smoothness_bound(mut self, g: f64) -> Self {
        self.smoothness_bound = Some(g);
        self
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn smoothness_bound(&self) -> Option<f64> {
        self.smoothness_bound
    }

    /// Short identifier, parseable by [`FromStr`] for catalog losses.
    pub fn name(&self) -> String {
        match &self.kind {
            LossKind::Squared => "squared".into(),
            LossKind::Log => "log".into(),
            LossKind::Spherical => "spherical".into(),
            LossKind::Tsallis { alpha, .. } => format!("tsallis:{alpha}"),
            LossKind::FromUnivariate { name, .. } => name.clone(),
        }
    }

    /// Whether the loss is known to take values in `[-1, 1]`.
    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            LossKind::Squared | LossKind::Spherical => true,
            LossKind::Log | LossKind::FromUnivariate { .. } => false,
            LossKind::Tsallis { alpha, c } => *c <= 1.0 && c * (alpha - 1.0) <= 1.0,
        }
    }

    /// Pointwise loss `l(p, y)`.
    pub fn value(&self, p: f64, y: bool) -> Result<f64> {
        check_probability("p", p)?;
        let yv = y_f64(y);
        Ok(match &self.kind {
            LossKind::Squared => (p - yv) * (p - yv),
            LossKind::Log => {
                if y {
                    if p == 0.0 {
                        return Err(Error::domain("p", p, "(0, 1] for log loss with y = 1"));
                    }
                    -p.ln()
                } else {
                    if p == 1.0 {
                        return Err(Error::domain("p", p, "[0, 1) for log loss with y = 0"));
                    }
                    -(1.0 - p).ln()
                }
            }
            LossKind::Spherical => {
                let norm = (p * p + (1.0 - p) * (1.0 - p)).sqrt();
                -(p * yv + (1.0 - p) * (1.0 - yv)) / norm
            }
            LossKind::Tsallis { alpha, c } => {
                c * (alpha - 1.0) * p.powf(*alpha) - alpha * c * p.powf(alpha - 1.0) * yv
            }
            LossKind::FromUnivariate { f, f_prime, .. } => f(p) + f_prime(p) * (yv - p),
        })
    }

    /// Univariate form `f(p) = p l(p, 1) + (1 - p) l(p, 0)`.
    ///
    /// For log loss the endpoint values are the continuous limits (zero).
    pub fn univariate(&self, p: f64) -> f64 {
        match &self.kind {
            LossKind::Squared => p - p * p,
            LossKind::Log => binary_entropy(p),
            LossKind::Spherical => -(p * p + (1.0 - p) * (1.0 - p)).sqrt(),
            LossKind::Tsallis { alpha, c } => -c * p.powf(*alpha),
            LossKind::FromUnivariate { f, .. } => f(p),
        }
    }

    /// First derivative `f'(p)`; equals `l(p, 1) - l(p, 0)`.
    pub fn univariate_derivative(&self, p: f64) -> f64 {
        match &self.kind {
            LossKind::Squared => 1.0 - 2.0 * p,
            LossKind::Log => (1.0 - p).ln() - p.ln(),
            LossKind::Spherical => {
                let norm = (p * p + (1.0 - p) * (1.0 - p)).sqrt();
                -(2.0 * p - 1.0) / norm
            }
            LossKind::Tsallis { alpha, c } => -alpha * c * p.powf(alpha - 1.0),
            LossKind::FromUnivariate { f_prime, .. } => f_prime(p),
        }
    }

    /// Second derivative `f''(p)` on `(0, 1)`.
    ///
    /// Analytic for catalog losses; central difference with step
    /// [`FD_STEP`] for caller-supplied forms.
    pub fn univariate_second_derivative(&self, p: f64) -> f64 {
        match &self.kind {
            LossKind::Squared => -2.0,
            LossKind::Log => -1.0 / (p * (1.0 - p)),
            LossKind::Spherical => {
                let norm_sq = p * p + (1.0 - p) * (1.0 - p);
                -1.0 / (norm_sq * norm_sq.sqrt())
            }
            LossKind::Tsallis { alpha, c } => -c * alpha * (alpha - 1.0) * p.powf(alpha - 2.0),
            LossKind::FromUnivariate { f, .. } => {
                let h = FD_STEP;
                (f(p + h) - 2.0 * f(p) + f(p - h)) / (h * h)
            }
        }
    }

    /// Bregman divergence of the negative univariate form.
    pub fn bregman(&self, p_hat: f64, p: f64) -> Result<f64> {
        check_probability("p_hat", p_hat)?;
        check_probability("p", p)?;
        if matches!(self.kind, LossKind::Log) && (p == 0.0 || p == 1.0) {
            return Err(Error::domain("p", p, "(0, 1) for log loss"));
        }
        let d = self.univariate(p) - self.univariate(p_hat)
            + self.univariate_derivative(p) * (p_hat - p);
        Ok(d.max(0.0))
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.write_str(&self.name())
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// Accepts `squared`, `log`, `spherical`, `tsallis` (alpha = 2) and
    /// `tsallis:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "squared" => return Ok(LossSpec::squared()),
            "log" => return Ok(LossSpec::log()),
            "spherical" => return Ok(LossSpec::spherical()),
            "tsallis" => return LossSpec::tsallis(2.0),
            _ => {}
        }
        if let Some(alpha) = s.strip_prefix("tsallis:") {
            let alpha: f64 = alpha.parse().map_err(|_| Error::Parse {
                context: "loss name".into(),
                message: format!("bad tsallis exponent {alpha:?}"),
            })?;
            return LossSpec::tsallis(alpha);
        }
        Err(Error::Parse {
            context: "loss name".into(),
            message: format!("unknown loss {s:?}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn catalog() -> Vec<LossSpec> {
        vec![
            LossSpec::squared(),
            LossSpec::log(),
            LossSpec::spherical(),
            LossSpec::tsallis(2.0).unwrap(),
            LossSpec::tsallis(1.5).unwrap(),
            LossSpec::tsallis(3.0).unwrap(),
        ]
    }

    fn interior_sweep(n: usize) -> impl Iterator<Item = f64> + Clone {
        (1..n).map(move |i| i as f64 / n as f64)
    }

    #[test]
    fn pointwise_values() {
        assert!(close(LossSpec::squared().value(0.25, true).unwrap(), 0.5625, 1e-15));
        assert!(close(
            LossSpec::log().value(0.5, false).unwrap(),
            std::f64::consts::LN_2,
            1e-15
        ));
        assert!(close(
            LossSpec::spherical().value(0.6, true).unwrap(),
            -0.832_050_294_337_843_6,
            1e-12
        ));
    }

    #[test]
    fn log_loss_losing_endpoint_is_a_domain_error() {
        assert!(LossSpec::log().value(0.0, true).is_err());
        assert!(LossSpec::log().value(1.0, false).is_err());
        assert_eq!(LossSpec::log().value(0.0, false).unwrap(), 0.0);
        assert!(LossSpec::squared().value(1.5, true).is_err());
    }

    #[test]
    fn univariate_values() {
        assert!(close(LossSpec::squared().univariate(0.3), 0.21, 1e-15));
        assert!(close(LossSpec::log().univariate(0.5), std::f64::consts::LN_2, 1e-15));
        assert_eq!(LossSpec::log().univariate(0.0), 0.0);
        assert_eq!(LossSpec::log().univariate(1.0), 0.0);
        let ts = LossSpec::tsallis_with_constant(2.0, 1.0).unwrap();
        assert!(close(ts.univariate(0.4), -0.16, 1e-15));
        let via_expectation = 0.4 * ts.value(0.4, true).unwrap() + 0.6 * ts.value(0.4, false).unwrap();
        assert!(close(via_expectation, -0.16, 1e-15));
    }

    #[test]
    fn univariate_is_expected_pointwise_loss() {
        for loss in catalog() {
            for p in interior_sweep(200) {
                let e = p * loss.value(p, true).unwrap() + (1.0 - p) * loss.value(p, false).unwrap();
                assert!(close(e, loss.univariate(p), 1e-12), "{loss} at {p}");
            }
        }
    }

    #[test]
    fn second_derivatives() {
        assert_eq!(LossSpec::squared().univariate_second_derivative(0.7), -2.0);
        assert!(close(LossSpec::log().univariate_second_derivative(0.25), -16.0 / 3.0, 1e-12));
        assert!(close(
            LossSpec::spherical().univariate_second_derivative(0.5),
            -2.0 * std::f64::consts::SQRT_2,
            1e-12
        ));
    }

    #[test]
    fn analytic_second_derivatives_match_finite_differences() {
        for loss in catalog() {
            for p in interior_sweep(20) {
                let h = 1e-4;
                let fd = (loss.univariate(p + h) - 2.0 * loss.univariate(p) + loss.univariate(p - h))
                    / (h * h);
                let exact = loss.univariate_second_derivative(p);
                assert!(close(fd, exact, 1e-4 * (1.0 + exact.abs())), "{loss} at {p}");
            }
        }
    }

    #[test]
    fn bregman_examples() {
        assert!(close(LossSpec::squared().bregman(0.5, 0.25).unwrap(), 0.0625, 1e-15));
        assert!(close(LossSpec::log().bregman(0.5, 0.5).unwrap(), 0.0, 1e-15));
        assert!(close(LossSpec::log().bregman(0.5, 0.25).unwrap(), 0.143_841_036_225_890_4, 1e-12));
        assert!(LossSpec::log().bregman(0.5, 0.0).is_err());
        assert!(LossSpec::log().bregman(0.0, 0.5).is_ok());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        assert!(close(kl_bernoulli(1.0, 0.75).unwrap(), (4.0f64 / 3.0).ln(), 1e-15));
        assert!(close(kl_bernoulli(0.5, 0.25).unwrap(), 0.143_841_036_225_890_4, 1e-15));
        assert!(kl_bernoulli(0.5, 1.0).is_err());
        assert!(kl_bernoulli(0.5, 0.0).is_err());
    }

    #[test]
    fn bregman_is_nonnegative_and_vanishes_on_diagonal() {
        for loss in catalog() {
            for p_hat in interior_sweep(100) {
                for p in interior_sweep(100) {
                    let d = loss.bregman(p_hat, p).unwrap();
                    assert!(d >= 0.0);
                }
                assert!(loss.bregman(p_hat, p_hat).unwrap() <= 1e-15);
            }
        }
    }

    #[test]
    fn log_bregman_is_kl_and_squared_bregman_is_square() {
        let log = LossSpec::log();
        let sq = LossSpec::squared();
        for p_hat in interior_sweep(100) {
            for p in interior_sweep(100) {
                let kl = kl_bernoulli(p_hat, p).unwrap();
                assert!(close(log.bregman(p_hat, p).unwrap(), kl, 1e-12));
                let d = sq.bregman(p_hat, p).unwrap();
                assert!(close(d, (p_hat - p) * (p_hat - p), 1e-15));
                // Pinsker in this normalization.
                assert!(kl >= (p_hat - p) * (p_hat - p));
            }
        }
    }

    #[test]
    fn smooth_losses_are_dominated_by_half_g_times_square() {
        for loss in [LossSpec::squared(), LossSpec::spherical()] {
            let g = interior_sweep(10_000)
                .map(|p| loss.univariate_second_derivative(p).abs())
                .fold(0.0, f64::max);
            assert!(g <= loss.smoothness_bound().unwrap() + 1e-9);
            for p_hat in interior_sweep(100) {
                for p in interior_sweep(100) {
                    let bound = 0.5 * g * (p_hat - p) * (p_hat - p);
                    assert!(loss.bregman(p_hat, p).unwrap() <= bound + 1e-14, "{loss}");
                }
            }
        }
    }

    /// Largest `BREG / KL` ratio over an interior sweep, skipping the diagonal.
    fn max_ratio_to_kl(loss: &LossSpec, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for p_hat in interior_sweep(n) {
            for p in interior_sweep(n) {
                if (p_hat - p).abs() < 1e-9 {
                    continue;
                }
                let kl = kl_bernoulli(p_hat, p).unwrap();
                worst = worst.max(loss.bregman(p_hat, p).unwrap() / kl);
            }
        }
        worst
    }

    #[test]
    fn bregman_to_kl_ratio_is_bounded() {
        // The sweep maxima grow slightly as the sweep approaches the
        // boundary, so the constants below come from a 999 x 999 sweep and
        // the coarser sweeps must stay under them.
        let tsallis = LossSpec::tsallis(1.5).unwrap();
        let spherical = LossSpec::spherical();
        for n in [100, 400] {
            assert!(max_ratio_to_kl(&tsallis, n) <= C_TSALLIS_1_5);
            assert!(max_ratio_to_kl(&spherical, n) <= C_SPHERICAL);
        }
        assert!(max_ratio_to_kl(&tsallis, 100) > 0.28);
        assert!(max_ratio_to_kl(&spherical, 100) > 0.70);
    }

    // max BREG/KL over i/1000 x j/1000, rounded up in the sixth digit.
    const C_TSALLIS_1_5: f64 = 0.288_676;
    const C_SPHERICAL: f64 = 0.707_106;

    #[test]
    fn catalog_losses_are_proper_and_bounded() {
        for loss in catalog() {
            for p in interior_sweep(50) {
                let own = loss.univariate(p);
                for q in interior_sweep(50) {
                    let other = p * loss.value(q, true).unwrap() + (1.0 - p) * loss.value(q, false).unwrap();
                    assert!(own <= other + 1e-12, "{loss} not proper at p={p}, q={q}");
                }
            }
            if loss.is_bounded() {
                for i in 0..=1000 {
                    let p = i as f64 / 1000.0;
                    for y in [false, true] {
                        let v = loss.value(p, y).unwrap();
                        assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v), "{loss} {p} {y} -> {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn default_tsallis_constant_is_largest_bounded_one() {
        for alpha in [1.5, 2.0, 3.0, 4.5] {
            let loss = LossSpec::tsallis(alpha).unwrap();
            let LossKind::Tsallis { c, .. } = *loss.kind() else { unreachable!() };
            let extreme = (0..=1000)
                .flat_map(|i| {
                    let p = i as f64 / 1000.0;
                    [loss.value(p, false).unwrap(), loss.value(p, true).unwrap()]
                })
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(close(extreme, 1.0, 1e-12), "alpha {alpha}: c = {c}, extreme = {extreme}");
        }
    }

    #[test]
    fn from_univariate_reconstructs_catalog_losses() {
        let sq = LossSpec::from_univariate("sq", |p| p - p * p, |p| 1.0 - 2.0 * p).unwrap();
        let ent = LossSpec::from_univariate(
            "entropy",
            binary_entropy,
            |p| (1.0 - p).ln() - p.ln(),
        )
        .unwrap();
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            for y in [false, true] {
                let a = sq.value(p, y).unwrap();
                let b = LossSpec::squared().value(p, y).unwrap();
                assert!(close(a, b, 1e-12));
                if i > 0 && i < 1000 {
                    let a = ent.value(p, y).unwrap();
                    let b = LossSpec::log().value(p, y).unwrap();
                    assert!(close(a, b, 1e-12));
                }
            }
        }
        let p = 0.3;
        let fd = ent.univariate_second_derivative(p);
        let exact = LossSpec::log().univariate_second_derivative(p);
        assert!(((fd - exact) / exact).abs() <= 1e-4);
    }

    #[test]
    fn from_univariate_rejects_convex_forms() {
        let err = LossSpec::from_univariate("convex", |p| p * p, |p| 2.0 * p).unwrap_err();
        assert!(matches!(err, Error::NotConcave { .. }));
        let err = LossSpec::from_univariate("nan", |p| p.ln(), |p| 1.0 / p).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn names_round_trip() {
        for loss in catalog() {
            let parsed: LossSpec = loss.name().parse().unwrap();
            assert_eq!(parsed.name(), loss.name());
        }
        assert!("hinge".parse::<LossSpec>().is_err());
    }
}
