//! Pointwise values, univariate forms and Bregman divergences of the loss
//! catalog, plus a loss built from its own concave univariate form.

use klcal::losses::{kl_bernoulli, LossSpec};

fn main() -> klcal::Result<()> {
    let losses = [
        LossSpec::squared(),
        LossSpec::log(),
        LossSpec::spherical(),
        LossSpec::tsallis(1.5)?,
        "tsallis:3".parse()?,
    ];
    println!("{:<14} {:>9} {:>9} {:>9} {:>12}", "loss", "l(.6,1)", "l(.6,0)", "f(.6)", "BREG(.9,.6)");
    for loss in &losses {
        println!(
            "{:<14} {:>9.5} {:>9.5} {:>9.5} {:>12.6}",
            loss.name(),
            loss.value(0.6, true)?,
            loss.value(0.6, false)?,
            loss.univariate(0.6),
            loss.bregman(0.9, 0.6)?,
        );
    }
    println!("KL(0.9, 0.6) = {:.6}", kl_bernoulli(0.9, 0.6)?);

    // Squared loss again, from f(p) = p(1 - p).
    let custom = LossSpec::from_univariate("quadratic", |p| p * (1.0 - p), |p| 1.0 - 2.0 * p)?
        .with_smoothness_bound(2.0);
    println!(
        "{}: l(0.25, 1) = {:.4}, f''(0.3) = {:.4}",
        custom.name(),
        custom.value(0.25, true)?,
        custom.univariate_second_derivative(0.3)
    );

    // A convex form is rejected.
    let convex = LossSpec::from_univariate("convex", |p| p * p, |p| 2.0 * p);
    println!("convex form: {}", convex.err().map(|e| e.to_string()).unwrap_or_default());
    Ok(())
}
