//! The dual-game baseline against stochastic adversaries: klcal / T tends
//! to KL(mu, nearest grid point).

use klcal::adversary::AdversaryKind;
use klcal::harness::{simulate, ForecasterKind, RunConfig};
use klcal::metrics::klcal;
use klcal::kl_bernoulli;

fn main() -> klcal::Result<()> {
    let horizon = 100_000;
    for mu in [0.1, 0.5, 0.77] {
        let mut config = RunConfig::new(horizon, AdversaryKind::IidBernoulli(mu));
        config.forecaster = ForecasterKind::DualGame;
        let t = simulate(&config)?;
        let z = t.grid().point(t.rounds()[0].sampled);
        println!(
            "mu = {mu}: z = {z:.5}, klcal/T = {:.6}, KL(mu, z) = {:.6}",
            klcal(&t)? / horizon as f64,
            kl_bernoulli(mu, z)?
        );
    }

    let drift = AdversaryKind::even_drift(horizon, vec![0.2, 0.8])?;
    let mut config = RunConfig::new(horizon, drift);
    config.forecaster = ForecasterKind::DualGame;
    println!("drift 0.2 -> 0.8: klcal = {:.2}", klcal(&simulate(&config)?)?);
    Ok(())
}
