//! A small multi-seed sweep and the fitted log-log slope of PKLCal.
//!
//! Pass horizon exponents to override the default `10 11 12 13 14`.

use klcal::adversary::AdversaryKind;
use klcal::harness::{sweep_and_fit_rate, RunConfig};
use klcal::LossSpec;

fn main() -> klcal::Result<()> {
    let mut exps: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if exps.is_empty() {
        exps = (10..=14).collect();
    }
    let horizons: Vec<usize> = exps.iter().map(|e| 1 << e).collect();
    let mut base = RunConfig::new(horizons[0], AdversaryKind::IidBernoulli(0.5));
    base.losses = vec![LossSpec::log()];
    let sweep = sweep_and_fit_rate(&base, &horizons, &(0..5).collect::<Vec<_>>(), "pklcal")?;
    for (t, mean) in &sweep.means {
        println!("T = {t:>7}  K = {:>2}  mean pklcal = {mean:.3}", klcal::default_k(*t));
    }
    println!("slope {:.3}", sweep.fit.slope);
    Ok(())
}
