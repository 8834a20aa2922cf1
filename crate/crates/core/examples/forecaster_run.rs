//! Drives the Blum-Mansour forecaster by hand against an adaptive adversary
//! and reports its calibration.

use klcal::adversary::{Adversary, AdversaryKind, AdversarySpec};
use klcal::forecaster::ForecasterState;
use klcal::metrics::MetricReport;
use klcal::stationary::StationaryConfig;
use klcal::transcript::{Round, Transcript};
use klcal::LossSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> klcal::Result<()> {
    let horizon = 4096;
    let k = klcal::default_k(horizon);
    let mut forecaster = ForecasterState::new(k, StationaryConfig::default())?;
    let mut adversary = Adversary::new(&AdversarySpec {
        kind: AdversaryKind::AdaptiveAntiMode,
        seed: 3,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut transcript = Transcript::new(forecaster.grid().clone());
    let mut max_iterations = 0;
    for t in 1..=horizon {
        let dist = forecaster.step_distribution()?;
        max_iterations = max_iterations.max(dist.iterations);
        let sampled = dist.sample(rng.random());
        let y = adversary.next_label(t, forecaster.grid(), &dist.masses)?;
        forecaster.update(&dist, y)?;
        transcript.push(Round { distribution: dist.masses, sampled, y })?;
    }
    let last = &transcript.rounds()[horizon - 1];
    println!("K = {k}, final forecast distribution {:.3?}", last.distribution);
    println!("most power iterations in a round: {max_iterations}");
    let report = MetricReport::compute(&transcript, &[LossSpec::log()], 0.1)?;
    println!(
        "pklcal {:.3}  pcal_2 {:.3}  klcal {:.3}  cal_2 {:.3}",
        report.pklcal, report.pcal_2, report.klcal, report.cal_2
    );
    Ok(())
}
