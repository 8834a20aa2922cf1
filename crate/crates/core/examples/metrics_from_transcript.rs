//! Metrics of a hand-written transcript, read from JSON lines.

use klcal::metrics::{
    external_regret, swap_regret, swap_regret_bruteforce, Candidates, MetricReport, Weighting,
};
use klcal::{LossSpec, Transcript};

const TRANSCRIPT: &str = r#"{"K":2,"variant":"Custom","points":[0.25,0.75]}
{"t":1,"P":[1.0,0.0],"i":0,"y":1}
{"t":2,"P":[1.0,0.0],"i":0,"y":0}
{"t":3,"P":[0.0,1.0],"i":1,"y":1}
"#;

fn main() -> klcal::Result<()> {
    let t = Transcript::read_jsonl(TRANSCRIPT.as_bytes())?;
    let losses = [LossSpec::squared(), LossSpec::log()];
    let report = MetricReport::compute(&t, &losses, 0.1)?;
    for (name, value) in report.entries() {
        println!("{name:<24} {value:.6}");
    }
    let sq = &losses[0];
    println!(
        "squared swap regret: closed form {:.6}, per-bucket search {:.6}",
        swap_regret(&t, sq, Weighting::Realized)?,
        swap_regret_bruteforce(&t, sq, &Candidates::BucketMeans, Weighting::Realized)?
    );
    println!(
        "squared external regret against 2/3: {:.6}",
        external_regret(&t, sq, &Candidates::Values(vec![2.0 / 3.0]), Weighting::Realized)?
    );
    Ok(())
}
