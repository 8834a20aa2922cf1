//! One EWOO learner on weighted log losses: the closed form, the quadrature
//! cross-check and the regret against the best fixed prediction.

use klcal::ewoo::{quadrature_prediction, scaled_log_loss, EwooState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> klcal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let horizon = 1000;
    let mut state = EwooState::new();
    let mut incurred = 0.0;
    for _ in 0..horizon {
        let weight: f64 = rng.random();
        let y = rng.random_bool(0.8);
        incurred += scaled_log_loss(state.predict(), weight, y);
        state.update(weight, y)?;
    }
    let EwooState { gamma, delta } = state;
    let w = gamma / (gamma + delta);
    let best = scaled_log_loss(w, gamma, true) + scaled_log_loss(w, delta, false);
    println!("gamma = {gamma:.3}, delta = {delta:.3}");
    println!("closed form {:.12}", state.predict());
    println!("quadrature  {:.12}", quadrature_prediction(&state)?);
    println!(
        "regret {:.4} <= ln(T + 1) = {:.4}",
        incurred - best,
        ((horizon + 1) as f64).ln()
    );
    Ok(())
}
