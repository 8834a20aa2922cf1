//! Algorithm 4 against the nearest-point and linear rounders at the input
//! of Remark C.1, and the K^2-scaled worst-case overhead.

use klcal::grid::Grid;
use klcal::rounding::{
    baseline_linear, baseline_nearest, expected_overhead, overhead_bound, rounding_distribution,
};

fn main() -> klcal::Result<()> {
    println!("{:>5} {:>10} {:>10} {:>10} {:>12}", "K", "nearest", "linear", "alg 4", "pi^2/K^2");
    for k in [8, 16, 64, 256] {
        let grid = Grid::padded(k)?;
        let p = 0.5 * (grid.point(0) + grid.point(1));
        let dist = rounding_distribution(&grid, p)?;
        println!(
            "{k:>5} {:>10.5} {:>10.5} {:>10.2e} {:>12.2e}",
            expected_overhead(&grid, &baseline_nearest(&grid, p), p, true),
            expected_overhead(&grid, &baseline_linear(&grid, p)?, p, true),
            expected_overhead(&grid, &dist, p, true),
            std::f64::consts::PI.powi(2) / (k * k) as f64,
        );
    }

    for k in [8, 32, 128] {
        let grid = Grid::padded(k)?;
        let worst = (0..=10_000)
            .map(|j| overhead_bound(&grid, j as f64 / 10_000.0))
            .collect::<klcal::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("K = {k:>3}: K^2 * max overhead = {:.4}", (k * k) as f64 * worst);
    }
    Ok(())
}
