//! The sin^2 grid: points, gaps, nearest-point and bracketing queries, and
//! the KL quantization error against its bound.

use klcal::grid::{default_k, Grid};

fn main() -> klcal::Result<()> {
    let grid = Grid::padded(8)?;
    println!("padded K = 8: {:.5?}", grid.points());
    println!("gaps:         {:.5?}", grid.gaps());
    for p in [0.01, 0.3, 0.5, 0.97] {
        let (lo, hi) = grid.bracket(grid.clamp(p))?;
        println!("p = {p}: nearest z_{} bracket ({lo}, {hi})", grid.nearest_index(p));
    }

    println!("\n{:>4} {:>12} {:>12}", "K", "max KL gap", "bound");
    for k in [2, 4, 16, 64, 256] {
        let g = Grid::padded(k)?;
        println!("{k:>4} {:>12.3e} {:>12.3e}", g.max_grid_kl_gap(10_000)?, g.kl_quantization_bound());
    }

    for e in [10, 14, 17, 20] {
        println!("default K at T = 2^{e}: {}", default_k(1 << e));
    }
    Ok(())
}
