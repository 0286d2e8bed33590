//! Optimal assignment and Murty's M-best enumeration on a small cost matrix
//! with forbidden entries.

use spo_track::assignment::{murty_mbest, solve, CostMatrix};

fn main() -> spo_track::Result<()> {
    let inf = f64::INFINITY;
    let cost = CostMatrix::from_rows(&[
        vec![4.0, 1.0, 3.0, inf],
        vec![2.0, 0.0, 5.0, 3.0],
        vec![3.0, 2.0, 2.0, inf],
    ])?;
    let best = solve(&cost)?;
    println!("best: rows -> {:?}, cost {}", best.cols, best.cost);
    for (rank, a) in murty_mbest(&cost, 5)?.iter().enumerate() {
        println!("#{}: {:?} cost {}", rank + 1, a.cols, a.cost);
    }
    Ok(())
}
