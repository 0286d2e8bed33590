//! TGOSPA on hand-made trajectories: a perfect estimate, a track swap and a
//! missed object. A swap halfway through a long track is cheaper to score as
//! switches than as misses plus false tracks.

use spo_track::metrics::{gospa, tgospa, TgospaParams};
use spo_track::model::BBox2D;
use spo_track::trajectory::TrajectorySet;

fn walk(set: &mut TrajectorySet, id: u64, x0: f64, frames: std::ops::RangeInclusive<usize>) {
    for k in frames {
        set.insert(k, id, BBox2D::new(x0 + 5.0 * k as f64, 300.0, 40.0, 100.0));
    }
}

fn main() -> spo_track::Result<()> {
    let params = TgospaParams::default();
    println!("c = {}, p = {}, gamma = {:.3}", params.c, params.p, params.gamma);

    let mut truth = TrajectorySet::new(30);
    walk(&mut truth, 1, 100.0, 1..=30);
    walk(&mut truth, 2, 400.0, 1..=30);

    let mut swapped = TrajectorySet::new(30);
    walk(&mut swapped, 7, 100.0, 1..=15);
    walk(&mut swapped, 7, 400.0, 16..=30);
    walk(&mut swapped, 8, 400.0, 1..=15);
    walk(&mut swapped, 8, 100.0, 16..=30);

    let mut partial = TrajectorySet::new(30);
    walk(&mut partial, 3, 100.0, 1..=30);

    for (name, est) in [("perfect", &truth), ("swap", &swapped), ("one missed", &partial)] {
        let r = tgospa(est, &truth, &params)?;
        println!(
            "{name:<11} total {:.3}  tp {} fn {} fp {} switches {}",
            r.total, r.tp_count, r.fn_count, r.fp_count, r.switches
        );
    }

    let a = [BBox2D::new(0.0, 0.0, 10.0, 10.0)];
    let b = [BBox2D::new(3.0, 0.0, 10.0, 10.0)];
    println!(
        "single-frame GOSPA {:.3}",
        gospa(&a, &b, params.c, params.p, 2.0)?.value
    );
    Ok(())
}
