//! Unscented Kalman filter cycles on a newborn object, and gating before and
//! after the first update.

use spo_track::inference::{gate, ukf_predict, ukf_update, PredictedMeasurement, DEFAULT_GATE};
use spo_track::model::{BBox2D, ModelParams, SpoModel};

fn main() -> spo_track::Result<()> {
    let params = ModelParams::default();
    let model = SpoModel::new(&params, params.camera(1920.0, 1080.0, 30.0)?)?;
    let (cam, noise) = (&model.camera, &model.measurement_noise);
    let (_, birth) = model.birth.mixture.iter().nth(6).expect("ten components");

    let m = PredictedMeasurement::new(birth, cam, noise)?.mean().clone();
    println!(
        "birth component projects to ({:.0}, {:.0}, {:.0}, {:.0})",
        m[0], m[1], m[2], m[3]
    );
    let first = BBox2D::new(m[0] + 150.0, m[1] - 20.0, m[2] * 1.1, m[3]);
    let (mut post, ll) = ukf_update(birth, &first, cam, noise)?;
    println!("first update: log-likelihood {ll:.2}, depth {:.2} m", post.mean()[4]);

    for k in 1..=5 {
        let pred = ukf_predict(&post, &model.transition)?;
        let pm = PredictedMeasurement::new(&pred, cam, noise)?;
        let z = pm.mean();
        let near = BBox2D::new(z[0] + 3.0, z[1] - 2.0, z[2], z[3]);
        let far = BBox2D::new(z[0] + 80.0, z[1], z[2], z[3]);
        let (_, d_near) = gate(&pred, &near, cam, noise, DEFAULT_GATE)?;
        let (far_ok, d_far) = gate(&pred, &far, cam, noise, DEFAULT_GATE)?;
        println!("frame {k}: near d^2 {d_near:.2}, 80 px off d^2 {d_far:.1} (in gate: {far_ok})");
        post = ukf_update(&pred, &near, cam, noise)?.0;
    }
    println!(
        "x std {:.3} m, depth std {:.3} m",
        post.cov()[(0, 0)].sqrt(),
        post.cov()[(4, 4)].sqrt()
    );
    Ok(())
}
