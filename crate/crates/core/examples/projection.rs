//! Pinhole projection of a 3D pedestrian state and the birth mixture that
//! covers the image.

use nalgebra::DVector;
use spo_track::model::{birth_depths, build_birth, project, BirthDesign, CameraModel, MotionParams};

fn main() -> spo_track::Result<()> {
    let cam = CameraModel::with_default_intrinsics(1920.0, 1080.0, 30.0)?;
    println!(
        "gamma = {} px, scale at 5 m = {:.0} px/m",
        cam.gamma(),
        cam.scale_at(5.0)
    );

    // [x, vx, y, vy, z, vz, w, h]: 0.5 m right of the axis, 6 m away.
    let state = DVector::from_vec(vec![0.5, 1.0, 0.2, 0.0, 6.0, -0.5, 0.5, 1.7]);
    let b = project(&state, &cam)?;
    println!(
        "projected box: centre ({:.1}, {:.1}), {:.1} x {:.1} px",
        b.x, b.y, b.width, b.height
    );

    // Doubling every length and the depth leaves the image unchanged.
    let mut far = state.clone() * 2.0;
    far[1] = state[1];
    let b2 = project(&far, &cam)?;
    println!("scaled scene:  centre ({:.1}, {:.1})", b2.x, b2.y);

    let design = BirthDesign::default();
    println!(
        "birth depths: {:?}",
        birth_depths(design.z_min, design.z_max, design.components)
            .iter()
            .map(|z| format!("{z:.2}"))
            .collect::<Vec<_>>()
    );
    let birth = build_birth(&cam, &design, &MotionParams::default(), 0.064)?;
    for (w, c) in birth.mixture.iter().take(3) {
        let sx = c.cov()[(0, 0)].sqrt();
        println!("component w={w:.2} z={:.2} m, lateral std {sx:.2} m", c.mean()[4]);
    }
    Ok(())
}
