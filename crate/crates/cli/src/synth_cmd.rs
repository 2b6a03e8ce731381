use std::path::Path;

use anyhow::Result;

use meshpaste_core::math::Vec3;
use meshpaste_core::lidar::ScanPattern;
use meshpaste_core::scene::ObjectClass;
use meshpaste_core::synth;

pub fn selftest() -> Result<()> {
    let results = synth::run_selftest();
    let mut failures = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        if r.detail.is_empty() {
            println!("[{status}] {}", r.name);
        } else {
            println!("[{status}] {} ({})", r.name, r.detail);
        }
        if !r.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        anyhow::bail!("{failures} selftest check(s) failed");
    }
    Ok(())
}

/// Emits deterministic synthetic data: two sequences (a rigid sphere "car"
/// and a cuboid "pedestrian"), labels, masks and one augmentable frame.
pub fn emit(out: &Path, frames: usize) -> Result<()> {
    let raw = out.join("raw");
    let labels = out.join("labels");
    let masks = out.join("masks");
    let rig = synth::synthetic_rig::<f64>();
    let pattern = ScanPattern::ideal_grid(
        48,
        (-20.0f64).to_radians(),
        3.0f64.to_radians(),
        2.0 * std::f64::consts::PI / 1400.0,
        120.0,
    );
    let car = synth::make_drive(
        synth::Shape::Sphere { radius: 1.0 },
        ObjectClass::Car,
        &synth::linear_trajectory(
            Vec3::new(9.0, 2.0, -0.73),
            Vec3::new(0.0, -2.0, 0.0),
            0.3,
            0.25,
            frames.max(2),
        ),
        &pattern,
        &rig,
        0.85,
    );
    synth::write_kitti_sequence(&raw, &labels, &masks, "0001", &car)?;
    let pedestrian = synth::make_drive(
        synth::Shape::Cuboid { half_extents: Vec3::new(0.3, 0.35, 0.9) },
        ObjectClass::Pedestrian,
        &synth::linear_trajectory(
            Vec3::new(7.0, -1.5, -0.83),
            Vec3::new(0.2, 0.3, 0.0),
            -0.2,
            0.0,
            frames.max(2),
        ),
        &pattern,
        &rig,
        0.6,
    );
    synth::write_kitti_sequence(&raw, &labels, &masks, "0002", &pedestrian)?;
    // An augmentable frame: the ground plane plus one existing object off to
    // the side, leaving room for pastes.
    let scenery = synth::make_drive(
        synth::Shape::Cuboid { half_extents: Vec3::new(1.0, 0.8, 0.65) },
        ObjectClass::Car,
        &synth::linear_trajectory(
            Vec3::new(14.0, -5.0, -1.08),
            Vec3::new(0.0, 0.0, 0.0),
            1.2,
            0.0,
            2,
        ),
        &pattern,
        &rig,
        0.7,
    );
    synth::write_frame_dir(&out.join("frame"), &scenery, 0)?;
    println!("emitted synthetic dataset under {}", out.display());
    Ok(())
}
