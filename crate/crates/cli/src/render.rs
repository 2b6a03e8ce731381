use std::path::Path;

use anyhow::{Context, Result};

use meshpaste_core::impaste::image::ImageBuf;
use meshpaste_core::builder::database::load_database;
use meshpaste_core::io;
use meshpaste_core::pipeline::augment_scene;

use crate::frame::{load_frame, load_run_config};

/// Renders `before | after` side by side.
pub fn run(
    frame_dir: &Path,
    db_path: &Path,
    config: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let cfg = load_run_config(config)?;
    let placement_cfg = cfg.placement.to_placement_config()?;
    let render_cfg = cfg.render.to_render_config()?;
    let frame = load_frame(frame_dir, &cfg)?;
    let before = frame.scene.image.clone();
    let db = load_database::<f64>(db_path)
        .with_context(|| format!("loading database {}", db_path.display()))?;
    let outcome = augment_scene(frame.scene, &db, &placement_cfg, &render_cfg, seed)?;
    let after = &outcome.scene.image;
    let (w, h) = (before.width, before.height);
    let mut side_by_side = ImageBuf::<f64>::filled(w * 2 + 4, h, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            side_by_side.set_pixel(x, y, before.pixel(x, y));
            side_by_side.set_pixel(w + 4 + x, y, after.pixel(x, y));
        }
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    io::write_png_rgb_file(out, &side_by_side)?;
    println!(
        "rendered {} with {} pasted object(s)",
        out.display(),
        outcome.placements.len()
    );
    Ok(())
}
