use std::path::Path;

use anyhow::{Context, Result};

use meshpaste_core::builder::database::load_database;
use meshpaste_core::pipeline::augment_scene;

use crate::frame::{load_frame, load_run_config, save_frame};

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
    let db = load_database::<f64>(db_path)
        .with_context(|| format!("loading database {}", db_path.display()))?;
    if db.is_empty() {
        anyhow::bail!("database {} contains no objects", db_path.display());
    }
    let outcome = augment_scene(frame.scene.clone(), &db, &placement_cfg, &render_cfg, seed)?;
    let pasted: Vec<_> = outcome
        .placements
        .iter()
        .map(|p| (p.class, p.label))
        .collect();
    save_frame(out, &frame, &outcome.scene, &pasted)?;
    println!(
        "pasted {} object(s): +{} points, -{} occluded",
        outcome.placements.len(),
        outcome.report.points_added.iter().sum::<usize>(),
        outcome.report.points_removed.iter().sum::<usize>(),
    );
    Ok(())
}
