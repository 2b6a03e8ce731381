//! End-to-end augmentation of one frame: sample placements on the original
//! scene, then composite image and point cloud object by object.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::builder::database::CutObjectDb;
use crate::geom::SimilarityTransform;
use crate::impaste::render::{composite_frame, CompositeReport, RenderConfig};
use crate::impaste::ImpasteError;
use crate::placement::config::PlacementConfig;
use crate::placement::sampler::{sample_placements, Placement};
use crate::scalar::Real;
use crate::scene::Scene;

pub struct AugmentOutcome<T> {
    pub scene: Scene<T>,
    pub placements: Vec<Placement<T>>,
    pub report: CompositeReport,
}

/// Augments a frame deterministically under `seed`: placement sampling and
/// rendering draw from one seeded stream, so identical inputs produce
/// byte-identical outputs.
pub fn augment_scene<T: Real>(
    mut scene: Scene<T>,
    db: &CutObjectDb<T>,
    placement_cfg: &PlacementConfig<T>,
    render_cfg: &RenderConfig,
    seed: u64,
) -> Result<AugmentOutcome<T>, ImpasteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placements = sample_placements(&scene, db, &mut rng, placement_cfg);
    let pairs: Vec<(&crate::builder::cut_object::CutObject<T>, SimilarityTransform<T>)> =
        placements
            .iter()
            .map(|p| (db.object(p.object_index), p.transform))
            .collect();
    let report = composite_frame(&mut scene, &pairs, render_cfg, &mut rng)?;
    Ok(AugmentOutcome { scene, placements, report })
}
