//! Cut-object database: a root directory with `manifest.json` and one
//! subdirectory per object (`mesh.bin`, `patch.png`, `mask.png`,
//! `meta.json`, `intensity.bin`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builder::cut_object::CutObject;
use crate::builder::BuilderError;
use crate::geom::{RigidPose, TriangleMesh};
use crate::impaste::image::SourcePatch;
use crate::intensity::IntensityInterpolant;
use crate::io::png;
use crate::math::{Mat3, Vec3};
use crate::placement::bbox::BoxDims;
use crate::placement::config::ObservedSides;
use crate::scalar::Real;
use crate::scene::ObjectClass;

pub const DATABASE_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub class: ObjectClass,
    /// Subdirectory name relative to the database root.
    pub dir: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub objects: Vec<ManifestEntry>,
    pub class_counts: BTreeMap<String, usize>,
    pub build_config_hash: String,
}

/// Per-object metadata file.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct MetaJson {
    class: ObjectClass,
    dims: [f64; 3],
    h0_rotation: [[f64; 3]; 3],
    h0_translation: [f64; 3],
    observed: ObservedSides,
    len_u_src: f64,
    wid_u_src: f64,
    crop_offset: (i32, i32),
}

/// FNV-1a over a canonical byte string; good enough to fingerprint the
/// build configuration in the manifest.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Writes the database; object order defines the manifest order, so a
/// deterministic build produces byte-identical output.
pub fn write_database<T: Real>(
    root: &Path,
    objects: &[CutObject<T>],
    build_config_hash: &str,
) -> Result<(), BuilderError> {
    fs::create_dir_all(root)?;
    let mut entries = Vec::with_capacity(objects.len());
    let mut class_counts: BTreeMap<String, usize> = BTreeMap::new();
    for obj in objects {
        let dir_name = obj.id.clone();
        let dir = root.join(&dir_name);
        fs::create_dir_all(&dir)?;
        let mut mesh_bytes = Vec::new();
        obj.mesh.write_binary(&mut mesh_bytes)?;
        fs::write(dir.join("mesh.bin"), mesh_bytes)?;
        png::write_png_rgb_file(&dir.join("patch.png"), &obj.patch.image)
            .map_err(|e| BuilderError::Database(e.to_string()))?;
        png::write_png_gray_file(
            &dir.join("mask.png"),
            obj.patch.image.width,
            obj.patch.image.height,
            &obj.patch.mask,
        )
        .map_err(|e| BuilderError::Database(e.to_string()))?;
        let mut intensity_bytes = Vec::new();
        obj.interpolant
            .write_binary(&mut intensity_bytes)
            .map_err(BuilderError::Io)?;
        fs::write(dir.join("intensity.bin"), intensity_bytes)?;
        let meta = MetaJson {
            class: obj.class,
            dims: [
                obj.dims.length.as_f64(),
                obj.dims.width.as_f64(),
                obj.dims.height.as_f64(),
            ],
            h0_rotation: {
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = obj.h0.rotation.m[i][j].as_f64();
                    }
                }
                m
            },
            h0_translation: obj.h0.translation.cast::<f64>().to_array(),
            observed: obj.observed,
            len_u_src: obj.len_u_src.as_f64(),
            wid_u_src: obj.wid_u_src.as_f64(),
            crop_offset: obj.patch.offset,
        };
        let meta_text = serde_json::to_string_pretty(&meta)
            .map_err(|e| BuilderError::Database(e.to_string()))?;
        fs::write(dir.join("meta.json"), meta_text)?;
        entries.push(ManifestEntry { id: obj.id.clone(), class: obj.class, dir: dir_name });
        *class_counts.entry(obj.class.name().to_string()).or_default() += 1;
    }
    let manifest = Manifest {
        version: DATABASE_VERSION,
        objects: entries,
        class_counts,
        build_config_hash: build_config_hash.to_string(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| BuilderError::Database(e.to_string()))?;
    fs::write(root.join("manifest.json"), text)?;
    Ok(())
}

/// In-memory database with per-class indices for uniform draws.
pub struct CutObjectDb<T> {
    objects: Vec<CutObject<T>>,
    by_class: BTreeMap<ObjectClass, Vec<usize>>,
    pub manifest: Manifest,
}

impl<T: Real> CutObjectDb<T> {
    pub fn from_objects(objects: Vec<CutObject<T>>, manifest: Manifest) -> Self {
        let mut by_class: BTreeMap<ObjectClass, Vec<usize>> = BTreeMap::new();
        for (i, obj) in objects.iter().enumerate() {
            by_class.entry(obj.class).or_default().push(i);
        }
        Self { objects, by_class, manifest }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object(&self, index: usize) -> &CutObject<T> {
        &self.objects[index]
    }

    pub fn objects(&self) -> &[CutObject<T>] {
        &self.objects
    }

    pub fn indices_of_class(&self, class: ObjectClass) -> &[usize] {
        self.by_class.get(&class).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn read_manifest(root: &Path) -> Result<Manifest, BuilderError> {
    let text = fs::read_to_string(root.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| BuilderError::Database(format!("manifest: {e}")))
}

fn load_object<T: Real>(root: &Path, entry: &ManifestEntry) -> Result<CutObject<T>, BuilderError> {
    let dir = root.join(&entry.dir);
    let mesh_bytes = fs::read(dir.join("mesh.bin"))?;
    let mesh = TriangleMesh::<T>::read_binary(&mut mesh_bytes.as_slice())
        .map_err(|e| BuilderError::Database(format!("{}: mesh: {e}", entry.id)))?;
    let image = png::read_png_rgb_file::<T>(&dir.join("patch.png"))
        .map_err(|e| BuilderError::Database(format!("{}: patch: {e}", entry.id)))?;
    let (mw, mh, mask) = png::read_png_gray_file::<T>(&dir.join("mask.png"))
        .map_err(|e| BuilderError::Database(format!("{}: mask: {e}", entry.id)))?;
    if (mw, mh) != (image.width, image.height) {
        return Err(BuilderError::Database(format!("{}: mask/patch size mismatch", entry.id)));
    }
    let meta_text = fs::read_to_string(dir.join("meta.json"))?;
    let meta: MetaJson = serde_json::from_str(&meta_text)
        .map_err(|e| BuilderError::Database(format!("{}: meta: {e}", entry.id)))?;
    let intensity_bytes = fs::read(dir.join("intensity.bin"))?;
    let interpolant = IntensityInterpolant::<T>::read_binary(&mut intensity_bytes.as_slice())
        .map_err(|e| BuilderError::Database(format!("{}: intensity: {e}", entry.id)))?;
    let patch = SourcePatch::new(image, mask, meta.crop_offset)
        .map_err(|e| BuilderError::Database(format!("{}: patch: {e}", entry.id)))?;
    let mut rotation = Mat3::<T>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            rotation.m[i][j] = T::of(meta.h0_rotation[i][j]);
        }
    }
    Ok(CutObject {
        id: entry.id.clone(),
        class: meta.class,
        dims: BoxDims::new(T::of(meta.dims[0]), T::of(meta.dims[1]), T::of(meta.dims[2])),
        mesh,
        patch,
        h0: RigidPose::new(rotation, Vec3::from_array([
            T::of(meta.h0_translation[0]),
            T::of(meta.h0_translation[1]),
            T::of(meta.h0_translation[2]),
        ])),
        interpolant,
        observed: meta.observed,
        len_u_src: T::of(meta.len_u_src),
        wid_u_src: T::of(meta.wid_u_src),
    })
}

/// Loads a database from disk; concurrent readers are fine (read-only).
pub fn load_database<T: Real>(root: &Path) -> Result<CutObjectDb<T>, BuilderError> {
    let manifest = read_manifest(root)?;
    if manifest.version != DATABASE_VERSION {
        return Err(BuilderError::Database(format!(
            "unsupported database version {}",
            manifest.version
        )));
    }
    let mut objects = Vec::with_capacity(manifest.objects.len());
    for entry in &manifest.objects {
        objects.push(load_object(root, entry)?);
    }
    Ok(CutObjectDb::from_objects(objects, manifest))
}

/// Invariant audit of an on-disk database; returns human-readable findings
/// (empty = clean).
pub fn validate_database(root: &Path) -> Result<Vec<String>, BuilderError> {
    let mut findings = Vec::new();
    let manifest = read_manifest(root)?;
    let mut counted: BTreeMap<String, usize> = BTreeMap::new();
    for entry in &manifest.objects {
        *counted.entry(entry.class.name().to_string()).or_default() += 1;
        let obj = match load_object::<f64>(root, entry) {
            Ok(o) => o,
            Err(e) => {
                findings.push(format!("{}: failed to load: {e}", entry.id));
                continue;
            }
        };
        if let Err(e) = obj.mesh.validate() {
            findings.push(format!("{}: mesh invalid: {e}", entry.id));
        }
        if !(obj.len_u_src > 0.0 && obj.wid_u_src > 0.0) {
            findings.push(format!("{}: non-positive projected source extents", entry.id));
        }
        if obj.h0.orthonormality_error() > 1e-6 {
            findings.push(format!("{}: H0 rotation not orthonormal", entry.id));
        }
        // Trim guarantee: vertices inside the expanded label box.
        let half = (
            obj.dims.length / 2.0 + 0.2 + 1e-6,
            obj.dims.width / 2.0 + 0.2 + 1e-6,
            obj.dims.height / 2.0 + 0.2 + 1e-6,
        );
        if obj
            .mesh
            .vertices
            .iter()
            .any(|v| v.x.abs() > half.0 || v.y.abs() > half.1 || v.z.abs() > half.2)
        {
            findings.push(format!("{}: mesh vertex outside the expanded label box", entry.id));
        }
        if obj.interpolant.is_empty() {
            findings.push(format!("{}: empty intensity interpolant", entry.id));
        }
        if obj.interpolant.log_b().iter().any(|v| !v.is_finite()) {
            findings.push(format!("{}: non-finite log_b", entry.id));
        }
    }
    if counted != manifest.class_counts {
        findings.push(format!(
            "manifest class_counts {:?} disagree with entries {:?}",
            manifest.class_counts, counted
        ));
    }
    Ok(findings)
}
