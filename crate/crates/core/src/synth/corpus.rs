//! Corpus generation and loading.
//!
//! Layout: `images/NNN.png`, `masks/NNN.png`, `truth/NNN.json` and
//! `manifest.json`, which is written last.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::io::{load_mask, load_rgb, save_mask_png, save_png};
use crate::par::{self, Execution};
use crate::vessel::VesselRegion;

use super::profile::{random_scene, Profile};
use super::render::{render, Rendered};
use super::scene::{GroundTruth, SceneSpec};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub mask: String,
    pub truth: String,
    /// Seed of the noise draw.
    pub seed: u64,
    pub phases: usize,
    pub emulsion: bool,
    pub glare: usize,
    pub spec: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// Profile name, or `spec` for a corpus rendered from one scene file.
    pub source: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// One scene of a corpus before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedScene {
    pub id: String,
    pub spec: SceneSpec,
    pub seed: u64,
}

impl PlannedScene {
    pub fn render(&self) -> Result<Rendered> {
        let mut r = render(&self.spec, self.seed)?;
        r.truth.image_id = self.id.clone();
        Ok(r)
    }
}

pub fn image_id(index: usize) -> String {
    format!("{index:03}")
}

/// Scenes `0..n` of a profile corpus. Scene `i` depends only on `(seed, i)`.
pub fn plan_corpus(n: usize, profile: Profile, seed: u64) -> Vec<PlannedScene> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let spec = random_scene(profile, &mut rng);
            PlannedScene {
                id: image_id(i),
                spec,
                seed: rng.next_u64(),
            }
        })
        .collect()
}

/// `n` renders of one scene with different noise seeds.
pub fn plan_from_spec(n: usize, spec: &SceneSpec, seed: u64) -> Result<Vec<PlannedScene>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| PlannedScene {
            id: image_id(i),
            spec: spec.clone(),
            seed: rng.next_u64(),
        })
        .collect())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

/// Renders and writes a planned corpus into `dir`.
pub fn write_corpus(
    scenes: &[PlannedScene],
    source: &str,
    seed: u64,
    dir: &Path,
    exec: Execution,
) -> Result<Manifest> {
    if scenes.is_empty() {
        return Err(Error::Param("corpus needs at least one image".into()));
    }
    for sub in ["images", "masks", "truth"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let results = par::map(exec, scenes, |scene| -> Result<ManifestEntry> {
        let r = scene.render()?;
        let entry = ManifestEntry {
            id: scene.id.clone(),
            image: format!("images/{}.png", scene.id),
            mask: format!("masks/{}.png", scene.id),
            truth: format!("truth/{}.json", scene.id),
            seed: scene.seed,
            phases: scene.spec.phases.len(),
            emulsion: scene.spec.emulsion.is_some(),
            glare: scene.spec.glare.len(),
            spec: scene.spec.clone(),
        };
        save_png(&r.image, dir.join(&entry.image))?;
        save_mask_png(&r.vessel.rasterize(), dir.join(&entry.mask))?;
        write_json(&r.truth, &dir.join(&entry.truth))?;
        Ok(entry)
    });
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        source: source.to_string(),
        seed,
        entries: results.into_iter().collect::<Result<_>>()?,
    };
    // the manifest marks a complete corpus, so it goes last and atomically
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    write_json(&manifest, &tmp)?;
    let path = dir.join(MANIFEST);
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Generates an `n`-image corpus of `profile` into `dir`.
pub fn generate_corpus(n: usize, profile: Profile, seed: u64, dir: &Path, exec: Execution) -> Result<Manifest> {
    write_corpus(&plan_corpus(n, profile, seed), &profile.to_string(), seed, dir, exec)
}

/// Reads and checks a corpus manifest. Every offending entry is listed in
/// the error.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::Corpus(format!(
            "manifest schema version {} (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    if manifest.entries.is_empty() {
        return Err(Error::Corpus("manifest lists no images".into()));
    }
    let mut problems = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for e in &manifest.entries {
        if !seen.insert(e.id.as_str()) {
            problems.push(format!("{}: duplicate id", e.id));
        }
        for f in [&e.image, &e.mask, &e.truth] {
            if !dir.join(f).is_file() {
                problems.push(format!("{}: missing {f}", e.id));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Corpus(problems.join("; ")));
    }
    Ok(manifest)
}

/// A loaded corpus image with its vessel and ground truth.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub id: String,
    pub image: RgbImage,
    pub vessel: VesselRegion,
    pub truth: GroundTruth,
}

pub fn load_item(dir: &Path, entry: &ManifestEntry) -> Result<CorpusItem> {
    let image = load_rgb(dir.join(&entry.image))?;
    let vessel = VesselRegion::from_mask(&load_mask(dir.join(&entry.mask))?)?;
    let truth_path: PathBuf = dir.join(&entry.truth);
    let text = fs::read_to_string(&truth_path).map_err(io_err(&truth_path))?;
    let truth: GroundTruth = serde_json::from_str(&text)
        .map_err(|e| Error::Corpus(format!("{}: {e}", truth_path.display())))?;
    Ok(CorpusItem {
        id: entry.id.clone(),
        image,
        vessel,
        truth,
    })
}
