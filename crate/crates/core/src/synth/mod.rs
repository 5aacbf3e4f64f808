//! Synthetic vessel images with exact ground truth.

pub mod corpus;
pub mod profile;
pub mod render;
pub mod scene;

pub use corpus::{
    generate_corpus, load_item, plan_corpus, plan_from_spec, read_manifest, write_corpus, CorpusItem, Manifest,
    ManifestEntry, PlannedScene,
};
pub use profile::{random_scene, Profile};
pub use render::{render, Rendered};
pub use scene::{EmulsionBand, Glare, GroundTruth, Phase, SceneSpec, SurfaceType, TruthSurface};
