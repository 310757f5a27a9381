//! Persistence: image files, dataset manifests, traffic-sign ingestion,
//! archive / metrics / checkpoint files and visual exports.

pub mod export;
pub mod gtsrb;
pub mod image_io;
pub mod manifest;
pub mod records;

pub use export::{export_montage, export_objective_csv, montage_rows, read_objective_csv, MontageRow};
pub use gtsrb::{ingest_gtsrb, GtsrbAnnotation, IngestOptions};
pub use image_io::{load_image, save_image};
pub use manifest::{load_labeled, load_one_shot, load_regularization, DatasetManifest, ManifestRow, Shape};
pub use records::{load_checkpoint, read_archive, read_metrics, save_checkpoint, write_archive, write_metrics};
