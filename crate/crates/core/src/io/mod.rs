//! Dataset generation, on-disk bundle format, and text file helpers.

mod bundle;
mod synthetic;
pub mod text;

pub use bundle::{
    layer_file_name, load_bundle, load_bundle_dir, read_edge_list, read_manifest, save_bundle,
    write_edge_list, BundlePaths, DatasetBundle, Manifest, FEATURES_FILE, LABELS_FILE,
    MANIFEST_FILE, MANIFEST_VERSION,
};
pub use synthetic::{generate_synthetic, sample_clouds, SyntheticSpec};
