//! Detection-free instance segmentation through labeling transformations.
//!
//! An instance labeling is defined only up to a permutation of its IDs. The
//! three transforms in this crate map it to permutation-invariant targets
//! and back:
//!
//! * [`pixel_affinity`]: per-pixel classes of local same-instance patterns,
//!   decoded by voting and normalized cuts.
//! * [`superpixel`]: same-instance labels between SLIC superpixels,
//!   integrated by normalized cuts over the superpixel graph.
//! * [`boundary`]: instance boundaries, integrated by connected components.
//!
//! [`metrics`] holds the evaluation measures and [`synth`] generates scenes and
//! predictor noise for experiments without trained networks.

pub mod boundary;
pub mod error;
pub mod io;
pub mod labelmap;
pub mod metrics;
pub mod pixel_affinity;
pub mod rng;
pub mod spectral;
pub mod superpixel;
pub mod synth;

pub use error::{Error, Result};
pub use labelmap::{
    canonicalize, connected_components, partitions_equal, regions_of, rescale_labels, Image,
    InstanceLabelMap, InstanceSegResult, RegionPartition, SemanticLabelMap,
};
