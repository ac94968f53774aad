//! Raw raster input, training regions, and classification map output.

mod bsq;
mod layout;
mod map;
mod roi;

pub use bsq::{decode_bsq, encode_bsq, read_bsq, write_bsq, BandStack, BsqFile};
pub use layout::{read_layout, write_layout, ByteOrder, RasterLayout};
pub use map::{read_labels, read_legend, read_map, write_map, ClassificationMap, Legend, MapFiles};
pub use roi::{parse_roi, write_roi, ClassInfo, Rgb, TrainingRegions};

pub(crate) use map::with_suffix;
