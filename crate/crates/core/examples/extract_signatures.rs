//! Delineate training regions over a scene and extract per-class
//! signatures: mean, sample covariance, band extremes, and the pooled
//! covariance shared by all classes.
//!
//!     cargo run --example extract_signatures

use specmap::raster_io::TrainingRegions;
use specmap::signatures::extract_signatures;
use specmap::synthesis::{generate_scene, SceneSpec};

const SCENE: &str = "\
scene 32 32 3 5
class 1 water 0 0 255 rect 0 0 15 31 mean 30 25 12 stddev 2 2 1
class 2 crop 40 200 40 rect 16 0 31 31 mean 60 110 45 stddev 6 9 4
";

const ROI: &str = "\
# two training sites, one per class
class 1 water 0 0 255
rect 2 2 9 12
class 2 crop 40 200 40
rect 20 5 27 20
pixel 30 30
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SceneSpec::parse(SCENE, "inline")?;
    let scene = generate_scene(&spec)?;
    let regions = TrainingRegions::parse(ROI, "inline", spec.rows, spec.cols)?;

    let sigs = extract_signatures(&scene.image, &regions)?;
    for s in &sigs.signatures {
        println!("class {} {} ({} pixels)", s.class_id, s.name, s.count);
        println!("  mean {:?}", s.mean.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
        println!("  min  {:?}", s.band_min);
        println!("  max  {:?}", s.band_max);
    }
    if let Some(pooled) = &sigs.pooled_covariance {
        println!("pooled covariance:{pooled:.3}");
    }
    print!("\nsignature file:\n{}", sigs.to_text());
    Ok(())
}
