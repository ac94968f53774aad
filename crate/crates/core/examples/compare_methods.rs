//! Split one set of regions into disjoint training and truth pixels, run
//! all six methods, and print the ranked comparison report.
//!
//!     cargo run --example compare_methods

use specmap::compare::{run_compare, CompareConfig};
use specmap::synthesis::{generate_scene, SceneSpec};

const SCENE: &str = "\
scene 40 40 4 99
class 1 water 20 40 220 rect 0 0 12 39 mean 22 20 12 8 stddev 4 4 3 3
class 2 forest 20 140 20 rect 13 0 26 39 mean 30 34 28 70 stddev 6 6 6 10
class 3 urban 180 180 180 rect 27 0 39 39 mean 60 62 66 68 stddev 10 10 10 10
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SceneSpec::parse(SCENE, "inline")?;
    let scene = generate_scene(&spec)?;
    let (train, truth) = scene.truth.split(0.5, 3)?;

    let mut cfg = CompareConfig::defaults_for(spec.bands);
    cfg.mlp.epochs = 200;
    let comparison = run_compare(&scene.image, &train, &truth, &cfg)?;

    for (rank, (method, score)) in comparison.ranking().iter().enumerate() {
        println!(
            "{}. {:<12} OA {:.4}  kappa {}",
            rank + 1,
            method.name(),
            score.overall_accuracy,
            score.kappa.map_or("undefined".into(), |k| format!("{k:.4}"))
        );
    }
    print!("\n{}", comparison.to_text());
    Ok(())
}
