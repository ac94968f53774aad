//! Classify one noisy scene with every decision rule and compare the
//! resulting maps against the generating truth.
//!
//!     cargo run --example classify_six_ways

use specmap::assessment::{build_confusion, kappa, overall_accuracy};
use specmap::classifiers::{classify_image, train_mlp, Classifier, ClassifierConfig, Method, MlpHyper};
use specmap::signatures::extract_signatures;
use specmap::synthesis::{generate_scene, SceneSpec};

const SCENE: &str = "\
scene 48 48 4 2024
class 1 water 0 0 255 rect 0 0 15 47 mean 20 18 10 6 stddev 3 3 2 2
class 2 forest 0 120 0 rect 16 0 31 47 mean 35 30 25 90 stddev 5 5 5 12
class 3 soil 170 110 60 rect 32 0 47 47 mean 80 85 95 100 stddev 8 8 8 8
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SceneSpec::parse(SCENE, "inline")?;
    let scene = generate_scene(&spec)?;
    let (train, test) = scene.truth.split(0.3, 1)?;
    let sigs = extract_signatures(&scene.image, &train)?;

    // Rejection thresholds are optional; these are deliberately loose.
    let cfg = ClassifierConfig {
        max_angle_threshold_deg: Some(10.0),
        workers: 4,
        ..ClassifierConfig::default()
    };
    let model = train_mlp(&scene.image, &train, &MlpHyper::defaults_for(spec.bands))?;

    println!("{:<12} {:>8} {:>8} {:>13}", "method", "OA", "kappa", "unclassified");
    for method in Method::ALL {
        let classifier = match method {
            Method::NeuralNetwork => Classifier::from_model(&model, sigs.legend(), &cfg)?,
            m => Classifier::new(m, &sigs, &cfg)?,
        };
        let map = classify_image(&scene.image, &classifier)?;
        let cm = build_confusion(&map, &test)?;
        let unclassified = map.labels().iter().filter(|&&l| l == 0).count();
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>13}",
            method.name(),
            overall_accuracy(&cm)?,
            kappa(&cm)?,
            unclassified
        );
    }

    // A single pixel through one rule.
    let ml = Classifier::new(Method::MaximumLikelihood, &sigs, &cfg)?;
    println!("\npixel [30, 28, 24, 85] -> class {}", ml.classify(&[30.0, 28.0, 24.0, 85.0])?);
    Ok(())
}
