//! Train the feed-forward network on a one-band, two-class task, save it,
//! reload it, and classify with an activation threshold.
//!
//!     cargo run --example train_network

use specmap::classifiers::{classify_mlp, read_model, train_mlp, write_model, ClassifierConfig, MlpHyper};
use specmap::raster_io::{BandStack, ClassInfo, TrainingRegions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Left half dark (~20 DN), right half bright (~200 DN).
    let pixels: Vec<Vec<f64>> = (0..64)
        .map(|i| {
            let base = if i % 8 < 4 { 20.0 } else { 200.0 };
            vec![base + (i % 3) as f64 - 1.0]
        })
        .collect();
    let image = BandStack::from_pixels(8, 8, &pixels)?;
    let classes = vec![ClassInfo::new(1, "dark", [0; 3]), ClassInfo::new(2, "bright", [255; 3])];
    let members = vec![
        (0..8).flat_map(|r| (0..4).map(move |c| (r, c))).collect(),
        (0..8).flat_map(|r| (4..8).map(move |c| (r, c))).collect(),
    ];
    let regions = TrainingRegions::new(8, 8, classes, members)?;

    let hyper = MlpHyper::defaults_for(1);
    println!("hyperparameters: {hyper:?}");
    let model = train_mlp(&image, &regions, &hyper)?;
    println!("layer sizes {:?}", model.layer_sizes());

    let path = std::env::temp_dir().join("specmap_example.mlp");
    write_model(&path, &model)?;
    let reloaded = read_model(&path)?;
    assert_eq!(reloaded, model);

    let cfg = ClassifierConfig {
        min_activation_threshold: Some(0.6),
        ..ClassifierConfig::default()
    };
    for dn in [15.0, 25.0, 110.0, 190.0, 230.0] {
        let out = reloaded.forward(&[dn]);
        println!(
            "DN {dn:>5}: outputs [{:.3}, {:.3}] -> label {}",
            out[0],
            out[1],
            classify_mlp(&[dn], &reloaded, &cfg)?
        );
    }
    Ok(())
}
