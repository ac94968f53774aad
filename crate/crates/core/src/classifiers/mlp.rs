//! Feed-forward network with logistic units trained by per-sample
//! backpropagation on squared error.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster_io::{BandStack, TrainingRegions};

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if biases.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                actual: biases.len(),
            });
        }
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
            out.push(sigmoid(z));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    /// Inputs are divided by this before the first layer.
    pub input_scale: f64,
    /// Seed the weights were initialised from.
    pub seed: u64,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>, input_scale: f64, seed: u64) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidConfig(
                "a network needs at least one hidden layer and an output layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].outputs,
                    actual: pair[1].inputs,
                });
            }
        }
        if !(input_scale > 0.0 && input_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "input scale must be positive, got {input_scale}"
            )));
        }
        Ok(MlpModel {
            layers,
            input_scale,
            seed,
        })
    }

    /// A network with every weight and bias drawn uniformly from [−0.5, 0.5].
    pub fn random(layer_sizes: &[usize], input_scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(layer_sizes, input_scale, seed, &mut rng)
    }

    fn random_with(
        layer_sizes: &[usize],
        input_scale: f64,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let weights = (0..w[0] * w[1]).map(|_| rng.random_range(-0.5..=0.5)).collect();
                let biases = (0..w[1]).map(|_| rng.random_range(-0.5..=0.5)).collect();
                DenseLayer::new(w[0], w[1], weights, biases)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, input_scale, seed)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Output activations for a raw (unscaled) pixel.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut current: Vec<f64> = x.iter().map(|v| v / self.input_scale).collect();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Shortest round-trip float formatting: a reloaded model is bit-identical.
    pub fn to_text(&self) -> String {
        let sizes: Vec<String> = self.layer_sizes().iter().map(|s| s.to_string()).collect();
        let mut out = format!(
            "layers {}\ninput_scale {}\nseed {}\n",
            sizes.join(" "),
            self.input_scale,
            self.seed
        );
        for (i, layer) in self.layers.iter().enumerate() {
            out.push_str(&format!("weights {}\n", i + 1));
            for row in layer.weights.chunks_exact(layer.inputs) {
                let vals: Vec<String> = row.iter().map(f64::to_string).collect();
                out.push_str(&vals.join(" "));
                out.push('\n');
            }
            out.push_str(&format!("bias {}\n", i + 1));
            let vals: Vec<String> = layer.biases.iter().map(f64::to_string).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(source, 0, format!("unexpected end of file, expected {what}")))
        };
        let keyed = |(n, l): (usize, &str), key: &str| -> Result<Vec<String>> {
            let mut f = l.split_whitespace();
            if f.next() != Some(key) {
                return Err(Error::parse(source, n, format!("expected `{key}`")));
            }
            Ok(f.map(str::to_string).collect())
        };
        let nums = |n: usize, fields: &[String]| -> Result<Vec<f64>> {
            fields
                .iter()
                .map(|t| t.parse().map_err(|_| Error::parse(source, n, format!("bad number `{t}`"))))
                .collect()
        };

        let line = next("layers")?;
        let sizes: Vec<usize> = keyed(line, "layers")?
            .iter()
            .map(|t| t.parse().map_err(|_| Error::parse(source, line.0, "bad layer size")))
            .collect::<Result<_>>()?;
        let line = next("input_scale")?;
        let scale = nums(line.0, &keyed(line, "input_scale")?)?;
        let line = next("seed")?;
        let seed: u64 = keyed(line, "seed")?
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(source, line.0, "bad seed"))?;
        if scale.len() != 1 || sizes.len() < 3 {
            return Err(Error::parse(source, 1, "malformed model header"));
        }

        let mut layers = Vec::new();
        for (i, w) in sizes.windows(2).enumerate() {
            let line = next("weights")?;
            let idx = keyed(line, "weights")?;
            if idx != [(i + 1).to_string()] {
                return Err(Error::parse(source, line.0, format!("expected `weights {}`", i + 1)));
            }
            let mut weights = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[1] {
                let (n, l) = next("weight row")?;
                let row = nums(n, &l.split_whitespace().map(str::to_string).collect::<Vec<_>>())?;
                if row.len() != w[0] {
                    return Err(Error::parse(source, n, format!("weight row needs {} values", w[0])));
                }
                weights.extend(row);
            }
            let line = next("bias")?;
            keyed(line, "bias")?;
            let (n, l) = next("bias row")?;
            let biases = nums(n, &l.split_whitespace().map(str::to_string).collect::<Vec<_>>())?;
            layers.push(DenseLayer::new(w[0], w[1], weights, biases)?);
        }
        Self::new(layers, scale[0], seed)
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHyper {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Divisor mapping DN to [0, 1]; 255 suits one-byte data.
    pub input_scale: f64,
}

impl MlpHyper {
    /// H = max(8, 2B), learning rate 0.2, 500 epochs.
    pub fn defaults_for(bands: usize) -> Self {
        MlpHyper {
            hidden: (2 * bands).max(8),
            learning_rate: 0.2,
            epochs: 500,
            seed: 42,
            input_scale: 255.0,
        }
    }
}

/// Trains a [B, H, K] network on the labeled pixels of `regions`.
///
/// Samples start in class order then region order and are reshuffled at the
/// start of every epoch by the same seeded ChaCha8 stream that initialised
/// the weights, so the result is a pure function of inputs and seed.
pub fn train_mlp(image: &BandStack, regions: &TrainingRegions, hyper: &MlpHyper) -> Result<MlpModel> {
    if hyper.hidden < 1 {
        return Err(Error::InvalidConfig("hidden layer needs at least 1 unit".into()));
    }
    if hyper.epochs < 1 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig("learning rate must be positive".into()));
    }
    let k = regions.num_classes();
    if k < 2 {
        return Err(Error::InvalidConfig(
            "network training needs at least 2 classes".into(),
        ));
    }
    let bands = image.bands();

    let samples: Vec<(Vec<f64>, usize)> = regions
        .iter()
        .map(|(id, r, c)| {
            let x = image.pixel(r, c).iter().map(|v| v / hyper.input_scale).collect();
            (x, id as usize - 1)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut model =
        MlpModel::random_with(&[bands, hyper.hidden, k], hyper.input_scale, hyper.seed, &mut rng)?;

    let n_layers = model.layers.len();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
    let mut delta: Vec<f64> = Vec::new();
    let mut prev_delta: Vec<f64> = Vec::new();
    let lr = hyper.learning_rate;

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            let (x, target) = &samples[s];
            acts[0].clone_from(x);
            for l in 0..n_layers {
                let (done, rest) = acts.split_at_mut(l + 1);
                model.layers[l].forward_into(&done[l], &mut rest[0]);
            }

            delta.clear();
            delta.extend(acts[n_layers].iter().enumerate().map(|(j, &o)| {
                let t = if j == *target { 1.0 } else { 0.0 };
                (o - t) * o * (1.0 - o)
            }));

            for l in (0..n_layers).rev() {
                let input = &acts[l];
                let layer = &mut model.layers[l];
                if l > 0 {
                    prev_delta.clear();
                    prev_delta.resize(layer.inputs, 0.0);
                    for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                        for (p, w) in prev_delta.iter_mut().zip(row) {
                            *p += w * d;
                        }
                    }
                    for (p, a) in prev_delta.iter_mut().zip(input) {
                        *p *= a * (1.0 - a);
                    }
                }
                for ((row, b), d) in layer
                    .weights
                    .chunks_exact_mut(layer.inputs)
                    .zip(layer.biases.iter_mut())
                    .zip(&delta)
                {
                    for (w, a) in row.iter_mut().zip(input) {
                        *w -= lr * d * a;
                    }
                    *b -= lr * d;
                }
                if l > 0 {
                    std::mem::swap(&mut delta, &mut prev_delta);
                }
            }
        }
    }
    Ok(model)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MlpModel::parse(&text, &path.display().to_string())
}

pub fn write_model(path: impl AsRef<Path>, model: &MlpModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster_io::ClassInfo;

    fn two_class_scene() -> (BandStack, TrainingRegions) {
        // Column 0..50 near DN 20, 50..100 near DN 200.
        let pixels: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let jitter = (i % 7) as f64 - 3.0;
                vec![if i < 50 { 20.0 + jitter } else { 200.0 + jitter }]
            })
            .collect();
        let image = BandStack::from_pixels(1, 100, &pixels).unwrap();
        let regions = TrainingRegions::new(
            1,
            100,
            vec![ClassInfo::new(1, "dark", [0, 0, 0]), ClassInfo::new(2, "bright", [9, 9, 9])],
            vec![(0..50).map(|c| (0, c)).collect(), (50..100).map(|c| (0, c)).collect()],
        )
        .unwrap();
        (image, regions)
    }

    #[test]
    fn hand_forward_pass() {
        let hidden = DenseLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let output = DenseLayer::new(1, 2, vec![2.0, -2.0], vec![0.0, 0.0]).unwrap();
        let model = MlpModel::new(vec![hidden, output], 255.0, 0).unwrap();
        let out = model.forward(&[0.0]);
        assert!((out[0] - 0.731_058_578_6).abs() < 1e-9);
        assert!((out[1] - 0.268_941_421_4).abs() < 1e-9);
    }

    #[test]
    fn trains_separable_classes() {
        let (image, regions) = two_class_scene();
        let hyper = MlpHyper {
            hidden: 4,
            ..MlpHyper::defaults_for(1)
        };
        let model = train_mlp(&image, &regions, &hyper).unwrap();
        assert_eq!(model.layer_sizes(), vec![1, 4, 2]);
        let correct = regions
            .iter()
            .filter(|&(id, r, c)| {
                let out = model.forward(&image.pixel(r, c));
                let best = if out[1] > out[0] { 2 } else { 1 };
                best == id
            })
            .count();
        assert!(correct as f64 / 100.0 >= 0.95, "{correct}/100");
    }

    #[test]
    fn training_preconditions() {
        let (image, regions) = two_class_scene();
        let base = MlpHyper::defaults_for(1);
        for bad in [
            MlpHyper { epochs: 0, ..base.clone() },
            MlpHyper { hidden: 0, ..base.clone() },
            MlpHyper { learning_rate: 0.0, ..base.clone() },
        ] {
            assert!(matches!(train_mlp(&image, &regions, &bad), Err(Error::InvalidConfig(_))));
        }
        let single = TrainingRegions::new(1, 100, vec![ClassInfo::new(1, "a", [0; 3])], vec![vec![(0, 0)]])
            .unwrap();
        assert!(train_mlp(&image, &single, &base).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let model = MlpModel::random(&[3, 5, 2], 255.0, 9).unwrap();
        let text = model.to_text();
        let back = MlpModel::parse(&text, "t").unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn shape_checks() {
        let a = DenseLayer::new(2, 3, vec![0.0; 6], vec![0.0; 3]).unwrap();
        let b = DenseLayer::new(2, 1, vec![0.0; 2], vec![0.0]).unwrap();
        assert!(MlpModel::new(vec![a.clone(), b], 1.0, 0).is_err());
        assert!(MlpModel::new(vec![a], 1.0, 0).is_err());
        assert!(DenseLayer::new(2, 3, vec![0.0; 5], vec![0.0; 3]).is_err());
    }
}
