//! Train every method on one region set, classify, and assess each map
//! against a disjoint truth set.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::assessment::{build_confusion, format_report, kappa, overall_accuracy, ConfusionMatrix};
use crate::classifiers::{classify_image, train_mlp, Classifier, ClassifierConfig, Method, MlpHyper};
use crate::error::{Error, Result};
use crate::raster_io::{BandStack, ClassificationMap, TrainingRegions};
use crate::signatures::extract_signatures;

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub classifier: ClassifierConfig,
    pub mlp: MlpHyper,
}

impl CompareConfig {
    pub fn defaults_for(bands: usize) -> Self {
        CompareConfig {
            classifier: ClassifierConfig::default(),
            mlp: MlpHyper::defaults_for(bands),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodScore {
    pub map: ClassificationMap,
    pub confusion: ConfusionMatrix,
    pub overall_accuracy: f64,
    /// `None` when kappa is undefined for this matrix.
    pub kappa: Option<f64>,
    pub report: String,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    /// A method can fail up front (e.g. singular covariance) without
    /// aborting the comparison.
    pub result: std::result::Result<MethodScore, String>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// In [`Method::ALL`] order.
    pub outcomes: Vec<MethodOutcome>,
}

impl Comparison {
    pub fn score(&self, method: Method) -> Option<&MethodScore> {
        self.outcomes
            .iter()
            .find(|o| o.method == method)
            .and_then(|o| o.result.as_ref().ok())
    }

    /// Successful methods ordered by overall accuracy, then kappa, then name.
    pub fn ranking(&self) -> Vec<(Method, &MethodScore)> {
        let mut ranked: Vec<(Method, &MethodScore)> = self
            .outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|s| (o.method, s)))
            .collect();
        let kappa_key = |s: &MethodScore| s.kappa.unwrap_or(f64::NEG_INFINITY);
        ranked.sort_by(|(ma, a), (mb, b)| {
            b.overall_accuracy
                .partial_cmp(&a.overall_accuracy)
                .unwrap_or(Ordering::Equal)
                .then(kappa_key(b).partial_cmp(&kappa_key(a)).unwrap_or(Ordering::Equal))
                .then_with(|| ma.name().cmp(mb.name()))
        });
        ranked
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            writeln!(out, "== Method: {} ==", o.method).unwrap();
            match &o.result {
                Ok(score) => out.push_str(&score.report),
                Err(msg) => writeln!(out, "failed: {msg}").unwrap(),
            }
            out.push('\n');
        }
        let ranking: Vec<String> = self
            .ranking()
            .iter()
            .map(|(m, s)| {
                let k = s.kappa.map_or("undefined".to_string(), |k| format!("{k:.4}"));
                format!("{m} (OA {:.4}%, kappa {k})", 100.0 * s.overall_accuracy)
            })
            .collect();
        writeln!(out, "Ranking: {}", ranking.join(" > ")).unwrap();
        out
    }
}

fn score_map(map: ClassificationMap, truth: &TrainingRegions) -> Result<MethodScore> {
    let confusion = build_confusion(&map, truth)?;
    let names: Vec<String> = truth.classes().iter().map(|c| c.name.clone()).collect();
    Ok(MethodScore {
        overall_accuracy: overall_accuracy(&confusion)?,
        kappa: kappa(&confusion).ok(),
        report: format_report(&confusion, &names)?,
        confusion,
        map,
    })
}

/// Runs all six methods. Train and truth regions must not share pixels.
pub fn run_compare(
    image: &BandStack,
    train: &TrainingRegions,
    truth: &TrainingRegions,
    cfg: &CompareConfig,
) -> Result<Comparison> {
    train.check_disjoint(truth)?;
    if train.classes().len() != truth.classes().len() {
        return Err(Error::ClassMismatch(format!(
            "training has {} classes, truth has {}",
            train.classes().len(),
            truth.classes().len()
        )));
    }
    let sigs = extract_signatures(image, train)?;

    let outcomes = Method::ALL
        .into_iter()
        .map(|method| {
            let run = || -> Result<MethodScore> {
                let classifier = match method {
                    Method::NeuralNetwork => {
                        let model = train_mlp(image, train, &cfg.mlp)?;
                        Classifier::from_model(&model, sigs.legend(), &cfg.classifier)?
                    }
                    m => Classifier::new(m, &sigs, &cfg.classifier)?,
                };
                score_map(classify_image(image, &classifier)?, truth)
            };
            MethodOutcome {
                method,
                result: run().map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(Comparison { outcomes })
}
