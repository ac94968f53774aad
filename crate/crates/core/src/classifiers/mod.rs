//! The six supervised decision rules and the whole-image driver.
//!
//! Every rule maps a pixel's B-vector to a label in `0..=K`, where 0 means
//! unclassified. When several classes score equally the lowest class id wins.

mod covariance;
mod mlp;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster_io::{BandStack, ClassInfo, ClassificationMap};
use crate::signatures::SignatureSet;

pub use covariance::{ABSOLUTE_RIDGE_FLOOR, DEFAULT_RELATIVE_RIDGE, MIN_RECIPROCAL_CONDITION};
pub use mlp::{read_model, train_mlp, write_model, DenseLayer, MlpHyper, MlpModel};

use covariance::PreparedCovariance;

/// Environment variable capping classification workers (0 = serial).
pub const THREADS_ENV: &str = "SPECMAP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Parallelepiped,
    MinimumDistance,
    MaximumLikelihood,
    SpectralAngle,
    NeuralNetwork,
    Mahalanobis,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Parallelepiped,
        Method::MinimumDistance,
        Method::MaximumLikelihood,
        Method::SpectralAngle,
        Method::NeuralNetwork,
        Method::Mahalanobis,
    ];

    /// Command-line identifier.
    pub fn name(self) -> &'static str {
        match self {
            Method::Parallelepiped => "box",
            Method::MinimumDistance => "mindist",
            Method::MaximumLikelihood => "maxlike",
            Method::SpectralAngle => "sam",
            Method::NeuralNetwork => "mlp",
            Method::Mahalanobis => "mahalanobis",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method `{s}`; expected one of: {}",
                    Method::valid_names()
                ))
            })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassifierConfig {
    /// Minimum distance: Euclidean DN distance. Mahalanobis: d².
    pub max_distance_threshold: Option<f64>,
    /// Spectral angle mapper, degrees in (0, 90].
    pub max_angle_threshold_deg: Option<f64>,
    /// Network output activation in [0, 1].
    pub min_activation_threshold: Option<f64>,
    /// Diagonal ridge for near-singular covariances; `None` means
    /// 1e−6 × mean diagonal.
    pub covariance_ridge: Option<f64>,
    /// Worker threads for [`classify_image`]; 0 runs serially.
    pub workers: usize,
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.max_distance_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "distance threshold must be non-negative, got {t}"
                )));
            }
        }
        if let Some(t) = self.max_angle_threshold_deg {
            if !(t > 0.0 && t <= 90.0) {
                return Err(Error::InvalidConfig(format!(
                    "angle threshold must lie in (0, 90] degrees, got {t}"
                )));
            }
        }
        if let Some(t) = self.min_activation_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!(
                    "activation threshold must lie in [0, 1], got {t}"
                )));
            }
        }
        if let Some(r) = self.covariance_ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "covariance ridge must be non-negative, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Reads the worker count from `SPECMAP_THREADS`.
    pub fn with_workers_from_env(mut self) -> Result<Self> {
        self.workers = workers_from_env_value(std::env::var(THREADS_ENV).ok().as_deref())?;
        Ok(self)
    }
}

/// Parses a `SPECMAP_THREADS` value; unset means serial.
pub fn workers_from_env_value(value: Option<&str>) -> Result<usize> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v.parse().map_err(|_| {
            Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))
        }),
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Parallelepiped {
        mins: Vec<Vec<f64>>,
        maxs: Vec<Vec<f64>>,
    },
    MinimumDistance {
        means: Vec<Vec<f64>>,
        threshold: Option<f64>,
    },
    Mahalanobis {
        means: Vec<Vec<f64>>,
        pooled: PreparedCovariance,
        threshold: Option<f64>,
    },
    MaximumLikelihood {
        means: Vec<Vec<f64>>,
        classes: Vec<PreparedCovariance>,
    },
    SpectralAngle {
        means: Vec<Vec<f64>>,
        norms: Vec<f64>,
        threshold_deg: Option<f64>,
    },
    NeuralNetwork {
        model: MlpModel,
        threshold: Option<f64>,
    },
}

/// A decision rule with all per-class preparation (inverses, norms) done
/// once up front. Classifying a pixel afterwards cannot fail except on a
/// band-count mismatch.
#[derive(Debug, Clone)]
pub struct Classifier {
    method: Method,
    bands: usize,
    legend: Vec<ClassInfo>,
    config: ClassifierConfig,
    rule: Rule,
}

/// Index of the smallest score, first one on ties; `None` when empty.
fn argmin(scores: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best
}

fn squared_distance(x: &[f64], m: &[f64]) -> f64 {
    x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Classifier {
    /// Prepares a signature-based rule. Use [`Classifier::from_model`] for
    /// the neural network.
    pub fn new(method: Method, sigs: &SignatureSet, config: &ClassifierConfig) -> Result<Self> {
        config.validate()?;
        if sigs.is_empty() {
            return Err(Error::Empty("signature set has no classes".into()));
        }
        let means = || sigs.signatures.iter().map(|s| s.mean.clone()).collect::<Vec<_>>();
        let rule = match method {
            Method::Parallelepiped => Rule::Parallelepiped {
                mins: sigs.signatures.iter().map(|s| s.band_min.clone()).collect(),
                maxs: sigs.signatures.iter().map(|s| s.band_max.clone()).collect(),
            },
            Method::MinimumDistance => Rule::MinimumDistance {
                means: means(),
                threshold: config.max_distance_threshold,
            },
            Method::Mahalanobis => {
                let pooled = sigs.pooled()?;
                Rule::Mahalanobis {
                    means: means(),
                    pooled: covariance::prepare(pooled, config.covariance_ridge, "pooled covariance")?,
                    threshold: config.max_distance_threshold,
                }
            }
            Method::MaximumLikelihood => {
                let classes = sigs
                    .signatures
                    .iter()
                    .map(|s| {
                        if s.is_degenerate() {
                            return Err(Error::Degenerate {
                                class_id: s.class_id,
                                reason: format!("{} pixel(s); covariance needs at least 2", s.count),
                            });
                        }
                        covariance::prepare(
                            &s.covariance,
                            config.covariance_ridge,
                            &format!("class {} covariance", s.class_id),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Rule::MaximumLikelihood {
                    means: means(),
                    classes,
                }
            }
            Method::SpectralAngle => {
                let norms = sigs
                    .signatures
                    .iter()
                    .map(|s| {
                        let n = s.mean.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if n > 0.0 {
                            Ok(n)
                        } else {
                            Err(Error::ZeroReference {
                                class_id: s.class_id,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Rule::SpectralAngle {
                    means: means(),
                    norms,
                    threshold_deg: config.max_angle_threshold_deg,
                }
            }
            Method::NeuralNetwork => {
                return Err(Error::InvalidConfig(
                    "the mlp method needs a trained model".into(),
                ))
            }
        };
        Ok(Classifier {
            method,
            bands: sigs.bands(),
            legend: sigs.legend(),
            config: config.clone(),
            rule,
        })
    }

    /// Prepares the neural-network rule; `legend` names the K outputs.
    pub fn from_model(model: &MlpModel, legend: Vec<ClassInfo>, config: &ClassifierConfig) -> Result<Self> {
        config.validate()?;
        if legend.len() != model.outputs() {
            return Err(Error::ClassMismatch(format!(
                "model has {} outputs but legend has {} classes",
                model.outputs(),
                legend.len()
            )));
        }
        Ok(Classifier {
            method: Method::NeuralNetwork,
            bands: model.inputs(),
            legend,
            config: config.clone(),
            rule: Rule::NeuralNetwork {
                model: model.clone(),
                threshold: config.min_activation_threshold,
            },
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn legend(&self) -> &[ClassInfo] {
        &self.legend
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    /// Diagonal ridge added to each covariance this rule inverted (0 when
    /// none was needed). Empty for rules without covariances.
    pub fn applied_ridges(&self) -> Vec<f64> {
        match &self.rule {
            Rule::Mahalanobis { pooled, .. } => vec![pooled.ridge],
            Rule::MaximumLikelihood { classes, .. } => classes.iter().map(|c| c.ridge).collect(),
            _ => Vec::new(),
        }
    }

    pub fn classify(&self, x: &[f64]) -> Result<u32> {
        if x.len() != self.bands {
            return Err(Error::DimensionMismatch {
                expected: self.bands,
                actual: x.len(),
            });
        }
        Ok(self.label(x))
    }

    fn label(&self, x: &[f64]) -> u32 {
        let to_label = |i: usize| i as u32 + 1;
        match &self.rule {
            Rule::Parallelepiped { mins, maxs } => mins
                .iter()
                .zip(maxs)
                .position(|(lo, hi)| {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(v, (l, h))| l <= v && v <= h)
                })
                .map_or(0, to_label),
            Rule::MinimumDistance { means, threshold } => {
                let (i, d2) = argmin(means.iter().map(|m| squared_distance(x, m))).expect("classes");
                match threshold {
                    Some(t) if d2.sqrt() > *t => 0,
                    _ => to_label(i),
                }
            }
            Rule::Mahalanobis {
                means,
                pooled,
                threshold,
            } => {
                let mut diff = vec![0.0; x.len()];
                let (i, d2) = argmin(means.iter().map(|m| {
                    for ((d, a), b) in diff.iter_mut().zip(x).zip(m) {
                        *d = a - b;
                    }
                    pooled.quad_form(&diff)
                }))
                .expect("classes");
                match threshold {
                    Some(t) if d2 > *t => 0,
                    _ => to_label(i),
                }
            }
            Rule::MaximumLikelihood { means, classes } => {
                let mut diff = vec![0.0; x.len()];
                // argmax g = −ln|Σ| − d²  ⇔  argmin ln|Σ| + d²
                let (i, _) = argmin(means.iter().zip(classes).map(|(m, c)| {
                    for ((d, a), b) in diff.iter_mut().zip(x).zip(m) {
                        *d = a - b;
                    }
                    c.log_det + c.quad_form(&diff)
                }))
                .expect("classes");
                to_label(i)
            }
            Rule::SpectralAngle {
                means,
                norms,
                threshold_deg,
            } => {
                let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm_x == 0.0 {
                    return 0;
                }
                let (i, angle) = argmin(means.iter().zip(norms).map(|(m, nm)| {
                    let dot: f64 = x.iter().zip(m).map(|(a, b)| a * b).sum();
                    (dot / (norm_x * nm)).clamp(-1.0, 1.0).acos()
                }))
                .expect("classes");
                match threshold_deg {
                    Some(t) if angle.to_degrees() > *t => 0,
                    _ => to_label(i),
                }
            }
            Rule::NeuralNetwork { model, threshold } => {
                let out = model.forward(x);
                let (i, neg) = argmin(out.iter().map(|v| -v)).expect("outputs");
                match threshold {
                    Some(t) if -neg < *t => 0,
                    _ => to_label(i),
                }
            }
        }
    }
}

pub fn classify_parallelepiped(x: &[f64], sigs: &SignatureSet, cfg: &ClassifierConfig) -> Result<u32> {
    Classifier::new(Method::Parallelepiped, sigs, cfg)?.classify(x)
}

pub fn classify_mindist(x: &[f64], sigs: &SignatureSet, cfg: &ClassifierConfig) -> Result<u32> {
    Classifier::new(Method::MinimumDistance, sigs, cfg)?.classify(x)
}

pub fn classify_mahalanobis(x: &[f64], sigs: &SignatureSet, cfg: &ClassifierConfig) -> Result<u32> {
    Classifier::new(Method::Mahalanobis, sigs, cfg)?.classify(x)
}

pub fn classify_maxlike(x: &[f64], sigs: &SignatureSet, cfg: &ClassifierConfig) -> Result<u32> {
    Classifier::new(Method::MaximumLikelihood, sigs, cfg)?.classify(x)
}

pub fn classify_sam(x: &[f64], sigs: &SignatureSet, cfg: &ClassifierConfig) -> Result<u32> {
    Classifier::new(Method::SpectralAngle, sigs, cfg)?.classify(x)
}

pub fn classify_mlp(x: &[f64], model: &MlpModel, cfg: &ClassifierConfig) -> Result<u32> {
    let legend = (1..=model.outputs() as u32)
        .map(|id| ClassInfo::new(id, format!("class{id}"), [0; 3]))
        .collect();
    Classifier::from_model(model, legend, cfg)?.classify(x)
}

/// Labels every pixel of `image`. Rows are split across
/// `classifier.config().workers` threads when non-zero; the result is
/// identical to the serial loop.
pub fn classify_image(image: &BandStack, classifier: &Classifier) -> Result<ClassificationMap> {
    if image.bands() != classifier.bands {
        return Err(Error::DimensionMismatch {
            expected: classifier.bands,
            actual: image.bands(),
        });
    }
    let (rows, cols) = (image.rows(), image.cols());
    let mut labels = vec![0u32; rows * cols];

    let label_row = |(r, out): (usize, &mut [u32])| {
        let mut px = vec![0.0; image.bands()];
        for (c, slot) in out.iter_mut().enumerate() {
            image.pixel_into(r, c, &mut px);
            *slot = classifier.label(&px);
        }
    };

    match classifier.config.workers {
        0 => labels.chunks_mut(cols).enumerate().for_each(label_row),
        n => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| labels.par_chunks_mut(cols).enumerate().for_each(label_row));
        }
    }
    ClassificationMap::new(rows, cols, labels, classifier.legend.clone())
}
