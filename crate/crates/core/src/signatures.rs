//! Per-class spectral statistics ("signatures") estimated from training
//! regions, plus the pooled covariance shared by the Mahalanobis rule.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::raster_io::{BandStack, ClassInfo, Rgb, TrainingRegions};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSignature {
    pub class_id: u32,
    pub name: String,
    pub color: Rgb,
    pub count: usize,
    pub mean: Vec<f64>,
    /// Sample covariance (n − 1 denominator). All zeros when `count < 2`.
    pub covariance: DMatrix<f64>,
    pub band_min: Vec<f64>,
    pub band_max: Vec<f64>,
}

impl ClassSignature {
    pub fn bands(&self) -> usize {
        self.mean.len()
    }

    /// A single-pixel class has no covariance estimate.
    pub fn is_degenerate(&self) -> bool {
        self.count < 2
    }

    pub fn with_label(mut self, name: impl Into<String>, color: Rgb) -> Self {
        self.name = name.into();
        self.color = color;
        self
    }

    pub fn class_info(&self) -> ClassInfo {
        ClassInfo::new(self.class_id, self.name.clone(), self.color)
    }
}

pub fn compute_signature<P: AsRef<[f64]>>(pixels: &[P], class_id: u32) -> Result<ClassSignature> {
    let first = pixels
        .first()
        .ok_or_else(|| Error::Empty(format!("class {class_id} has no pixels")))?;
    let bands = first.as_ref().len();
    if bands == 0 {
        return Err(Error::Empty(format!("class {class_id} pixels have no bands")));
    }

    let n = pixels.len();
    let mut sum = vec![0.0; bands];
    let mut band_min = vec![f64::INFINITY; bands];
    let mut band_max = vec![f64::NEG_INFINITY; bands];
    for px in pixels {
        let px = px.as_ref();
        if px.len() != bands {
            return Err(Error::DimensionMismatch {
                expected: bands,
                actual: px.len(),
            });
        }
        for (b, &v) in px.iter().enumerate() {
            sum[b] += v;
            band_min[b] = band_min[b].min(v);
            band_max[b] = band_max[b].max(v);
        }
    }
    // Rounding in sum/n can step just past the extremes for constant bands.
    let mean: Vec<f64> = sum
        .iter()
        .enumerate()
        .map(|(b, s)| (s / n as f64).clamp(band_min[b], band_max[b]))
        .collect();

    let mut covariance = DMatrix::zeros(bands, bands);
    if n >= 2 {
        let mut centered = vec![0.0; bands];
        for px in pixels {
            for (b, v) in px.as_ref().iter().enumerate() {
                centered[b] = v - mean[b];
            }
            for i in 0..bands {
                for j in i..bands {
                    covariance[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..bands {
            for j in i..bands {
                let v = covariance[(i, j)] / denom;
                covariance[(i, j)] = v;
                covariance[(j, i)] = v;
            }
        }
    }

    Ok(ClassSignature {
        class_id,
        name: format!("class{class_id}"),
        color: default_color(class_id),
        count: n,
        mean,
        covariance,
        band_min,
        band_max,
    })
}

/// Weighted average of class covariances with weights n_i − 1.
pub fn pool_covariance(signatures: &[ClassSignature]) -> Result<DMatrix<f64>> {
    let first = signatures
        .first()
        .ok_or_else(|| Error::Empty("no signatures to pool".into()))?;
    let bands = first.bands();
    let mut acc = DMatrix::zeros(bands, bands);
    let mut weight = 0.0;
    for sig in signatures {
        if sig.bands() != bands {
            return Err(Error::DimensionMismatch {
                expected: bands,
                actual: sig.bands(),
            });
        }
        if sig.is_degenerate() {
            return Err(Error::Degenerate {
                class_id: sig.class_id,
                reason: format!("{} pixel(s); covariance needs at least 2", sig.count),
            });
        }
        let w = (sig.count - 1) as f64;
        acc += &sig.covariance * w;
        weight += w;
    }
    if weight == 0.0 {
        return Err(Error::Empty("zero total pooling weight".into()));
    }
    if signatures.len() == 1 {
        return Ok(first.covariance.clone());
    }
    acc /= weight;
    // Symmetric by construction up to summation order; force it exactly.
    for i in 0..bands {
        for j in (i + 1)..bands {
            let v = 0.5 * (acc[(i, j)] + acc[(j, i)]);
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    pub signatures: Vec<ClassSignature>,
    /// `None` when some class is too small to pool.
    pub pooled_covariance: Option<DMatrix<f64>>,
}

impl SignatureSet {
    /// Builds a set from class signatures, pooling when possible.
    pub fn new(signatures: Vec<ClassSignature>) -> Result<Self> {
        let bands = signatures
            .first()
            .ok_or_else(|| Error::Empty("signature set has no classes".into()))?
            .bands();
        for (i, sig) in signatures.iter().enumerate() {
            if sig.class_id as usize != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "signature ids must run 1..K in order; found {} at position {}",
                    sig.class_id,
                    i + 1
                )));
            }
            if sig.bands() != bands {
                return Err(Error::DimensionMismatch {
                    expected: bands,
                    actual: sig.bands(),
                });
            }
        }
        let pooled_covariance = pool_covariance(&signatures).ok();
        Ok(SignatureSet {
            signatures,
            pooled_covariance,
        })
    }

    pub fn bands(&self) -> usize {
        self.signatures[0].bands()
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn legend(&self) -> Vec<ClassInfo> {
        self.signatures.iter().map(ClassSignature::class_info).collect()
    }

    /// The pooled covariance, or the reason it could not be formed.
    pub fn pooled(&self) -> Result<&DMatrix<f64>> {
        match &self.pooled_covariance {
            Some(m) => Ok(m),
            None => Err(pool_covariance(&self.signatures)
                .err()
                .unwrap_or_else(|| Error::InvalidConfig("pooled covariance not set".into()))),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |v: &mut dyn Iterator<Item = f64>| {
            v.map(format_sig10).collect::<Vec<_>>().join(" ")
        };
        for sig in &self.signatures {
            let [r, g, b] = sig.color;
            out.push_str(&format!("class {} {} {}\n", sig.class_id, sig.name, sig.count));
            out.push_str(&format!("color: {r} {g} {b}\n"));
            out.push_str(&format!("mean: {}\n", row(&mut sig.mean.iter().copied())));
            out.push_str(&format!("min: {}\n", row(&mut sig.band_min.iter().copied())));
            out.push_str(&format!("max: {}\n", row(&mut sig.band_max.iter().copied())));
            out.push_str("cov:\n");
            for r in sig.covariance.row_iter() {
                out.push_str(&row(&mut r.iter().copied()));
                out.push('\n');
            }
        }
        match &self.pooled_covariance {
            Some(pooled) => {
                out.push_str("pooled_cov:\n");
                for r in pooled.row_iter() {
                    out.push_str(&row(&mut r.iter().copied()));
                    out.push('\n');
                }
            }
            None => out.push_str("pooled_cov: none\n"),
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut cursor = 0;
        let mut signatures = Vec::new();
        let mut pooled = None;

        let values = |lineno: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(source, lineno, format!("bad number `{t}`")))
                })
                .collect()
        };

        while cursor < lines.len() {
            let (lineno, line) = lines[cursor];
            cursor += 1;
            if let Some(rest) = line.strip_prefix("pooled_cov:") {
                if rest.trim() == "none" {
                    break;
                }
                let b = signatures
                    .first()
                    .map(ClassSignature::bands)
                    .ok_or_else(|| Error::parse(source, lineno, "pooled_cov before any class"))?;
                pooled = Some(read_matrix(&lines, &mut cursor, b, source, &values)?);
                break;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 || f[0] != "class" {
                return Err(Error::parse(source, lineno, "expected `class <id> <name> <n>`"));
            }
            let id: u32 = f[1]
                .parse()
                .map_err(|_| Error::parse(source, lineno, "bad class id"))?;
            let count: usize = f[3]
                .parse()
                .map_err(|_| Error::parse(source, lineno, "bad pixel count"))?;

            let mut color = default_color(id);
            let take = |key: &str, cursor: &mut usize| -> Result<Option<(usize, &str)>> {
                match lines.get(*cursor) {
                    Some(&(n, l)) if l.starts_with(key) => {
                        *cursor += 1;
                        Ok(Some((n, l[key.len()..].trim())))
                    }
                    _ => Ok(None),
                }
            };
            if let Some((n, rest)) = take("color:", &mut cursor)? {
                let parts: Vec<u8> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse(source, n, "bad color")))
                    .collect::<Result<_>>()?;
                color = parts
                    .try_into()
                    .map_err(|_| Error::parse(source, n, "color needs 3 components"))?;
            }
            let field = |key: &str, cursor: &mut usize| -> Result<Vec<f64>> {
                let (n, rest) = take(key, cursor)?
                    .ok_or_else(|| Error::parse(source, lineno, format!("class {id}: missing `{key}`")))?;
                values(n, rest)
            };
            let mean = field("mean:", &mut cursor)?;
            let band_min = field("min:", &mut cursor)?;
            let band_max = field("max:", &mut cursor)?;
            let cov_header = field("cov:", &mut cursor)?;
            if !cov_header.is_empty() {
                return Err(Error::parse(source, lineno, "`cov:` takes no inline values"));
            }
            let b = mean.len();
            if band_min.len() != b || band_max.len() != b {
                return Err(Error::parse(source, lineno, "ragged mean/min/max vectors"));
            }
            let covariance = read_matrix(&lines, &mut cursor, b, source, &values)?;
            signatures.push(ClassSignature {
                class_id: id,
                name: f[2].to_string(),
                color,
                count,
                mean,
                covariance,
                band_min,
                band_max,
            });
        }

        let mut set = SignatureSet::new(signatures)?;
        if let Some(p) = pooled {
            set.pooled_covariance = Some(p);
        }
        Ok(set)
    }
}

fn read_matrix(
    lines: &[(usize, &str)],
    cursor: &mut usize,
    b: usize,
    source: &str,
    values: &dyn Fn(usize, &str) -> Result<Vec<f64>>,
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(b, b);
    for i in 0..b {
        let &(n, l) = lines
            .get(*cursor)
            .ok_or_else(|| Error::parse(source, 0, "truncated matrix"))?;
        *cursor += 1;
        let row = values(n, l)?;
        if row.len() != b {
            return Err(Error::parse(source, n, format!("matrix row needs {b} values")));
        }
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Extracts one signature per class, in class order, and pools them.
pub fn extract_signatures(image: &BandStack, regions: &TrainingRegions) -> Result<SignatureSet> {
    if (regions.rows(), regions.cols()) != (image.rows(), image.cols()) {
        return Err(Error::InvalidConfig(format!(
            "regions cover {}x{} but image is {}x{}",
            regions.rows(),
            regions.cols(),
            image.rows(),
            image.cols()
        )));
    }
    let signatures = regions
        .classes()
        .iter()
        .map(|class| {
            let pixels: Vec<Vec<f64>> = regions
                .members(class.id)
                .iter()
                .map(|&(r, c)| image.pixel(r, c))
                .collect();
            compute_signature(&pixels, class.id)
                .map(|s| s.with_label(class.name.clone(), class.color))
        })
        .collect::<Result<Vec<_>>>()?;
    SignatureSet::new(signatures)
}

pub fn read_signatures(path: impl AsRef<Path>) -> Result<SignatureSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SignatureSet::parse(&text, &path.display().to_string())
}

pub fn write_signatures(path: impl AsRef<Path>, set: &SignatureSet) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, set.to_text()).map_err(|e| Error::io(path, e))
}

/// Shortest decimal that reproduces `v` rounded to 10 significant digits.
pub fn format_sig10(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let rounded: f64 = format!("{v:.9e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Red, green, blue, then a fixed cycle of distinct colors.
pub fn default_color(class_id: u32) -> Rgb {
    const PALETTE: [Rgb; 8] = [
        [255, 0, 0],
        [0, 255, 0],
        [0, 0, 255],
        [255, 255, 0],
        [0, 255, 255],
        [255, 0, 255],
        [255, 128, 0],
        [128, 0, 255],
    ];
    PALETTE[(class_id.max(1) as usize - 1) % PALETTE.len()]
}
