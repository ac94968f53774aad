//! Seeded synthetic scenes with known ground truth.
//!
//! Each class occupies a rectangle; its pixels draw every band
//! independently from Normal(mean_b, stddev_b), rounded to the nearest DN
//! and clamped to [0, 255]. Pixels outside every rectangle are 0 and carry
//! no truth label. Draws come from a ChaCha8 stream seeded by the scene
//! seed, visiting pixels row-major and bands in order.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::raster_io::{
    with_suffix, write_bsq, write_layout, write_roi, BandStack, ClassInfo, RasterLayout,
    TrainingRegions,
};

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl Rect {
    pub fn new(row0: usize, col0: usize, row1: usize, col1: usize) -> Self {
        Rect {
            row0: row0.min(row1),
            col0: col0.min(col1),
            row1: row0.max(row1),
            col1: col0.max(col1),
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..=self.row1).contains(&row) && (self.col0..=self.col1).contains(&col)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.row0 <= other.row1
            && other.row0 <= self.row1
            && self.col0 <= other.col1
            && other.col0 <= self.col1
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row0..=self.row1).flat_map(move |r| (self.col0..=self.col1).map(move |c| (r, c)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneClass {
    pub info: ClassInfo,
    pub region: Rect,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub seed: u64,
    pub classes: Vec<SceneClass>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.bands == 0 {
            return Err(Error::InvalidConfig("scene dimensions must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Empty("scene has no classes".into()));
        }
        for (i, class) in self.classes.iter().enumerate() {
            let id = class.info.id;
            if id as usize != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "class ids must run 1..K in order; found {id} at position {}",
                    i + 1
                )));
            }
            for v in [&class.mean, &class.stddev] {
                if v.len() != self.bands {
                    return Err(Error::DimensionMismatch {
                        expected: self.bands,
                        actual: v.len(),
                    });
                }
            }
            if class.stddev.iter().any(|s| s.is_nan() || *s < 0.0) {
                return Err(Error::InvalidConfig(format!("class {id}: negative stddev")));
            }
            let r = class.region;
            if r.row1 >= self.rows || r.col1 >= self.cols {
                return Err(Error::OutOfBounds {
                    row: r.row1,
                    col: r.col1,
                    rows: self.rows,
                    cols: self.cols,
                });
            }
            for other in &self.classes[..i] {
                if other.region.intersects(&r) {
                    return Err(Error::Overlap(format!(
                        "class {} and class {id} rectangles intersect",
                        other.info.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground truth: each class's full rectangle, row-major.
    pub fn truth(&self) -> Result<TrainingRegions> {
        TrainingRegions::new(
            self.rows,
            self.cols,
            self.classes.iter().map(|c| c.info.clone()).collect(),
            self.classes.iter().map(|c| c.region.pixels().collect()).collect(),
        )
    }

    pub fn layout(&self) -> RasterLayout {
        RasterLayout::plain(self.bands, self.rows, self.cols)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize, u64)> = None;
        let mut classes = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| Error::parse(source, lineno, msg);
            match f[0] {
                "scene" => {
                    if f.len() != 5 {
                        return Err(err("expected `scene <rows> <cols> <bands> <seed>`"));
                    }
                    let n = |s: &str| s.parse::<usize>().map_err(|_| err("bad scene dimension"));
                    let seed = f[4].parse::<u64>().map_err(|_| err("bad seed"))?;
                    header = Some((n(f[1])?, n(f[2])?, n(f[3])?, seed));
                }
                "class" => {
                    let (_, _, bands, _) =
                        header.ok_or_else(|| err("`class` before the `scene` line"))?;
                    let expected = 13 + 2 * bands;
                    if f.len() != expected || f[6] != "rect" || f[11] != "mean" || f[12 + bands] != "stddev" {
                        return Err(err(
                            "expected `class <id> <name> <r g b> rect <r0 c0 r1 c1> mean <v..> stddev <v..>`",
                        ));
                    }
                    let id: u32 = f[1].parse().map_err(|_| err("bad class id"))?;
                    let mut color = [0u8; 3];
                    for (slot, s) in color.iter_mut().zip(&f[3..6]) {
                        *slot = s.parse().map_err(|_| err("bad color component"))?;
                    }
                    let rc: Vec<usize> = f[7..11]
                        .iter()
                        .map(|s| s.parse().map_err(|_| err("bad rectangle coordinate")))
                        .collect::<Result<_>>()?;
                    let floats = |s: &[&str]| -> Result<Vec<f64>> {
                        s.iter()
                            .map(|t| t.parse::<f64>().map_err(|_| err("bad number")))
                            .collect()
                    };
                    classes.push(SceneClass {
                        info: ClassInfo::new(id, f[2], color),
                        region: Rect::new(rc[0], rc[1], rc[2], rc[3]),
                        mean: floats(&f[12..12 + bands])?,
                        stddev: floats(&f[13 + bands..])?,
                    });
                }
                other => return Err(err(&format!("unknown directive `{other}`"))),
            }
        }
        let (rows, cols, bands, seed) =
            header.ok_or_else(|| Error::parse(source, 0, "missing `scene` line"))?;
        let spec = SceneSpec {
            rows,
            cols,
            bands,
            seed,
            classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("scene {} {} {} {}\n", self.rows, self.cols, self.bands, self.seed);
        for c in &self.classes {
            let [r, g, b] = c.info.color;
            let rect = c.region;
            out.push_str(&format!(
                "class {} {} {r} {g} {b} rect {} {} {} {} mean {} stddev {}\n",
                c.info.id,
                c.info.name,
                rect.row0,
                rect.col0,
                rect.row1,
                rect.col1,
                join(&c.mean),
                join(&c.stddev)
            ));
        }
        out
    }
}

/// A generated image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: BandStack,
    pub truth: TrainingRegions,
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut owner = vec![None; spec.rows * spec.cols];
    for (k, class) in spec.classes.iter().enumerate() {
        for (r, c) in class.region.pixels() {
            owner[r * spec.cols + c] = Some(k);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut image = BandStack::zeros(spec.bands, spec.rows, spec.cols)?;
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let Some(k) = owner[r * spec.cols + c] else {
                continue;
            };
            let class = &spec.classes[k];
            for b in 0..spec.bands {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = (class.mean[b] + class.stddev[b] * z).round().clamp(0.0, 255.0);
                image.set(b, r, c, v);
            }
        }
    }
    Ok(Scene {
        image,
        truth: spec.truth()?,
    })
}

pub fn read_scene_spec(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneSpec::parse(&text, &path.display().to_string())
}

/// Writes `<prefix>.bsq`, `<prefix>.hdr` (seed in a comment) and
/// `<prefix>.roi` (the truth regions).
pub fn write_scene(scene: &Scene, spec: &SceneSpec, prefix: impl AsRef<Path>) -> Result<()> {
    let prefix = prefix.as_ref();
    let layout = spec.layout();
    write_bsq(with_suffix(prefix, ".bsq"), &scene.image, &layout)?;
    write_layout(
        with_suffix(prefix, ".hdr"),
        &layout,
        &[format!("synthetic scene, ChaCha8 seed {}", spec.seed)],
    )?;
    write_roi(with_suffix(prefix, ".roi"), &scene.truth)
}
