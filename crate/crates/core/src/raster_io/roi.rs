//! Training-region (ROI) files.
//!
//! ```text
//! class 1 water 0 0 255
//! rect 0 0 9 9
//! pixel 12 4
//! class 2 crop 0 255 0
//! rect 20 20 29 39
//! ```

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub id: u32,
    pub name: String,
    pub color: Rgb,
}

impl ClassInfo {
    pub fn new(id: u32, name: impl Into<String>, color: Rgb) -> Self {
        ClassInfo {
            id,
            name: name.into(),
            color,
        }
    }
}

/// Labeled pixel sets over an R×C raster. Classes are numbered 1..K in
/// order; each pixel belongs to at most one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingRegions {
    rows: usize,
    cols: usize,
    classes: Vec<ClassInfo>,
    members: Vec<Vec<(usize, usize)>>,
}

impl TrainingRegions {
    /// Validates and builds a region set. Duplicate coordinates within a
    /// class are dropped, keeping first occurrence order.
    pub fn new(
        rows: usize,
        cols: usize,
        classes: Vec<ClassInfo>,
        members: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if classes.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: classes.len(),
                actual: members.len(),
            });
        }
        for (i, class) in classes.iter().enumerate() {
            if class.id as usize != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "class ids must run 1..K in order; found {} at position {}",
                    class.id,
                    i + 1
                )));
            }
            validate_name(&class.name)?;
        }

        let mut owner: HashMap<(usize, usize), u32> = HashMap::new();
        let mut deduped = Vec::with_capacity(members.len());
        for (class, list) in classes.iter().zip(members) {
            let mut kept = Vec::with_capacity(list.len());
            for (row, col) in list {
                if row >= rows || col >= cols {
                    return Err(Error::OutOfBounds {
                        row,
                        col,
                        rows,
                        cols,
                    });
                }
                match owner.get(&(row, col)) {
                    Some(&first) if first == class.id => {}
                    Some(&first) => {
                        return Err(Error::DuplicateClaim {
                            row,
                            col,
                            first,
                            second: class.id,
                        })
                    }
                    None => {
                        owner.insert((row, col), class.id);
                        kept.push((row, col));
                    }
                }
            }
            if kept.is_empty() {
                return Err(Error::Empty(format!("class {} has no pixels", class.id)));
            }
            deduped.push(kept);
        }

        Ok(TrainingRegions {
            rows,
            cols,
            classes,
            members: deduped,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Members of class `id` (1-based).
    pub fn members(&self, id: u32) -> &[(usize, usize)] {
        &self.members[id as usize - 1]
    }

    pub fn total_pixels(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Iterates `(class_id, row, col)` in class order then region order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, usize, usize)> + '_ {
        self.classes
            .iter()
            .zip(&self.members)
            .flat_map(|(c, m)| m.iter().map(move |&(r, col)| (c.id, r, col)))
    }

    /// Dense R×C label grid, 0 where no class claims the pixel.
    pub fn label_grid(&self) -> Vec<u32> {
        let mut grid = vec![0; self.rows * self.cols];
        for (id, r, c) in self.iter() {
            grid[r * self.cols + c] = id;
        }
        grid
    }

    pub fn parse(text: &str, source: &str, rows: usize, cols: usize) -> Result<Self> {
        let mut classes: Vec<ClassInfo> = Vec::new();
        let mut members: Vec<Vec<(usize, usize)>> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: String| Error::parse(source, lineno, msg);
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("expected a non-negative integer, got `{s}`")))
            };

            match fields[0] {
                "class" => {
                    if fields.len() != 6 {
                        return Err(err("expected `class <id> <name> <r> <g> <b>`".into()));
                    }
                    let id = num(fields[1])?;
                    if id != classes.len() + 1 {
                        return Err(err(format!(
                            "class id {id} out of sequence (expected {})",
                            classes.len() + 1
                        )));
                    }
                    let mut color = [0u8; 3];
                    for (slot, s) in color.iter_mut().zip(&fields[3..6]) {
                        *slot = s
                            .parse()
                            .map_err(|_| err(format!("color component `{s}` not in 0..=255")))?;
                    }
                    classes.push(ClassInfo::new(id as u32, fields[2], color));
                    members.push(Vec::new());
                }
                "pixel" | "rect" => {
                    let Some(list) = members.last_mut() else {
                        return Err(err(format!("`{}` before any `class` line", fields[0])));
                    };
                    let coords = fields[1..]
                        .iter()
                        .map(|s| num(s))
                        .collect::<Result<Vec<_>>>()?;
                    match (fields[0], coords.as_slice()) {
                        ("pixel", &[r, c]) => {
                            check_bounds(r, c, rows, cols)?;
                            list.push((r, c));
                        }
                        ("rect", &[r0, c0, r1, c1]) => {
                            check_bounds(r0, c0, rows, cols)?;
                            check_bounds(r1, c1, rows, cols)?;
                            for r in r0.min(r1)..=r0.max(r1) {
                                for c in c0.min(c1)..=c0.max(c1) {
                                    list.push((r, c));
                                }
                            }
                        }
                        ("pixel", _) => return Err(err("expected `pixel <row> <col>`".into())),
                        _ => {
                            return Err(err("expected `rect <row0> <col0> <row1> <col1>`".into()))
                        }
                    }
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }

        if classes.is_empty() {
            return Err(Error::Empty(format!("{source}: no classes defined")));
        }
        Self::new(rows, cols, classes, members)
    }

    /// Serializes as explicit `pixel` lines; parsing the result yields an
    /// equal region set.
    pub fn to_roi_text(&self) -> String {
        let mut out = String::new();
        for (class, list) in self.classes.iter().zip(&self.members) {
            let [r, g, b] = class.color;
            out.push_str(&format!("class {} {} {r} {g} {b}\n", class.id, class.name));
            for (row, col) in list {
                out.push_str(&format!("pixel {row} {col}\n"));
            }
        }
        out
    }

    /// Randomly partitions each class into a training part holding
    /// `round(fraction·n)` pixels (at least one, at most n−1) and a test part
    /// holding the rest.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(TrainingRegions, TrainingRegions)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::with_capacity(self.members.len());
        let mut test = Vec::with_capacity(self.members.len());
        for (class, list) in self.classes.iter().zip(&self.members) {
            if list.len() < 2 {
                return Err(Error::Degenerate {
                    class_id: class.id,
                    reason: "needs at least 2 pixels to split".into(),
                });
            }
            let mut shuffled = list.clone();
            shuffled.shuffle(&mut rng);
            let n_train = ((fraction * list.len() as f64).round() as usize).clamp(1, list.len() - 1);
            let rest = shuffled.split_off(n_train);
            train.push(shuffled);
            test.push(rest);
        }
        Ok((
            Self::new(self.rows, self.cols, self.classes.clone(), train)?,
            Self::new(self.rows, self.cols, self.classes.clone(), test)?,
        ))
    }

    /// Errors if any pixel appears in both region sets.
    pub fn check_disjoint(&self, other: &TrainingRegions) -> Result<()> {
        let grid = self.label_grid();
        for (_, r, c) in other.iter() {
            if r < self.rows && c < self.cols && grid[r * self.cols + c] != 0 {
                return Err(Error::Overlap(format!(
                    "pixel ({r}, {c}) is in both training and truth regions"
                )));
            }
        }
        Ok(())
    }
}

fn check_bounds(row: usize, col: usize, rows: usize, cols: usize) -> Result<()> {
    if row >= rows || col >= cols {
        return Err(Error::OutOfBounds {
            row,
            col,
            rows,
            cols,
        });
    }
    Ok(())
}

pub(crate) fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '#') {
        return Err(Error::InvalidConfig(format!(
            "class name `{name}` must be one token without whitespace or `#`"
        )));
    }
    Ok(())
}

pub fn parse_roi(path: impl AsRef<Path>, rows: usize, cols: usize) -> Result<TrainingRegions> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainingRegions::parse(&text, &path.display().to_string(), rows, cols)
}

pub fn write_roi(path: impl AsRef<Path>, regions: &TrainingRegions) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, regions.to_roi_text()).map_err(|e| Error::io(path, e))
}
