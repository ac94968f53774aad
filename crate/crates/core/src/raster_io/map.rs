use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::roi::{validate_name, ClassInfo};

/// Per-pixel class labels over an R×C raster; 0 means unclassified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationMap {
    rows: usize,
    cols: usize,
    labels: Vec<u32>,
    legend: Vec<ClassInfo>,
}

impl ClassificationMap {
    pub fn new(rows: usize, cols: usize, labels: Vec<u32>, legend: Vec<ClassInfo>) -> Result<Self> {
        if labels.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: labels.len(),
            });
        }
        for (i, class) in legend.iter().enumerate() {
            if class.id as usize != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "legend ids must run 1..K in order; found {} at position {}",
                    class.id,
                    i + 1
                )));
            }
        }
        let k = legend.len() as u32;
        if let Some(bad) = labels.iter().find(|&&l| l > k) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} exceeds class count {k}"
            )));
        }
        Ok(ClassificationMap {
            rows,
            cols,
            labels,
            legend,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn legend(&self) -> &[ClassInfo] {
        &self.legend
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.cols + col]
    }

    /// Raw label layer: one byte per pixel, row-major.
    pub fn encode_labels(&self) -> Result<Vec<u8>> {
        if self.legend.len() > 255 {
            return Err(Error::LabelOverflow {
                classes: self.legend.len(),
            });
        }
        Ok(self.labels.iter().map(|&l| l as u8).collect())
    }

    /// Binary PPM (P6), each pixel painted its class color; unclassified is black.
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.reserve(self.labels.len() * 3);
        for &l in &self.labels {
            let rgb = match l {
                0 => [0, 0, 0],
                id => self.legend[id as usize - 1].color,
            };
            out.extend_from_slice(&rgb);
        }
        out
    }

    pub fn legend_text(&self) -> String {
        let mut out = format!("# size {} {}\n", self.rows, self.cols);
        for c in &self.legend {
            let [r, g, b] = c.color;
            out.push_str(&format!("{} {} {r} {g} {b}\n", c.id, c.name));
        }
        out
    }
}

/// Paths produced by [`write_map`].
#[derive(Debug, Clone)]
pub struct MapFiles {
    pub labels: PathBuf,
    pub image: PathBuf,
    pub legend: PathBuf,
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>.lbl`, `<prefix>.ppm` and `<prefix>.leg`.
pub fn write_map(map: &ClassificationMap, out_prefix: impl AsRef<Path>) -> Result<MapFiles> {
    let prefix = out_prefix.as_ref();
    let files = MapFiles {
        labels: with_suffix(prefix, ".lbl"),
        image: with_suffix(prefix, ".ppm"),
        legend: with_suffix(prefix, ".leg"),
    };
    for c in &map.legend {
        validate_name(&c.name)?;
    }
    let labels = map.encode_labels()?;
    std::fs::write(&files.labels, labels).map_err(|e| Error::io(&files.labels, e))?;
    std::fs::write(&files.image, map.encode_ppm()).map_err(|e| Error::io(&files.image, e))?;
    std::fs::write(&files.legend, map.legend_text()).map_err(|e| Error::io(&files.legend, e))?;
    Ok(files)
}

pub fn read_labels(path: impl AsRef<Path>, rows: usize, cols: usize) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != rows * cols {
        return Err(Error::SizeMismatch {
            expected: (rows * cols) as u64,
            actual: bytes.len() as u64,
        });
    }
    Ok(bytes.into_iter().map(u32::from).collect())
}

/// Parsed legend file: classes plus the `# size R C` line when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Legend {
    pub classes: Vec<ClassInfo>,
    pub size: Option<(usize, usize)>,
}

impl Legend {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut classes = Vec::new();
        let mut size = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let f: Vec<&str> = comment.split_whitespace().collect();
                if let ["size", r, c] = f.as_slice() {
                    if let (Ok(r), Ok(c)) = (r.parse(), c.parse()) {
                        size = Some((r, c));
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::parse(source, lineno, "expected `<id> <name> <r> <g> <b>`");
            if f.len() != 5 {
                return Err(bad());
            }
            let id: u32 = f[0].parse().map_err(|_| bad())?;
            let mut color = [0u8; 3];
            for (slot, s) in color.iter_mut().zip(&f[2..]) {
                *slot = s.parse().map_err(|_| bad())?;
            }
            classes.push(ClassInfo::new(id, f[1], color));
        }
        Ok(Legend { classes, size })
    }
}

pub fn read_legend(path: impl AsRef<Path>) -> Result<Legend> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Legend::parse(&text, &path.display().to_string())
}

/// Reads a label layer using the raster size recorded in its legend.
pub fn read_map(labels: impl AsRef<Path>, legend: impl AsRef<Path>) -> Result<ClassificationMap> {
    let legend_path = legend.as_ref();
    let legend = read_legend(legend_path)?;
    let (rows, cols) = legend.size.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "{}: no `# size <rows> <cols>` line",
            legend_path.display()
        ))
    })?;
    let labels = read_labels(labels, rows, cols)?;
    ClassificationMap::new(rows, cols, labels, legend.classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legend2() -> Vec<ClassInfo> {
        vec![
            ClassInfo::new(1, "red", [255, 0, 0]),
            ClassInfo::new(2, "green", [0, 255, 0]),
        ]
    }

    #[test]
    fn ppm_paints_class_colors() {
        let map = ClassificationMap::new(1, 3, vec![1, 0, 2], legend2()).unwrap();
        let ppm = map.encode_ppm();
        let header = b"P6\n3 1\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(&ppm[header.len()..], &[255, 0, 0, 0, 0, 0, 0, 255, 0]);
    }

    #[test]
    fn all_unclassified_is_black() {
        let map = ClassificationMap::new(2, 2, vec![0; 4], legend2()).unwrap();
        let ppm = map.encode_ppm();
        assert!(ppm[b"P6\n2 2\n255\n".len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let map = ClassificationMap::new(2, 3, vec![0, 1, 2, 2, 1, 0], legend2()).unwrap();
        let files = write_map(&map, dir.path().join("m")).unwrap();
        assert!(files.labels.ends_with("m.lbl"));
        let back = read_map(&files.labels, &files.legend).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn label_overflow() {
        let legend: Vec<ClassInfo> = (1..=256).map(|i| ClassInfo::new(i, "c", [0; 3])).collect();
        let map = ClassificationMap::new(1, 1, vec![256], legend).unwrap();
        assert!(matches!(map.encode_labels(), Err(Error::LabelOverflow { classes: 256 })));
    }

    #[test]
    fn rejects_out_of_range_label() {
        assert!(ClassificationMap::new(1, 1, vec![3], legend2()).is_err());
    }
}
