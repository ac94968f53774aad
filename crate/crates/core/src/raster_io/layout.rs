//! Layout sidecar: a `key: value` text file describing how a raw
//! band-sequential file frames its pixel payload.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ByteOrder {
    #[default]
    Big,
    Little,
}

impl FromStr for ByteOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "big" => Ok(ByteOrder::Big),
            "little" => Ok(ByteOrder::Little),
            other => Err(format!("byte_order must be `big` or `little`, got `{other}`")),
        }
    }
}

impl fmt::Display for ByteOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ByteOrder::Big => "big",
            ByteOrder::Little => "little",
        })
    }
}

/// Byte-level description of a raw BSQ file.
///
/// Every band stores `scan_lines` records; each record is
/// `line_prefix_bytes` of framing, one line of pixels, then
/// `line_suffix_bytes` of trailer. The whole file is preceded by
/// `file_header_bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterLayout {
    pub file_header_bytes: u64,
    pub line_prefix_bytes: u64,
    pub line_suffix_bytes: u64,
    pub scan_lines: usize,
    pub pixels_per_line: usize,
    pub bands: usize,
    pub bytes_per_pixel: u8,
    pub byte_order: ByteOrder,
}

const MANDATORY_KEYS: [&str; 7] = [
    "file_header_bytes",
    "line_prefix_bytes",
    "line_suffix_bytes",
    "scan_lines",
    "pixels_per_line",
    "bands",
    "bytes_per_pixel",
];

impl RasterLayout {
    /// A headerless, unframed one-byte layout.
    pub fn plain(bands: usize, rows: usize, cols: usize) -> Self {
        RasterLayout {
            file_header_bytes: 0,
            line_prefix_bytes: 0,
            line_suffix_bytes: 0,
            scan_lines: rows,
            pixels_per_line: cols,
            bands,
            bytes_per_pixel: 1,
            byte_order: ByteOrder::Big,
        }
    }

    pub fn record_length(&self) -> u64 {
        self.line_prefix_bytes
            + self.pixels_per_line as u64 * self.bytes_per_pixel as u64
            + self.line_suffix_bytes
    }

    pub fn expected_file_size(&self) -> u64 {
        self.file_header_bytes + (self.bands * self.scan_lines) as u64 * self.record_length()
    }

    /// Largest digital number representable by one pixel sample.
    pub fn max_value(&self) -> f64 {
        ((1u64 << (8 * self.bytes_per_pixel as u32)) - 1) as f64
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.scan_lines == 0 || self.pixels_per_line == 0 || self.bands == 0 {
            return Err("scan_lines, pixels_per_line and bands must be positive".into());
        }
        if !matches!(self.bytes_per_pixel, 1 | 2) {
            return Err(format!(
                "bytes_per_pixel must be 1 or 2, got {}",
                self.bytes_per_pixel
            ));
        }
        Ok(())
    }

    /// Parses sidecar text. `source` names the origin in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut values: [Option<u64>; 7] = [None; 7];
        let mut byte_order = ByteOrder::default();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(source, lineno, "expected `key: value`"))?;
            let key = key.trim();
            let value = value.trim();

            if key == "byte_order" {
                byte_order = value
                    .parse()
                    .map_err(|e: String| Error::parse(source, lineno, e))?;
                continue;
            }
            match MANDATORY_KEYS.iter().position(|k| *k == key) {
                Some(slot) => {
                    let n = value.parse::<u64>().map_err(|_| {
                        Error::parse(source, lineno, format!("`{key}` is not a number: `{value}`"))
                    })?;
                    values[slot] = Some(n);
                }
                None => warn!("{source}:{lineno}: ignoring unknown key `{key}`"),
            }
        }

        let get = |slot: usize| {
            values[slot].ok_or(Error::MissingKey {
                path: source.to_string(),
                key: MANDATORY_KEYS[slot],
            })
        };
        let bpp = get(6)?;
        let layout = RasterLayout {
            file_header_bytes: get(0)?,
            line_prefix_bytes: get(1)?,
            line_suffix_bytes: get(2)?,
            scan_lines: get(3)? as usize,
            pixels_per_line: get(4)? as usize,
            bands: get(5)? as usize,
            bytes_per_pixel: u8::try_from(bpp).unwrap_or(u8::MAX),
            byte_order,
        };
        layout
            .validate()
            .map_err(|msg| Error::InvalidConfig(format!("{source}: {msg}")))?;
        Ok(layout)
    }

    /// Renders the sidecar text, with optional leading `#` comment lines.
    pub fn to_sidecar(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("file_header_bytes: {}\n", self.file_header_bytes));
        out.push_str(&format!("line_prefix_bytes: {}\n", self.line_prefix_bytes));
        out.push_str(&format!("line_suffix_bytes: {}\n", self.line_suffix_bytes));
        out.push_str(&format!("scan_lines: {}\n", self.scan_lines));
        out.push_str(&format!("pixels_per_line: {}\n", self.pixels_per_line));
        out.push_str(&format!("bands: {}\n", self.bands));
        out.push_str(&format!("bytes_per_pixel: {}\n", self.bytes_per_pixel));
        out.push_str(&format!("byte_order: {}\n", self.byte_order));
        out
    }
}

pub fn read_layout(path: impl AsRef<Path>) -> Result<RasterLayout> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RasterLayout::parse(&text, &path.display().to_string())
}

pub fn write_layout(path: impl AsRef<Path>, layout: &RasterLayout, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, layout.to_sidecar(comments)).map_err(|e| Error::io(path, e))
}
