use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::layout::{ByteOrder, RasterLayout};

/// A B×R×C stack of digital numbers, band-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStack {
    bands: usize,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl BandStack {
    pub fn new(bands: usize, rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if bands == 0 || rows == 0 || cols == 0 {
            return Err(Error::Empty(format!(
                "band stack dimensions {bands}x{rows}x{cols}"
            )));
        }
        let expected = bands * rows * cols;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(BandStack {
            bands,
            rows,
            cols,
            values,
        })
    }

    pub fn zeros(bands: usize, rows: usize, cols: usize) -> Result<Self> {
        Self::new(bands, rows, cols, vec![0.0; bands * rows * cols])
    }

    /// Builds a stack from per-pixel vectors given in row-major order.
    pub fn from_pixels(rows: usize, cols: usize, pixels: &[Vec<f64>]) -> Result<Self> {
        let bands = pixels.first().map_or(0, Vec::len);
        if pixels.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: pixels.len(),
            });
        }
        let mut stack = Self::zeros(bands, rows, cols)?;
        for (i, px) in pixels.iter().enumerate() {
            if px.len() != bands {
                return Err(Error::DimensionMismatch {
                    expected: bands,
                    actual: px.len(),
                });
            }
            for (b, v) in px.iter().enumerate() {
                stack.set(b, i / cols, i % cols, *v);
            }
        }
        Ok(stack)
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn index(&self, band: usize, row: usize, col: usize) -> usize {
        (band * self.rows + row) * self.cols + col
    }

    pub fn get(&self, band: usize, row: usize, col: usize) -> f64 {
        self.values[self.index(band, row, col)]
    }

    pub fn set(&mut self, band: usize, row: usize, col: usize, value: f64) {
        let i = self.index(band, row, col);
        self.values[i] = value;
    }

    /// The measurement vector at (row, col), one component per band.
    pub fn pixel(&self, row: usize, col: usize) -> Vec<f64> {
        let mut buf = vec![0.0; self.bands];
        self.pixel_into(row, col, &mut buf);
        buf
    }

    pub fn pixel_into(&self, row: usize, col: usize, buf: &mut [f64]) {
        let plane = self.rows * self.cols;
        let offset = row * self.cols + col;
        for (b, slot) in buf.iter_mut().enumerate() {
            *slot = self.values[b * plane + offset];
        }
    }
}

/// Decodes an in-memory BSQ file according to `layout`.
pub fn decode_bsq(bytes: &[u8], layout: &RasterLayout) -> Result<BandStack> {
    layout.validate().map_err(Error::InvalidConfig)?;
    let expected = layout.expected_file_size();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }

    let (bands, rows, cols) = (layout.bands, layout.scan_lines, layout.pixels_per_line);
    let bpp = layout.bytes_per_pixel as usize;
    let record = layout.record_length() as usize;
    let header = layout.file_header_bytes as usize;
    let prefix = layout.line_prefix_bytes as usize;

    let mut values = Vec::with_capacity(bands * rows * cols);
    for line in 0..bands * rows {
        let start = header + line * record + prefix;
        let payload = &bytes[start..start + cols * bpp];
        values.extend(decode_samples(payload, layout));
    }
    BandStack::new(bands, rows, cols, values)
}

pub fn read_bsq(data_path: impl AsRef<Path>, layout: &RasterLayout) -> Result<BandStack> {
    let path = data_path.as_ref();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let expected = layout.expected_file_size();
    // Checked before reading so a mismatched multi-gigabyte file is not slurped.
    if meta.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: meta.len(),
        });
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bsq(&bytes, layout)
}

/// Size-checked handle on a BSQ file that reads single scan lines on
/// demand, for rasters too large to decode whole.
#[derive(Debug)]
pub struct BsqFile {
    path: PathBuf,
    file: File,
    layout: RasterLayout,
}

impl BsqFile {
    pub fn open(data_path: impl AsRef<Path>, layout: &RasterLayout) -> Result<Self> {
        let path = data_path.as_ref().to_path_buf();
        layout.validate().map_err(Error::InvalidConfig)?;
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let actual = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        let expected = layout.expected_file_size();
        if actual != expected {
            return Err(Error::SizeMismatch { expected, actual });
        }
        Ok(BsqFile {
            path,
            file,
            layout: *layout,
        })
    }

    pub fn layout(&self) -> &RasterLayout {
        &self.layout
    }

    /// DN values of one scan line of one band, framing stripped.
    pub fn read_line(&mut self, band: usize, row: usize) -> Result<Vec<f64>> {
        let l = &self.layout;
        if band >= l.bands || row >= l.scan_lines {
            return Err(Error::InvalidConfig(format!(
                "line (band {band}, row {row}) outside {} bands x {} rows",
                l.bands, l.scan_lines
            )));
        }
        let line = (band * l.scan_lines + row) as u64;
        let start = l.file_header_bytes + line * l.record_length() + l.line_prefix_bytes;
        let mut payload = vec![0u8; l.pixels_per_line * l.bytes_per_pixel as usize];
        self.file
            .seek(SeekFrom::Start(start))
            .and_then(|_| self.file.read_exact(&mut payload))
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(decode_samples(&payload, l))
    }
}

fn decode_samples(payload: &[u8], layout: &RasterLayout) -> Vec<f64> {
    match (layout.bytes_per_pixel, layout.byte_order) {
        (1, _) => payload.iter().map(|&b| b as f64).collect(),
        (_, ByteOrder::Big) => payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect(),
        (_, ByteOrder::Little) => payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
    }
}

/// Encodes a stack with `layout`'s framing. Framing bytes are zero; samples
/// are rounded and clamped to the representable range.
pub fn encode_bsq(stack: &BandStack, layout: &RasterLayout) -> Result<Vec<u8>> {
    layout.validate().map_err(Error::InvalidConfig)?;
    if (layout.bands, layout.scan_lines, layout.pixels_per_line)
        != (stack.bands, stack.rows, stack.cols)
    {
        return Err(Error::InvalidConfig(format!(
            "layout {}x{}x{} does not match stack {}x{}x{}",
            layout.bands,
            layout.scan_lines,
            layout.pixels_per_line,
            stack.bands,
            stack.rows,
            stack.cols
        )));
    }
    let max = layout.max_value();
    let mut out = vec![0u8; layout.expected_file_size() as usize];
    let record = layout.record_length() as usize;
    let header = layout.file_header_bytes as usize;
    let prefix = layout.line_prefix_bytes as usize;
    let bpp = layout.bytes_per_pixel as usize;

    for (line, samples) in stack.values.chunks_exact(stack.cols).enumerate() {
        let start = header + line * record + prefix;
        for (c, v) in samples.iter().enumerate() {
            let dn = v.round().clamp(0.0, max) as u16;
            let at = start + c * bpp;
            match (bpp, layout.byte_order) {
                (1, _) => out[at] = dn as u8,
                (_, ByteOrder::Big) => out[at..at + 2].copy_from_slice(&dn.to_be_bytes()),
                (_, ByteOrder::Little) => out[at..at + 2].copy_from_slice(&dn.to_le_bytes()),
            }
        }
    }
    Ok(out)
}

pub fn write_bsq(path: impl AsRef<Path>, stack: &BandStack, layout: &RasterLayout) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_bsq(stack, layout)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
