//! Parse a framed BSQ layout sidecar, write a small raster with the same
//! framing, and read it back both whole and line by line.
//!
//!     cargo run --example inspect_layout

use specmap::raster_io::{read_bsq, write_bsq, BandStack, BsqFile, RasterLayout};

const SIDECAR: &str = "\
# 4-band scene: 540-byte file header, 32-byte line prefix
file_header_bytes: 540
line_prefix_bytes: 32
line_suffix_bytes: 0
scan_lines: 5545
pixels_per_line: 5918
bands: 4
bytes_per_pixel: 1
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RasterLayout::parse(SIDECAR, "inline")?;
    println!("record length      {} bytes", layout.record_length());
    println!("expected file size {} bytes", layout.expected_file_size());

    let mut small = layout;
    small.scan_lines = 4;
    small.pixels_per_line = 6;
    let values = (0..small.bands * 4 * 6).map(|v| (v * 3 % 256) as f64).collect();
    let stack = BandStack::new(small.bands, 4, 6, values)?;

    let dir = std::env::temp_dir().join("specmap_inspect_layout");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("small.bsq");
    write_bsq(&path, &stack, &small)?;
    assert_eq!(read_bsq(&path, &small)?, stack);

    let mut file = BsqFile::open(&path, &small)?;
    println!("band 2, row 3: {:?}", file.read_line(2, 3)?);
    println!("pixel (1, 4) across bands: {:?}", stack.pixel(1, 4));
    Ok(())
}
