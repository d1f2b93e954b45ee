//! 8-bit image codecs.
//!
//! Binary portable pixmap/graymap (`P6`/`P5`, maxval 255) is read and
//! written byte-exactly; PNG is supported through the `png` crate. A code
//! `u` loads as `u / 255`, and a value `v` stores as `round_half_up(v * 255)`
//! clamped to `0..=255`.

use std::fs;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::PlanarImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Pnm,
    Png,
}

fn format_for(path: &Path) -> Format {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Format::Png,
        _ => Format::Pnm,
    }
}

/// Quantizes one sample to a byte: round-half-up, then clamp.
#[inline]
pub fn quantize(v: f64) -> u8 {
    let q = (v * 255.0 + 0.5).floor();
    if q.is_nan() || q <= 0.0 {
        0
    } else if q >= 255.0 {
        255
    } else {
        q as u8
    }
}

/// Loads an 8-bit image. Portable anymap files yield one (`P5`) or three
/// (`P6`) channels; `.png` files are detected by extension or signature.
pub fn load_image(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else {
        decode_pnm(&bytes)
    }
}

/// Saves an image as `P6` (3 channels) / `P5` (1 channel), or PNG when the
/// path ends in `.png`.
pub fn save_image(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format_for(path) {
        Format::Pnm => encode_pnm(img),
        Format::Png => encode_png(img)?,
    };
    fs::write(path, bytes).map_err(|source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}

fn interleaved_bytes(img: &PlanarImage) -> Vec<u8> {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut out = Vec::with_capacity(w * h * ch);
    for i in 0..h {
        for j in 0..w {
            for c in 0..ch {
                out.push(quantize(img.get(i, j, c)));
            }
        }
    }
    out
}

fn from_interleaved(width: usize, height: usize, channels: usize, bytes: &[u8]) -> PlanarImage {
    let n = width * height;
    let mut data = vec![0.0; n * channels];
    for (p, px) in bytes.chunks_exact(channels).enumerate() {
        for (c, &u) in px.iter().enumerate() {
            data[c * n + p] = f64::from(u) / 255.0;
        }
    }
    PlanarImage::from_planar(width, height, channels, data).expect("consistent buffer")
}

/// Serializes to binary `P6`/`P5` bytes.
pub fn encode_pnm(img: &PlanarImage) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(interleaved_bytes(img));
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("bad {what} in header")))
    }
}

/// Parses binary `P6`/`P5` bytes.
pub fn decode_pnm(bytes: &[u8]) -> Result<PlanarImage> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        Some(b"P3") | Some(b"P2") | Some(b"P1") | Some(b"P4") => {
            return Err(Error::UnsupportedFormat(
                "only binary P5/P6 anymaps are supported".into(),
            ))
        }
        _ => {
            return Err(Error::UnsupportedFormat(
                "unrecognized file signature".into(),
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "maxval {maxval} (only 255 is supported)"
        )));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Malformed("missing separator after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::ZeroSized);
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Malformed("dimensions overflow".into()))?;
    let raster = bytes
        .get(cur.pos..cur.pos + len)
        .ok_or_else(|| Error::Malformed("truncated raster".into()))?;
    Ok(from_interleaved(width, height, channels, raster))
}

fn decode_png(bytes: &[u8]) -> Result<PlanarImage> {
    let png_err = |e: png::DecodingError| Error::Malformed(format!("png: {e}"));
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!(
            "{:?}-bit png",
            info.bit_depth as u8
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    if width == 0 || height == 0 {
        return Err(Error::ZeroSized);
    }
    let stride = info.line_size;
    let (src_ch, dst_ch) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded palette png".into()))
        }
    };
    let mut packed = Vec::with_capacity(width * height * dst_ch);
    for row in buf.chunks(stride).take(height) {
        for px in row[..width * src_ch].chunks_exact(src_ch) {
            packed.extend_from_slice(&px[..dst_ch]);
        }
    }
    Ok(from_interleaved(width, height, dst_ch, &packed))
}

fn encode_png(img: &PlanarImage) -> Result<Vec<u8>> {
    let png_err = |e: png::EncodingError| Error::Malformed(format!("png: {e}"));
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(
            BufWriter::new(&mut out),
            img.width() as u32,
            img.height() as u32,
        );
        encoder.set_color(if img.channels() == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(png_err)?;
        writer
            .write_image_data(&interleaved_bytes(img))
            .map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    out.flush().ok();
    Ok(out)
}
