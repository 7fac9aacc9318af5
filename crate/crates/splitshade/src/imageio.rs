//! Float image container and codecs: PFM, Radiance RGBE, PNG.
//!
//! PFM is the canonical float interchange format for every buffer the
//! pipeline persists. Radiance `.hdr` is read-only (environment maps).
//! PNG is used for masks, textures, and tonemapped previews.

use std::fs;
use std::path::Path;

use image::ImageEncoder;

use crate::error::{Error, Result};

/// Color space tag carried by an [`ImageBuffer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Linear,
    Srgb,
}

/// Row-major float image with 1 or 3 channels, row 0 at the top.
#[derive(Debug, Clone)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
    pub colorspace: ColorSpace,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "buffer length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Format("non-finite pixel value".into()));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
            colorspace: ColorSpace::Linear,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

// ---------------------------------------------------------------------------
// PFM

/// Encode as PFM (`PF`/`Pf`, little-endian payload, bottom row first).
pub fn write_pfm(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    // PFM stores rows bottom-to-top.
    for y in (0..img.height).rev() {
        let row = &img.data[y * img.width * img.channels..(y + 1) * img.width * img.channels];
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_pfm_file<P: AsRef<Path>>(path: P, img: &ImageBuffer) -> Result<()> {
    fs::write(path, write_pfm(img))?;
    Ok(())
}

/// Decode a PFM byte stream. A negative scale field marks little-endian
/// payload, positive marks big-endian; the magnitude is not applied.
pub fn read_pfm(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PFM header".into()));
        }
        // exactly one whitespace byte terminates the last header token
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1;
        Ok(tok)
    };

    let magic = token()?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        m => return Err(Error::Format(format!("bad PFM magic {m:?}"))),
    };
    let width: usize = token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM width".into()))?;
    let height: usize = token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM height".into()))?;
    let scale: f32 = token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM scale".into()))?;
    let little_endian = scale < 0.0;

    let n = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < n * 4 {
        return Err(Error::Format(format!(
            "truncated PFM payload: need {} bytes, have {}",
            n * 4,
            payload.len()
        )));
    }

    let mut data = vec![0.0f32; n];
    for y in 0..height {
        let src_row = height - 1 - y; // stored bottom-up
        for i in 0..width * channels {
            let off = (src_row * width * channels + i) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[y * width * channels + i] = v;
        }
    }
    ImageBuffer::new(width, height, channels, data)
}

pub fn read_pfm_file<P: AsRef<Path>>(path: P) -> Result<ImageBuffer> {
    read_pfm(&fs::read(path)?)
}

// ---------------------------------------------------------------------------
// Radiance RGBE (.hdr), read-only

/// (r,g,b) = mantissa/256 * 2^(e-128); a zero exponent byte means black.
fn decode_rgbe(r: u8, g: u8, b: u8, e: u8) -> [f32; 3] {
    if e == 0 {
        return [0.0; 3];
    }
    let f = ((e as i32 - 136) as f32).exp2();
    [r as f32 * f, g as f32 * f, b as f32 * f]
}

/// Read a Radiance RGBE image (flat or adaptive-RLE scanlines, `-Y +X`).
pub fn read_rgbe(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0usize;
    let mut line = || -> Result<String> {
        let start = pos;
        while pos < bytes.len() && bytes[pos] != b'\n' {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(Error::Format("truncated RGBE header".into()));
        }
        let s = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1;
        Ok(s)
    };

    let magic = line()?;
    if !magic.starts_with("#?") {
        return Err(Error::Format("missing #? RGBE magic".into()));
    }
    loop {
        let l = line()?;
        if l.is_empty() {
            break;
        }
        if let Some(fmt) = l.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(Error::Format(format!("unsupported RGBE format {fmt:?}")));
            }
        }
    }
    let res = line()?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "-Y" || parts[2] != "+X" {
        return Err(Error::Format(format!("unsupported resolution line {res:?}")));
    }
    let height: usize = parts[1]
        .parse()
        .map_err(|_| Error::Format("bad RGBE height".into()))?;
    let width: usize = parts[3]
        .parse()
        .map_err(|_| Error::Format("bad RGBE width".into()))?;

    let mut data = vec![0.0f32; width * height * 3];
    let mut scan = vec![[0u8; 4]; width];
    for y in 0..height {
        read_rgbe_scanline(bytes, &mut pos, &mut scan)?;
        for (x, px) in scan.iter().enumerate() {
            let rgb = decode_rgbe(px[0], px[1], px[2], px[3]);
            data[(y * width + x) * 3..(y * width + x) * 3 + 3].copy_from_slice(&rgb);
        }
    }
    ImageBuffer::new(width, height, 3, data)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(Error::Format("truncated RGBE payload".into()));
    }
    let s = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(s)
}

fn read_rgbe_scanline(bytes: &[u8], pos: &mut usize, scan: &mut [[u8; 4]]) -> Result<()> {
    let width = scan.len();
    let head = take(bytes, pos, 4)?;
    let (h0, h1, h2, h3) = (head[0], head[1], head[2], head[3]);
    let is_new_rle =
        h0 == 2 && h1 == 2 && ((h2 as usize) << 8 | h3 as usize) == width && (8..32768).contains(&width);
    if is_new_rle {
        // four separately run-length-encoded component planes
        for c in 0..4 {
            let mut x = 0usize;
            while x < width {
                let count = take(bytes, pos, 1)?[0] as usize;
                if count > 128 {
                    let run = count - 128;
                    if x + run > width {
                        return Err(Error::Format("RGBE RLE run overflow".into()));
                    }
                    let v = take(bytes, pos, 1)?[0];
                    for px in &mut scan[x..x + run] {
                        px[c] = v;
                    }
                    x += run;
                } else if count > 0 {
                    if x + count > width {
                        return Err(Error::Format("RGBE RLE literal overflow".into()));
                    }
                    let lit = take(bytes, pos, count)?;
                    for (px, &v) in scan[x..x + count].iter_mut().zip(lit) {
                        px[c] = v;
                    }
                    x += count;
                } else {
                    return Err(Error::Format("zero-length RGBE RLE record".into()));
                }
            }
        }
    } else {
        if h0 == 1 && h1 == 1 && h2 == 1 {
            return Err(Error::Format("old-style RGBE RLE is unsupported".into()));
        }
        scan[0] = [h0, h1, h2, h3];
        for px in scan.iter_mut().skip(1) {
            let raw = take(bytes, pos, 4)?;
            *px = [raw[0], raw[1], raw[2], raw[3]];
        }
    }
    Ok(())
}

pub fn read_rgbe_file<P: AsRef<Path>>(path: P) -> Result<ImageBuffer> {
    read_rgbe(&fs::read(path)?)
}

// ---------------------------------------------------------------------------
// PNG

/// Tonemap linear [0,1]-ish radiance to an 8-bit value: clamp then 1/2.2 gamma.
pub fn tonemap_u8(v: f32) -> u8 {
    let c = v.clamp(0.0, 1.0);
    (c.powf(1.0 / 2.2) * 255.0).round() as u8
}

/// Encode a linear 3-channel image as an 8-bit sRGB-gamma preview PNG.
pub fn write_png_preview(img: &ImageBuffer) -> Result<Vec<u8>> {
    if img.channels != 3 {
        return Err(Error::Dimension("preview PNG needs 3 channels".into()));
    }
    let pixels: Vec<u8> = img.data.iter().map(|&v| tonemap_u8(v)).collect();
    encode_png(img.width, img.height, 3, &pixels)
}

/// Encode a single-channel image as an 8-bit grayscale PNG (no gamma;
/// values clamped to [0,1] and scaled). Used for masks.
pub fn write_png_gray(img: &ImageBuffer) -> Result<Vec<u8>> {
    if img.channels != 1 {
        return Err(Error::Dimension("gray PNG needs 1 channel".into()));
    }
    let pixels: Vec<u8> = img
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    encode_png(img.width, img.height, 1, &pixels)
}

/// Encode raw 8-bit pixels (3 channels) as PNG; used for palette-style maps.
pub fn write_png_rgb8(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    encode_png(width, height, 3, pixels)
}

fn encode_png(width: usize, height: usize, channels: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let color = match channels {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        _ => return Err(Error::Dimension("PNG encode: 1 or 3 channels".into())),
    };
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(pixels, width as u32, height as u32, color)
        .map_err(|e| Error::Format(format!("PNG encode: {e}")))?;
    Ok(out)
}

/// Decode a PNG texture to linear floats. 8-bit sRGB values are linearized
/// with x^2.2; the result is tagged [`ColorSpace::Linear`].
pub fn read_png(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(format!("PNG decode: {e}")))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data: Vec<f32> = rgb
        .as_raw()
        .iter()
        .map(|&b| (b as f32 / 255.0).powf(2.2))
        .collect();
    ImageBuffer::new(w, h, 3, data)
}

pub fn read_png_file<P: AsRef<Path>>(path: P) -> Result<ImageBuffer> {
    read_png(&fs::read(path)?)
}
