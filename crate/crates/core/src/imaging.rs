//! Gray rasters, file decoding, and the no-smoothing scale pyramid.
//!
//! Every stage of the pipeline works on [`GrayImage`], an 8-bit single channel
//! raster stored row-major. Pyramid levels are produced by 2×2 block means
//! (or plain decimation) without any Gaussian prefilter, and boxes found on a
//! coarse level are mapped back to the base frame with [`map_box_to_base`].

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Round-half-up for non-negative and negative values alike (`floor(v + 0.5)`).
#[inline]
pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single value.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    /// Pixel lookup with coordinates clamped to the nearest edge pixel.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(cx, cy)
    }

    /// Apply `f` to every intensity.
    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Photometric negative, `255 - v`.
    pub fn inverted(&self) -> GrayImage {
        self.map(|v| 255 - v)
    }

    /// Box covering the whole image.
    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width, self.height)
    }
}

/// Axis-aligned integer box, top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[i64; 4]", try_from = "[i64; 4]")]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub const fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Box spanning the half-open ranges `[x0, x1) × [y0, y1)`.
    pub fn from_corners(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self {
            x: x0 as i32,
            y: y0 as i32,
            w: (x1 - x0).max(0) as u32,
            h: (y1 - y0).max(0) as u32,
        }
    }

    #[inline]
    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    #[inline]
    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    /// Center in continuous coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> u64 {
        let ix = (self.right().min(other.right()) - (self.x.max(other.x) as i64)).max(0);
        let iy = (self.bottom().min(other.bottom()) - (self.y.max(other.y) as i64)).max(0);
        ix as u64 * iy as u64
    }

    /// Intersection over union; 0 when the boxes are disjoint or both empty.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Intersection with `[0, width) × [0, height)`, or `None` if nothing is left.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let x0 = (self.x as i64).max(0);
        let y0 = (self.y as i64).max(0);
        let x1 = self.right().min(width as i64);
        let y1 = self.bottom().min(height as i64);
        (x1 > x0 && y1 > y0).then(|| BoundingBox::from_corners(x0, y0, x1, y1))
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn to_array(self) -> [i64; 4] {
        [self.x as i64, self.y as i64, self.w as i64, self.h as i64]
    }
}

impl From<BoundingBox> for [i64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

impl TryFrom<[i64; 4]> for BoundingBox {
    type Error = String;

    fn try_from(v: [i64; 4]) -> Result<Self, String> {
        let [x, y, w, h] = v;
        let fits = |n: i64| i32::try_from(n).is_ok();
        if !fits(x) || !fits(y) || w < 0 || h < 0 || w > u32::MAX as i64 || h > u32::MAX as i64 {
            return Err(format!("bbox out of range: {v:?}"));
        }
        Ok(BoundingBox::new(x as i32, y as i32, w as u32, h as u32))
    }
}

/// BT.601 luma, round-half-up, in integer arithmetic.
#[inline]
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let acc = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((acc + 500) / 1000).min(255) as u8
}

/// Decode a PGM (P5) or PNG file by sniffing its magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected binary PGM (P5) or PNG".into(),
        ))
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval}")));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "maxval {maxval} needs more than 8 bits"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("no raster separator".into()));
    }
    let start = cur.pos + 1;
    let n = width as usize * height as usize;
    if bytes.len() < start + n {
        return Err(Error::MalformedHeader(format!(
            "raster truncated: need {n} bytes, have {}",
            bytes.len().saturating_sub(start)
        )));
    }
    let mut data = bytes[start..start + n].to_vec();
    if maxval < 255 {
        if let Some(&bad) = data.iter().find(|&&v| v as u32 > maxval) {
            return Err(Error::MalformedHeader(format!(
                "sample {bad} exceeds maxval {maxval}"
            )));
        }
        for v in &mut data {
            *v = ((*v as u32 * 255 + maxval / 2) / maxval) as u8;
        }
    }
    GrayImage::new(width, height, data)
}

/// Encode as binary PGM with the canonical `P5\n<w> <h>\n255\n` header.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!(
            "{depth:?} bits per channel"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let (w, h) = (info.width, info.height);
    let stride = info.line_size;
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded palette".into()));
        }
    };
    let mut data = Vec::with_capacity(w as usize * h as usize);
    for row in buf.chunks(stride).take(h as usize) {
        for px in row[..w as usize * channels].chunks_exact(channels) {
            data.push(match channels {
                1 | 2 => px[0],
                _ => to_grayscale(px[0], px[1], px[2]),
            });
        }
    }
    GrayImage::new(w, h, data)
}

/// Encode an 8-bit grayscale PNG.
pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&img.data)
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// How each coarser pyramid level is derived from the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Downsample {
    /// Round-half-up mean of each 2×2 block.
    #[default]
    BlockMean,
    /// Keep the top-left pixel of each 2×2 block.
    Decimate,
}

/// Halve both dimensions (floor); the trailing odd row/column is dropped.
pub fn downsample(img: &GrayImage, mode: Downsample) -> Option<GrayImage> {
    let (w, h) = (img.width / 2, img.height / 2);
    if w == 0 || h == 0 {
        return None;
    }
    let src_w = img.width as usize;
    let mut data = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h as usize {
        let r0 = &img.data[2 * y * src_w..];
        let r1 = &img.data[(2 * y + 1) * src_w..];
        for x in 0..w as usize {
            let v = match mode {
                Downsample::BlockMean => {
                    let s = r0[2 * x] as u32
                        + r0[2 * x + 1] as u32
                        + r1[2 * x] as u32
                        + r1[2 * x + 1] as u32;
                    ((s + 2) / 4) as u8
                }
                Downsample::Decimate => r0[2 * x],
            };
            data.push(v);
        }
    }
    Some(GrayImage {
        width: w,
        height: h,
        data,
    })
}

/// Octave pyramid; `levels[0]` is the input image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePyramid {
    pub levels: Vec<GrayImage>,
}

impl ImagePyramid {
    pub fn base(&self) -> &GrayImage {
        &self.levels[0]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

pub const DEFAULT_PYRAMID_LEVELS: usize = 3;

pub fn build_pyramid(img: &GrayImage, levels: usize) -> ImagePyramid {
    build_pyramid_with(img, levels, Downsample::BlockMean)
}

/// Build up to `levels` octaves. The count is truncated (with a warning) once a
/// level would have a zero dimension.
pub fn build_pyramid_with(img: &GrayImage, levels: usize, mode: Downsample) -> ImagePyramid {
    let levels = levels.max(1);
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    while out.len() < levels {
        match downsample(out.last().unwrap(), mode) {
            Some(next) => out.push(next),
            None => {
                log::warn!(
                    "pyramid truncated to {} of {} levels for {}x{} input",
                    out.len(),
                    levels,
                    img.width,
                    img.height
                );
                break;
            }
        }
    }
    ImagePyramid { levels: out }
}

/// Scale a level-`k` box to the base frame by `2^k`.
pub fn map_box_to_base(b: BoundingBox, k: u32) -> BoundingBox {
    let s = 1i64 << k;
    BoundingBox::new(
        (b.x as i64 * s) as i32,
        (b.y as i64 * s) as i32,
        (b.w as i64 * s) as u32,
        (b.h as i64 * s) as u32,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(0, 0, 0), 0);
        assert_eq!(to_grayscale(255, 255, 255), 255);
        assert_eq!(to_grayscale(100, 150, 200), 141);
        assert_eq!(to_grayscale(50, 0, 0), 15); // 14.95
        assert_eq!(to_grayscale(0, 0, 250), 29); // 28.5, half rounds up
    }

    #[test]
    fn pgm_decode_small() {
        let bytes = b"P5\n2 2\n255\n\x00\xff\x80\x40";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.dimensions(), (2, 2));
        assert_eq!(img.as_raw(), &[0, 255, 128, 64]);
        assert_eq!(encode_pgm(&img), bytes.to_vec());
    }

    #[test]
    fn pgm_header_comments() {
        let bytes = b"P5 # made by hand\n2 # w\n1\n255\n\x01\x02";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.as_raw(), &[1, 2]);
    }

    #[test]
    fn pgm_sixteen_bit_rejected() {
        let bytes = b"P5\n1 1\n65535\n\x00\x00";
        let err = decode_pgm(bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported bit depth"), "{err}");
    }

    #[test]
    fn pgm_malformed() {
        assert!(matches!(
            decode_pgm(b"P5\n2\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x00"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_image(b"GIF89a"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn png_rgb_converts_to_luma() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 3, 2);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[100, 150, 200].repeat(6)).unwrap();
        }
        let img = decode_png(&out).unwrap();
        assert_eq!(img.dimensions(), (3, 2));
        assert!(img.as_raw().iter().all(|&v| v == 141));
    }

    #[test]
    fn png_gray_round_trip() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8).unwrap();
        let bytes = encode_png(&img).unwrap();
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn png_sixteen_bit_rejected() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 1]).unwrap();
        }
        assert!(matches!(
            decode_png(&out),
            Err(Error::UnsupportedBitDepth(_))
        ));
    }

    #[test]
    fn pyramid_dims() {
        let img = GrayImage::filled(640, 512, 0).unwrap();
        let pyr = build_pyramid(&img, 3);
        let dims: Vec<_> = pyr.levels.iter().map(|l| l.dimensions()).collect();
        assert_eq!(dims, vec![(640, 512), (320, 256), (160, 128)]);
    }

    #[test]
    fn pyramid_block_mean() {
        let img = GrayImage::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        let pyr = build_pyramid(&img, 2);
        assert_eq!(pyr.levels[1].as_raw(), &[25]);
        let pyr = build_pyramid_with(&img, 2, Downsample::Decimate);
        assert_eq!(pyr.levels[1].as_raw(), &[10]);
    }

    #[test]
    fn pyramid_truncates() {
        let img = GrayImage::filled(5, 3, 77).unwrap();
        let pyr = build_pyramid(&img, 3);
        assert_eq!(pyr.len(), 2);
        assert_eq!(pyr.levels[1].dimensions(), (2, 1));
        assert!(pyr.levels[1].as_raw().iter().all(|&v| v == 77));
    }

    #[test]
    fn map_box_examples() {
        let b = BoundingBox::new(10, 10, 5, 5);
        assert_eq!(map_box_to_base(b, 2), BoundingBox::new(40, 40, 20, 20));
        assert_eq!(map_box_to_base(b, 0), b);
        assert_eq!(
            map_box_to_base(BoundingBox::new(3, 7, 2, 1), 1),
            BoundingBox::new(6, 14, 4, 2)
        );
    }

    #[test]
    fn iou_basics() {
        let a = BoundingBox::new(0, 0, 2, 2);
        let b = BoundingBox::new(1, 1, 2, 2);
        assert!((a.iou(&b) - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&BoundingBox::new(5, 5, 1, 1)), 0.0);
    }

    #[test]
    fn bbox_json_is_array() {
        let b = BoundingBox::new(-1, 2, 3, 4);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[-1,2,3,4]");
        let back: BoundingBox = serde_json::from_str("[-1,2,3,4]").unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BoundingBox>("[0,0,-1,4]").is_err());
    }
}
