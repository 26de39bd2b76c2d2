//! Image and label-map handling: PNG/PPM decoding, CIELAB conversion,
//! luminance and gradient readings, ground-truth region maps (BSDS300 `.seg`
//! text files or 16-bit grayscale PNGs), and boundary overlays.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metrics;

/// Color interpretation of a [`RasterImage`]'s three channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    /// 8-bit sRGB held as `f64` in `[0, 255]`.
    Srgb8,
    /// CIELAB (D65): `L` in `[0, 100]`, `a`/`b` roughly `[-128, 127]`.
    Lab,
}

/// Row-major, 3-channel interleaved raster. Minimum size 2x2 so that the
/// interior (where gradients are defined) is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, colorspace: ColorSpace, data: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::param(format!(
                "image dimensions {width}x{height} below minimum 2x2"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::param(format!(
                "image data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        Ok(RasterImage {
            width,
            height,
            colorspace,
            data,
        })
    }

    /// Build an sRGB image from interleaved 8-bit RGB bytes.
    pub fn from_srgb_bytes(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            ColorSpace::Srgb8,
            rgb.iter().map(|&b| b as f64).collect(),
        )
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, p: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&p);
    }

    #[inline]
    pub fn channels(&self) -> &[f64] {
        &self.data
    }
}

/// Load an 8-bit RGB or grayscale image (PNG, or PPM `P3`/`P6`). Grayscale
/// input is replicated across the three channels.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P3") || bytes.starts_with(b"P6") {
        return decode_ppm(&bytes).map_err(|e| prefix_path(path, e));
    }
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("{}: bad PNG: {e}", path.display())))?;
    let (rgb, w, h) = match decoded {
        image::DynamicImage::ImageRgb8(img) => {
            let (w, h) = img.dimensions();
            (img.into_raw(), w, h)
        }
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let mut rgb = Vec::with_capacity((w * h * 3) as usize);
            for &image::Luma([g]) in img.pixels() {
                rgb.extend_from_slice(&[g, g, g]);
            }
            (rgb, w, h)
        }
        other => {
            return Err(Error::format(format!(
                "{}: unsupported PNG pixel format {:?}: expected 8-bit RGB or grayscale",
                path.display(),
                other.color()
            )))
        }
    };
    RasterImage::from_srgb_bytes(w as usize, h as usize, &rgb)
}

/// Save an sRGB image as an 8-bit RGB PNG.
pub fn save_image(img: &RasterImage, path: &Path) -> Result<()> {
    if img.colorspace != ColorSpace::Srgb8 {
        return Err(Error::param("save_image expects an sRGB image"));
    }
    let bytes: Vec<u8> = img
        .data
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, bytes)
        .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("{}: PNG encode failed: {e}", path.display())))
}

fn prefix_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Minimal PPM reader: `P3` (ASCII) and `P6` (binary), maxval up to 255,
/// `#` comments allowed in the header.
fn decode_ppm(bytes: &[u8]) -> Result<RasterImage> {
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("truncated PPM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    let parse_dim = |tok: String, what: &str| -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| Error::format(format!("bad PPM {what} {tok:?}")))
    };
    let width = parse_dim(next_token(bytes)?, "width")?;
    let height = parse_dim(next_token(bytes)?, "height")?;
    let maxval = parse_dim(next_token(bytes)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(format!(
            "unsupported PPM maxval {maxval}: only 8-bit (<= 255) supported"
        )));
    }
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| Error::format("PPM dimensions overflow"))?;
    let mut rgb = Vec::with_capacity(n);
    match magic.as_str() {
        "P3" => {
            for _ in 0..n {
                let tok = next_token(bytes).map_err(|_| Error::format("truncated P3 pixel data"))?;
                let v = parse_dim(tok, "sample")?;
                if v > maxval {
                    return Err(Error::format(format!("P3 sample {v} exceeds maxval {maxval}")));
                }
                rgb.push(v as u8);
            }
        }
        "P6" => {
            // exactly one whitespace byte separates the header from the raster
            if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
                return Err(Error::format("missing whitespace before P6 raster"));
            }
            pos += 1;
            if bytes.len() - pos < n {
                return Err(Error::format(format!(
                    "truncated P6 raster: expected {n} bytes, found {}",
                    bytes.len() - pos
                )));
            }
            rgb.extend_from_slice(&bytes[pos..pos + n]);
        }
        other => return Err(Error::format(format!("unsupported PPM magic {other:?}"))),
    }
    RasterImage::from_srgb_bytes(width, height, &rgb)
}

// sRGB (D65) linear RGB -> XYZ, full-precision matrix derived from the
// BT.709 primaries and D65 white chromaticities. The reference white is the
// matrix row sums, so white maps to Lab (100, 0, 0) exactly.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4123907992659595, 0.35758433938387796, 0.1804807884018343],
    [0.21263900587151036, 0.7151686787677559, 0.07219231536073371],
    [0.01933081871559185, 0.11919477979462599, 0.9505321522496606],
];

fn white_point() -> [f64; 3] {
    let m = &SRGB_TO_XYZ;
    [
        m[0][0] + m[0][1] + m[0][2],
        m[1][0] + m[1][1] + m[1][2],
        m[2][0] + m[2][1] + m[2][2],
    ]
}

#[inline]
fn srgb_to_linear(c8: f64) -> f64 {
    let c = c8 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Convert an sRGB image to CIELAB (D65). Lab input is returned unchanged.
pub fn srgb_to_lab(img: &RasterImage) -> RasterImage {
    if img.colorspace == ColorSpace::Lab {
        return img.clone();
    }
    let wp = white_point();
    let mut data = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(3) {
        let lin = [srgb_to_linear(px[0]), srgb_to_linear(px[1]), srgb_to_linear(px[2])];
        let mut xyz = [0.0; 3];
        for (row, out) in SRGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
            *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
        }
        let fx = lab_f(xyz[0] / wp[0]);
        let fy = lab_f(xyz[1] / wp[1]);
        let fz = lab_f(xyz[2] / wp[2]);
        data.push(116.0 * fy - 16.0);
        data.push(500.0 * (fx - fy));
        data.push(200.0 * (fy - fz));
    }
    RasterImage {
        width: img.width,
        height: img.height,
        colorspace: ColorSpace::Lab,
        data,
    }
}

/// Scalar luminance: the `L` channel for Lab input, Rec. 601 luma
/// (`0.299 R + 0.587 G + 0.114 B`, still on the `[0, 255]` scale) for sRGB.
pub fn luminance(img: &RasterImage) -> ScalarField {
    let data: Vec<f64> = match img.colorspace {
        ColorSpace::Lab => img.data.chunks_exact(3).map(|px| px[0]).collect(),
        ColorSpace::Srgb8 => img
            .data
            .chunks_exact(3)
            .map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2])
            .collect(),
    };
    ScalarField::new(img.width, img.height, data).expect("image dims validated")
}

/// Squared central-difference contrast at an interior pixel of a Lab image:
/// `||I(x+1,y) - I(x-1,y)||^2 + ||I(x,y+1) - I(x,y-1)||^2` over the three
/// channels.
pub fn gradient_magnitude(img: &RasterImage, x: usize, y: usize) -> Result<f64> {
    if img.colorspace != ColorSpace::Lab {
        return Err(Error::param("gradient_magnitude expects a Lab image"));
    }
    if x == 0 || y == 0 || x >= img.width - 1 || y >= img.height - 1 {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: img.width,
            height: img.height,
        });
    }
    let sq_diff = |a: [f64; 3], b: [f64; 3]| -> f64 {
        let d0 = a[0] - b[0];
        let d1 = a[1] - b[1];
        let d2 = a[2] - b[2];
        d0 * d0 + d1 * d1 + d2 * d2
    };
    Ok(sq_diff(img.pixel(x + 1, y), img.pixel(x - 1, y))
        + sq_diff(img.pixel(x, y + 1), img.pixel(x, y - 1)))
}

/// Dense segmentation labels: every pixel carries a label in
/// `0..num_labels`, and every label occurs at least once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_labels: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, num_labels: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("label map dimensions must be non-zero"));
        }
        if labels.len() != width * height {
            return Err(Error::param(format!(
                "label data length {} does not match {width}x{height}",
                labels.len()
            )));
        }
        if num_labels == 0 {
            return Err(Error::param("label map must carry at least one label"));
        }
        let mut seen = vec![false; num_labels];
        for &l in &labels {
            let l = l as usize;
            if l >= num_labels {
                return Err(Error::param(format!(
                    "label {l} out of range for num_labels {num_labels}"
                )));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::param(format!("label {missing} has no pixels")));
        }
        Ok(LabelMap {
            width,
            height,
            num_labels,
            labels,
        })
    }

    /// Renumber arbitrary labels to the compact range `0..k'`, preserving the
    /// ascending order of the original ids.
    pub fn compact_from(width: usize, height: usize, raw: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || raw.len() != width * height {
            return Err(Error::param("label map dimensions do not match data"));
        }
        let mut used: Vec<u32> = raw.clone();
        used.sort_unstable();
        used.dedup();
        let remap: std::collections::HashMap<u32, u32> = used
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new as u32))
            .collect();
        let labels: Vec<u32> = raw.iter().map(|l| remap[l]).collect();
        LabelMap::new(width, height, used.len(), labels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Write a label map as a 16-bit grayscale PNG (label value = gray value).
pub fn write_label_map(labels: &LabelMap, path: &Path) -> Result<()> {
    if labels.num_labels > 65536 {
        return Err(Error::param(format!(
            "{} labels do not fit a 16-bit PNG (max 65536)",
            labels.num_labels
        )));
    }
    let raw: Vec<u16> = labels.labels.iter().map(|&l| l as u16).collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        labels.width as u32,
        labels.height as u32,
        raw,
    )
    .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("{}: PNG encode failed: {e}", path.display())))
}

/// Read a 16-bit grayscale PNG back into a (compacted) label map.
pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("{}: bad PNG: {e}", path.display())))?;
    let gray = match decoded {
        image::DynamicImage::ImageLuma16(img) => img,
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            image::ImageBuffer::from_raw(w, h, img.into_raw().into_iter().map(u16::from).collect())
                .expect("same dimensions")
        }
        other => {
            return Err(Error::format(format!(
                "{}: unsupported label PNG format {:?}: expected grayscale",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    LabelMap::compact_from(
        w as usize,
        h as usize,
        gray.into_raw().into_iter().map(u32::from).collect(),
    )
}

/// Human-annotated (or synthetic) reference segmentation.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub regions: LabelMap,
}

/// Read a ground-truth region map: BSDS300 `.seg` text for a `.seg`
/// extension, 16-bit grayscale PNG otherwise. Region ids are compacted to
/// `0..M`.
pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let is_seg = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("seg"))
        .unwrap_or(false);
    let regions = if is_seg {
        let mut text = String::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        parse_seg(&text).map_err(|e| prefix_path(path, e))?
    } else {
        read_label_map(path)?
    };
    Ok(GroundTruth { regions })
}

/// Parse the BSDS300 `.seg` format: `key value` header lines through `data`,
/// then one `segment row col-start col-end` quadruple per line (column range
/// inclusive). Every pixel must be covered exactly once.
fn parse_seg(text: &str) -> Result<LabelMap> {
    let mut width = None;
    let mut height = None;
    let mut segments = None;
    let mut lines = text.lines().enumerate();
    let mut data_line = None;
    for (idx, line) in lines.by_ref() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "data" {
            data_line = Some(lineno);
            break;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let value = parts.next();
        let parse_int = |v: Option<&str>| -> Result<usize> {
            v.and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| Error::format(format!("line {lineno}: bad {key:?} value")))
        };
        match key {
            "width" => width = Some(parse_int(value)?),
            "height" => height = Some(parse_int(value)?),
            "segments" => segments = Some(parse_int(value)?),
            _ => {} // date, image, user, gray, invert, flipflop, ...
        }
    }
    let data_line =
        data_line.ok_or_else(|| Error::format("missing \"data\" line in .seg header"))?;
    let width = width.ok_or_else(|| Error::format("missing \"width\" in .seg header"))?;
    let height = height.ok_or_else(|| Error::format("missing \"height\" in .seg header"))?;
    let segments =
        segments.ok_or_else(|| Error::format("missing \"segments\" in .seg header"))?;
    if width == 0 || height == 0 || segments == 0 {
        return Err(Error::format("zero width/height/segments in .seg header"));
    }

    const UNSET: u32 = u32::MAX;
    let mut raw = vec![UNSET; width * height];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::format(format!(
                "line {lineno}: expected 4 fields \"segment row col-start col-end\", found {}",
                fields.len()
            )));
        }
        let nums: Vec<usize> = fields
            .iter()
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|_| Error::format(format!("line {lineno}: non-integer field {f:?}")))
            })
            .collect::<Result<_>>()?;
        let (seg, row, c0, c1) = (nums[0], nums[1], nums[2], nums[3]);
        if seg >= segments {
            return Err(Error::format(format!(
                "line {lineno}: segment {seg} out of range (segments {segments})"
            )));
        }
        if row >= height || c0 > c1 || c1 >= width {
            return Err(Error::format(format!(
                "line {lineno}: row/column range ({row}, {c0}..={c1}) outside {width}x{height}"
            )));
        }
        for x in c0..=c1 {
            let cell = &mut raw[row * width + x];
            if *cell != UNSET {
                return Err(Error::format(format!(
                    "line {lineno}: pixel ({x}, {row}) covered more than once"
                )));
            }
            *cell = seg as u32;
        }
    }
    if let Some(pos) = raw.iter().position(|&v| v == UNSET) {
        return Err(Error::format(format!(
            "data section ending at line {}+: pixel ({}, {}) never covered",
            data_line,
            pos % width,
            pos / width
        )));
    }
    LabelMap::compact_from(width, height, raw)
}

/// Boundary color used by [`render_overlay`] when none is given.
pub const DEFAULT_BOUNDARY_COLOR: [u8; 3] = [255, 255, 0];

/// Copy of `img` with segmentation boundary pixels recolored.
pub fn render_overlay(
    img: &RasterImage,
    labels: &LabelMap,
    color: Option<[u8; 3]>,
) -> Result<RasterImage> {
    if img.colorspace != ColorSpace::Srgb8 {
        return Err(Error::param("render_overlay expects an sRGB image"));
    }
    if img.width != labels.width || img.height != labels.height {
        return Err(Error::param(format!(
            "overlay dimension mismatch: image {}x{}, labels {}x{}",
            img.width, img.height, labels.width, labels.height
        )));
    }
    let color = color.unwrap_or(DEFAULT_BOUNDARY_COLOR);
    let paint = [color[0] as f64, color[1] as f64, color[2] as f64];
    let mask = metrics::boundary_mask(labels);
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            if mask[y * img.width + x] {
                out.set_pixel(x, y, paint);
            }
        }
    }
    Ok(out)
}
