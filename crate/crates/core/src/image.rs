//! Planar floating-point rasters, codecs, resampling and color conversions.

use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};

// BT.601 full-range luma weights and the chroma scale factors derived from them.
const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;
const CB_SCALE: f64 = 2.0 * (1.0 - KB); // 1.772
const CR_SCALE: f64 = 2.0 * (1.0 - KR); // 1.402

/// Channel-planar, row-major raster of `f64` samples.
///
/// Images built with [`PlanarImage::new`] (and everything returned by the
/// codec and color functions in this module) hold values in `[0, 1]`.
/// Intermediate maps such as signed detail layers or gradient magnitudes are
/// built with [`PlanarImage::from_raw`], which only requires finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PlanarImage {
    /// Builds an image whose samples must all be finite and within `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let img = Self::from_raw(width, height, channels, data)?;
        if let Some(v) = img.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("sample {v} outside [0, 1]")));
        }
        Ok(img)
    }

    /// Builds a map of arbitrary finite values (detail layers, filter responses).
    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("{channels} channels, expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// An image filled with one value.
    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Evaluates `f(x, y, channel)` at every sample; the values must lie in `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Stacks three single-channel planes into an RGB image.
    pub fn from_planes(planes: [&PlanarImage; 3]) -> Result<Self> {
        let [r, g, b] = planes;
        for p in [r, g, b] {
            if p.channels != 1 || !p.same_dims(r) {
                return Err(Error::invalid("planes must be single-channel with equal dims"));
            }
        }
        let mut data = Vec::with_capacity(r.data.len() * 3);
        for p in [r, g, b] {
            data.extend_from_slice(&p.data);
        }
        Self::from_raw(r.width, r.height, 3, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.len();
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Copies one channel out as a single-channel image.
    pub fn channel(&self, channel: usize) -> PlanarImage {
        PlanarImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(channel).to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.data[channel * self.len() + y * self.width + x]
    }

    pub fn same_dims(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Left-right mirror of every channel.
    pub fn mirror_horizontal(&self) -> PlanarImage {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(self.width) {
            data.extend(row.iter().rev());
        }
        PlanarImage { data, ..*self }
    }

    /// Clamps every sample into `[0, 1]`.
    pub fn clamped(&self) -> PlanarImage {
        PlanarImage {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..*self
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> PlanarImage {
        debug_assert_eq!(data.len(), self.data.len());
        PlanarImage { data, ..*self }
    }

    fn require_channels(&self, channels: usize) -> Result<()> {
        if self.channels != channels {
            return Err(Error::invalid(format!(
                "expected {channels}-channel image, got {}",
                self.channels
            )));
        }
        Ok(())
    }
}

/// Luminance plus offset chrominance, each plane single-channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct YCbCrImage {
    pub y: PlanarImage,
    pub cb: PlanarImage,
    pub cr: PlanarImage,
}

impl YCbCrImage {
    pub fn new(y: PlanarImage, cb: PlanarImage, cr: PlanarImage) -> Result<Self> {
        for p in [&y, &cb, &cr] {
            if p.channels != 1 {
                return Err(Error::invalid("YCbCr planes must be single-channel"));
            }
        }
        if !y.same_dims(&cb) || !y.same_dims(&cr) {
            return Err(Error::invalid(format!(
                "YCbCr plane dims differ: {}x{}, {}x{}, {}x{}",
                y.width, y.height, cb.width, cb.height, cr.width, cr.height
            )));
        }
        Ok(Self { y, cb, cr })
    }
}

/// Decodes a JPEG or PNG stream into a 3-channel image scaled by 1/255.
///
/// Grayscale inputs are replicated to three channels and alpha is dropped.
/// Only 8-bit sources are accepted.
pub fn decode_image(bytes: &[u8]) -> Result<PlanarImage> {
    let format = image::guess_format(bytes)
        .map_err(|e| Error::UnsupportedFormat(format!("unrecognized image stream: {e}")))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::UnsupportedFormat(format!(
            "{format:?} (expected JPEG or PNG)"
        )));
    }
    let reader = ImageReader::with_format(Cursor::new(bytes), format);
    let decoded = reader
        .decode()
        .map_err(|e| Error::Decode(format!("{format:?}: {e}")))?;
    match decoded.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{other:?} samples, only 8-bit images are supported"
            )))
        }
    }
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let n = w * h;
    let mut data = vec![0.0; 3 * n];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..3 {
            data[c * n + i] = f64::from(px[c]) / 255.0;
        }
    }
    PlanarImage::new(w, h, 3, data)
}

/// Reads and decodes an image file.
pub fn load_image(path: &Path) -> Result<PlanarImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        Error::UnsupportedFormat(msg) => Error::UnsupportedFormat(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Encodes a 1- or 3-channel image as an 8-bit PNG, rounding to nearest.
pub fn encode_png(img: &PlanarImage) -> Result<Vec<u8>> {
    let to_u8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let n = img.len();
    let dynamic = if img.channels == 1 {
        let buf: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
        image::GrayImage::from_raw(img.width as u32, img.height as u32, buf).map(DynamicImage::ImageLuma8)
    } else {
        let mut buf = Vec::with_capacity(3 * n);
        for i in 0..n {
            for c in 0..3 {
                buf.push(to_u8(img.data[c * n + i]));
            }
        }
        image::RgbImage::from_raw(img.width as u32, img.height as u32, buf).map(DynamicImage::ImageRgb8)
    }
    .ok_or_else(|| Error::invalid("image buffer size mismatch"))?;
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Data(format!("PNG encode: {e}")))?;
    Ok(out.into_inner())
}

pub fn save_png(img: &PlanarImage, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Bilinear resampling with half-pixel-center alignment.
///
/// Source coordinates are clamped to the image, so edge pixels replicate.
pub fn resize(img: &PlanarImage, width: usize, height: usize) -> Result<PlanarImage> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!("target size {width}x{height}")));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let xs = sample_positions(img.width, width);
    let ys = sample_positions(img.height, height);
    let src_n = img.len();
    let mut data = Vec::with_capacity(width * height * img.channels);
    for c in 0..img.channels {
        let plane = &img.data[c * src_n..(c + 1) * src_n];
        for &(y0, y1, fy) in &ys {
            let r0 = &plane[y0 * img.width..(y0 + 1) * img.width];
            let r1 = &plane[y1 * img.width..(y1 + 1) * img.width];
            for &(x0, x1, fx) in &xs {
                let top = r0[x0] + fx * (r0[x1] - r0[x0]);
                let bottom = r1[x0] + fx * (r1[x1] - r1[x0]);
                data.push((top + fy * (bottom - top)).clamp(0.0, 1.0));
            }
        }
    }
    PlanarImage::new(width, height, img.channels, data)
}

/// For each destination index: the two source taps and the weight of the second.
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[inline]
fn luma(r: f64, g: f64, b: f64) -> f64 {
    if r == g && g == b {
        // exact for achromatic pixels
        return r;
    }
    (KR * r + KG * g + KB * b).clamp(0.0, 1.0)
}

/// BT.601 full-range RGB to YCbCr with chroma offset by 0.5.
pub fn rgb_to_ycbcr(img: &PlanarImage) -> Result<YCbCrImage> {
    img.require_channels(3)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let n = img.len();
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let l = luma(r[i], g[i], b[i]);
        y.push(l);
        cb.push((0.5 + (b[i] - l) / CB_SCALE).clamp(0.0, 1.0));
        cr.push((0.5 + (r[i] - l) / CR_SCALE).clamp(0.0, 1.0));
    }
    let plane = |data| PlanarImage::new(img.width, img.height, 1, data);
    YCbCrImage::new(plane(y)?, plane(cb)?, plane(cr)?)
}

/// Inverse of [`rgb_to_ycbcr`]; RGB is clamped to `[0, 1]`.
///
/// The luminance plane may hold out-of-range values (for example after
/// adding boosted detail), which is why it is read without validation.
pub fn ycbcr_to_rgb(img: &YCbCrImage) -> Result<PlanarImage> {
    let YCbCrImage { y, cb, cr } = img;
    if !y.same_dims(cb) || !y.same_dims(cr) {
        return Err(Error::invalid("YCbCr plane dims differ"));
    }
    let n = y.len();
    let mut data = vec![0.0; 3 * n];
    let g_cb = KB * CB_SCALE / KG;
    let g_cr = KR * CR_SCALE / KG;
    for i in 0..n {
        let (l, u, v) = (y.data[i], cb.data[i] - 0.5, cr.data[i] - 0.5);
        data[i] = (l + CR_SCALE * v).clamp(0.0, 1.0);
        data[n + i] = (l - g_cb * u - g_cr * v).clamp(0.0, 1.0);
        data[2 * n + i] = (l + CB_SCALE * u).clamp(0.0, 1.0);
    }
    PlanarImage::new(y.width, y.height, 3, data)
}

/// BT.601 luma, same weights as the Y plane of [`rgb_to_ycbcr`].
pub fn rgb_to_gray(img: &PlanarImage) -> Result<PlanarImage> {
    img.require_channels(3)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = (0..img.len()).map(|i| luma(r[i], g[i], b[i])).collect();
    PlanarImage::new(img.width, img.height, 1, data)
}

/// HSV saturation `(max - min) / max`, zero for black pixels.
pub fn rgb_to_saturation(img: &PlanarImage) -> Result<PlanarImage> {
    img.require_channels(3)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = (0..img.len())
        .map(|i| {
            let max = r[i].max(g[i]).max(b[i]);
            let min = r[i].min(g[i]).min(b[i]);
            if max <= 0.0 {
                0.0
            } else {
                ((max - min) / max).clamp(0.0, 1.0)
            }
        })
        .collect();
    PlanarImage::new(img.width, img.height, 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb(r: f64, g: f64, b: f64) -> PlanarImage {
        PlanarImage::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    fn png_bytes(img: image::RgbImage) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(PlanarImage::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(PlanarImage::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(PlanarImage::new(1, 1, 1, vec![1.5]).is_err());
        assert!(PlanarImage::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(PlanarImage::from_raw(1, 1, 1, vec![-3.0]).is_ok());
        assert!(PlanarImage::from_raw(1, 1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn decode_white_jpeg() {
        let img = image::RgbImage::from_pixel(1, 1, image::Rgb([255, 255, 255]));
        let mut out = Cursor::new(Vec::new());
        image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, 100)
            .encode_image(&img)
            .unwrap();
        let decoded = decode_image(out.get_ref()).unwrap();
        assert_eq!(decoded.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn decode_black_png() {
        let bytes = png_bytes(image::RgbImage::from_pixel(1, 1, image::Rgb([0, 0, 0])));
        assert_eq!(decode_image(&bytes).unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn decode_png_matches_raw_bytes() {
        let raw: [[u8; 3]; 4] = [[12, 200, 7], [255, 0, 128], [33, 66, 99], [1, 2, 254]];
        let mut img = image::RgbImage::new(2, 2);
        for (i, px) in img.pixels_mut().enumerate() {
            *px = image::Rgb(raw[i]);
        }
        let decoded = decode_image(&png_bytes(img)).unwrap();
        for (i, px) in raw.iter().enumerate() {
            for (c, &v) in px.iter().enumerate() {
                assert_eq!(decoded.plane(c)[i], f64::from(v) / 255.0);
            }
        }
    }

    #[test]
    fn decode_rejects_garbage_and_16_bit() {
        assert!(matches!(
            decode_image(b"not an image"),
            Err(Error::UnsupportedFormat(_))
        ));
        let mut truncated = png_bytes(image::RgbImage::new(8, 8));
        truncated.truncate(40);
        assert!(matches!(decode_image(&truncated), Err(Error::Decode(_))));

        let wide: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> = image::ImageBuffer::new(2, 2);
        let mut out = Cursor::new(Vec::new());
        DynamicImage::ImageRgb16(wide)
            .write_to(&mut out, ImageFormat::Png)
            .unwrap();
        assert!(matches!(
            decode_image(out.get_ref()),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn png_round_trip_is_exact_on_8_bit_values() {
        let img = PlanarImage::from_fn(5, 3, 3, |x, y, c| {
            ((x * 37 + y * 11 + c * 5) % 256) as f64 / 255.0
        })
        .unwrap();
        let back = decode_image(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn resize_identity_and_dims() {
        let img = PlanarImage::from_fn(7, 4, 3, |x, y, c| ((x + 2 * y + c) % 5) as f64 / 4.0).unwrap();
        assert_eq!(resize(&img, 7, 4).unwrap(), img);
        let big = PlanarImage::constant(854, 480, 3, 0.25).unwrap();
        let small = resize(&big, 427, 240).unwrap();
        assert_eq!((small.width(), small.height()), (427, 240));
        assert!(resize(&img, 0, 3).is_err());
    }

    #[test]
    fn resize_upsamples_linearly() {
        let img = PlanarImage::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let out = resize(&img, 3, 1).unwrap();
        assert_eq!(out.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn resize_halving_averages_pairs() {
        let img = PlanarImage::new(4, 1, 1, vec![0.0, 0.5, 1.0, 0.2]).unwrap();
        let out = resize(&img, 2, 1).unwrap();
        assert_eq!(out.data(), &[0.25, 0.6]);
    }

    #[test]
    fn ycbcr_reference_points() {
        let white = rgb_to_ycbcr(&rgb(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(
            (white.y.data()[0], white.cb.data()[0], white.cr.data()[0]),
            (1.0, 0.5, 0.5)
        );
        let black = rgb_to_ycbcr(&rgb(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(
            (black.y.data()[0], black.cb.data()[0], black.cr.data()[0]),
            (0.0, 0.5, 0.5)
        );

        // Pure red: Cb = 0.5 - 0.299 / 1.772, Cr = 0.5 + 0.701 / 1.402 = 1.
        let red = rgb_to_ycbcr(&rgb(1.0, 0.0, 0.0)).unwrap();
        assert!((red.y.data()[0] - 0.299).abs() < 1e-12);
        assert!((red.cb.data()[0] - 0.331_264_108_352_144_5).abs() < 1e-12);
        assert!((red.cr.data()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ycbcr_inverse_points() {
        let plane = |v| PlanarImage::new(1, 1, 1, vec![v]).unwrap();
        let gray = ycbcr_to_rgb(&YCbCrImage::new(plane(0.5), plane(0.5), plane(0.5)).unwrap()).unwrap();
        assert_eq!(gray.data(), &[0.5, 0.5, 0.5]);

        let over = PlanarImage::from_raw(1, 1, 1, vec![1.2]).unwrap();
        let bright = YCbCrImage {
            y: over,
            cb: plane(0.5),
            cr: plane(0.5),
        };
        assert_eq!(ycbcr_to_rgb(&bright).unwrap().data(), &[1.0, 1.0, 1.0]);

        let bad = YCbCrImage {
            y: plane(0.5),
            cb: PlanarImage::constant(2, 1, 1, 0.5).unwrap(),
            cr: plane(0.5),
        };
        assert!(ycbcr_to_rgb(&bad).is_err());
        assert!(YCbCrImage::new(bad.y.clone(), bad.cb.clone(), bad.cr.clone()).is_err());
    }

    #[test]
    fn gray_and_saturation_points() {
        assert_eq!(rgb_to_gray(&rgb(1.0, 1.0, 1.0)).unwrap().data(), &[1.0]);
        assert_eq!(rgb_to_gray(&rgb(0.0, 0.0, 0.0)).unwrap().data(), &[0.0]);
        let g = rgb_to_gray(&rgb(0.2, 0.4, 0.6)).unwrap().data()[0];
        assert!((g - 0.3630).abs() < 1e-12);

        assert_eq!(rgb_to_saturation(&rgb(0.5, 0.5, 0.5)).unwrap().data(), &[0.0]);
        assert_eq!(rgb_to_saturation(&rgb(1.0, 0.0, 0.0)).unwrap().data(), &[1.0]);
        assert_eq!(rgb_to_saturation(&rgb(0.0, 0.0, 0.0)).unwrap().data(), &[0.0]);
        let s = rgb_to_saturation(&rgb(0.8, 0.4, 0.2)).unwrap().data()[0];
        assert!((s - 0.75).abs() < 1e-12);
    }

    #[test]
    fn conversions_require_three_channels() {
        let mono = PlanarImage::constant(2, 2, 1, 0.3).unwrap();
        assert!(rgb_to_ycbcr(&mono).is_err());
        assert!(rgb_to_gray(&mono).is_err());
        assert!(rgb_to_saturation(&mono).is_err());
    }

    #[test]
    fn mirror_is_an_involution() {
        let img = PlanarImage::from_fn(5, 2, 3, |x, y, c| (x + y + c) as f64 / 10.0).unwrap();
        let m = img.mirror_horizontal();
        assert_eq!(m.get(0, 1, 2), img.get(4, 1, 2));
        assert_eq!(m.mirror_horizontal(), img);
    }

    proptest! {
        #[test]
        fn ycbcr_round_trip(r in 0.0..=1.0f64, g in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let x = rgb(r, g, b);
            let back = ycbcr_to_rgb(&rgb_to_ycbcr(&x).unwrap()).unwrap();
            for (a, e) in back.data().iter().zip(x.data()) {
                prop_assert!((a - e).abs() < 1e-6);
            }
        }

        #[test]
        fn achromatic_gray_is_exact(v in 0.0..=1.0f64) {
            prop_assert_eq!(rgb_to_gray(&rgb(v, v, v)).unwrap().data()[0], v);
        }

        #[test]
        fn conversions_stay_in_unit_range(r in 0.0..=1.0f64, g in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let x = rgb(r, g, b);
            let ycc = rgb_to_ycbcr(&x).unwrap();
            let all = [ycc.y, ycc.cb, ycc.cr, rgb_to_gray(&x).unwrap(), rgb_to_saturation(&x).unwrap()];
            for p in all {
                prop_assert!(p.data().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
