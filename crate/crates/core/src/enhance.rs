//! Two-scale WLS detail fusion on the luminance channel.
//!
//! The luminance is decomposed twice, with a fine (`lambda1`) and a coarse
//! (`lambda2`) WLS filter. The two detail layers are fused, either by their
//! average or by keeping the larger-magnitude value, and added back onto the
//! fine base layer. Chrominance is carried through untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{rgb_to_ycbcr, ycbcr_to_rgb, PlanarImage, YCbCrImage};
use crate::wls::{wls_filter, WlsParams};

/// Base/detail split of a single channel: `base + detail == input`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub base: PlanarImage,
    /// Signed residual.
    pub detail: PlanarImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    Avg,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub fusion: Fusion,
    /// Shared solver settings; its `lambda` is overridden per scale.
    pub wls: WlsParams,
}

impl Default for FcParams {
    fn default() -> Self {
        Self {
            lambda1: 0.125,
            lambda2: 0.5,
            fusion: Fusion::Avg,
            wls: WlsParams::default(),
        }
    }
}

impl FcParams {
    /// Requires `0 < lambda1 < lambda2`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda1 < self.lambda2 && self.lambda2.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < lambda1 < lambda2, got {} and {}",
                self.lambda1, self.lambda2
            )));
        }
        self.wls.validate()
    }
}

pub fn decompose(y: &PlanarImage, lambda: f64, wls: &WlsParams) -> Result<Decomposition> {
    let base = wls_filter(y, y, &wls.with_lambda(lambda))?;
    let detail = y.data().iter().zip(base.data()).map(|(v, b)| v - b).collect();
    let detail = PlanarImage::from_raw(y.width(), y.height(), 1, detail)?;
    Ok(Decomposition { base, detail })
}

/// Per-pixel fusion of two signed detail layers.
///
/// `Max` keeps whichever value has the larger magnitude (sign included);
/// on equal magnitudes the first layer wins.
pub fn fuse_details(d1: &PlanarImage, d2: &PlanarImage, mode: Fusion) -> Result<PlanarImage> {
    if d1.channels() != 1 || d2.channels() != 1 || !d1.same_dims(d2) {
        return Err(Error::invalid(
            "detail layers must be single-channel with equal dims",
        ));
    }
    let fused = d1
        .data()
        .iter()
        .zip(d2.data())
        .map(|(&a, &b)| match mode {
            Fusion::Avg => 0.5 * (a + b),
            Fusion::Max => {
                if b.abs() > a.abs() {
                    b
                } else {
                    a
                }
            }
        })
        .collect();
    PlanarImage::from_raw(d1.width(), d1.height(), 1, fused)
}

/// Enhanced luminance `clamp(base_fine + fused_detail)` for a luminance plane.
///
/// With `lambda1 == lambda2` both detail layers coincide and this reduces to
/// the single-scale reconstruction, so that case is accepted here.
pub fn enhance_luminance(y: &PlanarImage, params: &FcParams) -> Result<PlanarImage> {
    let fine = decompose(y, params.lambda1, &params.wls)?;
    let coarse = decompose(y, params.lambda2, &params.wls)?;
    let fused = fuse_details(&fine.detail, &coarse.detail, params.fusion)?;
    let out = fine
        .base
        .data()
        .iter()
        .zip(fused.data())
        .map(|(b, d)| (b + d).clamp(0.0, 1.0))
        .collect();
    PlanarImage::new(y.width(), y.height(), 1, out)
}

/// Replaces the luminance of an RGB image, keeping its chrominance planes.
pub(crate) fn recombine(ycc: YCbCrImage, luminance: PlanarImage) -> Result<PlanarImage> {
    ycbcr_to_rgb(&YCbCrImage::new(luminance, ycc.cb, ycc.cr)?)
}

/// FC_AVG / FC_MAX enhancement of a 3-channel image.
pub fn fc_enhance(img: &PlanarImage, params: &FcParams) -> Result<PlanarImage> {
    // lambda1 == lambda2 is allowed: it is the single-scale degenerate case.
    if !(params.lambda1 > 0.0 && params.lambda1 <= params.lambda2 && params.lambda2.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < lambda1 <= lambda2, got {} and {}",
            params.lambda1, params.lambda2
        )));
    }
    let ycc = rgb_to_ycbcr(img)?;
    let y = enhance_luminance(&ycc.y, params)?;
    recombine(ycc, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(w: usize, h: usize, seed: u64) -> PlanarImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PlanarImage::from_fn(w, h, 3, |x, y, c| {
            let edge = if x > w / 2 { 0.35 } else { 0.0 };
            (0.2 + edge + 0.1 * c as f64 + 0.08 * ((x * y) as f64).sin() + rng.gen_range(-0.05..0.05))
                .clamp(0.0, 1.0)
        })
        .unwrap()
    }

    fn step(w: usize, h: usize) -> PlanarImage {
        PlanarImage::from_fn(w, h, 1, |x, _, _| if x < w / 2 { 0.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn constant_decomposes_to_zero_detail() {
        let y = PlanarImage::constant(7, 5, 1, 0.6).unwrap();
        let d = decompose(&y, 0.5, &WlsParams::default()).unwrap();
        assert!(d.base.data().iter().all(|v| (v - 0.6).abs() < 1e-12));
        assert!(d.detail.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn base_plus_detail_reconstructs() {
        let y = crate::image::rgb_to_gray(&textured(24, 16, 4)).unwrap();
        for lambda in [0.125, 0.5] {
            let d = decompose(&y, lambda, &WlsParams::default()).unwrap();
            for i in 0..y.len() {
                assert!((d.base.data()[i] + d.detail.data()[i] - y.data()[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn step_detail_is_a_small_uniform_offset() {
        let (w, h) = (32, 8);
        let d = decompose(&step(w, h), 0.5, &WlsParams::default()).unwrap();
        // The flat halves are tied by near-1e4 weights and move as blocks: the
        // observed detail is -5.80e-3..-5.94e-3 left of the step and the mirror
        // image right of it.
        for y in 0..h {
            for x in 0..w {
                let v = d.detail.get(x, y, 0);
                assert!(v.abs() <= 6.5e-3, "detail {v} at ({x}, {y})");
                assert!(v.abs() >= 5.0e-3);
                assert_eq!(v < 0.0, x < w / 2);
            }
        }
    }

    #[test]
    fn fusion_rules() {
        let one = |v| PlanarImage::from_raw(1, 1, 1, vec![v]).unwrap();
        let (d1, d2) = (one(0.2), one(-0.4));
        assert_eq!(fuse_details(&d1, &d2, Fusion::Max).unwrap().data(), &[-0.4]);
        let avg = fuse_details(&d1, &d2, Fusion::Avg).unwrap().data()[0];
        assert!((avg + 0.1).abs() < 1e-15);
        let d = PlanarImage::from_raw(3, 1, 1, vec![0.3, -0.1, 0.0]).unwrap();
        assert_eq!(fuse_details(&d, &d, Fusion::Avg).unwrap(), d);
        let wide = PlanarImage::from_raw(2, 1, 1, vec![0.0, 0.0]).unwrap();
        assert!(fuse_details(&d, &wide, Fusion::Avg).is_err());
    }

    #[test]
    fn constant_color_passes_through() {
        let img = PlanarImage::from_fn(9, 6, 3, |_, _, c| [0.7, 0.3, 0.45][c]).unwrap();
        for fusion in [Fusion::Avg, Fusion::Max] {
            let out = fc_enhance(
                &img,
                &FcParams {
                    fusion,
                    ..FcParams::default()
                },
            )
            .unwrap();
            for (a, b) in out.data().iter().zip(img.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn avg_and_max_differ_on_edges() {
        let img = textured(24, 16, 2);
        let avg = fc_enhance(&img, &FcParams::default()).unwrap();
        let max = fc_enhance(
            &img,
            &FcParams {
                fusion: Fusion::Max,
                ..FcParams::default()
            },
        )
        .unwrap();
        assert_ne!(avg, max);
        assert!(avg
            .data()
            .iter()
            .chain(max.data())
            .all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn equal_lambdas_collapse_fusion() {
        let img = textured(16, 12, 6);
        let base = FcParams {
            lambda1: 0.3,
            lambda2: 0.3,
            ..FcParams::default()
        };
        let avg = fc_enhance(&img, &base).unwrap();
        let max = fc_enhance(
            &img,
            &FcParams {
                fusion: Fusion::Max,
                ..base
            },
        )
        .unwrap();
        assert_eq!(avg, max);
    }

    #[test]
    fn chroma_is_untouched_before_clamp() {
        let img = textured(20, 10, 8);
        let out = fc_enhance(&img, &FcParams::default()).unwrap();
        let (a, b) = (rgb_to_ycbcr(&img).unwrap(), rgb_to_ycbcr(&out).unwrap());
        // Pixels whose RGB did not clip keep their chroma up to round-off.
        let n = img.len();
        let mut checked = 0;
        for i in 0..n {
            let clipped = (0..3).any(|c| {
                let v = out.plane(c)[i];
                v == 0.0 || v == 1.0
            });
            if !clipped {
                assert!((a.cb.data()[i] - b.cb.data()[i]).abs() < 1e-9);
                assert!((a.cr.data()[i] - b.cr.data()[i]).abs() < 1e-9);
                checked += 1;
            }
        }
        assert!(checked > n / 2);
    }

    #[test]
    fn rejects_bad_lambdas_and_channels() {
        let img = textured(6, 6, 1);
        assert!(fc_enhance(
            &img,
            &FcParams {
                lambda1: 0.6,
                lambda2: 0.5,
                ..FcParams::default()
            }
        )
        .is_err());
        assert!(fc_enhance(
            &img,
            &FcParams {
                lambda1: 0.0,
                ..FcParams::default()
            }
        )
        .is_err());
        let gray = PlanarImage::constant(4, 4, 1, 0.5).unwrap();
        assert!(fc_enhance(&gray, &FcParams::default()).is_err());
    }
}
