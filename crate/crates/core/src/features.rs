//! GM-LoG image statistics.
//!
//! Gradient magnitude (from Gaussian partial-derivative filters) and the
//! Laplacian-of-Gaussian response are normalized jointly by their local
//! energy, quantized, and summarized by the marginals of their joint
//! histogram together with two dependency profiles. The result is a
//! `4 * bins` vector (40 values at the defaults).

use serde::{Deserialize, Serialize};

use crate::conv::{box_mean_reflect, convolve_zero_sum, Kernel};
use crate::error::{Error, Result};
use crate::image::PlanarImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmLogParams {
    /// Gaussian scale shared by the derivative and LoG kernels.
    pub sigma: f64,
    /// Quantization levels per map.
    pub bins: usize,
    /// Side of the square window of the joint normalization (odd).
    pub norm_window: usize,
    pub norm_eps: f64,
    /// Normalized values are binned over `[0, clip]` (GM) and `[-clip, clip]` (LoG).
    pub clip: f64,
}

impl Default for GmLogParams {
    fn default() -> Self {
        let sigma = 0.5;
        Self {
            sigma,
            bins: 10,
            norm_window: 2 * kernel_radius(sigma) + 1,
            norm_eps: 1e-8,
            clip: 3.0,
        }
    }
}

impl GmLogParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {}", self.bins)));
        }
        if self.norm_window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "normalization window must be odd, got {}",
                self.norm_window
            )));
        }
        if !(self.norm_eps > 0.0 && self.clip > 0.0) {
            return Err(Error::invalid("norm_eps and clip must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        4 * self.bins
    }
}

/// `[P_G, P_L, Q_G, Q_L]`, each `bins` long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "feature length {} is not a positive multiple of 4",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bins(&self) -> usize {
        self.values.len() / 4
    }

    fn part(&self, i: usize) -> &[f64] {
        let b = self.bins();
        &self.values[i * b..(i + 1) * b]
    }

    /// Marginal distribution of the quantized GM map.
    pub fn p_g(&self) -> &[f64] {
        self.part(0)
    }

    /// Marginal distribution of the quantized LoG map.
    pub fn p_l(&self) -> &[f64] {
        self.part(1)
    }

    /// Dependency of GM on LoG: `mean_n K(m, n) / P_L(n)`.
    pub fn q_g(&self) -> &[f64] {
        self.part(2)
    }

    /// Dependency of LoG on GM: `mean_m K(m, n) / P_G(m)`.
    pub fn q_l(&self) -> &[f64] {
        self.part(3)
    }
}

pub fn kernel_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Gaussian partial derivatives along x and y, sampled on `(2 ceil(3 sigma) + 1)^2`.
///
/// `dG/dd = -(1 / (2 pi sigma^2)) (d / sigma^2) exp(-(x^2 + y^2) / (2 sigma^2))`.
pub fn gaussian_derivative_kernels(sigma: f64) -> Result<(Kernel, Kernel)> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    let kx = Kernel::sample(kernel_radius(sigma), |x, y| {
        -(1.0 / (2.0 * std::f64::consts::PI * s2)) * (x / s2) * (-(x * x + y * y) / (2.0 * s2)).exp()
    });
    let ky = kx.transpose();
    Ok((kx, ky))
}

/// Samples of `-(1 / (pi sigma^4)) (1 - r^2 / (2 sigma^2)) exp(-r^2 / (2 sigma^2))`
/// on the same grid as the derivative kernels.
pub fn sampled_log(sigma: f64) -> Result<Kernel> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    Ok(Kernel::sample(kernel_radius(sigma), |x, y| {
        let r2 = x * x + y * y;
        -(1.0 / (std::f64::consts::PI * s2 * s2)) * (1.0 - r2 / (2.0 * s2)) * (-r2 / (2.0 * s2)).exp()
    }))
}

/// The LoG filter: [`sampled_log`] shifted by its mean so that it sums to zero.
///
/// The truncated grid does not integrate to zero on its own, and a nonzero
/// sum would make flat regions respond. The center tap is then pinned to the
/// negated sum of the others (a last-ulp adjustment).
pub fn log_kernel(sigma: f64) -> Result<Kernel> {
    let raw = sampled_log(sigma)?;
    let mean = raw.sum() / raw.weights().len() as f64;
    Ok(Kernel::sample(raw.radius(), |x, y| raw.at(x as isize, y as isize) - mean).with_zero_sum())
}

fn require_mono(img: &PlanarImage) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::invalid("expected a single-channel image"));
    }
    Ok(())
}

/// `sqrt((I * Gx)^2 + (I * Gy)^2)` with symmetric padding.
pub fn compute_gm(gray: &PlanarImage, sigma: f64) -> Result<PlanarImage> {
    require_mono(gray)?;
    let (kx, ky) = gaussian_derivative_kernels(sigma)?;
    let gx = convolve_zero_sum(gray, &kx);
    let gy = convolve_zero_sum(gray, &ky);
    let gm = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    PlanarImage::from_raw(gray.width(), gray.height(), 1, gm)
}

/// `I * h_LoG` with symmetric padding.
pub fn compute_log(gray: &PlanarImage, sigma: f64) -> Result<PlanarImage> {
    require_mono(gray)?;
    Ok(convolve_zero_sum(gray, &log_kernel(sigma)?))
}

/// Divides both maps by `sqrt(local mean of GM^2 + LoG^2) + eps`.
pub fn joint_adaptive_normalize(
    gm: &PlanarImage,
    log: &PlanarImage,
    window: usize,
    eps: f64,
) -> Result<(PlanarImage, PlanarImage)> {
    require_mono(gm)?;
    require_mono(log)?;
    if !gm.same_dims(log) {
        return Err(Error::invalid("GM and LoG maps differ in size"));
    }
    if window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "normalization window must be odd, got {window}"
        )));
    }
    let energy: Vec<f64> = gm
        .data()
        .iter()
        .zip(log.data())
        .map(|(g, l)| g * g + l * l)
        .collect();
    let local = box_mean_reflect(&energy, gm.width(), gm.height(), window / 2);
    let denom: Vec<f64> = local.iter().map(|e| e.sqrt() + eps).collect();
    let scale = |map: &PlanarImage| {
        let data = map.data().iter().zip(&denom).map(|(v, d)| v / d).collect();
        PlanarImage::from_raw(map.width(), map.height(), 1, data)
    };
    Ok((scale(gm)?, scale(log)?))
}

fn quantize(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((v - lo) / (hi - lo) * bins as f64).floor();
    if t <= 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

/// Joint-histogram statistics of already-normalized GM and LoG samples.
pub fn histogram_features(gm_n: &[f64], log_n: &[f64], bins: usize, clip: f64) -> Result<FeatureVector> {
    if gm_n.len() != log_n.len() || gm_n.is_empty() {
        return Err(Error::invalid(
            "normalized maps must be non-empty and equally sized",
        ));
    }
    if bins < 2 || !(clip > 0.0) {
        return Err(Error::invalid("need bins >= 2 and a positive clip"));
    }
    let mut joint = vec![0.0; bins * bins];
    for (&g, &l) in gm_n.iter().zip(log_n) {
        let m = quantize(g, 0.0, clip, bins);
        let n = quantize(l, -clip, clip, bins);
        joint[m * bins + n] += 1.0;
    }
    let total = gm_n.len() as f64;
    for k in &mut joint {
        *k /= total;
    }
    let p_g: Vec<f64> = (0..bins)
        .map(|m| (0..bins).map(|n| joint[m * bins + n]).sum())
        .collect();
    let p_l: Vec<f64> = (0..bins)
        .map(|n| (0..bins).map(|m| joint[m * bins + n]).sum())
        .collect();

    // Terms with a zero marginal in the denominator are left out of the mean.
    let dependency = |k: &dyn Fn(usize) -> f64, marg: &[f64]| {
        let (sum, count) = (0..bins)
            .filter(|&j| marg[j] > 0.0)
            .fold((0.0, 0usize), |(s, c), j| (s + k(j) / marg[j], c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    };
    let q_g: Vec<f64> = (0..bins)
        .map(|m| dependency(&|n| joint[m * bins + n], &p_l))
        .collect();
    let q_l: Vec<f64> = (0..bins)
        .map(|n| dependency(&|m| joint[m * bins + n], &p_g))
        .collect();

    let mut values = Vec::with_capacity(4 * bins);
    values.extend(p_g);
    values.extend(p_l);
    values.extend(q_g);
    values.extend(q_l);
    FeatureVector::new(values)
}

/// Full GM-LoG feature extraction from a gray image.
pub fn gmlog_features(gray: &PlanarImage, params: &GmLogParams) -> Result<FeatureVector> {
    params.validate()?;
    let gm = compute_gm(gray, params.sigma)?;
    let log = compute_log(gray, params.sigma)?;
    let (gm_n, log_n) = joint_adaptive_normalize(&gm, &log, params.norm_window, params.norm_eps)?;
    histogram_features(gm_n.data(), log_n.data(), params.bins, params.clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn map(w: usize, h: usize, data: Vec<f64>) -> PlanarImage {
        PlanarImage::from_raw(w, h, 1, data).unwrap()
    }

    #[test]
    fn derivative_kernel_shape() {
        let (kx, ky) = gaussian_derivative_kernels(0.5).unwrap();
        assert_eq!(kx.side(), 5);
        assert!(kx.sum().abs() < 1e-10 && ky.sum().abs() < 1e-10);
        for dy in -2..=2 {
            for dx in -2..=2 {
                assert_eq!(kx.at(-dx, dy), -kx.at(dx, dy));
                assert_eq!(ky.at(dx, dy), kx.at(dy, dx));
            }
        }
        let expect = -(1.0 / (2.0 * PI * 0.25)) * (1.0 / 0.25) * (-1.0f64 / 0.5).exp();
        assert!((kx.at(1, 0) - expect).abs() < 1e-15);
        assert!(gaussian_derivative_kernels(0.0).is_err());
        assert!(gaussian_derivative_kernels(-1.0).is_err());
    }

    #[test]
    fn log_kernel_is_zero_mean_and_radial() {
        for sigma in [0.5, 1.0, 1.7] {
            let k = log_kernel(sigma).unwrap();
            assert!(k.sum().abs() < 1e-10, "sigma {sigma}: {}", k.sum());
            let r = k.radius() as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    assert_eq!(k.at(dx, dy), k.at(dy, dx));
                    assert_eq!(k.at(dx, dy), k.at(-dx, dy));
                }
            }
        }
        // Shift is a constant: differences between samples are untouched.
        let (raw, k) = (sampled_log(0.5).unwrap(), log_kernel(0.5).unwrap());
        let shift = raw.at(2, 1) - k.at(2, 1);
        assert!((raw.at(1, 0) - k.at(1, 0) - shift).abs() < 1e-15);
        assert!((raw.at(0, 0) - k.at(0, 0) - shift).abs() < 1e-12);
        let expect_center = -1.0 / (PI * 0.0625);
        assert_eq!(raw.at(0, 0), expect_center);
    }

    #[test]
    fn flat_images_have_no_response() {
        let flat = PlanarImage::constant(9, 6, 1, 0.4).unwrap();
        assert!(compute_gm(&flat, 0.5)
            .unwrap()
            .data()
            .iter()
            .all(|v| v.abs() < 1e-12));
        assert!(compute_log(&flat, 0.5)
            .unwrap()
            .data()
            .iter()
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gm_of_vertical_step_peaks_at_half_kernel_mass() {
        let (w, h) = (16, 9);
        let step = PlanarImage::from_fn(w, h, 1, |x, _, _| if x >= 8 { 1.0 } else { 0.0 }).unwrap();
        let gm = compute_gm(&step, 0.5).unwrap();
        let (kx, _) = gaussian_derivative_kernels(0.5).unwrap();
        let positive: f64 = kx.weights().iter().filter(|v| **v > 0.0).sum();
        let peak = (0..w).map(|x| gm.get(x, 4, 0)).fold(0.0, f64::max);
        assert!((peak - positive).abs() < 1e-12, "{peak} vs {positive}");
        assert!((gm.get(7, 4, 0) - positive).abs() < 1e-12);
        assert!((gm.get(8, 4, 0) - positive).abs() < 1e-12);
    }

    #[test]
    fn gm_is_mirror_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = PlanarImage::from_fn(11, 7, 1, |_, _, _| rng.gen::<f64>()).unwrap();
        let a = compute_gm(&img, 0.5).unwrap().mirror_horizontal();
        let b = compute_gm(&img.mirror_horizontal(), 0.5).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn log_impulse_response_is_the_kernel() {
        let mut data = vec![0.0; 81];
        data[40] = 1.0;
        let img = PlanarImage::new(9, 9, 1, data).unwrap();
        let out = compute_log(&img, 0.5).unwrap();
        let k = log_kernel(0.5).unwrap();
        for y in 0..9isize {
            for x in 0..9isize {
                let (dx, dy) = (x - 4, y - 4);
                let expect = if dx.abs() <= 2 && dy.abs() <= 2 {
                    k.at(dx, dy)
                } else {
                    0.0
                };
                assert_eq!(out.get(x as usize, y as usize, 0), expect);
            }
        }
    }

    #[test]
    fn normalization_cases() {
        let (gm, log) = (map(3, 3, vec![3.0; 9]), map(3, 3, vec![4.0; 9]));
        let (gn, ln) = joint_adaptive_normalize(&gm, &log, 3, 1e-8).unwrap();
        for i in 0..9 {
            assert!((gn.data()[i] - 3.0 / (5.0 + 1e-8)).abs() < 1e-12);
            assert!((ln.data()[i] - 4.0 / (5.0 + 1e-8)).abs() < 1e-12);
        }

        let (gm, log) = (map(4, 2, vec![0.0; 8]), map(4, 2, vec![-2.5; 8]));
        let (gn, ln) = joint_adaptive_normalize(&gm, &log, 3, 1e-8).unwrap();
        assert!(gn.data().iter().all(|v| *v == 0.0));
        assert!(ln.data().iter().all(|v| (v + 1.0).abs() < 1e-8));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g: Vec<f64> = (0..30).map(|_| rng.gen::<f64>()).collect();
        let l: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a1, b1) =
            joint_adaptive_normalize(&map(6, 5, g.clone()), &map(6, 5, l.clone()), 5, 1e-12).unwrap();
        let scaled = |v: &[f64]| map(6, 5, v.iter().map(|x| 7.0 * x).collect());
        let (a2, b2) = joint_adaptive_normalize(&scaled(&g), &scaled(&l), 5, 1e-12).unwrap();
        for i in 0..30 {
            assert!((a1.data()[i] - a2.data()[i]).abs() < 1e-6);
            assert!((b1.data()[i] - b2.data()[i]).abs() < 1e-6);
        }
        assert!(
            joint_adaptive_normalize(&map(2, 2, vec![0.0; 4]), &map(2, 2, vec![0.0; 4]), 2, 1e-8).is_err()
        );
    }

    #[test]
    fn constant_image_is_degenerate() {
        let flat = PlanarImage::constant(20, 12, 1, 0.7).unwrap();
        let f = gmlog_features(&flat, &GmLogParams::default()).unwrap();
        assert_eq!(f.len(), 40);
        let unit = |hot: usize| {
            (0..10)
                .map(|i| if i == hot { 1.0 } else { 0.0 })
                .collect::<Vec<_>>()
        };
        assert_eq!(f.p_g(), unit(0).as_slice());
        assert_eq!(f.p_l(), unit(5).as_slice());
        assert_eq!(f.q_g(), unit(0).as_slice());
        assert_eq!(f.q_l(), unit(5).as_slice());
    }

    #[test]
    fn independent_maps_have_flat_dependency() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 400_000;
        let g: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(2) * 3.0).collect();
        let l: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-2.0f64..2.0).powi(3) / 2.7)
            .collect();
        let f = histogram_features(&g, &l, 10, 3.0).unwrap();
        for m in 0..10 {
            assert!((f.q_g()[m] - f.p_g()[m]).abs() < 0.01, "Q_G[{m}]");
        }
        for n in 0..10 {
            if f.p_l()[n] > 0.0 {
                assert!((f.q_l()[n] - f.p_l()[n]).abs() < 0.01, "Q_L[{n}]");
            }
        }
    }

    #[test]
    fn marginals_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = PlanarImage::from_fn(33, 21, 1, |x, y, _| {
            (0.5 + 0.4 * ((x as f64) * 0.3).sin() * ((y as f64) * 0.2).cos() + rng.gen_range(-0.05..0.05))
                .clamp(0.0, 1.0)
        })
        .unwrap();
        let f = gmlog_features(&img, &GmLogParams::default()).unwrap();
        assert!((f.p_g().iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!((f.p_l().iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(f.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(f, gmlog_features(&img, &GmLogParams::default()).unwrap());
    }

    #[test]
    fn params_are_validated() {
        let img = PlanarImage::constant(5, 5, 1, 0.5).unwrap();
        for bad in [
            GmLogParams {
                sigma: 0.0,
                ..GmLogParams::default()
            },
            GmLogParams {
                bins: 1,
                ..GmLogParams::default()
            },
            GmLogParams {
                norm_window: 4,
                ..GmLogParams::default()
            },
        ] {
            assert!(gmlog_features(&img, &bad).is_err());
        }
        assert!(FeatureVector::new(vec![0.0; 6]).is_err());
    }
}
