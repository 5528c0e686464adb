//! Comparison enhancers: unsharp masking, bilateral, guided and WLS detail
//! boosting, and the BF/WLS average. Every method works on luminance and
//! recombines with the original chrominance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conv::gaussian_blur_plane;
use crate::enhance::{enhance_luminance, recombine, FcParams, Fusion};
use crate::error::{Error, Result};
use crate::image::{rgb_to_ycbcr, PlanarImage};
use crate::wls::wls_filter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub bf_sigma_s: f64,
    pub bf_sigma_r: f64,
    pub gf_radius: usize,
    pub gf_eps: f64,
    pub sharp_amount: f64,
    pub sharp_sigma: f64,
    pub detail_boost: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            bf_sigma_s: 5.0,
            bf_sigma_r: 0.1,
            gf_radius: 8,
            gf_eps: 0.04,
            sharp_amount: 0.8,
            sharp_sigma: 1.0,
            detail_boost: 2.0,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.bf_sigma_s,
            self.bf_sigma_r,
            self.gf_eps,
            self.sharp_amount,
            self.sharp_sigma,
            self.detail_boost,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.gf_radius == 0 {
            return Err(Error::invalid(format!(
                "baseline parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Every enhancement the pipeline can run ahead of feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Imsharp,
    Bf,
    Gf,
    Wls,
    BfwlsAvg,
    FcAvg,
    FcMax,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::None,
        Method::Imsharp,
        Method::Bf,
        Method::Gf,
        Method::Wls,
        Method::BfwlsAvg,
        Method::FcAvg,
        Method::FcMax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Imsharp => "imsharp",
            Method::Bf => "bf",
            Method::Gf => "gf",
            Method::Wls => "wls",
            Method::BfwlsAvg => "bfwls_avg",
            Method::FcAvg => "fc_avg",
            Method::FcMax => "fc_max",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown enhancement method '{s}'")))
    }
}

/// Parameters for every enhancement method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EnhanceParams {
    /// Fusion mode is taken from the method, not from `fc.fusion`.
    pub fc: FcParams,
    pub baseline: BaselineParams,
}

fn require_mono(y: &PlanarImage) -> Result<()> {
    if y.channels() != 1 {
        return Err(Error::invalid("expected a single-channel image"));
    }
    Ok(())
}

/// Brute-force bilateral filter over a `(2r+1)^2` window, `r = ceil(3 sigma_s)`.
///
/// The window is cut at the image border and weights renormalized.
pub fn bilateral_filter(y: &PlanarImage, sigma_s: f64, sigma_r: f64) -> Result<PlanarImage> {
    require_mono(y)?;
    if !(sigma_s > 0.0 && sigma_r > 0.0) {
        return Err(Error::invalid("bilateral sigmas must be positive"));
    }
    let (w, h) = (y.width() as isize, y.height() as isize);
    let r = (3.0 * sigma_s).ceil() as isize;
    let side = (2 * r + 1) as usize;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp())
        .collect();
    let range_scale = -1.0 / (2.0 * sigma_r * sigma_r);
    let src = y.data();
    let mut out = vec![0.0; src.len()];
    for py in 0..h {
        for px in 0..w {
            let center = src[(py * w + px) as usize];
            let (mut num, mut den) = (0.0, 0.0);
            for qy in (py - r).max(0)..=(py + r).min(h - 1) {
                let row = (qy - py + r) as usize * side;
                for qx in (px - r).max(0)..=(px + r).min(w - 1) {
                    let v = src[(qy * w + qx) as usize];
                    let d = v - center;
                    let wt = spatial[row + (qx - px + r) as usize] * (d * d * range_scale).exp();
                    num += wt * v;
                    den += wt;
                }
            }
            out[(py * w + px) as usize] = (num / den).clamp(0.0, 1.0);
        }
    }
    PlanarImage::new(y.width(), y.height(), 1, out)
}

/// Summed-area table with a zero row and column prepended.
struct Integral {
    width: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(data: &[f64], width: usize, height: usize) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += data[y * width + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { width, sums }
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    fn rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0] + self.sums[y0 * s + x0]
    }
}

/// Mean over the `(2r+1)^2` window clipped to the image.
fn box_mean(data: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let table = Integral::new(data, width, height);
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(height));
        for x in 0..width {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius + 1).min(width));
            let count = ((x1 - x0) * (y1 - y0)) as f64;
            out[y * width + x] = table.rect(x0, y0, x1, y1) / count;
        }
    }
    out
}

/// Guided filter with box windows of radius `radius` clipped at the border.
pub fn guided_filter(y: &PlanarImage, guide: &PlanarImage, radius: usize, eps: f64) -> Result<PlanarImage> {
    require_mono(y)?;
    require_mono(guide)?;
    if !y.same_dims(guide) {
        return Err(Error::invalid("guided filter input and guide dims differ"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("guided filter eps must be positive"));
    }
    let (w, h) = (y.width(), y.height());
    let (p, g) = (y.data(), guide.data());
    let gp: Vec<f64> = g.iter().zip(p).map(|(a, b)| a * b).collect();
    let gg: Vec<f64> = g.iter().map(|a| a * a).collect();
    let mean_g = box_mean(g, w, h, radius);
    let mean_p = box_mean(p, w, h, radius);
    let mean_gp = box_mean(&gp, w, h, radius);
    let mean_gg = box_mean(&gg, w, h, radius);
    let mut a = vec![0.0; p.len()];
    let mut b = vec![0.0; p.len()];
    for i in 0..p.len() {
        let cov = mean_gp[i] - mean_g[i] * mean_p[i];
        let var = mean_gg[i] - mean_g[i] * mean_g[i];
        a[i] = cov / (var + eps);
        b[i] = mean_p[i] - a[i] * mean_g[i];
    }
    let mean_a = box_mean(&a, w, h, radius);
    let mean_b = box_mean(&b, w, h, radius);
    let out = (0..p.len()).map(|i| mean_a[i] * g[i] + mean_b[i]).collect();
    PlanarImage::from_raw(w, h, 1, out)
}

/// `y + amount * (y - blur(y))`, clamped.
pub fn unsharp_mask(y: &PlanarImage, sigma: f64, amount: f64) -> Result<PlanarImage> {
    require_mono(y)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("unsharp sigma must be positive"));
    }
    let blurred = gaussian_blur_plane(y.data(), y.width(), y.height(), sigma);
    let out = y
        .data()
        .iter()
        .zip(&blurred)
        .map(|(v, b)| (v + amount * (v - b)).clamp(0.0, 1.0))
        .collect();
    PlanarImage::new(y.width(), y.height(), 1, out)
}

fn boost(y: &PlanarImage, base: &PlanarImage, gain: f64) -> Result<PlanarImage> {
    let out = y
        .data()
        .iter()
        .zip(base.data())
        .map(|(v, b)| (b + gain * (v - b)).clamp(0.0, 1.0))
        .collect();
    PlanarImage::new(y.width(), y.height(), 1, out)
}

/// Runs one enhancement method on a 3-channel image.
pub fn enhance_with(img: &PlanarImage, method: Method, params: &EnhanceParams) -> Result<PlanarImage> {
    if img.channels() != 3 {
        return Err(Error::invalid("enhancement expects a 3-channel image"));
    }
    if method == Method::None {
        return Ok(img.clone());
    }
    let bp = &params.baseline;
    bp.validate()?;
    let ycc = rgb_to_ycbcr(img)?;
    let y = &ycc.y;
    let wls_single = || wls_filter(y, y, &params.fc.wls.with_lambda(params.fc.lambda1));
    let luminance = match method {
        Method::None => unreachable!(),
        Method::Imsharp => unsharp_mask(y, bp.sharp_sigma, bp.sharp_amount)?,
        Method::Bf => boost(
            y,
            &bilateral_filter(y, bp.bf_sigma_s, bp.bf_sigma_r)?,
            bp.detail_boost,
        )?,
        Method::Gf => boost(y, &guided_filter(y, y, bp.gf_radius, bp.gf_eps)?, bp.detail_boost)?,
        Method::Wls => boost(y, &wls_single()?, bp.detail_boost)?,
        Method::BfwlsAvg => {
            let bf = bilateral_filter(y, bp.bf_sigma_s, bp.bf_sigma_r)?;
            let wls = wls_single()?;
            let avg = bf
                .data()
                .iter()
                .zip(wls.data())
                .map(|(a, b)| (0.5 * (a + b)).clamp(0.0, 1.0))
                .collect();
            PlanarImage::new(y.width(), y.height(), 1, avg)?
        }
        Method::FcAvg | Method::FcMax => {
            let fusion = if method == Method::FcAvg {
                Fusion::Avg
            } else {
                Fusion::Max
            };
            let fc = FcParams { fusion, ..params.fc };
            fc.validate()?;
            enhance_luminance(y, &fc)?
        }
    };
    recombine(ycc, luminance)
}
