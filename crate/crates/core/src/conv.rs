//! Dense 2-D kernels and convolution with symmetric (half-sample) padding.

use crate::image::PlanarImage;

/// Square kernel of odd side `2 * radius + 1`, stored row-major with the
/// origin at the center: `at(dx, dy)` is the weight for offset `(dx, dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Samples `f(dx, dy)` on the `(2r+1)^2` grid.
    pub fn sample(radius: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let side = 2 * radius + 1;
        let r = radius as isize;
        let mut weights = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                weights.push(f(dx as f64, dy as f64));
            }
        }
        Self { radius, weights }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.weights[((dy + r) * (2 * r + 1) + dx + r) as usize]
    }

    /// Replaces the center tap with the negated sum of all other taps, so the
    /// kernel sums to zero up to one rounding.
    pub fn with_zero_sum(mut self) -> Self {
        let center = self.weights.len() / 2;
        let mut rest = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            if i != center {
                rest += -w;
            }
        }
        self.weights[center] = rest;
        self
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let side = self.side();
        let mut weights = vec![0.0; side * side];
        for row in 0..side {
            for col in 0..side {
                weights[col * side + row] = self.weights[row * side + col];
            }
        }
        Self {
            radius: self.radius,
            weights,
        }
    }
}

/// Maps an out-of-range index into `[0, n)` by half-sample mirroring
/// (`-1 -> 0`, `n -> n - 1`), repeating for offsets larger than the image.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Full 2-D convolution `out(p) = sum_d plane(p - d) * k(d)` on one plane.
pub fn convolve_plane(plane: &[f64], width: usize, height: usize, kernel: &Kernel) -> Vec<f64> {
    let r = kernel.radius as isize;
    let side = kernel.side();
    // Reflected index tables per offset keep the inner loop branch-free.
    let cols: Vec<Vec<usize>> = (-r..=r)
        .map(|d| (0..width as isize).map(|x| reflect(x - d, width)).collect())
        .collect();
    let rows: Vec<Vec<usize>> = (-r..=r)
        .map(|d| (0..height as isize).map(|y| reflect(y - d, height)).collect())
        .collect();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        let dst = &mut out[y * width..(y + 1) * width];
        for ky in 0..side {
            let src = &plane[rows[ky][y] * width..(rows[ky][y] + 1) * width];
            for (kx, col) in cols.iter().enumerate() {
                let w = kernel.weights[ky * side + kx];
                if w == 0.0 {
                    continue;
                }
                for (o, &sx) in dst.iter_mut().zip(col) {
                    *o += w * src[sx];
                }
            }
        }
    }
    out
}

/// Convolution with a zero-sum kernel written as
/// `out(p) = sum_{d != 0} k(d) * (plane(p - d) - plane(p))`.
///
/// Equal to [`convolve_plane`] when the taps sum to zero, but flat regions
/// give exactly 0 and an impulse reproduces the kernel bit for bit.
pub fn convolve_plane_zero_sum(plane: &[f64], width: usize, height: usize, kernel: &Kernel) -> Vec<f64> {
    let r = kernel.radius as isize;
    let side = kernel.side();
    let center = side * side / 2;
    let cols: Vec<Vec<usize>> = (-r..=r)
        .map(|d| (0..width as isize).map(|x| reflect(x - d, width)).collect())
        .collect();
    let rows: Vec<Vec<usize>> = (-r..=r)
        .map(|d| (0..height as isize).map(|y| reflect(y - d, height)).collect())
        .collect();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        let here = &plane[y * width..(y + 1) * width];
        let dst = &mut out[y * width..(y + 1) * width];
        for ky in 0..side {
            let src = &plane[rows[ky][y] * width..(rows[ky][y] + 1) * width];
            for (kx, col) in cols.iter().enumerate() {
                let k = ky * side + kx;
                let w = kernel.weights[k];
                if k == center || w == 0.0 {
                    continue;
                }
                for ((o, &sx), &c) in dst.iter_mut().zip(col).zip(here) {
                    *o += w * (src[sx] - c);
                }
            }
        }
    }
    out
}

/// Convolves a single-channel image, returning an unrestricted-range map.
pub fn convolve(img: &PlanarImage, kernel: &Kernel) -> PlanarImage {
    assert_eq!(img.channels(), 1, "convolve expects a single-channel image");
    img.with_data(convolve_plane(img.data(), img.width(), img.height(), kernel))
}

/// [`convolve_plane_zero_sum`] on a single-channel image.
pub fn convolve_zero_sum(img: &PlanarImage, kernel: &Kernel) -> PlanarImage {
    assert_eq!(img.channels(), 1, "convolve expects a single-channel image");
    img.with_data(convolve_plane_zero_sum(
        img.data(),
        img.width(),
        img.height(),
        kernel,
    ))
}

/// Normalized 1-D Gaussian taps of radius `ceil(3 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with symmetric padding.
pub fn gaussian_blur_plane(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * row[reflect(x as isize + k as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(y as isize + k as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Mean over the `(2r+1)^2` window centered at each pixel, symmetric padding.
pub fn box_mean_reflect(plane: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let side = (2 * radius + 1) as f64;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let s: f64 = (-r..=r).map(|d| row[reflect(x as isize + d, width)]).sum();
            tmp[y * width + x] = s / side;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let s: f64 = (-r..=r)
                .map(|d| tmp[reflect(y as isize + d, height) * width + x])
                .sum();
            out[y * width + x] = s / side;
        }
    }
    out
}
