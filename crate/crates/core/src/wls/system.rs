use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::SmoothnessWeights;

/// The five-point system `(I + lambda * L_g) u = g`.
///
/// `off_x[p]` couples pixel `p` with its right neighbour and `off_y[p]` with
/// the pixel below; both are zero where the neighbour would leave the image.
/// The matrix is symmetric, so the left/upper couplings are read from the
/// neighbour's entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    width: usize,
    height: usize,
    diag: Vec<f64>,
    off_x: Vec<f64>,
    off_y: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_x(&self) -> &[f64] {
        &self.off_x
    }

    pub fn off_y(&self) -> &[f64] {
        &self.off_y
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Matrix entry `(row, col)`; zero outside the stencil.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let w = self.width;
        let (lo, hi) = if row <= col { (row, col) } else { (col, row) };
        match hi - lo {
            0 => self.diag[row],
            1 if lo % w != w - 1 => self.off_x[lo],
            d if d == w => self.off_y[lo],
            _ => 0.0,
        }
    }

    /// `out = A * v`.
    ///
    /// Couplings that would leave the image are stored as zero, so the
    /// shifted products below need no per-pixel bounds tests. Terms are
    /// added in the order diagonal, right, left, down, up.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let w = self.width;
        let n = self.len();
        assert!(v.len() == n && out.len() == n);
        for ((o, d), v) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * v;
        }
        if n > 1 {
            let ox = &self.off_x[..n - 1];
            for ((o, c), v) in out[..n - 1].iter_mut().zip(ox).zip(&v[1..]) {
                *o += c * v;
            }
            for ((o, c), v) in out[1..].iter_mut().zip(ox).zip(&v[..n - 1]) {
                *o += c * v;
            }
        }
        if n > w {
            let oy = &self.off_y[..n - w];
            for ((o, c), v) in out[..n - w].iter_mut().zip(oy).zip(&v[w..]) {
                *o += c * v;
            }
            for ((o, c), v) in out[w..].iter_mut().zip(oy).zip(&v[..n - w]) {
                *o += c * v;
            }
        }
    }
}

/// Expands `I + lambda * (Dx^T Ax Dx + Dy^T Ay Dy)` into stencil coefficients.
///
/// Forward differences that would leave the image carry zero weight, which
/// gives the Neumann boundary and zero row sums of the Laplacian part.
pub fn assemble_system(
    weights: &SmoothnessWeights,
    channel: &PlanarImage,
    lambda: f64,
) -> Result<SparseSystem> {
    if channel.channels() != 1 {
        return Err(Error::invalid("WLS channel must be single-channel"));
    }
    if !weights.ax.same_dims(channel) || !weights.ay.same_dims(channel) {
        return Err(Error::invalid(format!(
            "weights are {}x{}, channel is {}x{}",
            weights.ax.width(),
            weights.ax.height(),
            channel.width(),
            channel.height()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let (w, h) = (channel.width(), channel.height());
    let n = w * h;
    let (ax, ay) = (weights.ax.data(), weights.ay.data());
    let mut diag = vec![1.0; n];
    let mut off_x = vec![0.0; n];
    let mut off_y = vec![0.0; n];
    for p in 0..n {
        let (x, y) = (p % w, p / w);
        if x + 1 < w {
            let c = lambda * ax[p];
            off_x[p] = -c;
            diag[p] += c;
            diag[p + 1] += c;
        }
        if y + 1 < h {
            let c = lambda * ay[p];
            off_y[p] = -c;
            diag[p] += c;
            diag[p + w] += c;
        }
    }
    Ok(SparseSystem {
        width: w,
        height: h,
        diag,
        off_x,
        off_y,
        rhs: channel.data().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(w: usize, h: usize, ax: Vec<f64>, ay: Vec<f64>) -> SmoothnessWeights {
        SmoothnessWeights {
            ax: PlanarImage::from_raw(w, h, 1, ax).unwrap(),
            ay: PlanarImage::from_raw(w, h, 1, ay).unwrap(),
        }
    }

    #[test]
    fn zero_lambda_is_identity() {
        let wts = weights(3, 2, vec![5.0; 6], vec![7.0; 6]);
        let g = PlanarImage::constant(3, 2, 1, 0.3).unwrap();
        let sys = assemble_system(&wts, &g, 0.0).unwrap();
        assert!(sys.diag().iter().all(|&d| d == 1.0));
        assert!(sys.off_x().iter().chain(sys.off_y()).all(|&o| o == 0.0));
    }

    #[test]
    fn two_pixel_system() {
        let (wt, lambda) = (3.0, 0.5);
        let wts = weights(2, 1, vec![wt, 0.0], vec![0.0, 0.0]);
        let g = PlanarImage::new(2, 1, 1, vec![0.2, 0.7]).unwrap();
        let sys = assemble_system(&wts, &g, lambda).unwrap();
        assert_eq!(sys.entry(0, 0), 1.0 + lambda * wt);
        assert_eq!(sys.entry(1, 1), 1.0 + lambda * wt);
        assert_eq!(sys.entry(0, 1), -lambda * wt);
        assert_eq!(sys.entry(1, 0), -lambda * wt);
        assert_eq!(sys.rhs(), &[0.2, 0.7]);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let (w, h) = (4, 3);
        let ax: Vec<f64> = (0..12)
            .map(|i| if i % 4 == 3 { 0.0 } else { 1.0 + i as f64 })
            .collect();
        let ay: Vec<f64> = (0..12)
            .map(|i| if i >= 8 { 0.0 } else { 0.5 * i as f64 + 0.1 })
            .collect();
        let sys = assemble_system(
            &weights(w, h, ax, ay),
            &PlanarImage::constant(w, h, 1, 0.0).unwrap(),
            0.8,
        )
        .unwrap();
        for row in 0..12 {
            let s: f64 = (0..12).map(|c| sys.entry(row, c)).sum::<f64>() - 1.0;
            assert!(s.abs() < 1e-12, "row {row} sums to {s}");
            for col in 0..12 {
                assert_eq!(sys.entry(row, col), sys.entry(col, row));
                if row != col {
                    assert!(sys.entry(row, col) <= 0.0);
                }
            }
        }
        // Pixels in the last column have no right neighbour.
        assert_eq!(sys.entry(3, 4), 0.0);
    }

    #[test]
    fn apply_matches_entries() {
        let (w, h) = (3, 3);
        let wts = weights(
            w,
            h,
            (0..9).map(|i| 0.3 * i as f64).collect(),
            (0..9).map(|i| 1.0 + i as f64).collect(),
        );
        let sys = assemble_system(&wts, &PlanarImage::constant(w, h, 1, 0.0).unwrap(), 1.3).unwrap();
        let v: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let mut out = vec![0.0; 9];
        sys.apply(&v, &mut out);
        for (r, got) in out.iter().enumerate() {
            let expect: f64 = (0..9).map(|c| sys.entry(r, c) * v[c]).sum();
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let wts = weights(2, 2, vec![1.0; 4], vec![1.0; 4]);
        let g = PlanarImage::constant(3, 2, 1, 0.1).unwrap();
        assert!(assemble_system(&wts, &g, 0.5).is_err());
        let g = PlanarImage::constant(2, 2, 1, 0.1).unwrap();
        assert!(assemble_system(&wts, &g, -1.0).is_err());
    }
}
