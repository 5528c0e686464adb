//! Weighted-least-squares edge-preserving smoothing.
//!
//! The filtered image is the solution of `(I + lambda * L_g) u = g`, where
//! `L_g = Dx^T Ax Dx + Dy^T Ay Dy` is a graph Laplacian whose edge weights
//! shrink across strong log-luminance gradients of the guide image. Large
//! `lambda` smooths more; edges with large gradients are preserved.

mod pcg;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::PlanarImage;

pub use pcg::{conjugate_gradient, Preconditioner, Solution};
pub use system::{assemble_system, SparseSystem};

/// Offset added to the guide before taking `log10`.
pub const LOG_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WlsParams {
    /// Balance between the data term and the smoothness term.
    pub lambda: f64,
    /// Gradient-sensitivity exponent of the smoothness weights.
    pub alpha: f64,
    /// Regularizer keeping weights finite on flat regions.
    pub eps_w: f64,
    /// Relative residual `||A u - g|| / ||g||` at which CG stops.
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    #[serde(default)]
    pub preconditioner: Preconditioner,
}

impl Default for WlsParams {
    fn default() -> Self {
        Self {
            lambda: 0.125,
            alpha: 1.2,
            eps_w: 1e-4,
            solver_tol: 1e-6,
            solver_max_iter: 1000,
            preconditioner: Preconditioner::default(),
        }
    }
}

impl WlsParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda >= 0.0
            && self.lambda.is_finite()
            && self.alpha > 0.0
            && self.eps_w > 0.0
            && self.solver_tol > 0.0
            && self.solver_max_iter > 0;
        if !ok {
            return Err(Error::invalid(format!("invalid WLS parameters {self:?}")));
        }
        Ok(())
    }
}

/// Per-edge smoothness weights: `ax[p]` for the edge to the right of `p`,
/// `ay[p]` for the edge below. Edges leaving the image carry weight zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessWeights {
    pub ax: PlanarImage,
    pub ay: PlanarImage,
}

/// `a = (|d log10(guide + 1e-4)|^alpha + eps_w)^-1` on forward differences.
pub fn build_weights(guide: &PlanarImage, params: &WlsParams) -> Result<SmoothnessWeights> {
    if guide.channels() != 1 {
        return Err(Error::invalid("WLS guide must be single-channel"));
    }
    params.validate()?;
    let (w, h) = (guide.width(), guide.height());
    let log: Vec<f64> = guide.data().iter().map(|v| (v + LOG_GUARD).log10()).collect();
    let weight = |d: f64| 1.0 / (d.abs().powf(params.alpha) + params.eps_w);
    let mut ax = vec![0.0; w * h];
    let mut ay = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                ax[p] = weight(log[p + 1] - log[p]);
            }
            if y + 1 < h {
                ay[p] = weight(log[p + w] - log[p]);
            }
        }
    }
    Ok(SmoothnessWeights {
        ax: PlanarImage::from_raw(w, h, 1, ax)?,
        ay: PlanarImage::from_raw(w, h, 1, ay)?,
    })
}

/// Solves the assembled system. The result is not clamped.
pub fn solve(system: &SparseSystem, params: &WlsParams) -> Result<PlanarImage> {
    params.validate()?;
    let sol = conjugate_gradient(
        system,
        params.solver_tol,
        params.solver_max_iter,
        params.preconditioner,
    )?;
    log::trace!(
        "wls solve {}x{}: {} iterations, residual {:e}",
        system.width(),
        system.height(),
        sol.iterations,
        sol.residual
    );
    PlanarImage::from_raw(system.width(), system.height(), 1, sol.values)
}

/// Smooths `channel` with weights derived from `guide`.
pub fn wls_filter(channel: &PlanarImage, guide: &PlanarImage, params: &WlsParams) -> Result<PlanarImage> {
    if !channel.same_dims(guide) {
        return Err(Error::invalid("WLS channel and guide dims differ"));
    }
    if params.lambda == 0.0 {
        params.validate()?;
        return Ok(channel.clone());
    }
    let weights = build_weights(guide, params)?;
    let system = assemble_system(&weights, channel, params.lambda)?;
    solve(&system, params)
}

/// Sum of squared forward differences in both directions.
pub fn gradient_energy(img: &PlanarImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let mut e = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                e += (d[p + 1] - d[p]).powi(2);
            }
            if y + 1 < h {
                e += (d[p + w] - d[p]).powi(2);
            }
        }
    }
    e
}
