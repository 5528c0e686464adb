//! Smoke/non-smoke classification of laparoscopic frames.
//!
//! The pipeline is: decode and resize a frame, enhance its luminance with a
//! two-scale weighted-least-squares detail fusion ([`enhance`]), extract the
//! 40-dimensional GM-LoG statistics of the gray image ([`features`]) and
//! score it with a linear SVM ([`svm`]). The compared baseline enhancers
//! ([`baseline`]), the saturation-histogram classifiers ([`saturation`]) and
//! the evaluation harness ([`eval`]) live alongside.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod conv;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod features;
pub mod image;
pub mod saturation;
pub mod svm;
pub mod wls;

pub use crate::error::{Error, Result};
pub use crate::image::{PlanarImage, YCbCrImage};
