//! Evaluation metrics: the epipolar suite (normalized eight-point, RANSAC,
//! Sampson error, EE-median / EIR) and PSNR / SSIM on images.

mod epipolar;
mod image;

pub use epipolar::{
    eight_point, epipolar_metrics, ransac_fundamental, sampson_error, Correspondence,
    CorrespondenceSet, CorrespondenceSource, EpipolarMetrics, FundamentalMatrix, RansacConfig,
    RansacResult,
};
pub use image::{psnr, ssim, Image};
