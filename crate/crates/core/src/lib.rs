//! OAM links between misaligned uniform circular arrays.
//!
//! The crate models the line-of-sight channel between two `N`-element rings
//! that may be offset and tilted relative to each other, and the joint
//! beamforming and pre-detection pair that turns any such channel into a
//! circulant one. After that pair the ordinary DFT-based OAM modulator
//! separates the modes again, so detection runs per mode.
//!
//! ```
//! use oam_bepre::{bepre_transforms, channel_matrix, LinkGeometryF64};
//!
//! let geom = LinkGeometryF64::aligned(8, 0.01, 1.0).with_offset(0.0, 0.4);
//! let h = channel_matrix(&geom).unwrap();
//! let t = bepre_transforms(&h.entries).unwrap();
//! let report = t.verify(&h.entries).unwrap();
//! assert!(report.equivalence_residual < 1e-10);
//! ```
//!
//! Everything is generic over [`Real`], implemented for `f32` and `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bepre;
pub mod capacity;
pub mod channel;
pub mod complexity;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod oam_transform;
pub mod scalar;

pub use bepre::{
    bepre_transforms, build_circulant, numerical_rank, svd, BePreTransforms, SvdFactors,
    VerificationReport,
};
pub use capacity::{
    bepre_mode_gains, effective_noise, kkt_residual, mode_domain_channel, parallel_channel_rate,
    se_with_bepre, se_without_bepre, water_filling, GainConvention, PowerAllocation,
};
pub use channel::{channel_gain, channel_matrix, path_gain, ChannelMatrix};
pub use complexity::{addition_gap, count_joint_ml, count_permode_ml, OpCount, COST_MODEL};
pub use detection::{
    awgn, decompose, ml_joint_oracle, ml_per_mode, monte_carlo_ser, transmit, Constellation,
    LinkSimulator, NoiseModel, SerConfig, SerReport,
};
pub use error::{Error, Result};
pub use geometry::LinkGeometry;
pub use oam_transform::{dft_matrix, idft_matrix, ModeIndexMap, OamModulator};
pub use scalar::{CMatrix, CVector, Cplx, Real};

pub type C64 = Cplx<f64>;
pub type C32 = Cplx<f32>;
pub type CMatrixF64 = CMatrix<f64>;
pub type CMatrixF32 = CMatrix<f32>;
pub type LinkGeometryF64 = LinkGeometry<f64>;
pub type LinkGeometryF32 = LinkGeometry<f32>;
pub type ChannelMatrixF64 = ChannelMatrix<f64>;
pub type BePreTransformsF64 = BePreTransforms<f64>;
pub type BePreTransformsF32 = BePreTransforms<f32>;
pub type ConstellationF64 = Constellation<f64>;
pub type NoiseModelF64 = NoiseModel<f64>;
pub type PowerAllocationF64 = PowerAllocation<f64>;
