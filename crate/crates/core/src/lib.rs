//! Real and complex elliptically symmetric distributions: sampling, densities,
//! robust scatter estimation and asymptotic covariance / Cramér–Rao bounds.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod density;
pub mod error;
pub mod estimate;
pub mod families;
pub mod matrix_kit;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod spec;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use asymptotic::{BuiltinKind, BuiltinModel, EstimatorAsymptotics, ParametricModel};
pub use density::LogDensityValue;
pub use estimate::{EstimateResult, EstimatorConfig, LocationMode, Method, ShapeScale, Weight};
pub use families::{Family, FamilyKernel, Realness};
pub use matrix_kit::{StructuredCov, SymMatrix};
pub use sampler::{SampleBatch, SampleData};
pub use spec::{ComplexSpec, DistributionSpec, RealSpec};

/// Double precision instantiations.
pub type Kernel = FamilyKernel<f64>;
pub type Matrix = SymMatrix<f64>;
pub type RSpec = RealSpec<f64>;
pub type CSpec = ComplexSpec<f64>;
pub type Spec = DistributionSpec<f64>;
pub type Batch = SampleBatch<f64>;
pub type Fit = EstimateResult<f64>;
pub type Config = EstimatorConfig<f64>;
pub type Asymptotics = EstimatorAsymptotics<f64>;

/// Single precision instantiations.
pub type Kernel32 = FamilyKernel<f32>;
pub type Matrix32 = SymMatrix<f32>;
pub type Spec32 = DistributionSpec<f32>;
