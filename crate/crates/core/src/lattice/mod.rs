//! Periodic 2-D lattices, fields, spectral differential operators and
//! white-noise generation.

mod field;
mod grid;
mod noise;
mod spectral;

pub use field::{ComplexFieldPair, RealField};
pub use grid::LatticeGrid;
pub use noise::{sample_noise_field, stream_seed, NoiseSpec, NoiseStream};
pub use spectral::{biharmonic, laplacian, structure_factor_transform, SpectralOps};
