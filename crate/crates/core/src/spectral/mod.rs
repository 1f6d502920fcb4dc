//! Divergence-free Fourier representation on the periodic square.

mod field;
mod lattice;
mod properties;
mod transform;

pub use field::{project_leray, PhysicalField, SpectralField, VectorSpectrum};
pub use lattice::{Lattice, Wavevector};
pub use properties::{property_suite, PropertyCheck};
pub use transform::{
    advect, bilinear_b, grid_spectrum, transform_to_physical, transform_to_spectral, Advection,
};
