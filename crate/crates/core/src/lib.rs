//! Exact orbital integrals, lattice enumeration and related analytic tools
//! for unramified quadratic extensions of `Q_p`.

pub mod padic;
pub mod linalg;
pub mod lattice;
pub mod orbit;
pub mod orbital;
pub mod gen;
pub mod weil;
pub mod arch;
pub mod series;
pub mod serial;

/// Double-precision archimedean value.
pub type ArchValue64 = arch::ArchValue<f64>;
/// Single-precision archimedean value.
pub type ArchValue32 = arch::ArchValue<f32>;
/// Double-precision complex archimedean value.
pub type ArchComplex64 = arch::ArchComplex<f64>;
