//! Linear-algebra kernels shared by the discretization and analysis modules.

pub mod band;
pub mod dense;
pub mod pencil;
pub mod sparse;

pub use band::BandMatrix;
pub use dense::{complex_eigen, hermitian_max_eigenvalue, min_singular_value, ComplexEigen};
pub use pencil::{PencilEigen, SymmetricPencil};
pub use sparse::CsrMatrix;
