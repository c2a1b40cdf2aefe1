//! Numerical building blocks: quadrature, root finding, finite differences,
//! piecewise polynomials, and Laplace inversion.

pub mod fd;
pub mod laplace;
pub mod poly;
pub mod quad;
pub mod roots;
