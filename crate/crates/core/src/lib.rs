//! Numerical laboratory for free Schrödinger resolvent kernels: special functions,
//! kernel evaluation, a symbolic engine for time-domain transforms of kernel
//! products, regularized oscillatory spectral integrals, and the first Born term
//! of an oscillating counterexample potential.

pub mod counterexample;
pub mod kernel_calculus;
pub mod oscillatory;
pub mod par;
pub mod quad;
pub mod resolvent;
pub mod specfun;

pub use num_complex::Complex64;
