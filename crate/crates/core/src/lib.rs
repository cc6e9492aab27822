//! Numerical laboratory for the focusing fifth-order Gardner equation
//!
//! u_t + u_5x + 10μ²u_3x + 20μuu_3x + 10u²u_3x + 120μ³uu_x + 180μ²u²u_x
//!     + 120μu³u_x + 10u_x³ + 40μu_xu_xx + 40uu_xu_xx + 30u⁴u_x = 0
//!
//! on a periodic box: exact solitons and breathers, conserved functionals, a
//! pseudo-spectral ETDRK4 integrator, the linearized operator around the
//! breather, and the wave-packet construction behind weak ill-posedness.

pub mod ad;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod field;
pub mod functionals;
pub mod illposed;
pub mod specl;

pub use error::{Error, Result};
pub use functionals::GardnerParams;
pub use field::{dealiased_product, inner_l2, sobolev_norm, spectral_derivative, Grid, RealField};
