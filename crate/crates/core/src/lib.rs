//! Periodic orbits of polynomial delay differential equations and their
//! Floquet spectra, computed with matrix-valued continued fractions.

pub mod adjoint;
pub mod floquet;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod orbit;
pub mod risken;
pub mod roots;
pub mod systems;
