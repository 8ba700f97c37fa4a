//! Numerical sub-Riemannian geometry on graded Lie algebras: Carnot group
//! arithmetic, Carnot–Carathéodory distances, pointed Gromov–Hausdorff
//! profiles, the classification families and the coadjoint layer.

pub mod algebra;
pub mod carnot;
pub mod classification;
pub mod coadjoint;
pub mod cc;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod poly;
pub mod profiles;
pub mod rng;

pub use algebra::{
    builtin, AlgebraFile, AxiomCheck, CheckStatus, GradeBlock, GradeLabel, GradedAlgebra,
    JacobiMode, JacobiResidual, Profile, ValidationReport,
};
pub use carnot::GroupElement;
pub use error::{HensError, Result};
pub use poly::SparsePoly;
