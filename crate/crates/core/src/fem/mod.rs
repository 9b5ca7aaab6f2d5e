//! P1 finite elements on a fixed unit-ball mesh, pulled back onto `B_h`.

mod assembly;
mod derivative;
mod eigen;
mod mesh;
mod pullback;

pub use derivative::{
    eigen_derivative_field, lambda_second_derivative_boundary, lambda_second_derivative_volumetric,
    DerivativeField, SecondDerivative,
};
pub use eigen::{
    ball_eigenvalue, lambda1, lambda1_gradient, lambda1_gradient_with, lambda1_path, lambda1_with, EigenSolution,
    PathPoint,
};
pub use mesh::{build_mesh, BallMesh};
pub use pullback::{
    cutoff, deformation_gradient, deformation_map, pullback_at, pullback_coefficients, pullback_coefficients_with,
    PullbackCoefficients, CUTOFF_INNER, CUTOFF_OUTER,
};
