use crate::validate::ValidationReport;

/// Errors raised by the model kernels and the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("singular branch '{0}'")]
    SingularBranch(String),
    #[error("negative Reynolds number {0}")]
    NegativeReynolds(f64),
    #[error("pressure out of domain: {0} Pa")]
    PressureOutOfDomain(f64),
    #[error("device '{0}' overloaded: output {1:.3} W exceeds rating {2:.3} W")]
    DeviceOverloaded(String, f64, f64),
    #[error("unresolved coupling node for device '{0}'")]
    UnresolvedCouplingNode(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular Jacobian in {0} block")]
    SingularJacobian(String),
    #[error("network failed validation:\n{0}")]
    InvalidNetwork(ValidationReport),
}

pub type Result<T> = std::result::Result<T, Error>;
