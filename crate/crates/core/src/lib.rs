pub mod constants;
pub mod curve;
pub mod divisor;
pub mod elliptic;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod quadrature;
pub mod surface;
pub mod theta;

pub use curve::{AutomorphismElement, BranchId, DifferentialIndex, FiberProductCurve, HyperellipticFactor, Sheet, SurfacePoint, C64};
pub use divisor::{BetaVector, ExponentTable, TauProfile};
pub use error::{Error, Result};
pub use harness::{CheckReport, Config, RunOptions, Status, ThomaeExponents};
pub use kernels::{ExpansionFit, FractionalPowerProduct};
pub use surface::jacobian::{JacobianPoint, RiemannConstant};
pub use surface::{HomologyBasis, MonodromyRepresentation, PeriodData, SheetTrackedPath};
pub use theta::{Characteristic, ThetaContext, ThetaValue};
