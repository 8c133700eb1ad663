pub mod continuation;
pub mod jacobian;
pub mod homology;
pub mod monodromy;
pub mod periods;
pub mod variational;

pub use jacobian::{abel_map, divisor_to_e, riemann_constant, JacobianPoint};
pub use continuation::{continue_sheets, ContinuationOptions, SheetTrackedPath};
pub use homology::{choose_base_point, homology_basis, HomologyBasis, StarGraph};
pub use monodromy::{monodromy, MonodromyRepresentation};
pub use periods::{compute_periods, compute_periods_default, period_matrices, PeriodData, PeriodOptions};
