//! Steerable neural ODEs on homogeneous spaces M = G/H.
//!
//! The crate couples a base flow on M with a steering flow on the
//! stabiliser H, driven by a principal connection: points move along a
//! learnable vector field while attached feature vectors are parallel
//! transported. Invariant connections are parametrised through their
//! restriction to the identity, equivariance of the coupled map is
//! verified statistically, and a trivial-stabiliser continuous
//! normalizing flow plus a finite-difference trainer round out the
//! toolkit.

pub mod bundle;
pub mod config;
pub mod connection;
pub mod coords;
pub mod density;
pub mod error;
pub mod features;
pub mod fields;
pub mod equivariance;
pub mod groups;
pub mod learn;
pub mod sample;
pub mod transport;

pub use bundle::{BasePoint, BaseSpace, Quotient, SectionChart};
pub use connection::{ConnectionForm, WangMap, WangReport};
pub use coords::Coords;
pub use density::{divergence, integrate_cnf, DensityState};
pub use equivariance::{check_equivariance, counterexample_suite, EquivarianceReport};
pub use error::{Error, Result};
pub use features::{BaseMap, MackeyFunction, Representation};
pub use fields::{FieldKind, ScalarField, TabulatedNet, VectorFieldSpec};
pub use groups::{AlgebraElement, GroupElement, GroupSpec, TangentVector};
pub use learn::{fit, generate_dataset, loss, Dataset, FitResult, TrainConfig};
pub use transport::{
    integrate_base, BaseCurve, BasePath, Holonomy, SteerableModel, TransportResult,
};
