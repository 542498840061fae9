//! Logical-qubit fidelity of the surface code in contact with a
//! finite-temperature bosonic environment, evaluated through its effective
//! classical bilayer spin model.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! physical bath parameters ──env──> dimensionless couplings
//!        couplings + lattice ──brute / binder / mc──> boundary correlator
//!        correlator curves ──analysis──> fidelity, thresholds
//! ```
//!
//! * [`env`]: kernel integrals, tabulated closed forms, regime tags, and the
//!   reduction to model couplings.
//! * [`lattice`]: plaquette geometry, mass fields, and the star-constrained
//!   spin expansion.
//! * [`energy`]: effective Hamiltonians and incremental flip updates.
//! * [`brute`]: exhaustive enumeration (the oracle).
//! * [`binder`]: exact row recursion, handles complex couplings.
//! * [`mc`]: Metropolis sampling with binned errors and seeded streams.
//! * [`analysis`]: critical couplings and finite-size crossing extraction.

pub mod amplitude;
pub mod analysis;
pub mod binder;
pub mod brute;
pub mod energy;
pub mod env;
pub mod lattice;
pub mod mc;
pub mod quad;

pub use amplitude::{AmplitudePair, LogScaled, ObservableReport};
pub use analysis::{
    critical_coupling_ohmic, critical_coupling_subohmic, critical_coupling_super, find_crossing,
    single_qubit_fidelity, FidelityCurve, ThresholdResult,
};
pub use binder::{binder_amplitudes, binder_fidelity, binder_partition};
pub use brute::{brute_force, GibbsModel};
pub use energy::{ComplexEnergy, SpinModel};
pub use env::{
    classify_regime, f_closed_form, f_quadrature, phi_closed_form, phi_quadrature,
    reduce_to_model, EnvironmentSpec, KernelValue, ModelCouplings, ModelVariant,
};
pub use lattice::{build_lattice, mass_to_spin, LatticeGeometry, MassFieldConfig};
pub use mc::{estimate_fidelity, metropolis_sweep, run_sweep, EngineKind, FidelityEstimate, McSchedule};
