//! The 2D lattice model, MERA-style circuits, their optimization and the
//! bounds they are checked against.

mod bounds;
mod generators;
mod lattice;
mod mera;
mod optimize;

pub use bounds::{anderson_bound, free_fermion_energy};
pub use generators::{default_degree, BasisElement, GeneratorBasis};
pub use lattice::{build_hamiltonian, hamiltonian_polynomial, HamiltonianTerm, LatticeModel};
pub use mera::{
    build_mera, build_mera_with, identity_circuit, BlockShape, GateRole, GateSpec, MeraAnsatz,
    MeraLayer, MeraOptions, Parity,
};
pub use optimize::{
    energy, energy_with_stats, optimize, GradientMethod, OptimizeOptions, Optimized, ParityRun,
    TraceRecord,
};
