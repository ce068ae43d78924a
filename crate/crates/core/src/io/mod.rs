//! Scenario configuration and persistence of runs and studies.

mod files;
mod scenario;

pub use files::{ledger_csv, sha256_hex, write_atomic, RunManifest, Snapshot};
pub use scenario::{
    load_scenario, BoundaryConfig, FieldConfig, ForcesConfig, Geometry, MaterialConfig, MaterialKind,
    MeshConfig, OutputConfig, Scenario, SolverConfig, StudyConfig, TimeConfig, ViscousKind,
};

#[cfg(test)]
mod tests;
