//! File formats: instance manifests, WCNF, solver output and plan files.

mod canonical;
pub mod manifest;
pub mod plan;
pub mod solver_output;
pub mod wcnf;

pub use canonical::to_canonical_json;
pub use manifest::{InstanceManifest, ManifestMeta, SCHEMA_VERSION};
pub use plan::{read_plan, write_plan};
pub use solver_output::{parse_solver_output, SolverOutput, SolverStatus};
pub use wcnf::{read_wcnf, write_artifact, write_formula, ParsedWcnf, WcnfFormat};
