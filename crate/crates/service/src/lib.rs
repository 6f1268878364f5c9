//! HTTP service and command-line support for waypoint sessions.

pub mod profile;
pub mod server;

pub use profile::{OracleSpec, Profile, ProfileError, ToolsSpec};
pub use server::{router, serve, AppState, ServiceConfig, SERVICE_SCHEMA};
