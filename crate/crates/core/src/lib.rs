pub mod channel;
pub mod decoherence;
pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod space;

pub use error::{Error, Result};

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
