//! Live programming probes on top of the Debug Adapter Protocol.
//!
//! A probe is a comment such as `#@foo(3)` in a source file. The engine
//! loads the file into a keep-alive agent running under a debug adapter,
//! calls the annotated function, steps through it and returns a
//! [`liverec_core::StackRecording`] of every line it visited.

pub mod backend;
pub mod bench;
pub mod engine;
pub mod mock_adapter;
pub mod mockfile;
pub mod schema;
pub mod server;
pub mod session;

pub use backend::{Backend, BackendEnv};
pub use engine::Engine;
pub use schema::ProbeResult;
