//! Core of the live probe engine: DAP framing, probe annotations, stack
//! recordings, the recording algorithm and a scripted mock debuggee.
//!
//! Everything here is `no_std` with `alloc`; process handling, sockets and
//! file formats live in the `liverec` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod mock;
pub mod probespec;
pub mod recorder;
pub mod recording;
pub mod wire;

pub use probespec::{parse_annotation, AnnotationError, AnnotationSpan, ProbeRequest};
pub use recorder::{record, CallerMode, ProbeDebugger, ProbeProfile, ReturnRule, DEFAULT_MAX_STEPS};
pub use recording::{
    histories, snapshot_at, Histories, IndexError, RecordingStatus, StackFrameSnapshot,
    StackRecording, Variable,
};
pub use wire::{encode, DapMessage, FrameDecoder, WireError};
