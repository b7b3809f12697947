//! The six pipeline stages. Each `run` reads all of its inputs from the
//! output root (or from explicit import paths), so staged and single-command
//! pipeline runs produce identical bytes.

pub mod beamform;
pub mod detect;
pub mod evaluate;
pub mod fuse;
pub mod localize;
pub mod simulate;
