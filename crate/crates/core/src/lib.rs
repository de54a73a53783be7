//! Whole-slide-image tile serving.
//!
//! - [`container`]: the `.iris` pyramidal tile container, validated on open
//!   and memory-mapped into shared, reference-counted slide handles.
//! - [`encoder`]: builds containers from rasters or seeded synthetic slides.
//! - [`router`]: strict parsing of the Iris and WADO-RS request grammars.
//! - [`server`]: the HTTP(S) service, with network threads and file-system
//!   threads joined by a FIFO task queue.
//! - [`bench`]: a ramped virtual-user load tester.
//!
//! Runnable programs live in `examples/`; see the README for a tour.

pub mod bench;
pub mod container;
pub mod encoder;
pub mod naming;
pub mod roles;
pub mod router;
pub mod schema;
pub mod server;
