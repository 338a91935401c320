//! Component-level energy modeling and architectural exploration for
//! computational CMOS image sensors.
//!
//! A design is three decoupled descriptions: an algorithm DAG of stencil
//! stages, a hardware description (analog arrays, digital accelerators,
//! memories, links), and a mapping between the two. The framework
//! validates the combination, checks that the pipeline can sustain a
//! target frame rate without stalls, and produces a per-component energy
//! breakdown for one frame.

pub mod analog;
pub mod checks;
pub mod comm;
pub mod design;
pub mod digital;
pub mod ir;
pub mod oracle;
pub mod report;
pub mod timing;
pub mod units;
