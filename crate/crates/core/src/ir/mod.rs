//! Typed intermediate representation of a design: the algorithm DAG, the
//! hardware description, and the mapping between them.
//!
//! All IR values are immutable once constructed, so a design can be
//! shared freely across concurrent simulation runs.

mod algorithm;
mod hardware;
mod mapping;

pub use algorithm::{
    build_graph, stage_op_count, AlgorithmGraph, Dims, DnnLayer, GraphError, Stage, StageKind,
    StageShape,
};
pub use hardware::{
    ACellSpec, AComponentKind, AComponentSpec, AnalogArraySpec, AnalogCellClass, CapNode,
    ComponentBank, DigitalUnitKind, DigitalUnitSpec, FomPoint, HardwareDescription, HardwareError,
    LayerSpec, LinkKind, LinkSpec, MemoryKind, MemorySpec, SignalDomain, UnitRef, GM_ID_RANGE,
};
pub use mapping::MappingTable;
