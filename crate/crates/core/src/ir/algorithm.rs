//! Algorithm description: a DAG of stencil stages.
//!
//! Image-processing pipelines have regular, statically known access
//! patterns, so a stage is fully described by its input/output tensor
//! dimensions, stencil window, stride, and an arithmetic op count per
//! window. No value-level computation is ever expressed or simulated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tensor extent: height x width x channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h: u32,
    pub w: u32,
    pub c: u32,
}

impl Dims {
    pub fn new(h: u32, w: u32, c: u32) -> Self {
        Self { h, w, c }
    }

    pub fn volume(&self) -> u64 {
        self.h as u64 * self.w as u64 * self.c as u64
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

/// Stencil geometry of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageShape {
    pub input: Dims,
    pub output: Dims,
    /// Stencil window (kh, kw).
    pub kernel: (u32, u32),
    /// Stride (sh, sw).
    pub stride: (u32, u32),
}

impl StageShape {
    /// Elementwise shape: kernel 1x1, stride 1x1, output = input.
    pub fn elementwise(dims: Dims) -> Self {
        Self {
            input: dims,
            output: dims,
            kernel: (1, 1),
            stride: (1, 1),
        }
    }

    pub fn stencil(input: Dims, output: Dims, kernel: (u32, u32), stride: (u32, u32)) -> Self {
        Self {
            input,
            output,
            kernel,
            stride,
        }
    }

    /// Number of window positions along one axis: floor((in - k)/s) + 1.
    fn traversal(extent: u32, k: u32, s: u32) -> Option<u32> {
        if extent < k || s == 0 {
            return None;
        }
        Some((extent - k) / s + 1)
    }

    /// Expected output spatial dims under stencil traversal.
    pub fn expected_output(&self) -> Option<(u32, u32)> {
        let h = Self::traversal(self.input.h, self.kernel.0, self.stride.0)?;
        let w = Self::traversal(self.input.w, self.kernel.1, self.stride.1)?;
        Some((h, w))
    }

    /// Elements read per stencil window: kh * kw * in_c.
    pub fn window_volume(&self) -> u64 {
        self.kernel.0 as u64 * self.kernel.1 as u64 * self.input.c as u64
    }

    fn check_positive(&self) -> Result<(), String> {
        let dims = [
            self.input.h,
            self.input.w,
            self.input.c,
            self.output.h,
            self.output.w,
            self.output.c,
            self.kernel.0,
            self.kernel.1,
            self.stride.0,
            self.stride.1,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err("all dimensions must be >= 1".to_string());
        }
        Ok(())
    }

    /// Validate the stencil-traversal consistency rule.
    pub fn validate_stencil(&self) -> Result<(), String> {
        self.check_positive()?;
        match self.expected_output() {
            Some((h, w)) if h == self.output.h && w == self.output.w => Ok(()),
            Some((h, w)) => Err(format!(
                "output {}x{} inconsistent with stencil traversal; expected {}x{}",
                self.output.h, self.output.w, h, w
            )),
            None => Err(format!(
                "kernel {}x{} does not fit input {}x{}",
                self.kernel.0, self.kernel.1, self.input.h, self.input.w
            )),
        }
    }
}

/// One layer of a DNN stage: its output tensor and MACs per output element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnLayer {
    pub output: Dims,
    pub macs_per_output: u64,
}

impl DnnLayer {
    pub fn mac_count(&self) -> u64 {
        self.output.volume() * self.macs_per_output
    }
}

/// What a stage computes, at the granularity the energy model needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StageKind {
    /// Raw pixels produced by the pixel array; the root of every pipeline.
    PixelInput,
    /// A sliding-window operation (filtering, binning, pooling, sampling).
    Stencil,
    /// Pixel-wise binary operation (e.g. frame subtraction). The second
    /// operand may stream from a retained buffer rather than a DAG edge.
    ElementwiseBinary,
    /// A DNN described only by its per-layer MAC counts.
    DnnLayers(Vec<DnnLayer>),
}

/// One node of the algorithm DAG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub shape: StageShape,
    pub kind: StageKind,
    /// Arithmetic ops per stencil window application.
    pub ops_per_window: u64,
    pub predecessors: Vec<String>,
}

impl Stage {
    pub fn pixel_input(name: impl Into<String>, dims: Dims) -> Self {
        Self {
            name: name.into(),
            shape: StageShape::elementwise(dims),
            kind: StageKind::PixelInput,
            ops_per_window: 0,
            predecessors: Vec::new(),
        }
    }

    pub fn stencil(
        name: impl Into<String>,
        shape: StageShape,
        ops_per_window: u64,
        predecessors: Vec<String>,
    ) -> Self {
        Self {
            name: name.into(),
            shape,
            kind: StageKind::Stencil,
            ops_per_window,
            predecessors,
        }
    }

    pub fn elementwise_binary(
        name: impl Into<String>,
        dims: Dims,
        ops_per_window: u64,
        predecessors: Vec<String>,
    ) -> Self {
        Self {
            name: name.into(),
            shape: StageShape::elementwise(dims),
            kind: StageKind::ElementwiseBinary,
            ops_per_window,
            predecessors,
        }
    }

    pub fn dnn(
        name: impl Into<String>,
        input: Dims,
        layers: Vec<DnnLayer>,
        predecessors: Vec<String>,
    ) -> Self {
        let output = layers.last().map(|l| l.output).unwrap_or(input);
        Self {
            name: name.into(),
            shape: StageShape {
                input,
                output,
                kernel: (1, 1),
                stride: (1, 1),
            },
            kind: StageKind::DnnLayers(layers),
            ops_per_window: 0,
            predecessors,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        let err = |detail: String| GraphError::InvalidShape {
            stage: self.name.clone(),
            detail,
        };
        match &self.kind {
            StageKind::PixelInput => {
                if !self.predecessors.is_empty() {
                    return Err(GraphError::PixelInputHasPredecessors(self.name.clone()));
                }
            }
            StageKind::Stencil => {
                if self.predecessors.is_empty() {
                    return Err(GraphError::MissingPredecessor(self.name.clone()));
                }
                self.shape.validate_stencil().map_err(err)?;
            }
            StageKind::ElementwiseBinary => {
                if self.predecessors.is_empty() {
                    return Err(GraphError::MissingPredecessor(self.name.clone()));
                }
                if self.shape.kernel != (1, 1) || self.shape.stride != (1, 1) {
                    return Err(err("elementwise stages require kernel 1x1, stride 1x1".into()));
                }
                self.shape.validate_stencil().map_err(err)?;
            }
            StageKind::DnnLayers(layers) => {
                if self.predecessors.is_empty() {
                    return Err(GraphError::MissingPredecessor(self.name.clone()));
                }
                if layers.is_empty() {
                    return Err(err("DNN stage declares no layers".into()));
                }
                let last = layers.last().unwrap().output;
                if last != self.shape.output {
                    return Err(err(format!(
                        "declared output {} does not match last layer output {last}",
                        self.shape.output
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate stage name `{0}`")]
    DuplicateStageName(String),
    #[error("stage `{stage}` references unknown predecessor `{predecessor}`")]
    UnresolvedPredecessor { stage: String, predecessor: String },
    #[error("cycle detected through stages {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("stage `{stage}` has an invalid shape: {detail}")]
    InvalidShape { stage: String, detail: String },
    #[error("pixel input stage `{0}` must not declare predecessors")]
    PixelInputHasPredecessors(String),
    #[error("stage `{0}` must declare at least one predecessor")]
    MissingPredecessor(String),
}

/// The algorithm DAG. Stages are stored in declaration order; edges are
/// implied by each stage's predecessor list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmGraph {
    stages: Vec<Stage>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

/// Build a graph from stages, resolving predecessor names.
///
/// Cycles are not rejected here; [`AlgorithmGraph::topological_order`]
/// reports them so that design checks can surface the offending stages.
pub fn build_graph(stages: Vec<Stage>) -> Result<AlgorithmGraph, GraphError> {
    let mut index = BTreeMap::new();
    for (i, stage) in stages.iter().enumerate() {
        if index.insert(stage.name.clone(), i).is_some() {
            return Err(GraphError::DuplicateStageName(stage.name.clone()));
        }
    }
    for stage in &stages {
        stage.validate()?;
        for pred in &stage.predecessors {
            if !index.contains_key(pred) {
                return Err(GraphError::UnresolvedPredecessor {
                    stage: stage.name.clone(),
                    predecessor: pred.clone(),
                });
            }
        }
    }
    Ok(AlgorithmGraph { stages, index })
}

impl AlgorithmGraph {
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.index.get(name).map(|&i| &self.stages[i])
    }

    pub fn stage_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// All (producer, consumer) edges in declaration order of the consumer.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.stages
            .iter()
            .flat_map(|s| {
                s.predecessors
                    .iter()
                    .map(move |p| (p.as_str(), s.name.as_str()))
            })
            .collect()
    }

    /// Stages with no successors (pipeline outputs).
    pub fn sinks(&self) -> Vec<&Stage> {
        let mut has_successor = vec![false; self.stages.len()];
        for s in &self.stages {
            for p in &s.predecessors {
                has_successor[self.index[p]] = true;
            }
        }
        self.stages
            .iter()
            .zip(has_successor)
            .filter(|(_, has)| !has)
            .map(|(s, _)| s)
            .collect()
    }

    /// Kahn's algorithm with declaration-order tie breaking, so reports
    /// are deterministic for a given document.
    pub fn topological_order(&self) -> Result<Vec<&str>, GraphError> {
        let n = self.stages.len();
        let mut in_degree = vec![0usize; n];
        for s in &self.stages {
            in_degree[self.index[&s.name]] = s.predecessors.len();
        }
        let mut emitted = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let next = (0..n).find(|&i| !emitted[i] && in_degree[i] == 0);
            let Some(next) = next else { break };
            emitted[next] = true;
            order.push(self.stages[next].name.as_str());
            for s in &self.stages {
                if s.predecessors.iter().any(|p| p == &self.stages[next].name) {
                    in_degree[self.index[&s.name]] -= 1;
                }
            }
        }
        if order.len() < n {
            let cycle: Vec<String> = self
                .stages
                .iter()
                .zip(&emitted)
                .filter(|(_, &e)| !e)
                .map(|(s, _)| s.name.clone())
                .collect();
            return Err(GraphError::CycleDetected(cycle));
        }
        Ok(order)
    }
}

/// Total arithmetic ops a stage performs per frame.
///
/// Pixel inputs return 0 (readout is accounted separately in the analog
/// model); DNN stages sum MAC counts over their layers.
pub fn stage_op_count(stage: &Stage) -> u64 {
    match &stage.kind {
        StageKind::PixelInput => 0,
        StageKind::Stencil | StageKind::ElementwiseBinary => {
            stage.shape.output.volume() * stage.ops_per_window
        }
        StageKind::DnnLayers(layers) => layers.iter().map(|l| l.mac_count()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig3_stages() -> Vec<Stage> {
        vec![
            Stage::pixel_input("input", Dims::new(32, 32, 1)),
            Stage::stencil(
                "bin",
                StageShape::stencil(Dims::new(32, 32, 1), Dims::new(16, 16, 1), (2, 2), (2, 2)),
                4,
                vec!["input".into()],
            ),
            Stage::stencil(
                "edge",
                StageShape::stencil(Dims::new(16, 16, 1), Dims::new(14, 14, 1), (3, 3), (1, 1)),
                9,
                vec!["bin".into()],
            ),
        ]
    }

    #[test]
    fn builds_three_stage_pipeline() {
        let g = build_graph(fig3_stages()).unwrap();
        assert_eq!(g.stages().len(), 3);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edges(), vec![("input", "bin"), ("bin", "edge")]);
    }

    #[test]
    fn single_input_stage_is_valid() {
        let g = build_graph(vec![Stage::pixel_input("input", Dims::new(4, 4, 1))]).unwrap();
        assert_eq!(g.stages().len(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn duplicate_names_rejected() {
        let stages = vec![
            Stage::pixel_input("s", Dims::new(4, 4, 1)),
            Stage::pixel_input("s", Dims::new(4, 4, 1)),
        ];
        assert_eq!(
            build_graph(stages),
            Err(GraphError::DuplicateStageName("s".into()))
        );
    }

    #[test]
    fn unresolved_predecessor_rejected() {
        let stages = vec![
            Stage::pixel_input("input", Dims::new(4, 4, 1)),
            Stage::elementwise_binary("sub", Dims::new(4, 4, 1), 1, vec!["ghost".into()]),
        ];
        assert!(matches!(
            build_graph(stages),
            Err(GraphError::UnresolvedPredecessor { .. })
        ));
    }

    #[test]
    fn topological_order_follows_chain() {
        let g = build_graph(fig3_stages()).unwrap();
        assert_eq!(g.topological_order().unwrap(), vec!["input", "bin", "edge"]);
    }

    #[test]
    fn topological_order_breaks_ties_by_declaration() {
        let dims = Dims::new(4, 4, 1);
        let stages = vec![
            Stage::pixel_input("a", dims),
            Stage::elementwise_binary("b", dims, 1, vec!["a".into()]),
            Stage::elementwise_binary("c", dims, 1, vec!["a".into()]),
            Stage::elementwise_binary("d", dims, 1, vec!["b".into(), "c".into()]),
        ];
        let g = build_graph(stages).unwrap();
        assert_eq!(g.topological_order().unwrap(), vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn cycle_is_reported_with_member_stages() {
        // Assembled by hand because build_graph validates shapes, not cycles.
        let dims = Dims::new(4, 4, 1);
        let stages = vec![
            Stage::elementwise_binary("a", dims, 1, vec!["b".into()]),
            Stage::elementwise_binary("b", dims, 1, vec!["a".into()]),
        ];
        let g = build_graph(stages).unwrap();
        assert_eq!(
            g.topological_order(),
            Err(GraphError::CycleDetected(vec!["a".into(), "b".into()]))
        );
    }

    #[test]
    fn shape_rule_rejects_inconsistent_outputs() {
        let bad = StageShape::stencil(Dims::new(32, 32, 1), Dims::new(15, 16, 1), (2, 2), (2, 2));
        assert!(bad.validate_stencil().is_err());
        let good = StageShape::stencil(Dims::new(32, 32, 1), Dims::new(16, 16, 1), (2, 2), (2, 2));
        assert!(good.validate_stencil().is_ok());
    }

    #[test]
    fn elementwise_op_count_is_product_of_dims() {
        let stage = Stage::elementwise_binary("s", Dims::new(640, 400, 1), 1, vec!["p".into()]);
        assert_eq!(stage_op_count(&stage), 256_000);
    }

    #[test]
    fn pixel_input_op_count_is_zero() {
        let stage = Stage::pixel_input("input", Dims::new(32, 32, 1));
        assert_eq!(stage_op_count(&stage), 0);
    }

    #[test]
    fn dnn_stage_sums_layer_macs() {
        // Four identical layers of 1.44e7 MACs: 5.76e7 MACs per frame total.
        let layer = DnnLayer {
            output: Dims::new(40, 25, 16),
            macs_per_output: 900,
        };
        assert_eq!(layer.mac_count(), 14_400_000);
        let stage = Stage::dnn(
            "roi_dnn",
            Dims::new(320, 200, 1),
            vec![layer.clone(), layer.clone(), layer.clone(), layer],
            vec!["events".into()],
        );
        assert_eq!(stage_op_count(&stage), 57_600_000);
    }
}
