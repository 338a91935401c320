//! Pre-simulation design checks: functional viability (signal domains and
//! dimensions), DAG well-formedness, and mapping coverage.
//!
//! Checks accumulate every violation instead of failing fast, and each
//! violation carries a suggested fix, so a designer can repair a whole
//! design in one iteration. Checks are pure functions of the design;
//! re-running them yields the identical report.

use serde::{Deserialize, Serialize};

use crate::ir::{
    AlgorithmGraph, HardwareDescription, MappingTable, SignalDomain, UnitRef,
};

/// Which rule a violation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleId {
    DomainMismatch,
    MissingAdcOnPath,
    DimensionMismatch,
    UnmappedStage,
    UnknownUnit,
    InputNotPixelArray,
    GraphCycle,
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleId::DomainMismatch => "domain_mismatch",
            RuleId::MissingAdcOnPath => "missing_adc_on_path",
            RuleId::DimensionMismatch => "dimension_mismatch",
            RuleId::UnmappedStage => "unmapped_stage",
            RuleId::UnknownUnit => "unknown_unit",
            RuleId::InputNotPixelArray => "input_not_pixel_array",
            RuleId::GraphCycle => "graph_cycle",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    pub producer: Option<String>,
    pub consumer: Option<String>,
    pub message: String,
    pub suggested_fix: String,
}

/// Outcome of one or all design checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    /// Informational findings that do not fail the design (e.g. a
    /// pair-domain waiver).
    pub notes: Vec<String>,
}

impl CheckReport {
    fn from_parts(violations: Vec<Violation>, notes: Vec<String>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
            notes,
        }
    }

    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
        self.passed = self.violations.is_empty();
        self
    }
}

/// The units an edge is mapped onto, when both ends resolve.
fn mapped_units<'a>(
    hw: &'a HardwareDescription,
    mapping: &MappingTable,
    producer: &str,
    consumer: &str,
) -> Option<(UnitRef<'a>, UnitRef<'a>)> {
    let p = hw.unit(mapping.unit_for(producer)?)?;
    let c = hw.unit(mapping.unit_for(consumer)?)?;
    Some((p, c))
}

/// Signal-domain compatibility along every mapped edge.
///
/// A producer's output domain must feed the consumer's input domain.
/// Charge-domain mismatches are waived when the consumer outputs voltage:
/// its input capacitor inherently buffers the charge. Digital consumers
/// require a converting array (ADC or comparator output) on the analog
/// path.
pub fn check_domain_compatibility(
    hw: &HardwareDescription,
    mapping: &MappingTable,
    graph: &AlgorithmGraph,
) -> CheckReport {
    let mut violations = Vec::new();
    let mut notes = Vec::new();

    for (producer, consumer) in graph.edges() {
        let Some((p_unit, c_unit)) = mapped_units(hw, mapping, producer, consumer) else {
            continue; // mapping coverage is check_mapping's job
        };
        match (p_unit, c_unit) {
            (UnitRef::Analog(p), UnitRef::Analog(c)) => {
                if p.name == c.name {
                    continue;
                }
                if p.output_domain.feeds(c.input_domain) {
                    if p.output_domain.pair_waiver(c.input_domain) {
                        notes.push(format!(
                            "edge {producer} -> {consumer}: pair domain {} accepted for {} input on `{}`",
                            p.output_domain, c.input_domain, c.name
                        ));
                    }
                    continue;
                }
                if p.output_domain == SignalDomain::Charge
                    && c.output_domain == SignalDomain::Voltage
                {
                    notes.push(format!(
                        "edge {producer} -> {consumer}: charge output into `{}` buffered by its input capacitor",
                        c.name
                    ));
                    continue;
                }
                violations.push(Violation {
                    rule: RuleId::DomainMismatch,
                    producer: Some(producer.to_string()),
                    consumer: Some(consumer.to_string()),
                    message: format!(
                        "`{}` outputs {} but `{}` expects {}",
                        p.name, p.output_domain, c.name, c.input_domain
                    ),
                    suggested_fix: format!(
                        "insert a {}-to-{} conversion component between `{}` and `{}`",
                        p.output_domain, c.input_domain, p.name, c.name
                    ),
                });
            }
            (UnitRef::Analog(p), UnitRef::Digital(c)) => {
                // Conversion must happen somewhere at or after the
                // producer array in the analog chain.
                let start = hw.analog_chain_index(&p.name).unwrap_or(0);
                let converted = hw.analog_arrays[start..]
                    .iter()
                    .any(|a| a.output_domain == SignalDomain::Digital);
                if !converted {
                    violations.push(Violation {
                        rule: RuleId::MissingAdcOnPath,
                        producer: Some(producer.to_string()),
                        consumer: Some(consumer.to_string()),
                        message: format!(
                            "analog `{}` feeds digital `{}` with no conversion on the path",
                            p.name, c.name
                        ),
                        suggested_fix: format!(
                            "insert an analog-to-digital conversion (ADC) component after `{}`",
                            p.name
                        ),
                    });
                }
            }
            _ => {}
        }
    }
    CheckReport::from_parts(violations, notes)
}

/// Signal-dimension compatibility across analog edges: mismatched
/// producer/consumer dimensions need an analog buffer in between.
pub fn check_dimension_compatibility(
    hw: &HardwareDescription,
    mapping: &MappingTable,
    graph: &AlgorithmGraph,
) -> CheckReport {
    let mut violations = Vec::new();
    for (producer, consumer) in graph.edges() {
        let Some((UnitRef::Analog(p), UnitRef::Analog(c))) =
            mapped_units(hw, mapping, producer, consumer)
        else {
            continue;
        };
        if p.name == c.name || p.num_output == c.num_input {
            continue;
        }
        // A storage element absorbs the rate mismatch: the producer's
        // tail, the consumer's head, or any array between them in the
        // chain.
        let pi = hw.analog_chain_index(&p.name).unwrap_or(0);
        let ci = hw.analog_chain_index(&c.name).unwrap_or(pi);
        let tail_buffer = p
            .components
            .last()
            .map(|b| b.spec.kind.is_analog_memory())
            .unwrap_or(false);
        let head_buffer = c
            .components
            .first()
            .map(|b| b.spec.kind.is_analog_memory())
            .unwrap_or(false);
        let between_buffer = (pi.min(ci) + 1..pi.max(ci))
            .any(|i| hw.analog_arrays[i].has_analog_memory());
        if tail_buffer || head_buffer || between_buffer {
            continue;
        }
        violations.push(Violation {
            rule: RuleId::DimensionMismatch,
            producer: Some(producer.to_string()),
            consumer: Some(consumer.to_string()),
            message: format!(
                "`{}` outputs {} signals but `{}` accepts {}",
                p.name, p.num_output, c.name, c.num_input
            ),
            suggested_fix: format!(
                "insert an analog buffer (e.g. sample-and-hold) between `{}` and `{}`",
                p.name, c.name
            ),
        });
    }
    CheckReport::from_parts(violations, Vec::new())
}

/// Mapping coverage: every stage mapped to an existing unit, pixel inputs
/// mapped onto a pixel array, and a well-formed DAG.
pub fn check_mapping(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
) -> CheckReport {
    let mut violations = Vec::new();

    if let Err(e) = graph.topological_order() {
        violations.push(Violation {
            rule: RuleId::GraphCycle,
            producer: None,
            consumer: None,
            message: e.to_string(),
            suggested_fix: "break the dependency cycle in the algorithm description".into(),
        });
    }

    for stage in graph.stages() {
        let Some(unit) = mapping.unit_for(&stage.name) else {
            violations.push(Violation {
                rule: RuleId::UnmappedStage,
                producer: None,
                consumer: Some(stage.name.clone()),
                message: format!("stage `{}` is not mapped", stage.name),
                suggested_fix: format!("add a mapping entry for `{}`", stage.name),
            });
            continue;
        };
        let Some(resolved) = hw.unit(unit) else {
            violations.push(Violation {
                rule: RuleId::UnknownUnit,
                producer: None,
                consumer: Some(stage.name.clone()),
                message: format!("stage `{}` maps to unknown unit `{unit}`", stage.name),
                suggested_fix: format!("declare `{unit}` in the hardware section or fix the name"),
            });
            continue;
        };
        if matches!(stage.kind, crate::ir::StageKind::PixelInput) {
            let ok = matches!(resolved, UnitRef::Analog(a) if a.is_pixel_array());
            if !ok {
                violations.push(Violation {
                    rule: RuleId::InputNotPixelArray,
                    producer: None,
                    consumer: Some(stage.name.clone()),
                    message: format!(
                        "pixel input `{}` must map to a pixel array, not `{unit}`",
                        stage.name
                    ),
                    suggested_fix: "map the pixel input stage to the pixel array".into(),
                });
            }
        }
    }
    CheckReport::from_parts(violations, Vec::new())
}

/// Run every design check and merge the reports.
pub fn run_all_checks(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
) -> CheckReport {
    check_mapping(graph, hw, mapping)
        .merge(check_domain_compatibility(hw, mapping, graph))
        .merge(check_dimension_compatibility(hw, mapping, graph))
}
