//! Cycle-level simulation of the digital portion of a design.
//!
//! Timing contract (the brute-force oracle replays the same rules):
//!
//! * Cycle `t` of a unit clocked at `f` spans the interval
//!   `((t-1)/f, t/f]` with cycle 1 starting at t = 0. A value written at
//!   the end of cycle `t` is readable from cycle `t+1` onward.
//! * A digital stage fed by an analog producer receives that producer's
//!   output tensor in raster order, one element per consumer cycle,
//!   written into the unit's primary input memory.
//! * Each cycle a unit may read the elements of one output group (up to
//!   `output_pixels_per_cycle` outputs). The read cycle of group `g` is
//!   the earliest cycle satisfying:
//!     a. every window element the group needs has been written in an
//!        earlier cycle (availability),
//!     b. `ceil(high_water / input_pixels_per_cycle)` where high_water is
//!        the number of leading input elements the group requires
//!        (ingestion bound),
//!     c. one cycle after the unit's previous group (rate bound).
//! * A group read at cycle `t` leaves the pipeline at `t + num_stages - 1`
//!   and is written to the unit's primary output memory at that cycle.
//! * Line buffers hold the most recent `rows` input rows; a group whose
//!   oldest row has been overwritten by its read cycle is a
//!   `ProducerNotReady` stall. FIFOs and double buffers track occupancy
//!   instead and overflow as `MemoryFull`.
//! * DNN stages are a barrier: they start after their whole input is
//!   available and occupy `ceil(MACs / throughput)` cycles.
//!
//! Stalls are reported, never silently absorbed: the simulation continues
//! past each stall in diagnostic mode so that one run surfaces all causes.

use std::collections::BTreeMap;

use crate::ir::{
    AlgorithmGraph, HardwareDescription, MappingTable, MemoryKind, MemorySpec, StageKind,
};

use super::bindings::{digital_bindings, Source, StageBinding};
use super::{MemoryTraffic, StallCause, StallKind, TimingError};

/// Result of simulating the digital pipeline.
#[derive(Debug, Clone)]
pub struct DigitalSim {
    /// Busy-span cycle count per digital unit (its own clock domain),
    /// measured from the cycle its first input lands to its last output.
    pub unit_cycles: Vec<(String, u64)>,
    /// Latency from frame start (first digital input being produced) to
    /// the last digital output, in seconds.
    pub digital_latency: f64,
    pub memory_traffic: Vec<MemoryTraffic>,
    pub stalls: Vec<StallCause>,
    /// True when the first digital stage only starts after a multi-row
    /// prologue through a line buffer (it occupies an analog slot).
    pub line_buffer_prologue: bool,
}

fn ceil_div(a: u128, b: u128) -> u128 {
    (a + b - 1) / b
}

/// First consumer cycle that can read data written at the end of
/// producer cycle `w` (clocks `fp` -> `fc`).
fn readable_cycle(w: u64, fp: u64, fc: u64) -> u64 {
    landing_cycle(w, fp, fc) + 1
}

/// Consumer cycle during which a write at the end of producer cycle `w`
/// lands.
fn landing_cycle(w: u64, fp: u64, fc: u64) -> u64 {
    if fp == fc {
        return w;
    }
    ceil_div(w as u128 * fc as u128, fp as u128) as u64
}

/// Read/write schedule of one accessor on one memory, for port checks.
enum CycleSet {
    Range(u64, u64),
    List(Vec<u64>),
}

impl CycleSet {
    fn len(&self) -> u64 {
        match self {
            CycleSet::Range(a, b) => b.saturating_sub(*a) + 1,
            CycleSet::List(v) => v.len() as u64,
        }
    }

    fn first(&self) -> Option<u64> {
        match self {
            CycleSet::Range(a, _) => Some(*a),
            CycleSet::List(v) => v.first().copied(),
        }
    }

    fn last(&self) -> Option<u64> {
        match self {
            CycleSet::Range(_, b) => Some(*b),
            CycleSet::List(v) => v.last().copied(),
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match self {
            CycleSet::Range(a, b) => Box::new(*a..=*b),
            CycleSet::List(v) => Box::new(v.iter().copied()),
        }
    }
}

struct AccessTrack {
    unit: String,
    clock: u64,
    cycles: CycleSet,
}

/// Element-count delta for occupancy tracking (FIFO/double buffer).
struct OccupancyEvent {
    cycle: u64,
    clock: u64,
    delta: i64,
    unit: String,
}

#[derive(Default)]
struct MemAccount {
    reads: u64,
    writes: u64,
    tracks: Vec<AccessTrack>,
    occupancy: Vec<OccupancyEvent>,
}

/// Completed schedule of one digital stage instance.
struct Schedule {
    clock: u64,
    /// Read cycle per output group.
    read_cycles: Vec<u64>,
    depth: u64,
    opc: u64,
}

impl Schedule {
    fn write_cycle_of_element(&self, idx: u64) -> u64 {
        let g = (idx / self.opc) as usize;
        self.read_cycles[g] + self.depth - 1
    }

    fn last_output_cycle(&self) -> u64 {
        self.read_cycles
            .last()
            .map(|c| c + self.depth - 1)
            .unwrap_or(0)
    }
}

pub(crate) fn simulate(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
    bits_per_pixel: u32,
) -> Result<DigitalSim, TimingError> {
    let bindings = digital_bindings(graph, hw, mapping)?;

    let mut schedules: Vec<Schedule> = Vec::new();
    let mut accounts: BTreeMap<String, MemAccount> = BTreeMap::new();
    let mut stalls = StallLog::new();
    let mut unit_spans: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let mut unit_last_read: BTreeMap<String, u64> = BTreeMap::new();
    let mut prologue = false;

    for (bi, b) in bindings.iter().enumerate() {
        let fc = b.unit.clock.value().round() as u64;
        let depth = b.unit.num_stages as u64;
        let ipc = b.unit.input_pixels_per_cycle.volume().max(1);
        let opc = b.unit.output_pixels_per_cycle.volume().max(1);
        let shape = &b.stage.shape;
        let in_dims = shape.input;
        let out_dims = shape.output;
        let out_volume = out_dims.volume();
        let in_volume = in_dims.volume();

        // Availability of primary-source input element `idx` as
        // (landing cycle, readable cycle) in this unit's clock domain.
        let avail = |idx: u64| -> (u64, u64) {
            match b.sources.first().unwrap() {
                Source::Preloaded => (0, 1),
                Source::AnalogFeed { .. } => (idx + 1, idx + 2),
                Source::Upstream(p) => {
                    let prod = &schedules[*p];
                    let w = prod.write_cycle_of_element(idx);
                    (
                        landing_cycle(w, prod.clock, fc),
                        readable_cycle(w, prod.clock, fc),
                    )
                }
            }
        };
        // Second-operand availability for two-predecessor stages.
        let avail2 = |idx: u64| -> u64 {
            match b.sources.get(1) {
                Some(Source::Upstream(p)) => {
                    let prod = &schedules[*p];
                    readable_cycle(prod.write_cycle_of_element(idx), prod.clock, fc)
                }
                Some(Source::AnalogFeed { .. }) => idx + 2,
                _ => 1,
            }
        };

        let is_dnn = matches!(b.stage.kind, StageKind::DnnLayers(_));
        let (kh, kw) = shape.kernel;
        let (sh, sw) = shape.stride;
        let (in_w, in_c) = (in_dims.w as u64, in_dims.c as u64);
        let row_len = in_w * in_c;
        let per_out_row = out_dims.w as u64 * out_dims.c as u64;

        // Highest input raster index needed by output element `o`.
        let window_max_idx = |o: u64| -> u64 {
            let oh = o / per_out_row;
            let ow = (o % per_out_row) / out_dims.c as u64;
            let r2 = oh * sh as u64 + kh as u64 - 1;
            let c2 = ow * sw as u64 + kw as u64 - 1;
            (r2 * in_w + c2) * in_c + (in_c - 1)
        };
        let window_min_row = |o: u64| -> u64 { (o / per_out_row) * sh as u64 };

        let line_rows = b.primary_mem.and_then(|m| match m.kind {
            MemoryKind::LineBuffer { rows, .. } => Some(rows as u64),
            _ => None,
        });
        if bi == 0 && line_rows.is_some() && kh > 1 {
            prologue = true;
        }

        let first_land = landing_of_first(b, &schedules, fc).max(1);
        let mut prev_read = *unit_last_read.get(&b.unit.name).unwrap_or(&0);
        let mut read_cycles: Vec<u64>;

        if is_dnn {
            // Barrier semantics: start once the whole input is readable.
            let (_, ready) = avail(in_volume - 1);
            let macs = crate::ir::stage_op_count(b.stage);
            let throughput = b.unit.macs_per_cycle().max(1);
            let compute_cycles = ceil_div(macs.max(1) as u128, throughput as u128) as u64;
            let ingest = ceil_div(in_volume as u128, ipc as u128) as u64;
            let start = ready.max(prev_read + 1).max(ingest);
            let finish = start + compute_cycles - 1;
            read_cycles = vec![finish];
            prev_read = finish;
        } else {
            let groups = ceil_div(out_volume as u128, opc as u128) as u64;
            read_cycles = Vec::with_capacity(groups as usize);
            for g in 0..groups {
                let last_elem = ((g + 1) * opc).min(out_volume) - 1;
                let hw_idx = window_max_idx(last_elem);
                let (_, ready) = avail(hw_idx);
                let ingest = ceil_div((hw_idx + 1) as u128, ipc as u128) as u64;
                let t = ready
                    .max(avail2(last_elem))
                    .max(ingest)
                    .max(prev_read + 1);

                // Line-buffer residency: the oldest row this group needs
                // must not have been overwritten by the time we read.
                if let Some(rows) = line_rows {
                    let rmin = window_min_row(g * opc);
                    let evictor_row = rmin + rows;
                    if evictor_row < in_dims.h as u64 {
                        let (evict_land, _) = avail(evictor_row * row_len);
                        if t > evict_land {
                            stalls.record(StallCause {
                                kind: StallKind::ProducerNotReady,
                                unit: b.unit.name.clone(),
                                memory: b.primary_mem.map(|m| m.name.clone()),
                                cycle: t,
                            });
                        }
                    }
                }
                read_cycles.push(t);
                prev_read = t;
            }
        }
        unit_last_read.insert(b.unit.name.clone(), prev_read);

        let schedule = Schedule {
            clock: fc,
            read_cycles,
            depth,
            opc,
        };

        let end = schedule.last_output_cycle();
        unit_spans
            .entry(b.unit.name.clone())
            .and_modify(|(s, e)| {
                *s = (*s).min(first_land);
                *e = (*e).max(end);
            })
            .or_insert((first_land, end));

        record_memory_activity(b, &schedule, &mut accounts, bits_per_pixel, &mut stalls, fc);
        schedules.push(schedule);
    }

    for (name, account) in &accounts {
        let mem = hw.memory(name).expect("accounted memory exists");
        check_ports(mem, account, &mut stalls);
    }

    let digital_latency = schedules
        .iter()
        .map(|s| s.last_output_cycle() as f64 / s.clock as f64)
        .fold(0.0, f64::max);

    let unit_cycles: Vec<(String, u64)> = hw
        .digital_units
        .iter()
        .filter_map(|u| {
            unit_spans
                .get(&u.name)
                .map(|(s, e)| (u.name.clone(), e - s + 1))
        })
        .collect();

    let memory_traffic: Vec<MemoryTraffic> = hw
        .memories
        .iter()
        .map(|m| {
            let acct = accounts.get(&m.name);
            let (reads, writes) = acct.map(|a| (a.reads, a.writes)).unwrap_or((0, 0));
            MemoryTraffic {
                memory: m.name.clone(),
                reads,
                writes,
                busy_seconds: acct.and_then(busy_window),
            }
        })
        .collect();

    Ok(DigitalSim {
        unit_cycles,
        digital_latency,
        memory_traffic,
        stalls: stalls.into_vec(),
        line_buffer_prologue: prologue,
    })
}

/// Landing cycle of the very first input element of a stage.
fn landing_of_first(b: &StageBinding, schedules: &[Schedule], fc: u64) -> u64 {
    match b.sources.first() {
        Some(Source::Preloaded) | None => 1,
        Some(Source::AnalogFeed { .. }) => 1,
        Some(Source::Upstream(p)) => {
            let prod = &schedules[*p];
            landing_cycle(prod.write_cycle_of_element(0), prod.clock, fc)
        }
    }
}

/// Accumulate read/write counts, port tracks, and occupancy events for
/// the memories a stage instance touches.
fn record_memory_activity(
    b: &StageBinding,
    schedule: &Schedule,
    accounts: &mut BTreeMap<String, MemAccount>,
    bits_per_pixel: u32,
    stalls: &mut StallLog,
    fc: u64,
) {
    let shape = &b.stage.shape;
    let out_volume = shape.output.volume();
    let in_volume = shape.input.volume();
    let is_dnn = matches!(b.stage.kind, StageKind::DnnLayers(_));
    let window_volume = shape.window_volume();
    let first_read = schedule.read_cycles.first().copied().unwrap_or(1);
    let last_read = schedule.read_cycles.last().copied().unwrap_or(1);
    let out_cycles = || -> Vec<u64> {
        schedule
            .read_cycles
            .iter()
            .map(|t| t + schedule.depth - 1)
            .collect()
    };

    if let Some(mem) = b.primary_mem {
        let account = accounts.entry(mem.name.clone()).or_default();
        if let Some(Source::AnalogFeed { elements }) = b.sources.first() {
            account.writes += elements;
            account.tracks.push(AccessTrack {
                unit: "analog_feed".into(),
                clock: fc,
                cycles: CycleSet::Range(1, (*elements).max(1)),
            });
            if matches!(mem.kind, MemoryKind::Fifo | MemoryKind::DoubleBuffer) {
                for i in 0..*elements {
                    account.occupancy.push(OccupancyEvent {
                        cycle: i + 1,
                        clock: fc,
                        delta: 1,
                        unit: "analog_feed".into(),
                    });
                }
            }
        }
        if is_dnn {
            account.reads += in_volume;
            account.tracks.push(AccessTrack {
                unit: b.unit.name.clone(),
                clock: fc,
                cycles: CycleSet::Range(first_read, last_read.max(first_read)),
            });
        } else {
            // kh*kw*in_c elements read per output element.
            account.reads += out_volume * window_volume;
            account.tracks.push(AccessTrack {
                unit: b.unit.name.clone(),
                clock: fc,
                cycles: CycleSet::List(schedule.read_cycles.clone()),
            });
            push_consumption_occupancy(account, b, schedule, mem, bits_per_pixel, stalls);
        }
    }

    // Retained operands: one element per output element, always readable
    // (previous-frame data in the opposite bank).
    for mem in &b.secondary_mems {
        let account = accounts.entry(mem.name.clone()).or_default();
        account.reads += out_volume;
        account.tracks.push(AccessTrack {
            unit: b.unit.name.clone(),
            clock: fc,
            cycles: CycleSet::List(schedule.read_cycles.clone()),
        });
    }

    // Retention writes: the stage's output replaces the retained tensor.
    for mem in &b.retention_mems {
        let account = accounts.entry(mem.name.clone()).or_default();
        account.writes += out_volume;
        account.tracks.push(AccessTrack {
            unit: format!("{}(retain)", b.unit.name),
            clock: fc,
            cycles: CycleSet::List(out_cycles()),
        });
        if out_volume > capacity_elements(mem, bits_per_pixel) {
            stalls.record(StallCause {
                kind: StallKind::MemoryFull,
                unit: b.unit.name.clone(),
                memory: Some(mem.name.clone()),
                cycle: 1,
            });
        }
    }

    if let Some(mem) = b.out_mem {
        let account = accounts.entry(mem.name.clone()).or_default();
        account.writes += out_volume;
        if is_dnn {
            let last = schedule.last_output_cycle();
            account.occupancy.push(OccupancyEvent {
                cycle: last,
                clock: fc,
                delta: out_volume as i64,
                unit: b.unit.name.clone(),
            });
            account.tracks.push(AccessTrack {
                unit: format!("{}(write)", b.unit.name),
                clock: fc,
                cycles: CycleSet::Range(last, last),
            });
        } else {
            let cycles = out_cycles();
            if matches!(mem.kind, MemoryKind::Fifo | MemoryKind::DoubleBuffer) {
                for (g, &c) in cycles.iter().enumerate() {
                    let start = g as u64 * schedule.opc;
                    let count = ((start + schedule.opc).min(out_volume) - start) as i64;
                    account.occupancy.push(OccupancyEvent {
                        cycle: c,
                        clock: fc,
                        delta: count,
                        unit: b.unit.name.clone(),
                    });
                }
            }
            account.tracks.push(AccessTrack {
                unit: format!("{}(write)", b.unit.name),
                clock: fc,
                cycles: CycleSet::List(cycles),
            });
        }
    }
}

/// Free events for a consumer draining a FIFO-like memory, plus the
/// capacity sweep itself.
fn push_consumption_occupancy(
    account: &mut MemAccount,
    b: &StageBinding,
    schedule: &Schedule,
    mem: &MemorySpec,
    bits_per_pixel: u32,
    stalls: &mut StallLog,
) {
    if !matches!(mem.kind, MemoryKind::Fifo | MemoryKind::DoubleBuffer) {
        return;
    }
    let shape = &b.stage.shape;
    let in_volume = shape.input.volume();
    let out_dims = shape.output;
    let (kh, kw) = shape.kernel;
    let (sh, sw) = shape.stride;
    let per_out_row = out_dims.w as u64 * out_dims.c as u64;
    let in_w = shape.input.w as u64;
    let in_c = shape.input.c as u64;

    // Last output element whose window covers (or has passed) input `idx`.
    let last_user = |idx: u64| -> u64 {
        let spatial = idx / in_c;
        let r = spatial / in_w;
        let c = spatial % in_w;
        let oh = (r.min(shape.input.h as u64 - kh as u64) / sh as u64).min(out_dims.h as u64 - 1);
        let ow = (c.min(in_w - kw as u64) / sw as u64).min(out_dims.w as u64 - 1);
        oh * per_out_row + ow * out_dims.c as u64 + (out_dims.c as u64 - 1)
    };

    for idx in 0..in_volume {
        let g = (last_user(idx) / schedule.opc) as usize;
        account.occupancy.push(OccupancyEvent {
            cycle: schedule.read_cycles[g],
            clock: schedule.clock,
            delta: -1,
            unit: b.unit.name.clone(),
        });
    }

    sweep_occupancy(account, capacity_elements(mem, bits_per_pixel), &mem.name, stalls);
}

fn capacity_elements(mem: &MemorySpec, bits_per_pixel: u32) -> u64 {
    let raw = mem.capacity_bytes * 8 / bits_per_pixel.max(1) as u64;
    match mem.kind {
        // One bank of a double buffer holds the working tensor.
        MemoryKind::DoubleBuffer => raw / 2,
        _ => raw,
    }
}

/// Walk write/free events in time order and flag the first overflow.
fn sweep_occupancy(account: &mut MemAccount, capacity: u64, mem_name: &str, stalls: &mut StallLog) {
    let events = std::mem::take(&mut account.occupancy);
    let mut ordered: Vec<&OccupancyEvent> = events.iter().collect();
    // Frees before writes at the same instant.
    ordered.sort_by(|a, b| {
        cmp_time(a.cycle, a.clock, b.cycle, b.clock).then(a.delta.cmp(&b.delta))
    });
    let mut level: i64 = 0;
    for ev in ordered {
        level += ev.delta;
        if level > capacity as i64 {
            stalls.record(StallCause {
                kind: StallKind::MemoryFull,
                unit: ev.unit.clone(),
                memory: Some(mem_name.to_string()),
                cycle: ev.cycle,
            });
            // Diagnostic mode: clamp and continue.
            level = capacity as i64;
        }
    }
}

fn cmp_time(c1: u64, f1: u64, c2: u64, f2: u64) -> std::cmp::Ordering {
    if f1 == f2 {
        return c1.cmp(&c2);
    }
    (c1 as u128 * f2 as u128).cmp(&(c2 as u128 * f1 as u128))
}

/// Count concurrent accessors per cycle and flag port shortfalls.
///
/// Exact when all accessors share a clock (the common case). Cross-clock
/// schedules are compared by interval overlap on small traces and skipped
/// on large ones.
fn check_ports(mem: &MemorySpec, account: &MemAccount, stalls: &mut StallLog) {
    if account.tracks.len() <= mem.ports as usize {
        return;
    }
    let same_clock = account.tracks.windows(2).all(|w| w[0].clock == w[1].clock);
    if same_clock {
        let mut iters: Vec<std::iter::Peekable<Box<dyn Iterator<Item = u64> + '_>>> = account
            .tracks
            .iter()
            .map(|t| t.cycles.iter().peekable())
            .collect();
        loop {
            let next = iters.iter_mut().filter_map(|it| it.peek().copied()).min();
            let Some(cycle) = next else { break };
            let mut concurrent = 0u32;
            let mut who = String::new();
            for (i, it) in iters.iter_mut().enumerate() {
                if it.peek() == Some(&cycle) {
                    it.next();
                    concurrent += 1;
                    if !who.is_empty() {
                        who.push('+');
                    }
                    who.push_str(&account.tracks[i].unit);
                }
            }
            if concurrent > mem.ports {
                stalls.record(StallCause {
                    kind: StallKind::InsufficientPorts,
                    unit: who,
                    memory: Some(mem.name.clone()),
                    cycle,
                });
                return; // first conflict per memory is enough
            }
        }
    } else {
        let total: u64 = account.tracks.iter().map(|t| t.cycles.len()).sum();
        if total > 200_000 {
            return; // cross-clock port checks are skipped on large traces
        }
        // Event sweep over exact cycle intervals ((c-1)/f, c/f].
        let mut events: Vec<(u64, u64, i64, usize)> = Vec::new();
        for (i, t) in account.tracks.iter().enumerate() {
            for c in t.cycles.iter() {
                events.push((c - 1, t.clock, 1, i));
                events.push((c, t.clock, -1, i));
            }
        }
        events.sort_by(|a, b| cmp_time(a.0, a.1, b.0, b.1).then(a.2.cmp(&b.2)));
        let mut level = 0i64;
        for (c, _, delta, i) in events {
            level += delta;
            if level > mem.ports as i64 {
                stalls.record(StallCause {
                    kind: StallKind::InsufficientPorts,
                    unit: account.tracks[i].unit.clone(),
                    memory: Some(mem.name.clone()),
                    cycle: c + 1,
                });
                return;
            }
        }
    }
}

fn busy_window(account: &MemAccount) -> Option<(f64, f64)> {
    let mut first: Option<f64> = None;
    let mut last: Option<f64> = None;
    for t in &account.tracks {
        if let (Some(a), Some(b)) = (t.cycles.first(), t.cycles.last()) {
            let start = (a - 1) as f64 / t.clock as f64;
            let end = b as f64 / t.clock as f64;
            first = Some(first.map_or(start, |f: f64| f.min(start)));
            last = Some(last.map_or(end, |l: f64| l.max(end)));
        }
    }
    first.zip(last)
}

/// Deduplicating stall log: the first occurrence per (kind, unit, memory).
struct StallLog {
    seen: std::collections::BTreeSet<(u8, String, Option<String>)>,
    items: Vec<StallCause>,
}

impl StallLog {
    fn new() -> Self {
        Self {
            seen: Default::default(),
            items: Vec::new(),
        }
    }

    fn record(&mut self, cause: StallCause) {
        let key = (cause.kind as u8, cause.unit.clone(), cause.memory.clone());
        if self.seen.insert(key) {
            self.items.push(cause);
        }
    }

    fn into_vec(self) -> Vec<StallCause> {
        self.items
    }
}
