//! Cycle-level model of the filter's memory accesses.
//!
//! The sequential datapath reads every window block, runs the event decision
//! units, then writes, taking four cycles per event. The pipelined datapath
//! (for `D_th = 1`, `N_CR = 1`) splits memory access in two stages:
//!
//! * stage 1 reads the event's own row block and own column block;
//! * stage 2, one cycle later, writes the event into both blocks and reads
//!   the two neighbor blocks of each module, unless stage 1 of that module
//!   already found a correlated event, in which case those reads are
//!   cancelled.
//!
//! Stage 1 of the next event overlaps stage 2 of the current one, so one
//! event enters per cycle and each decision comes out five cycles after its
//! event entered. Banks are dual-ported: a bank serves at most two accesses
//! per cycle. Accesses are granted strictly in program order (older event
//! first, and within an event in the order listed above); an access that
//! finds both ports busy waits a cycle, as does everything behind it.
//!
//! Reads granted in the same cycle as an older write to the same block see
//! the written data, so decisions match the sequential filter exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, EventStream};
use crate::filters::{
    bank_index, block_index, check_range, quantize_ts, window, Clf, ClfConfig, ConfigError,
    Decision, Denoiser, FilterError, MemoryModule, Probe, StoredEvent,
};

/// Cycles from event arrival to decision in the sequential datapath.
pub const UNPIPELINED_LATENCY: u64 = 4;
/// Cycles from event arrival to decision in the pipelined datapath.
pub const PIPELINED_LATENCY: u64 = 5;
/// Ports per memory bank.
pub const BANK_PORTS: u8 = 2;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration unsupported by the pipelined datapath: {0}")]
    ConfigUnsupported(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("energy weights must be non-negative")]
    NegativeWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    Row,
    Col,
}

impl Module {
    pub fn name(self) -> &'static str {
        match self {
            Module::Row => "row",
            Module::Col => "col",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
    CancelledRead,
}

impl AccessKind {
    pub fn name(self) -> &'static str {
        match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
            AccessKind::CancelledRead => "cancelled_read",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub cycle: u64,
    pub module: Module,
    pub bank: u32,
    pub block: u32,
    pub kind: AccessKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub total_cycles: u64,
    pub reads_issued: u64,
    pub reads_cancelled: u64,
    pub writes: u64,
    pub stalls: u64,
    pub latency_min: u64,
    pub latency_max: u64,
    pub latency_mean: f64,
    /// Cycles from arrival to decision, per event.
    #[serde(skip)]
    pub per_event_latency: Vec<u64>,
}

impl PipelineStats {
    fn finish(&mut self) {
        let l = &self.per_event_latency;
        self.latency_min = l.iter().copied().min().unwrap_or(0);
        self.latency_max = l.iter().copied().max().unwrap_or(0);
        self.latency_mean = if l.is_empty() {
            0.0
        } else {
            l.iter().sum::<u64>() as f64 / l.len() as f64
        };
    }

    /// Cancelled reads as a fraction of all neighbor reads that could have
    /// been issued.
    pub fn cancelled_fraction(&self) -> f64 {
        let total = self.reads_issued + self.reads_cancelled;
        if total == 0 {
            0.0
        } else {
            self.reads_cancelled as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub decisions: Vec<Decision>,
    pub stats: PipelineStats,
    pub trace: Vec<AccessEvent>,
}

/// In-order dual-port arbiter. Grants never move backwards in time, so only
/// the port usage of the current cycle needs to be kept.
struct Arbiter {
    cycle: u64,
    usage: [Vec<u8>; 2],
    stalls: u64,
}

impl Arbiter {
    fn new(n_rm: u32, n_cm: u32) -> Self {
        Self {
            cycle: 0,
            usage: [vec![0; n_rm as usize], vec![0; n_cm as usize]],
            stalls: 0,
        }
    }

    fn advance_to(&mut self, cycle: u64) {
        if cycle > self.cycle {
            self.cycle = cycle;
            self.usage.iter_mut().for_each(|u| u.fill(0));
        }
    }

    fn grant(&mut self, ready: u64, module: Module, bank: u32) -> u64 {
        self.advance_to(ready);
        let m = module as usize;
        while self.usage[m][bank as usize] >= BANK_PORTS {
            self.stalls += 1;
            self.advance_to(self.cycle + 1);
        }
        self.usage[m][bank as usize] += 1;
        self.cycle
    }
}

struct ModuleState {
    module: Module,
    mem: MemoryModule,
    n_banks: u32,
}

impl ModuleState {
    fn addr(&self, line: u32) -> (u32, u32) {
        (
            bank_index(line, self.n_banks),
            block_index(line, self.n_banks),
        )
    }
}

/// Runs the two-stage pipelined datapath with read cancellation.
///
/// Requires `D_th = 1` and `N_CR = 1`. `config.pipelined` must be set.
pub fn run_pipelined(
    config: &ClfConfig,
    stream: &EventStream,
) -> Result<PipelineRun, PipelineError> {
    pipelined(config, stream, true)
}

/// Runs the datapath selected by `config.pipelined`. With `record_trace`
/// off the returned trace is empty.
pub fn simulate(
    config: &ClfConfig,
    stream: &EventStream,
    record_trace: bool,
) -> Result<PipelineRun, PipelineError> {
    if config.pipelined {
        pipelined(config, stream, record_trace)
    } else {
        unpipelined(config, stream, record_trace)
    }
}

fn pipelined(
    config: &ClfConfig,
    stream: &EventStream,
    record: bool,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    if !config.pipelined {
        return Err(PipelineError::ConfigUnsupported(
            "config.pipelined is false".into(),
        ));
    }
    if config.params.n_cr != 1 {
        return Err(PipelineError::ConfigUnsupported(format!(
            "N_CR = {} (read cancellation needs N_CR = 1)",
            config.params.n_cr
        )));
    }
    if config.params.d_th != 1 {
        return Err(PipelineError::ConfigUnsupported(format!(
            "D_th = {} (the two-stage schedule covers a 3x3 window)",
            config.params.d_th
        )));
    }
    let g = stream.geometry();
    let mut modules: Vec<ModuleState> = Vec::new();
    if config.enable_rdm {
        modules.push(ModuleState {
            module: Module::Row,
            mem: MemoryModule::new(g.height().into(), config.n_rm, config.s_rm),
            n_banks: config.n_rm,
        });
    }
    if config.enable_cdm {
        modules.push(ModuleState {
            module: Module::Col,
            mem: MemoryModule::new(g.width().into(), config.n_cm, config.s_cm),
            n_banks: config.n_cm,
        });
    }
    let quant = config.quant_unit();
    let probe_base = Probe {
        coord: 0,
        tq: 0,
        polarity: None,
        d_th: 1,
        t_th_ticks: config.t_th_ticks(),
        mask: config.tick_mask(),
    };

    let mut arb = Arbiter::new(config.n_rm.max(1), config.n_cm.max(1));
    let mut stats = PipelineStats::default();
    let mut trace = Vec::new();
    let mut log = |a: AccessEvent| {
        if record {
            trace.push(a);
        }
    };
    let mut decisions = Vec::with_capacity(stream.len());
    let mut next_arrival = 0u64;
    let mut last_decision: Option<u64> = None;

    for e in stream.events() {
        check_range(&g, e)?;
        let tq = quantize_ts(e.t, quant, config.bw_t);
        let arrival = next_arrival;
        // (line, cross coordinate, sensor extent along lines) per module.
        let geom = |m: Module, e: &Event| match m {
            Module::Row => (u32::from(e.y), e.x, g.height()),
            Module::Col => (u32::from(e.x), e.y, g.width()),
        };
        let probe = |coord: u16| Probe {
            coord,
            tq,
            polarity: config.same_polarity_only.then_some(e.polarity),
            ..probe_base
        };

        // Stage 1: own-block reads.
        let mut stage1_done = arrival;
        let mut own_counts = [0u32; 2];
        for (i, ms) in modules.iter().enumerate() {
            let (line, coord, _) = geom(ms.module, e);
            let (bank, block) = ms.addr(line);
            let c = arb.grant(arrival, ms.module, bank);
            stage1_done = stage1_done.max(c);
            stats.reads_issued += 1;
            log(AccessEvent {
                cycle: c,
                module: ms.module,
                bank,
                block,
                kind: AccessKind::Read,
            });
            own_counts[i] = ms.mem.block(line).count_matches(&probe(coord));
        }
        next_arrival = stage1_done + 1;

        // Stage 2: own-block writes, then neighbor reads unless cancelled.
        let ready = stage1_done + 1;
        let mut stage2_done = ready;
        let mut total = 0u32;
        for ms in modules.iter_mut() {
            let (line, coord, _) = geom(ms.module, e);
            let (bank, block) = ms.addr(line);
            let c = arb.grant(ready, ms.module, bank);
            stage2_done = stage2_done.max(c);
            stats.writes += 1;
            log(AccessEvent {
                cycle: c,
                module: ms.module,
                bank,
                block,
                kind: AccessKind::Write,
            });
            ms.mem.write(line, StoredEvent::new(coord, tq, e.polarity));
        }
        for (i, ms) in modules.iter().enumerate() {
            let (line, coord, extent) = geom(ms.module, e);
            let cancel = own_counts[i] > 0;
            total += own_counts[i];
            for n in window(line as u16, 1, extent).filter(|&n| n != line) {
                let (bank, block) = ms.addr(n);
                if cancel {
                    stats.reads_cancelled += 1;
                    log(AccessEvent {
                        cycle: ready,
                        module: ms.module,
                        bank,
                        block,
                        kind: AccessKind::CancelledRead,
                    });
                    continue;
                }
                let c = arb.grant(ready, ms.module, bank);
                stage2_done = stage2_done.max(c);
                stats.reads_issued += 1;
                log(AccessEvent {
                    cycle: c,
                    module: ms.module,
                    bank,
                    block,
                    kind: AccessKind::Read,
                });
                total += ms.mem.block(n).count_matches(&probe(coord));
            }
        }

        // Neighbor data returns, decision units sum, threshold compares.
        let decided = stage2_done + 3;
        stats.per_event_latency.push(decided - arrival + 1);
        last_decision = Some(last_decision.map_or(decided, |d: u64| d.max(decided)));
        decisions.push(Decision::from_count(total, 1));
    }
    stats.stalls = arb.stalls;
    stats.total_cycles = last_decision.map_or(0, |d| d + 1);
    stats.finish();
    Ok(PipelineRun {
        decisions,
        stats,
        trace,
    })
}

/// Runs the sequential datapath: all window reads in the first cycle, a
/// write in the fourth, one event every four cycles.
pub fn run_unpipelined(
    config: &ClfConfig,
    stream: &EventStream,
) -> Result<PipelineRun, PipelineError> {
    unpipelined(config, stream, true)
}

fn unpipelined(
    config: &ClfConfig,
    stream: &EventStream,
    record: bool,
) -> Result<PipelineRun, PipelineError> {
    let mut clf = Clf::new(*config, stream.geometry())?;
    let g = stream.geometry();
    let d = config.params.d_th;
    let mut stats = PipelineStats::default();
    let mut trace = Vec::new();
    let mut log = |a: AccessEvent| {
        if record {
            trace.push(a);
        }
    };
    let mut decisions = Vec::with_capacity(stream.len());
    for (i, e) in stream.events().iter().enumerate() {
        let base = i as u64 * UNPIPELINED_LATENCY;
        let mut mods = Vec::with_capacity(2);
        if config.enable_rdm {
            mods.push((Module::Row, config.n_rm, e.y, g.height()));
        }
        if config.enable_cdm {
            mods.push((Module::Col, config.n_cm, e.x, g.width()));
        }
        for &(module, n, line, extent) in &mods {
            for l in window(line, d, extent) {
                stats.reads_issued += 1;
                log(AccessEvent {
                    cycle: base,
                    module,
                    bank: bank_index(l, n),
                    block: block_index(l, n),
                    kind: AccessKind::Read,
                });
            }
        }
        decisions.push(clf.process(e)?);
        for &(module, n, line, _) in &mods {
            stats.writes += 1;
            log(AccessEvent {
                cycle: base + UNPIPELINED_LATENCY - 1,
                module,
                bank: bank_index(line.into(), n),
                block: block_index(line.into(), n),
                kind: AccessKind::Write,
            });
        }
        stats.per_event_latency.push(UNPIPELINED_LATENCY);
    }
    stats.total_cycles = UNPIPELINED_LATENCY * stream.len() as u64;
    stats.finish();
    Ok(PipelineRun {
        decisions,
        stats,
        trace,
    })
}

/// Per-access energy weights (arbitrary units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub read: f64,
    pub write: f64,
    pub cancelled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityReport {
    pub energy: f64,
    /// Energy the cancelled reads would have cost.
    pub savings: f64,
    pub cancelled_fraction: f64,
}

pub fn activity_report(
    stats: &PipelineStats,
    w: &EnergyWeights,
) -> Result<ActivityReport, PipelineError> {
    if w.read < 0.0 || w.write < 0.0 || w.cancelled < 0.0 {
        return Err(PipelineError::NegativeWeight);
    }
    Ok(ActivityReport {
        energy: w.read * stats.reads_issued as f64
            + w.write * stats.writes as f64
            + w.cancelled * stats.reads_cancelled as f64,
        savings: w.read * stats.reads_cancelled as f64,
        cancelled_fraction: stats.cancelled_fraction(),
    })
}

/// Writes the trace as `cycle,module,bank,block,kind` with a header row.
pub fn write_trace_csv<W: Write>(trace: &[AccessEvent], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "cycle,module,bank,block,kind")?;
    for a in trace {
        writeln!(
            sink,
            "{},{},{},{},{}",
            a.cycle,
            a.module.name(),
            a.bank,
            a.block,
            a.kind.name()
        )?;
    }
    sink.flush()
}
