//! One simulation instance: a memory image, a write scheme, and the wear
//! leveling state, driven by trace events.

use crate::array::{capacity_ratio, PcmBlock, WriteOutcome};
use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::metrics::WearMatrix;
use crate::schemes::{build_scheme, SchemeId, WriteScheme};
use crate::trace::TraceEvent;
use crate::wearlevel::StartGap;

/// Result of a lifetime run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lifetime {
    /// Writes serviced before capacity fell below one half.
    pub writes: u64,
    pub seconds: f64,
    /// Stopped at the write cap (or because no live block was ever written
    /// again) rather than by wearing out.
    pub capped: bool,
    /// Writes aimed at dead blocks and dropped.
    pub dropped: u64,
}

/// Why [`Simulation::run`] stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub event_index: usize,
    pub addr: u64,
}

pub struct Simulation {
    cfg: SimConfig,
    memory_blocks: u64,
    blocks: Vec<PcmBlock>,
    scheme: Box<dyn WriteScheme>,
    gap: StartGap,
    totals: WriteOutcome,
    writes: u64,
    reads: u64,
    remaps: u64,
    failed_blocks: u64,
}

impl Simulation {
    pub fn new(cfg: SimConfig, scheme: SchemeId, memory_blocks: u64) -> Result<Self> {
        cfg.validate()?;
        if memory_blocks == 0 {
            return Err(SimError::Config("memory must hold at least one block".into()));
        }
        let gap = StartGap::new(memory_blocks, cfg.wear.enabled, cfg.wear.remap_period);
        let physical = gap.physical_blocks();
        let scheme = build_scheme(scheme, &cfg, physical);
        let blocks = (0..physical)
            .map(|_| {
                let mut b = PcmBlock::new(&cfg.pcm);
                scheme.init_block(&mut b);
                b
            })
            .collect();
        Ok(Self {
            cfg,
            memory_blocks,
            blocks,
            scheme,
            gap,
            totals: WriteOutcome::default(),
            writes: 0,
            reads: 0,
            remaps: 0,
            failed_blocks: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn scheme_id(&self) -> SchemeId {
        self.scheme.id()
    }

    pub fn overhead_bits(&self) -> usize {
        self.scheme.overhead_bits()
    }

    pub fn memory_blocks(&self) -> u64 {
        self.memory_blocks
    }

    pub fn blocks(&self) -> &[PcmBlock] {
        &self.blocks
    }

    pub fn totals(&self) -> WriteOutcome {
        self.totals
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn remaps(&self) -> u64 {
        self.remaps
    }

    pub fn physical_slot(&self, addr: u64) -> u64 {
        self.gap.map(addr)
    }

    pub fn is_dead(&self, addr: u64) -> bool {
        self.blocks[self.gap.map(addr) as usize].failed
    }

    fn check_addr(&self, addr: u64) -> Result<usize> {
        if addr >= self.memory_blocks {
            return Err(SimError::AddressOutOfRange {
                addr,
                blocks: self.memory_blocks,
            });
        }
        Ok(self.gap.map(addr) as usize)
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) -> Result<WriteOutcome> {
        let slot = self.check_addr(addr)?;
        let block = &mut self.blocks[slot];
        if block.failed {
            return Err(SimError::DeadBlock(addr));
        }
        let out = self.scheme.write(block, slot as u64, data)?;
        if block.failed {
            self.failed_blocks += 1;
        }
        self.totals += out;
        self.writes += 1;
        if let Some(mv) = self.gap.tick() {
            self.relocate(mv.from as usize, mv.to as usize)?;
        }
        Ok(out)
    }

    fn relocate(&mut self, from: usize, to: usize) -> Result<()> {
        self.remaps += 1;
        let (src, dst) = if from < to {
            let (lo, hi) = self.blocks.split_at_mut(to);
            (&lo[from], &mut hi[0])
        } else {
            let (lo, hi) = self.blocks.split_at_mut(from);
            (&hi[0], &mut lo[to])
        };
        if dst.failed {
            // The gap landed on a worn-out slot; the moved block is lost.
            return Ok(());
        }
        let out = self.scheme.relocate(src, dst, from as u64, to as u64, &self.cfg)?;
        if dst.failed {
            self.failed_blocks += 1;
        }
        self.totals += out;
        Ok(())
    }

    pub fn read(&mut self, addr: u64) -> Result<Vec<u8>> {
        let slot = self.check_addr(addr)?;
        let r = self.scheme.read(&self.blocks[slot], slot as u64);
        self.totals.meta_extra_reads += r.meta_extra_reads;
        self.reads += 1;
        Ok(r.data)
    }

    pub fn apply(&mut self, ev: &TraceEvent) -> Result<()> {
        match ev {
            TraceEvent::Read { addr } => self.read(*addr).map(drop),
            TraceEvent::Write { addr, data } => self.write(*addr, data).map(drop),
        }
    }

    /// Replays `events` once. A write to a dead block stops the replay and is
    /// reported as a truncation; other errors propagate.
    pub fn run(&mut self, events: &[TraceEvent]) -> Result<Option<Truncation>> {
        for (i, ev) in events.iter().enumerate() {
            match self.apply(ev) {
                Ok(()) => {}
                Err(SimError::DeadBlock(addr)) => return Ok(Some(Truncation { event_index: i, addr })),
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    /// Live logical pages over all logical pages.
    pub fn capacity_ratio(&self) -> f64 {
        let failed = (0..self.memory_blocks).map(|a| self.blocks[self.gap.map(a) as usize].failed);
        capacity_ratio(failed, self.cfg.pcm.blocks_per_page())
    }

    /// Data-cell wear of every physical block.
    pub fn wear_matrix(&self) -> WearMatrix {
        let mut m = WearMatrix::new(self.cfg.pcm.block_bits());
        for b in &self.blocks {
            m.push_block(&b.cell_writes);
        }
        m
    }

    /// Replays the writes of `events` cyclically until fewer than half of the
    /// pages are alive, or `max_writes` writes have been serviced. Reads do
    /// not wear cells and are skipped; writes to dead blocks are dropped.
    pub fn run_lifetime(&mut self, events: &[TraceEvent], max_writes: u64) -> Result<Lifetime> {
        if !events.iter().any(TraceEvent::is_write) {
            return Err(SimError::NoWrites);
        }
        let latency = self.cfg.pcm.write_latency_ns * 1e-9;
        let mut serviced = 0u64;
        let mut dropped = 0u64;
        let done = |serviced: u64, dropped: u64, capped: bool| Lifetime {
            writes: serviced,
            seconds: serviced as f64 * latency,
            capped,
            dropped,
        };
        let mut seen_failures = self.failed_blocks;
        loop {
            let mut serviced_this_pass = 0u64;
            for ev in events {
                let TraceEvent::Write { addr, data } = ev else { continue };
                if self.is_dead(*addr) {
                    dropped += 1;
                    continue;
                }
                self.write(*addr, data)?;
                serviced += 1;
                serviced_this_pass += 1;
                if self.failed_blocks != seen_failures {
                    seen_failures = self.failed_blocks;
                    if self.capacity_ratio() < 0.5 {
                        return Ok(done(serviced, dropped, false));
                    }
                }
                if serviced >= max_writes {
                    return Ok(done(serviced, dropped, true));
                }
            }
            if serviced_this_pass == 0 {
                return Ok(done(serviced, dropped, true));
            }
        }
    }
}
