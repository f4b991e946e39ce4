//! Wear leveling: codeword-bit epochs inside a block and start-gap remapping
//! across blocks.

use crate::array::{PcmBlock, WriteOutcome};
use crate::bits::low_mask;

/// Rotates a `granule_bits`-wide codeword left by `epoch` positions, which
/// walks the bit that separates neighbouring codewords across the granule's
/// cells.
#[inline]
pub fn epoch_transform(codeword: u16, epoch: u8, granule_bits: usize) -> u16 {
    let g = granule_bits;
    let r = epoch as usize % g;
    if r == 0 {
        return codeword;
    }
    let x = codeword as u32 & low_mask(g) as u32;
    (((x << r) | (x >> (g - r))) & low_mask(g) as u32) as u16
}

/// Inverse of [`epoch_transform`].
#[inline]
pub fn epoch_untransform(codeword: u16, epoch: u8, granule_bits: usize) -> u16 {
    let g = granule_bits;
    let r = epoch as usize % g;
    epoch_transform(codeword, ((g - r) % g) as u8, g)
}

/// Per-write epoch bookkeeping. Once a block has absorbed `epoch_writes`
/// writes its tag advances, and the new epoch takes effect on the write being
/// serviced now; the stored image is never rewritten eagerly.
///
/// Returns the tag's metadata programs.
pub fn advance_epoch(block: &mut PcmBlock, epoch_writes: u32, granule_bits: usize, tag_bits: usize) -> WriteOutcome {
    let mut out = WriteOutcome::default();
    if block.writes_since_epoch >= epoch_writes {
        let old = block.epoch;
        block.epoch = ((old as usize + 1) % granule_bits) as u8;
        block.writes_since_epoch = 0;
        out.add_meta_update(old as u64, block.epoch as u64, tag_bits);
    }
    block.writes_since_epoch += 1;
    out
}

/// Start-gap remapping of `n` logical blocks over `n + 1` physical slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StartGap {
    n: u64,
    start: u64,
    gap: u64,
    enabled: bool,
    period: u64,
    since_step: u64,
}

/// A move the array must perform: copy slot `from` into the gap at `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapMove {
    pub from: u64,
    pub to: u64,
}

impl StartGap {
    pub fn new(logical_blocks: u64, enabled: bool, remap_period: u64) -> Self {
        Self {
            n: logical_blocks,
            start: 0,
            gap: logical_blocks,
            enabled,
            period: remap_period.max(1),
            since_step: 0,
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn physical_blocks(&self) -> u64 {
        if self.enabled {
            self.n + 1
        } else {
            self.n
        }
    }

    pub fn gap_position(&self) -> u64 {
        self.gap
    }

    #[inline]
    pub fn map(&self, logical: u64) -> u64 {
        if !self.enabled {
            return logical;
        }
        let pa = (logical + self.start) % self.n;
        if pa >= self.gap {
            pa + 1
        } else {
            pa
        }
    }

    /// Physical → logical; `None` for the gap slot.
    pub fn unmap(&self, physical: u64) -> Option<u64> {
        if !self.enabled {
            return Some(physical);
        }
        if physical == self.gap {
            return None;
        }
        let pa = if physical > self.gap { physical - 1 } else { physical };
        Some((pa + self.n - self.start % self.n) % self.n)
    }

    /// Counts one serviced write; returns a move once `remap_period` writes
    /// have accumulated.
    pub fn tick(&mut self) -> Option<GapMove> {
        if !self.enabled {
            return None;
        }
        self.since_step += 1;
        if self.since_step < self.period {
            return None;
        }
        self.since_step = 0;
        Some(self.step())
    }

    /// Moves the gap down one slot, wrapping from slot 0 back to the top.
    pub fn step(&mut self) -> GapMove {
        assert!(self.enabled, "start-gap step while disabled");
        if self.gap == 0 {
            let mv = GapMove { from: self.n, to: 0 };
            self.gap = self.n;
            self.start = (self.start + 1) % self.n;
            mv
        } else {
            let mv = GapMove {
                from: self.gap - 1,
                to: self.gap,
            };
            self.gap -= 1;
            mv
        }
    }
}
