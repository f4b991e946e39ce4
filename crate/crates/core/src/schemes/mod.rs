//! Write-encoding schemes.
//!
//! Every scheme turns a logical block write into a physical image and a set
//! of cell programs, and can recover the logical bytes from what it stored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::{program_all, PcmBlock, WriteOutcome};
use crate::config::SimConfig;
use crate::error::{Result, SimError};

mod diff;
mod fnw;
mod plain;
mod wire;

pub use diff::DiffWrite;
pub use fnw::{fnw_choose, FlipNWrite, FnwChoice};
pub use plain::PlainWrite;
pub use wire::{best_rotation, Wire};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Plain,
    DiffWrite,
    Fnw,
    Wire,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Plain, SchemeId::DiffWrite, SchemeId::Fnw, SchemeId::Wire];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Plain => "plain",
            SchemeId::DiffWrite => "diffwrite",
            SchemeId::Fnw => "fnw",
            SchemeId::Wire => "wire",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| SimError::Config(format!("unknown scheme `{s}` (expected plain, diffwrite, fnw or wire)")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadOutcome {
    pub data: Vec<u8>,
    pub meta_extra_reads: u64,
}

pub trait WriteScheme: Send {
    fn id(&self) -> SchemeId;

    /// Metadata bits the scheme keeps per block.
    fn overhead_bits(&self) -> usize;

    /// Prepares a freshly manufactured block (all cells zero).
    fn init_block(&self, _block: &mut PcmBlock) {}

    /// Services a write of `data` to the block in physical slot `slot`.
    fn write(&mut self, block: &mut PcmBlock, slot: u64, data: &[u8]) -> Result<WriteOutcome>;

    fn read(&mut self, block: &PcmBlock, slot: u64) -> ReadOutcome;

    /// Copies the block in slot `from` into slot `to` for a wear-leveling
    /// move. Every destination cell is programmed; metadata is copied as is.
    fn relocate(
        &mut self,
        src: &PcmBlock,
        dst: &mut PcmBlock,
        _from: u64,
        _to: u64,
        cfg: &SimConfig,
    ) -> Result<WriteOutcome> {
        copy_block(src, dst, cfg)
    }
}

/// Full-program copy of `src` into `dst`, metadata included.
pub fn copy_block(src: &PcmBlock, dst: &mut PcmBlock, cfg: &SimConfig) -> Result<WriteOutcome> {
    let mut out = program_all(dst, &src.bits, &cfg.pcm)?;
    let cb = cfg.pcm.counter_bits;
    for (d, &s) in dst.rot_counters.iter_mut().zip(&src.rot_counters) {
        out.add_meta_update(*d as u64, s as u64, cb);
        *d = s;
    }
    for i in 0..dst.flip_bits.len() {
        out.add_meta_update(dst.flip_bits.get(i) as u64, src.flip_bits.get(i) as u64, 1);
    }
    dst.flip_bits = src.flip_bits.clone();
    out.add_meta_update(dst.epoch as u64, src.epoch as u64, cfg.pcm.epoch_tag_bits());
    dst.epoch = src.epoch;
    dst.writes_since_epoch = src.writes_since_epoch;
    dst.codebook_version = src.codebook_version;
    dst.meta_programs += out.meta_flips();
    Ok(out)
}

pub fn build_scheme(id: SchemeId, cfg: &SimConfig, physical_blocks: u64) -> Box<dyn WriteScheme> {
    match id {
        SchemeId::Plain => Box::new(PlainWrite::new(cfg.pcm.clone())),
        SchemeId::DiffWrite => Box::new(DiffWrite::new(cfg.pcm.clone())),
        SchemeId::Fnw => Box::new(FlipNWrite::new(cfg.pcm.clone(), cfg.fnw.word_bits)),
        SchemeId::Wire => Box::new(Wire::new(cfg, physical_blocks)),
    }
}

pub(crate) fn check_len(data: &[u8], expected: usize) -> Result<()> {
    if data.len() != expected {
        return Err(SimError::PayloadLength {
            got: data.len(),
            expected,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
        }
        assert!("cafo".parse::<SchemeId>().is_err());
    }
}
