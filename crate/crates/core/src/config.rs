//! Simulator parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Physical array and WIRE geometry parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcmConfig {
    pub block_bytes: usize,
    pub partitions_per_block: usize,
    /// Largest rotation distance, in bits, the WIRE search may use.
    pub rotation_max: usize,
    /// Width of each per-partition rotation counter.
    pub counter_bits: usize,
    /// Codebook granularity in bits.
    pub granule_bits: usize,
    /// Programs a cell tolerates; the next one kills it.
    pub cell_endurance: u32,
    /// Picojoules per 0→1 program.
    pub e_set: f64,
    /// Picojoules per 1→0 program.
    pub e_reset: f64,
    pub write_latency_ns: f64,
    pub page_bytes: usize,
    pub metadata_cache_bytes: usize,
    pub count_metadata_flips: bool,
}

impl Default for PcmConfig {
    fn default() -> Self {
        Self {
            block_bytes: 64,
            partitions_per_block: 8,
            rotation_max: 8,
            counter_bits: 6,
            granule_bits: 4,
            cell_endurance: 1_000,
            e_set: 13.5,
            e_reset: 19.2,
            write_latency_ns: 250.0,
            page_bytes: 4096,
            metadata_cache_bytes: 2048,
            count_metadata_flips: true,
        }
    }
}

impl PcmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.block_bytes == 0 || self.partitions_per_block == 0 || self.counter_bits == 0 {
            return bad("block_bytes, partitions_per_block and counter_bits must be positive".into());
        }
        if self.granule_bits == 0 || self.granule_bits > 16 {
            return bad(format!("granule_bits must be in 1..=16, got {}", self.granule_bits));
        }
        if self.counter_bits > 16 {
            return bad(format!("counter_bits must be at most 16, got {}", self.counter_bits));
        }
        if !self.block_bits().is_multiple_of(self.partitions_per_block) {
            return bad(format!(
                "{} block bits do not split into {} partitions",
                self.block_bits(),
                self.partitions_per_block
            ));
        }
        let p = self.partition_bits();
        if !p.is_multiple_of(self.granule_bits) {
            return bad(format!(
                "partition width {p} is not a multiple of granule_bits {}",
                self.granule_bits
            ));
        }
        if self.rotation_max >= p {
            return bad(format!(
                "rotation_max {} must be below the partition width {p}",
                self.rotation_max
            ));
        }
        if self.rotation_max as u64 >= 1u64 << self.counter_bits {
            return bad(format!(
                "rotation_max {} does not fit a {}-bit counter",
                self.rotation_max, self.counter_bits
            ));
        }
        if self.cell_endurance == 0 {
            return bad("cell_endurance must be positive".into());
        }
        if !(self.e_set > 0.0 && self.e_reset > 0.0) {
            return bad("e_set and e_reset must be positive".into());
        }
        if self.write_latency_ns.is_nan() || self.write_latency_ns < 0.0 {
            return bad("write_latency_ns must be non-negative".into());
        }
        if self.page_bytes == 0 || !self.page_bytes.is_multiple_of(self.block_bytes) {
            return bad(format!(
                "page_bytes {} must be a positive multiple of block_bytes {}",
                self.page_bytes, self.block_bytes
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn block_bits(&self) -> usize {
        self.block_bytes * 8
    }

    #[inline]
    pub fn partition_bits(&self) -> usize {
        self.block_bits() / self.partitions_per_block
    }

    #[inline]
    pub fn granules_per_block(&self) -> usize {
        self.block_bits() / self.granule_bits
    }

    pub fn blocks_per_page(&self) -> usize {
        self.page_bytes / self.block_bytes
    }

    /// Rotation-counter bits stored per block.
    pub fn rotation_metadata_bits(&self) -> usize {
        self.counter_bits * self.partitions_per_block
    }

    /// Bytes of rotation metadata per block, rounded up to whole bytes.
    pub fn rotation_metadata_bytes(&self) -> usize {
        self.rotation_metadata_bits().div_ceil(8)
    }

    /// Blocks whose rotation metadata fits the controller-side cache.
    pub fn metadata_cache_blocks(&self) -> usize {
        self.metadata_cache_bytes / self.rotation_metadata_bytes()
    }

    /// Width of the per-block epoch tag: `ceil(log2(granule_bits))`.
    pub fn epoch_tag_bits(&self) -> usize {
        (usize::BITS - (self.granule_bits.max(1) - 1).leading_zeros()) as usize
    }
}

/// Block-level and codeword-level wear leveling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WearConfig {
    pub enabled: bool,
    /// Writes a block absorbs before its epoch tag advances.
    pub epoch_writes: u32,
    /// Global writes between start-gap steps.
    pub remap_period: u64,
}

impl Default for WearConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            epoch_writes: 256,
            remap_period: 10_000,
        }
    }
}

impl WearConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epoch_writes == 0 || self.remap_period == 0 {
            return Err(SimError::Config(
                "wear.epoch_writes and wear.remap_period must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Frequent-value finder table sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfvConfig {
    pub fifo_entries: usize,
    pub sat_max: u32,
    pub replace_threshold: u32,
    pub fv_entries: usize,
}

impl Default for MfvConfig {
    fn default() -> Self {
        Self {
            fifo_entries: 16,
            sat_max: 7,
            replace_threshold: 1,
            fv_entries: 16,
        }
    }
}

impl MfvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fifo_entries == 0 || self.fv_entries == 0 || self.sat_max == 0 {
            return Err(SimError::Config("mfv table sizes and sat_max must be positive".into()));
        }
        Ok(())
    }
}

/// WIRE codebook maintenance knobs that are not array geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WireConfig {
    /// Writes between checks of whether the ranked MFV list moved.
    pub rebuild_interval: u64,
    /// Most MFV ranks placed on the codeword chain.
    pub codebook_mfvs: usize,
}

impl Default for WireConfig {
    fn default() -> Self {
        Self {
            rebuild_interval: 1024,
            codebook_mfvs: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FnwConfig {
    pub word_bits: usize,
}

impl Default for FnwConfig {
    fn default() -> Self {
        Self { word_bits: 16 }
    }
}

/// Everything a single simulation instance needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub pcm: PcmConfig,
    pub wear: WearConfig,
    pub mfv: MfvConfig,
    pub wire: WireConfig,
    pub fnw: FnwConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.pcm.validate()?;
        self.wear.validate()?;
        self.mfv.validate()?;
        if self.wire.rebuild_interval == 0 {
            return Err(SimError::Config("wire.rebuild_interval must be positive".into()));
        }
        let fnw = self.fnw.word_bits;
        if fnw == 0 || fnw > 64 || !self.pcm.block_bits().is_multiple_of(fnw) {
            return Err(SimError::Config(format!(
                "fnw.word_bits {fnw} must be in 1..=64 and divide the {} block bits",
                self.pcm.block_bits()
            )));
        }
        Ok(())
    }
}
