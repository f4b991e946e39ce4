//! The PCM array model: cell state and wear, flip accounting, page capacity and
//! the controller-side cache for rotation metadata.

use std::collections::{BTreeMap, HashMap};
use std::ops::AddAssign;

use serde::Serialize;

use crate::bits::BitBuf;
use crate::config::PcmConfig;
use crate::error::{Result, SimError};

/// One physical block of cells plus the metadata the write schemes keep for it.
#[derive(Clone, Debug)]
pub struct PcmBlock {
    pub bits: BitBuf,
    pub cell_writes: Vec<u32>,
    /// Per-partition rotation distance of the stored image (WIRE).
    pub rot_counters: Vec<u16>,
    /// One inversion flag per word (Flip-N-Write).
    pub flip_bits: BitBuf,
    /// Codeword-bit rotation applied to the stored image.
    pub epoch: u8,
    /// Writes absorbed since the epoch tag last advanced.
    pub writes_since_epoch: u32,
    /// Codebook version the stored image was encoded with.
    pub codebook_version: u32,
    /// Programs applied to this block's metadata cells (shadow region).
    pub meta_programs: u64,
    pub failed: bool,
}

impl PcmBlock {
    pub fn new(cfg: &PcmConfig) -> Self {
        let n = cfg.block_bits();
        Self {
            bits: BitBuf::zeros(n),
            cell_writes: vec![0; n],
            rot_counters: vec![0; cfg.partitions_per_block],
            flip_bits: BitBuf::zeros(0),
            epoch: 0,
            writes_since_epoch: 0,
            codebook_version: 0,
            meta_programs: 0,
            failed: false,
        }
    }

    pub fn max_cell_writes(&self) -> u32 {
        self.cell_writes.iter().copied().max().unwrap_or(0)
    }

    pub fn total_cell_writes(&self) -> u64 {
        self.cell_writes.iter().map(|&c| c as u64).sum()
    }
}

/// Flip and energy accounting for one logical write (or a sum of them).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WriteOutcome {
    /// Data cells programmed 0→1.
    pub flips_set: u64,
    /// Data cells programmed 1→0.
    pub flips_reset: u64,
    pub meta_flips_set: u64,
    pub meta_flips_reset: u64,
    /// Metadata lines fetched from the array because the cache missed.
    pub meta_extra_reads: u64,
}

impl WriteOutcome {
    pub fn data_flips(&self) -> u64 {
        self.flips_set + self.flips_reset
    }

    pub fn meta_flips(&self) -> u64 {
        self.meta_flips_set + self.meta_flips_reset
    }

    /// Records the metadata-cell programs needed to turn `old` into `new`
    /// over the low `width` bits.
    pub fn add_meta_update(&mut self, old: u64, new: u64, width: usize) {
        let mask = crate::bits::low_mask(width);
        let diff = (old ^ new) & mask;
        self.meta_flips_set += (diff & new).count_ones() as u64;
        self.meta_flips_reset += (diff & old).count_ones() as u64;
    }

    /// Energy of the data-cell programs alone.
    pub fn data_energy_pj(&self, cfg: &PcmConfig) -> f64 {
        self.flips_set as f64 * cfg.e_set + self.flips_reset as f64 * cfg.e_reset
    }

    /// Total write energy; metadata programs are priced at the same per-bit
    /// costs when `count_metadata_flips` is on.
    pub fn energy_pj(&self, cfg: &PcmConfig) -> f64 {
        let mut e = self.data_energy_pj(cfg);
        if cfg.count_metadata_flips {
            e += self.meta_flips_set as f64 * cfg.e_set + self.meta_flips_reset as f64 * cfg.e_reset;
        }
        e
    }
}

impl AddAssign for WriteOutcome {
    fn add_assign(&mut self, o: Self) {
        self.flips_set += o.flips_set;
        self.flips_reset += o.flips_reset;
        self.meta_flips_set += o.meta_flips_set;
        self.meta_flips_reset += o.meta_flips_reset;
        self.meta_extra_reads += o.meta_extra_reads;
    }
}

/// Programs every masked cell whose stored value differs from `new_bits`.
///
/// Cells outside the mask, or already holding the target value, are left
/// alone. A cell dies on the program that takes its count past
/// `cell_endurance`.
pub fn program_cells(block: &mut PcmBlock, new_bits: &BitBuf, mask: &BitBuf, cfg: &PcmConfig) -> Result<WriteOutcome> {
    program_with(block, new_bits, Some(mask), false, cfg)
}

/// Differential programming: [`program_cells`] with an all-ones mask.
pub fn program_diff(block: &mut PcmBlock, new_bits: &BitBuf, cfg: &PcmConfig) -> Result<WriteOutcome> {
    program_with(block, new_bits, None, false, cfg)
}

/// Programs every cell of the block, whether or not its value changes.
pub fn program_all(block: &mut PcmBlock, new_bits: &BitBuf, cfg: &PcmConfig) -> Result<WriteOutcome> {
    program_with(block, new_bits, None, true, cfg)
}

fn program_with(
    block: &mut PcmBlock,
    new_bits: &BitBuf,
    mask: Option<&BitBuf>,
    force: bool,
    cfg: &PcmConfig,
) -> Result<WriteOutcome> {
    if block.failed {
        return Err(SimError::DeadBlock(0));
    }
    let n = block.bits.len();
    assert_eq!(new_bits.len(), n, "program_cells: image length");
    if let Some(m) = mask {
        assert_eq!(m.len(), n, "program_cells: mask length");
    }
    let mut out = WriteOutcome::default();
    let new_words = new_bits.words();
    let mut updated = Vec::with_capacity(new_words.len());
    for (w, (&old, &new)) in block.bits.words().iter().zip(new_words).enumerate() {
        let valid = if (w + 1) * 64 <= n {
            u64::MAX
        } else {
            crate::bits::low_mask(n - w * 64)
        };
        let mut prog = if force { valid } else { old ^ new };
        if let Some(m) = mask {
            prog &= m.words()[w];
        }
        prog &= valid;
        out.flips_set += (prog & new).count_ones() as u64;
        out.flips_reset += (prog & !new).count_ones() as u64;
        let mut rest = prog;
        while rest != 0 {
            let j = w * 64 + rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = &mut block.cell_writes[j];
            *c = c.saturating_add(1);
            if *c > cfg.cell_endurance {
                block.failed = true;
            }
        }
        updated.push((old & !prog) | (new & prog));
    }
    for (w, v) in updated.into_iter().enumerate() {
        let width = (n - w * 64).min(64);
        block.bits.set_range(w * 64, width, v);
    }
    Ok(out)
}

/// Fraction of pages with no failed block. `failed` lists blocks in address
/// order; a trailing partial page still counts as a page.
pub fn capacity_ratio(failed: impl IntoIterator<Item = bool>, blocks_per_page: usize) -> f64 {
    let mut pages = 0usize;
    let mut dead = 0usize;
    let mut in_page = 0usize;
    let mut page_dead = false;
    for f in failed {
        page_dead |= f;
        in_page += 1;
        if in_page == blocks_per_page {
            pages += 1;
            dead += page_dead as usize;
            in_page = 0;
            page_dead = false;
        }
    }
    if in_page > 0 {
        pages += 1;
        dead += page_dead as usize;
    }
    if pages == 0 {
        return 1.0;
    }
    (pages - dead) as f64 / pages as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheAccess {
    Hit,
    Miss,
}

/// LRU cache of per-block rotation metadata held in the memory controller.
///
/// A capacity of zero means there is no cache and every access misses.
#[derive(Clone, Debug)]
pub struct MetadataCache {
    capacity: usize,
    clock: u64,
    stamps: HashMap<u64, u64>,
    order: BTreeMap<u64, u64>,
    hits: u64,
    misses: u64,
}

impl MetadataCache {
    pub fn new(capacity_blocks: usize) -> Self {
        Self {
            capacity: capacity_blocks,
            clock: 0,
            stamps: HashMap::new(),
            order: BTreeMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn from_config(cfg: &PcmConfig) -> Self {
        Self::new(cfg.metadata_cache_blocks())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn touch(&mut self, block_addr: u64) -> CacheAccess {
        self.clock += 1;
        let now = self.clock;
        if let Some(stamp) = self.stamps.get_mut(&block_addr) {
            self.order.remove(stamp);
            *stamp = now;
            self.order.insert(now, block_addr);
            self.hits += 1;
            return CacheAccess::Hit;
        }
        self.misses += 1;
        if self.capacity == 0 {
            return CacheAccess::Miss;
        }
        if self.stamps.len() == self.capacity {
            if let Some((_, victim)) = self.order.pop_first() {
                self.stamps.remove(&victim);
            }
        }
        self.stamps.insert(block_addr, now);
        self.order.insert(now, block_addr);
        CacheAccess::Miss
    }

    /// Drops a block's entry, e.g. after its physical slot changed.
    pub fn invalidate(&mut self, block_addr: u64) {
        if let Some(stamp) = self.stamps.remove(&block_addr) {
            self.order.remove(&stamp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_cfg(bytes: usize) -> PcmConfig {
        PcmConfig {
            block_bytes: bytes,
            partitions_per_block: 1,
            rotation_max: 0,
            granule_bits: 4,
            page_bytes: bytes,
            ..Default::default()
        }
    }

    /// A block whose first four cells hold `pattern`.
    fn block4(pattern: &str) -> (PcmBlock, PcmConfig) {
        let cfg = small_cfg(1);
        let mut b = PcmBlock::new(&cfg);
        for (i, c) in pattern.chars().enumerate() {
            b.bits.set(i, c == '1');
        }
        (b, cfg)
    }

    fn image4(pattern: &str) -> BitBuf {
        let mut img = BitBuf::zeros(8);
        for (i, c) in pattern.chars().enumerate() {
            img.set(i, c == '1');
        }
        img
    }

    #[test]
    fn equal_data_programs_nothing() {
        let (mut b, cfg) = block4("1001");
        let out = program_cells(&mut b, &image4("1001"), &BitBuf::ones(8), &cfg).unwrap();
        assert_eq!(out.data_flips(), 0);
        assert_eq!(b.total_cell_writes(), 0);
    }

    #[test]
    fn one_bit_difference_is_one_reset() {
        let (mut b, cfg) = block4("1001");
        let out = program_cells(&mut b, &image4("1000"), &BitBuf::ones(8), &cfg).unwrap();
        assert_eq!((out.flips_set, out.flips_reset), (0, 1));
        assert_eq!(b.cell_writes[3], 1);
    }

    #[test]
    fn complement_is_four_sets() {
        let (mut b, cfg) = block4("0000");
        let out = program_cells(&mut b, &image4("1111"), &BitBuf::ones(8), &cfg).unwrap();
        assert_eq!((out.flips_set, out.flips_reset), (4, 0));
    }

    #[test]
    fn mask_limits_programming() {
        let (mut b, cfg) = block4("0000");
        let mask = image4("1010");
        let out = program_cells(&mut b, &image4("1111"), &mask, &cfg).unwrap();
        assert_eq!(out.flips_set, 2);
        assert_eq!(format!("{:?}", b.bits), "BitBuf(10100000)");
    }

    #[test]
    fn program_all_wears_every_cell() {
        let (mut b, cfg) = block4("1001");
        let out = program_all(&mut b, &image4("1001"), &cfg).unwrap();
        assert_eq!(out.data_flips(), 8);
        assert_eq!((out.flips_set, out.flips_reset), (2, 6));
        assert!(b.cell_writes.iter().all(|&c| c == 1));
    }

    #[test]
    fn endurance_is_strict() {
        let mut cfg = small_cfg(1);
        cfg.cell_endurance = 2;
        let mut b = PcmBlock::new(&cfg);
        let ones = BitBuf::ones(8);
        let zeros = BitBuf::zeros(8);
        program_diff(&mut b, &ones, &cfg).unwrap();
        program_diff(&mut b, &zeros, &cfg).unwrap();
        assert!(!b.failed, "exactly cell_endurance programs survive");
        program_diff(&mut b, &ones, &cfg).unwrap();
        assert!(b.failed);
        assert!(matches!(
            program_diff(&mut b, &zeros, &cfg),
            Err(SimError::DeadBlock(_))
        ));
    }

    #[test]
    fn energy_counts_metadata_when_enabled() {
        let mut cfg = PcmConfig {
            e_set: 2.0,
            e_reset: 3.0,
            ..Default::default()
        };
        let out = WriteOutcome {
            flips_set: 1,
            flips_reset: 2,
            meta_flips_set: 4,
            meta_flips_reset: 1,
            meta_extra_reads: 0,
        };
        assert_eq!(out.energy_pj(&cfg), 2.0 + 6.0 + 8.0 + 3.0);
        cfg.count_metadata_flips = false;
        assert_eq!(out.energy_pj(&cfg), 8.0);
    }

    #[test]
    fn meta_update_splits_directions() {
        let mut out = WriteOutcome::default();
        out.add_meta_update(0b0011, 0b0101, 6);
        assert_eq!((out.meta_flips_set, out.meta_flips_reset), (1, 1));
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_ratio([false; 8], 2), 1.0);
        assert_eq!(capacity_ratio([true; 8], 2), 0.0);
        // 4 pages of 2 blocks; only page 2 holds a failed block.
        let failed = [false, false, false, false, true, false, false, false];
        assert_eq!(capacity_ratio(failed, 2), 0.75);
    }

    #[test]
    fn cache_cold_then_hot() {
        let mut c = MetadataCache::new(341);
        assert_eq!(c.touch(0), CacheAccess::Miss);
        assert_eq!(c.touch(0), CacheAccess::Hit);
    }

    #[test]
    fn cache_thrashes_on_cyclic_overflow() {
        let cfg = PcmConfig::default();
        let mut c = MetadataCache::from_config(&cfg);
        assert_eq!(c.capacity(), 341);
        for round in 0..4 {
            for a in 0..342u64 {
                let r = c.touch(a);
                if round > 0 {
                    assert_eq!(r, CacheAccess::Miss);
                }
            }
        }
        assert_eq!(c.hits(), 0);
    }

    #[test]
    fn zero_capacity_always_misses() {
        let mut c = MetadataCache::new(0);
        assert_eq!(c.touch(3), CacheAccess::Miss);
        assert_eq!(c.touch(3), CacheAccess::Miss);
    }

    /// Reference LRU: a recency list with the most recent entry last.
    fn reference_lru(capacity: usize, accesses: &[u64]) -> Vec<CacheAccess> {
        let mut list: Vec<u64> = Vec::new();
        accesses
            .iter()
            .map(|&a| {
                if let Some(pos) = list.iter().position(|&x| x == a) {
                    list.remove(pos);
                    list.push(a);
                    CacheAccess::Hit
                } else {
                    if capacity > 0 {
                        if list.len() == capacity {
                            list.remove(0);
                        }
                        list.push(a);
                    }
                    CacheAccess::Miss
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn cache_matches_reference_lru(cap in 0usize..12, accesses in proptest::collection::vec(0u64..20, 0..300)) {
            let mut c = MetadataCache::new(cap);
            let got: Vec<_> = accesses.iter().map(|&a| c.touch(a)).collect();
            prop_assert_eq!(got, reference_lru(cap, &accesses));
        }

        #[test]
        fn conservation_and_idempotence(a in proptest::collection::vec(any::<u8>(), 8), b in proptest::collection::vec(any::<u8>(), 8)) {
            let cfg = small_cfg(8);
            let mut blk = PcmBlock::new(&cfg);
            let mut total = 0;
            for img in [&a, &b, &a] {
                total += program_diff(&mut blk, &BitBuf::from_bytes(img), &cfg).unwrap().data_flips();
            }
            prop_assert_eq!(total, blk.total_cell_writes());
            let again = program_diff(&mut blk, &BitBuf::from_bytes(&a), &cfg).unwrap();
            prop_assert_eq!(again.data_flips(), 0);
        }

        #[test]
        fn energy_monotone(s in 0u64..1000, r in 0u64..1000, ds in 0u64..10, dr in 0u64..10) {
            let cfg = PcmConfig::default();
            let base = WriteOutcome { flips_set: s, flips_reset: r, ..Default::default() };
            let more = WriteOutcome { flips_set: s + ds, flips_reset: r + dr, ..Default::default() };
            prop_assert!(more.energy_pj(&cfg) >= base.energy_pj(&cfg));
        }
    }
}
