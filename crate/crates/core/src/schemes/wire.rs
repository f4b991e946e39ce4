//! WIRE: frequent-value codebook encoding with per-partition rotation.
//!
//! A write observes its granules in the frequent-value finder, encodes each
//! granule through the current codebook (and the block's wear-leveling epoch),
//! then for every partition picks the rotation of the encoded image closest to
//! what the cells already hold. Only differing cells are programmed; the
//! chosen rotations are stored as per-partition counters.

use crate::array::{program_diff, CacheAccess, MetadataCache, PcmBlock, WriteOutcome};
use crate::bits::{hamming_u64, rotate_left, rotate_right, BitBuf};
use crate::config::{PcmConfig, SimConfig, WearConfig, WireConfig};
use crate::error::Result;
use crate::mfv::{Codebook, MfvFinder};
use crate::wearlevel::{advance_epoch, epoch_transform, epoch_untransform};

use super::{check_len, copy_block, ReadOutcome, SchemeId, WriteScheme};

/// Searches `r` in `0..=rotation_max` for the rotation of `encoded` closest to
/// `stored`. Ties go to `incumbent`, then to the smallest `r`.
///
/// Returns `(r, distance)`.
pub fn best_rotation(encoded: u64, stored: u64, width: usize, rotation_max: usize, incumbent: usize) -> (usize, u32) {
    let mut best = (usize::MAX, u32::MAX);
    for r in 0..=rotation_max {
        let d = hamming_u64(rotate_right(encoded, width, r), stored, width);
        if d < best.1 || (d == best.1 && r == incumbent) {
            best = (r, d);
        }
    }
    best
}

/// [`best_rotation`] for partitions wider than a machine word.
fn best_rotation_wide(encoded: &BitBuf, stored: &BitBuf, rotation_max: usize, incumbent: usize) -> (usize, u32) {
    let mut best = (usize::MAX, u32::MAX);
    for r in 0..=rotation_max {
        let d = encoded.rotated_right(r).hamming(stored) as u32;
        if d < best.1 || (d == best.1 && r == incumbent) {
            best = (r, d);
        }
    }
    best
}

pub struct Wire {
    pcm: PcmConfig,
    wear: WearConfig,
    wire: WireConfig,
    finder: MfvFinder,
    /// Codebook versions; a slot is cleared once no block refers to it.
    versions: Vec<Option<Codebook>>,
    version_refs: Vec<u64>,
    current: u32,
    /// Frequent values each physical block was stored with.
    block_refs: Vec<Vec<u16>>,
    cache: MetadataCache,
    writes: u64,
    rebuilds: u64,
    present: Vec<bool>,
}

impl Wire {
    pub fn new(cfg: &SimConfig, physical_blocks: u64) -> Self {
        let g = cfg.pcm.granule_bits;
        let mut version_refs = vec![0];
        version_refs[0] = physical_blocks;
        Self {
            pcm: cfg.pcm.clone(),
            wear: cfg.wear.clone(),
            wire: cfg.wire.clone(),
            finder: MfvFinder::new(cfg.mfv.clone()),
            versions: vec![Some(Codebook::identity(g))],
            version_refs,
            current: 0,
            block_refs: vec![Vec::new(); physical_blocks as usize],
            cache: MetadataCache::from_config(&cfg.pcm),
            writes: 0,
            rebuilds: 0,
            present: vec![false; 1 << g],
        }
    }

    pub fn finder(&self) -> &MfvFinder {
        &self.finder
    }

    pub fn codebook(&self) -> &Codebook {
        self.versions[self.current as usize]
            .as_ref()
            .expect("current codebook is live")
    }

    pub fn cache(&self) -> &MetadataCache {
        &self.cache
    }

    /// Codebook versions created after the initial identity book.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn live_versions(&self) -> usize {
        self.versions.iter().filter(|v| v.is_some()).count()
    }

    /// Makes `cb` the codebook for subsequent writes. Blocks already stored
    /// keep decoding with the version they were written under.
    pub fn install_codebook(&mut self, cb: Codebook) {
        assert_eq!(cb.granule_bits(), self.pcm.granule_bits, "codebook granularity");
        self.versions.push(Some(cb));
        self.version_refs.push(0);
        let old = self.current;
        self.current = (self.versions.len() - 1) as u32;
        self.release_if_unused(old);
    }

    fn release_if_unused(&mut self, v: u32) {
        if v != 0 && v != self.current && self.version_refs[v as usize] == 0 {
            self.versions[v as usize] = None;
        }
    }

    fn retag(&mut self, block: &mut PcmBlock, v: u32) {
        let old = block.codebook_version;
        if old == v {
            return;
        }
        self.version_refs[old as usize] -= 1;
        self.version_refs[v as usize] += 1;
        block.codebook_version = v;
        self.release_if_unused(old);
    }

    fn maybe_rebuild(&mut self) {
        if !self.writes.is_multiple_of(self.wire.rebuild_interval) {
            return;
        }
        let limit = self.wire.codebook_mfvs.min(1 << self.pcm.granule_bits);
        let mut ranked = self.finder.ranked();
        ranked.truncate(limit);
        if ranked.as_slice() != self.codebook().ranked() {
            let cb = Codebook::build(&ranked, self.pcm.granule_bits).expect("finder values are distinct and in range");
            self.install_codebook(cb);
            self.rebuilds += 1;
        }
    }

    fn encode_image(&self, data: &BitBuf, epoch: u8) -> BitBuf {
        let g = self.pcm.granule_bits;
        let cb = self.codebook();
        let mut image = BitBuf::zeros(data.len());
        for k in 0..self.pcm.granules_per_block() {
            let v = data.get_field_msb(k * g, g) as u16;
            image.set_field_msb(k * g, g, epoch_transform(cb.encode(v), epoch, g) as u64);
        }
        image
    }

    fn touch(&mut self, slot: u64) -> u64 {
        match self.cache.touch(slot) {
            CacheAccess::Hit => 0,
            CacheAccess::Miss => 1,
        }
    }

    fn ensure_slot(&mut self, slot: u64) {
        if slot as usize >= self.block_refs.len() {
            self.block_refs.resize(slot as usize + 1, Vec::new());
        }
    }
}

impl WriteScheme for Wire {
    fn id(&self) -> SchemeId {
        SchemeId::Wire
    }

    fn overhead_bits(&self) -> usize {
        self.pcm.rotation_metadata_bits()
    }

    fn write(&mut self, block: &mut PcmBlock, slot: u64, data: &[u8]) -> Result<WriteOutcome> {
        check_len(data, self.pcm.block_bytes)?;
        self.ensure_slot(slot);
        let g = self.pcm.granule_bits;
        let p = self.pcm.partition_bits();
        let rmax = self.pcm.rotation_max;

        let mut meta = WriteOutcome {
            meta_extra_reads: self.touch(slot),
            ..Default::default()
        };
        if self.wear.enabled {
            meta += advance_epoch(block, self.wear.epoch_writes, g, self.pcm.epoch_tag_bits());
        }

        let logical = BitBuf::from_bytes(data);
        for k in 0..self.pcm.granules_per_block() {
            let v = logical.get_field_msb(k * g, g) as u16;
            self.finder.observe(v);
            self.present[v as usize] = true;
        }
        self.writes += 1;
        self.maybe_rebuild();

        let encoded = self.encode_image(&logical, block.epoch);
        let mut image = BitBuf::zeros(encoded.len());
        let mut counters = block.rot_counters.clone();
        for (i, counter) in counters.iter_mut().enumerate() {
            let start = i * p;
            let incumbent = *counter as usize;
            let r = if p <= 64 {
                let (r, _) = best_rotation(
                    encoded.get_range(start, p),
                    block.bits.get_range(start, p),
                    p,
                    rmax,
                    incumbent,
                );
                image.set_range(start, p, rotate_right(encoded.get_range(start, p), p, r));
                r
            } else {
                let part = encoded.slice(start, p);
                let (r, _) = best_rotation_wide(&part, &block.bits.slice(start, p), rmax, incumbent);
                image.splice(start, &part.rotated_right(r));
                r
            };
            meta.add_meta_update(*counter as u64, r as u64, self.pcm.counter_bits);
            *counter = r as u16;
        }

        let mut out = program_diff(block, &image, &self.pcm)?;
        block.rot_counters = counters;
        block.meta_programs += meta.meta_flips();
        out += meta;
        let current = self.current;
        self.retag(block, current);

        // Reference the new contents before retiring the old ones so a value
        // held by this block alone does not bounce through a Gap.
        let mut refs = Vec::new();
        for v in 0..self.present.len() {
            if std::mem::take(&mut self.present[v]) && self.finder.add_reference(v as u16) {
                refs.push(v as u16);
            }
        }
        for v in std::mem::replace(&mut self.block_refs[slot as usize], refs) {
            self.finder.retire_reference(v);
        }
        Ok(out)
    }

    fn read(&mut self, block: &PcmBlock, slot: u64) -> ReadOutcome {
        let meta_extra_reads = self.touch(slot);
        let g = self.pcm.granule_bits;
        let p = self.pcm.partition_bits();
        let mut encoded = BitBuf::zeros(block.bits.len());
        for (i, &counter) in block.rot_counters.iter().enumerate() {
            let start = i * p;
            if p <= 64 {
                encoded.set_range(
                    start,
                    p,
                    rotate_left(block.bits.get_range(start, p), p, counter as usize),
                );
            } else {
                encoded.splice(start, &block.bits.slice(start, p).rotated_left(counter as usize));
            }
        }
        let cb = self.versions[block.codebook_version as usize]
            .as_ref()
            .expect("a stored block's codebook version stays live");
        let mut logical = BitBuf::zeros(encoded.len());
        for k in 0..self.pcm.granules_per_block() {
            let cw = encoded.get_field_msb(k * g, g) as u16;
            logical.set_field_msb(k * g, g, cb.decode(epoch_untransform(cw, block.epoch, g)) as u64);
        }
        ReadOutcome {
            data: logical.to_bytes(),
            meta_extra_reads,
        }
    }

    fn relocate(
        &mut self,
        src: &PcmBlock,
        dst: &mut PcmBlock,
        from: u64,
        to: u64,
        cfg: &SimConfig,
    ) -> Result<WriteOutcome> {
        self.ensure_slot(from.max(to));
        let v = src.codebook_version;
        self.version_refs[v as usize] += 1;
        let old = dst.codebook_version;
        let out = copy_block(src, dst, cfg)?;
        // copy_block already moved the tag; settle the old slot's reference.
        self.version_refs[old as usize] -= 1;
        self.release_if_unused(old);
        let moved = std::mem::take(&mut self.block_refs[from as usize]);
        for v in std::mem::replace(&mut self.block_refs[to as usize], moved) {
            self.finder.retire_reference(v);
        }
        self.cache.invalidate(from);
        self.cache.invalidate(to);
        Ok(out)
    }
}
