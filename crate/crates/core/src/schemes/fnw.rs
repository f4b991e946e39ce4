use crate::array::{program_diff, PcmBlock, WriteOutcome};
use crate::bits::{hamming_u64, low_mask, BitBuf};
use crate::config::PcmConfig;
use crate::error::Result;

use super::{check_len, ReadOutcome, SchemeId, WriteScheme};

/// The cheaper way of storing one word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FnwChoice {
    pub flip: bool,
    /// Physical word to store.
    pub stored: u64,
    pub data_flips: u32,
    /// 1 when the flip bit itself changes.
    pub flag_flips: u32,
}

impl FnwChoice {
    pub fn cost(&self) -> u32 {
        self.data_flips + self.flag_flips
    }
}

/// Picks between storing `data` as is and storing its complement, counting
/// the flip bit's own program. Ties keep the current flip bit.
pub fn fnw_choose(physical: u64, flip: bool, data: u64, width: usize) -> FnwChoice {
    let m = low_mask(width);
    let candidate = |inv: bool| {
        let stored = if inv { !data & m } else { data & m };
        FnwChoice {
            flip: inv,
            stored,
            data_flips: hamming_u64(physical, stored, width),
            flag_flips: (inv != flip) as u32,
        }
    };
    let keep = candidate(flip);
    let switch = candidate(!flip);
    if switch.cost() < keep.cost() {
        switch
    } else {
        keep
    }
}

/// Flip-N-Write with one flip bit per `word_bits`-wide word.
#[derive(Clone, Debug)]
pub struct FlipNWrite {
    cfg: PcmConfig,
    word_bits: usize,
}

impl FlipNWrite {
    pub fn new(cfg: PcmConfig, word_bits: usize) -> Self {
        assert!(word_bits > 0 && word_bits <= 64 && cfg.block_bits().is_multiple_of(word_bits));
        Self { cfg, word_bits }
    }

    fn words(&self) -> usize {
        self.cfg.block_bits() / self.word_bits
    }
}

impl WriteScheme for FlipNWrite {
    fn id(&self) -> SchemeId {
        SchemeId::Fnw
    }

    fn overhead_bits(&self) -> usize {
        self.words()
    }

    fn init_block(&self, block: &mut PcmBlock) {
        block.flip_bits = BitBuf::zeros(self.words());
    }

    fn write(&mut self, block: &mut PcmBlock, _slot: u64, data: &[u8]) -> Result<WriteOutcome> {
        check_len(data, self.cfg.block_bytes)?;
        if block.flip_bits.len() != self.words() {
            self.init_block(block);
        }
        let n = self.word_bits;
        let logical = BitBuf::from_bytes(data);
        let mut image = BitBuf::zeros(self.cfg.block_bits());
        let mut flags = WriteOutcome::default();
        let mut new_flips = block.flip_bits.clone();
        for w in 0..self.words() {
            let flip = block.flip_bits.get(w);
            let choice = fnw_choose(block.bits.get_range(w * n, n), flip, logical.get_range(w * n, n), n);
            image.set_range(w * n, n, choice.stored);
            flags.add_meta_update(flip as u64, choice.flip as u64, 1);
            new_flips.set(w, choice.flip);
        }
        let mut out = program_diff(block, &image, &self.cfg)?;
        block.flip_bits = new_flips;
        block.meta_programs += flags.meta_flips();
        out += flags;
        Ok(out)
    }

    fn read(&mut self, block: &PcmBlock, _slot: u64) -> ReadOutcome {
        let n = self.word_bits;
        let mut logical = block.bits.clone();
        for w in 0..block.flip_bits.len() {
            if block.flip_bits.get(w) {
                let v = logical.get_range(w * n, n);
                logical.set_range(w * n, n, !v);
            }
        }
        ReadOutcome {
            data: logical.to_bytes(),
            meta_extra_reads: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_ones_over_zeros_inverts() {
        let c = fnw_choose(0b0000, false, 0b1111, 4);
        assert!(c.flip);
        assert_eq!((c.data_flips, c.flag_flips), (0, 1));
    }

    #[test]
    fn complement_pattern_inverts() {
        let c = fnw_choose(0b1010, false, 0b0101, 4);
        assert!(c.flip);
        assert_eq!(c.cost(), 1);
    }

    #[test]
    fn identity_costs_nothing() {
        assert_eq!(fnw_choose(0b0110, false, 0b0110, 4).cost(), 0);
    }

    #[test]
    fn tie_keeps_current_flag() {
        // odd width: direct is 1 data flip + 1 flag, inverted (current) is 2 data flips
        let c = fnw_choose(0b000, true, 0b001, 3);
        assert_eq!(c.cost(), 2);
        assert!(c.flip);
        assert_eq!(c.stored, 0b110);
    }

    #[test]
    fn exhaustive_bound_n4() {
        for physical in 0..16u64 {
            for data in 0..16u64 {
                for flip in [false, true] {
                    let c = fnw_choose(physical, flip, data, 4);
                    let direct = (physical ^ data).count_ones() + flip as u32;
                    let inverted = (physical ^ (!data & 0xf)).count_ones() + !flip as u32;
                    assert_eq!(c.cost(), direct.min(inverted));
                    assert!(c.cost() <= 4 / 2 + 1);
                    assert!(c.cost() <= direct);
                    if !flip {
                        assert!(c.data_flips <= (physical ^ data).count_ones());
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn block_round_trip(writes in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 64), 1..8)) {
            let cfg = PcmConfig::default();
            let mut s = FlipNWrite::new(cfg.clone(), 16);
            let mut b = PcmBlock::new(&cfg);
            s.init_block(&mut b);
            let mut total = WriteOutcome::default();
            for d in &writes {
                total += s.write(&mut b, 0, d).unwrap();
                prop_assert_eq!(&s.read(&b, 0).data, d);
            }
            prop_assert_eq!(total.data_flips(), b.total_cell_writes());
            prop_assert_eq!(total.meta_flips(), b.meta_programs);
        }
    }
}
