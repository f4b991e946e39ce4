use crate::array::{program_all, PcmBlock, WriteOutcome};
use crate::bits::BitBuf;
use crate::config::PcmConfig;
use crate::error::Result;

use super::{check_len, ReadOutcome, SchemeId, WriteScheme};

/// Conventional PCM write: every cell is programmed on every write.
#[derive(Clone, Debug)]
pub struct PlainWrite {
    cfg: PcmConfig,
}

impl PlainWrite {
    pub fn new(cfg: PcmConfig) -> Self {
        Self { cfg }
    }
}

impl WriteScheme for PlainWrite {
    fn id(&self) -> SchemeId {
        SchemeId::Plain
    }

    fn overhead_bits(&self) -> usize {
        0
    }

    fn write(&mut self, block: &mut PcmBlock, _slot: u64, data: &[u8]) -> Result<WriteOutcome> {
        check_len(data, self.cfg.block_bytes)?;
        program_all(block, &BitBuf::from_bytes(data), &self.cfg)
    }

    fn read(&mut self, block: &PcmBlock, _slot: u64) -> ReadOutcome {
        ReadOutcome {
            data: block.bits.to_bytes(),
            meta_extra_reads: 0,
        }
    }
}
