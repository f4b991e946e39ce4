//! Frequent-value detection and the frequent-value codebook.
//!
//! [`MfvFinder`] is a two-stage filter: a small FIFO of candidate values with
//! saturating counters screens out transient patterns, and values that
//! saturate are promoted into the frequent-value (FV) table. The FV table's
//! ranking feeds [`Codebook::build`], which places consecutively ranked values
//! on codewords one bit apart.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::MfvConfig;
use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FifoEntry {
    pub value: u16,
    pub sat_counter: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FvEntry {
    pub value: u16,
    /// Accesses seen while the value held FV status (saturating).
    pub counter: u32,
    /// Blocks currently stored with this value present.
    pub pointer: u32,
    /// `false` marks a Gap line.
    pub used: bool,
}

#[derive(Clone, Debug)]
pub struct MfvFinder {
    cfg: MfvConfig,
    fifo: Vec<FifoEntry>,
    fv: Vec<FvEntry>,
    unknown_retires: u64,
}

impl MfvFinder {
    pub fn new(cfg: MfvConfig) -> Self {
        let fv = vec![FvEntry::default(); cfg.fv_entries];
        Self {
            fifo: Vec::with_capacity(cfg.fifo_entries),
            fv,
            cfg,
            unknown_retires: 0,
        }
    }

    pub fn fifo(&self) -> &[FifoEntry] {
        &self.fifo
    }

    pub fn fv_table(&self) -> &[FvEntry] {
        &self.fv
    }

    /// Retires of values absent from the FV table.
    pub fn unknown_retires(&self) -> u64 {
        self.unknown_retires
    }

    fn fv_index(&self, value: u16) -> Option<usize> {
        self.fv.iter().position(|e| e.used && e.value == value)
    }

    pub fn is_frequent(&self, value: u16) -> bool {
        self.fv_index(value).is_some()
    }

    /// Feeds one granule value through the finder. Returns the value if this
    /// observation saturated its FIFO counter.
    pub fn observe(&mut self, value: u16) -> Option<u16> {
        if let Some(i) = self.fv_index(value) {
            let e = &mut self.fv[i];
            e.counter = e.counter.saturating_add(1);
            return None;
        }

        if let Some(i) = self.fifo.iter().position(|e| e.value == value) {
            let e = &mut self.fifo[i];
            e.sat_counter = (e.sat_counter + 1).min(self.cfg.sat_max);
            if e.sat_counter < self.cfg.sat_max {
                return None;
            }
            if let Some(gap) = self.fv.iter().position(|e| !e.used) {
                self.fv[gap] = FvEntry {
                    value,
                    counter: 0,
                    pointer: 0,
                    used: true,
                };
                self.fifo.remove(i);
            }
            return Some(value);
        }

        for e in &mut self.fifo {
            e.sat_counter = e.sat_counter.saturating_sub(1);
        }
        let fresh = FifoEntry { value, sat_counter: 1 };
        if self.fifo.len() < self.cfg.fifo_entries {
            self.fifo.push(fresh);
        } else if let Some(slot) = self
            .fifo
            .iter()
            .position(|e| e.sat_counter < self.cfg.replace_threshold)
        {
            self.fifo[slot] = fresh;
        }
        None
    }

    /// Counts one more stored block holding `value`, if it is frequent.
    pub fn add_reference(&mut self, value: u16) -> bool {
        match self.fv_index(value) {
            Some(i) => {
                self.fv[i].pointer += 1;
                true
            }
            None => false,
        }
    }

    /// Drops one stored-block reference; the line becomes a Gap at zero.
    pub fn retire_reference(&mut self, value: u16) {
        match self.fv_index(value) {
            Some(i) if self.fv[i].pointer > 0 => {
                let e = &mut self.fv[i];
                e.pointer -= 1;
                if e.pointer == 0 {
                    *e = FvEntry::default();
                }
            }
            _ => self.unknown_retires += 1,
        }
    }

    /// Used FV values, most frequent first (ties by ascending value).
    pub fn ranked(&self) -> Vec<u16> {
        let mut used: Vec<&FvEntry> = self.fv.iter().filter(|e| e.used).collect();
        used.sort_by(|a, b| b.counter.cmp(&a.counter).then(a.value.cmp(&b.value)));
        used.into_iter().map(|e| e.value).collect()
    }
}

/// Reflected binary Gray code.
#[inline]
pub fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

/// Bijective granule → codeword table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    granule_bits: usize,
    perm: Vec<u16>,
    inv_perm: Vec<u16>,
    ranked: Vec<u16>,
}

impl Codebook {
    pub fn identity(granule_bits: usize) -> Self {
        Self::build(&[], granule_bits).expect("empty ranking is always valid")
    }

    /// Rank `k` (0-based) gets `gray(k)`; every unranked value takes the
    /// leftover codewords in ascending order.
    pub fn build(ranked: &[u16], granule_bits: usize) -> Result<Self> {
        if granule_bits == 0 || granule_bits > 16 {
            return Err(SimError::Codebook(format!("granule width {granule_bits} out of range")));
        }
        let size = 1usize << granule_bits;
        if ranked.len() > size {
            return Err(SimError::Codebook(format!(
                "{} ranked values exceed the {size}-value space",
                ranked.len()
            )));
        }
        let mut perm = vec![u16::MAX; size];
        let mut code_taken = vec![false; size];
        for (k, &v) in ranked.iter().enumerate() {
            let v = v as usize;
            if v >= size {
                return Err(SimError::Codebook(format!(
                    "value {v:#x} wider than {granule_bits} bits"
                )));
            }
            if perm[v] != u16::MAX {
                return Err(SimError::Codebook(format!("value {v:#x} ranked twice")));
            }
            let code = gray(k as u32) as usize;
            perm[v] = code as u16;
            code_taken[code] = true;
        }
        let mut free_codes = (0..size).filter(|&c| !code_taken[c]);
        for slot in perm.iter_mut() {
            if *slot == u16::MAX {
                *slot = free_codes.next().expect("leftover counts match") as u16;
            }
        }
        let mut inv_perm = vec![0u16; size];
        for (v, &c) in perm.iter().enumerate() {
            inv_perm[c as usize] = v as u16;
        }
        Ok(Self {
            granule_bits,
            perm,
            inv_perm,
            ranked: ranked.to_vec(),
        })
    }

    pub fn granule_bits(&self) -> usize {
        self.granule_bits
    }

    pub fn ranked(&self) -> &[u16] {
        &self.ranked
    }

    #[inline]
    pub fn encode(&self, value: u16) -> u16 {
        self.perm[value as usize]
    }

    #[inline]
    pub fn decode(&self, codeword: u16) -> u16 {
        self.inv_perm[codeword as usize]
    }

    /// Text dump: a header, then one `rank value codeword` row per value
    /// (hex; rank `-` for values off the chain), ranked rows first.
    pub fn dump(&self) -> String {
        let digits = self.granule_bits.div_ceil(4).max(1);
        let mut s = String::new();
        writeln!(s, "codebook v1").unwrap();
        writeln!(s, "granule_bits {}", self.granule_bits).unwrap();
        writeln!(s, "# rank value codeword").unwrap();
        for (k, &v) in self.ranked.iter().enumerate() {
            writeln!(s, "{} {:0digits$x} {:0digits$x}", k + 1, v, self.encode(v)).unwrap();
        }
        for v in 0..self.perm.len() {
            if !self.ranked.contains(&(v as u16)) {
                writeln!(s, "- {:0digits$x} {:0digits$x}", v, self.perm[v]).unwrap();
            }
        }
        s
    }

    /// Parses [`Codebook::dump`] output. The table must be exactly what
    /// [`Codebook::build`] produces for its ranked rows.
    pub fn load(text: &str) -> Result<Self> {
        let err = |m: String| SimError::Codebook(m);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some("codebook v1") {
            return Err(err("missing `codebook v1` header".into()));
        }
        let g: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("granule_bits "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err("missing granule_bits line".into()))?;
        let mut ranked: Vec<(usize, u16)> = Vec::new();
        let mut rows: Vec<(u16, u16)> = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let [rank, value, code] = f[..] else {
                return Err(err(format!("malformed row `{line}`")));
            };
            let value = u16::from_str_radix(value, 16).map_err(|e| err(format!("row `{line}`: {e}")))?;
            let code = u16::from_str_radix(code, 16).map_err(|e| err(format!("row `{line}`: {e}")))?;
            if rank != "-" {
                let r: usize = rank.parse().map_err(|_| err(format!("bad rank in `{line}`")))?;
                ranked.push((r, value));
            }
            rows.push((value, code));
        }
        ranked.sort_unstable();
        if ranked.iter().enumerate().any(|(i, &(r, _))| r != i + 1) {
            return Err(err("ranks must be 1..k without gaps".into()));
        }
        let ranked: Vec<u16> = ranked.into_iter().map(|(_, v)| v).collect();
        let cb = Self::build(&ranked, g)?;
        if rows.len() != 1 << g {
            return Err(err(format!("expected {} rows, found {}", 1 << g, rows.len())));
        }
        for (value, code) in rows {
            if value as usize >= 1 << g || cb.encode(value) != code {
                return Err(err(format!("row for value {value:x} disagrees with its ranking")));
            }
        }
        Ok(cb)
    }
}
