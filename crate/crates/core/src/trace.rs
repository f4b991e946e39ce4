//! Memory trace format and the synthetic trace generator.
//!
//! One event per line:
//!
//! ```text
//! # comment
//! W <block-addr-hex> <payload-hex>
//! R <block-addr-hex>
//! ```
//!
//! Payloads are exactly one block of bytes.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Read { addr: u64 },
    Write { addr: u64, data: Vec<u8> },
}

impl TraceEvent {
    pub fn addr(&self) -> u64 {
        match self {
            TraceEvent::Read { addr } | TraceEvent::Write { addr, .. } => *addr,
        }
    }

    pub fn is_write(&self) -> bool {
        matches!(self, TraceEvent::Write { .. })
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("line {line}: payload is {got} bytes, expected {expected} bytes")]
    PayloadLength { line: usize, got: usize, expected: usize },

    #[error("line {line}: block address {addr:#x} beyond memory of {blocks} blocks")]
    AddressRange { line: usize, addr: u64, blocks: u64 },

    #[error("trace generator: {0}")]
    Spec(String),

    #[error("trace i/o: {0}")]
    Io(#[from] io::Error),
}

fn decode_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

fn parse_line(line: &str, lineno: usize, block_bytes: usize) -> Result<Option<TraceEvent>, TraceError> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let malformed = |msg: String| TraceError::Malformed { line: lineno, msg };
    let fields: Vec<&str> = body.split_whitespace().collect();
    let addr = |s: &str| u64::from_str_radix(s, 16).map_err(|e| malformed(format!("bad address `{s}`: {e}")));
    match fields[..] {
        ["R", a] => Ok(Some(TraceEvent::Read { addr: addr(a)? })),
        ["W", a, payload] => {
            let addr = addr(a)?;
            let data = decode_hex(payload).ok_or_else(|| malformed(format!("payload `{payload}` is not hex bytes")))?;
            if data.len() != block_bytes {
                return Err(TraceError::PayloadLength {
                    line: lineno,
                    got: data.len(),
                    expected: block_bytes,
                });
            }
            Ok(Some(TraceEvent::Write { addr, data }))
        }
        _ => Err(malformed(format!(
            "expected `W <addr> <payload>` or `R <addr>`, got `{body}`"
        ))),
    }
}

/// Streams events out of a reader in file order.
pub struct TraceReader<R> {
    inner: R,
    block_bytes: usize,
    line: usize,
    buf: String,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(inner: R, block_bytes: usize) -> Self {
        Self {
            inner,
            block_bytes,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceEvent, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            match parse_line(&self.buf, self.line, self.block_bytes) {
                Ok(Some(ev)) => return Some(Ok(ev)),
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn parse_trace<R: BufRead>(reader: R, block_bytes: usize) -> Result<Vec<TraceEvent>, TraceError> {
    TraceReader::new(reader, block_bytes).collect()
}

pub fn parse_trace_str(text: &str, block_bytes: usize) -> Result<Vec<TraceEvent>, TraceError> {
    parse_trace(text.as_bytes(), block_bytes)
}

/// Rejects events addressing blocks at or beyond `blocks`.
pub fn check_addresses(events: &[TraceEvent], blocks: u64) -> Result<(), TraceError> {
    match events.iter().enumerate().find(|(_, e)| e.addr() >= blocks) {
        // line numbers are not tracked past parsing; report the event index
        Some((i, e)) => Err(TraceError::AddressRange {
            line: i + 1,
            addr: e.addr(),
            blocks,
        }),
        None => Ok(()),
    }
}

pub fn format_event(ev: &TraceEvent) -> String {
    match ev {
        TraceEvent::Read { addr } => format!("R {addr:04x}"),
        TraceEvent::Write { addr, data } => {
            let mut s = format!("W {addr:04x} ");
            for b in data {
                write!(s, "{b:02x}").unwrap();
            }
            s
        }
    }
}

pub fn emit_trace<W: Write>(mut w: W, events: &[TraceEvent]) -> io::Result<()> {
    for ev in events {
        writeln!(w, "{}", format_event(ev))?;
    }
    w.flush()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AddressModel {
    Uniform,
    Zipf { s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValueModel {
    /// Explicit `(granule value, probability)` pairs; the remaining mass is
    /// spread uniformly over the granule values not listed.
    Categorical { top: Vec<(u16, f64)> },
    /// Value `v` drawn with weight `1 / (v + 1)^s`.
    Zipf { s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub events: usize,
    pub read_fraction: f64,
    pub memory_blocks: u64,
    pub block_bytes: usize,
    pub granule_bits: usize,
    pub address: AddressModel,
    pub values: ValueModel,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Preset::Balanced.spec(100_000, 1024, 0)
    }
}

/// Read/write mixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ReadHeavy,
    Balanced,
    WriteHeavy,
}

impl Preset {
    pub fn read_fraction(self) -> f64 {
        match self {
            Preset::ReadHeavy => 0.75,
            Preset::Balanced => 0.5,
            Preset::WriteHeavy => 0.25,
        }
    }

    /// Granule mix shared by the presets: zeros dominate, a few other
    /// patterns recur, and the rest is a uniform tail. Top five cover 0.84.
    pub fn value_model() -> ValueModel {
        ValueModel::Categorical {
            top: vec![(0x0, 0.60), (0xf, 0.08), (0x1, 0.06), (0x8, 0.05), (0x7, 0.05)],
        }
    }

    pub fn spec(self, events: usize, memory_blocks: u64, seed: u64) -> GenSpec {
        GenSpec {
            events,
            read_fraction: self.read_fraction(),
            memory_blocks,
            block_bytes: 64,
            granule_bits: 4,
            address: AddressModel::Uniform,
            values: Preset::value_model(),
            seed,
        }
    }
}

impl FromStr for Preset {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, TraceError> {
        match s {
            "read-heavy" => Ok(Preset::ReadHeavy),
            "balanced" => Ok(Preset::Balanced),
            "write-heavy" => Ok(Preset::WriteHeavy),
            _ => Err(TraceError::Spec(format!(
                "unknown preset `{s}` (expected read-heavy, balanced or write-heavy)"
            ))),
        }
    }
}

/// Granule sampler built from a [`ValueModel`]: a cumulative table over all
/// `2^g` values.
struct ValueSampler {
    cdf: Vec<f64>,
}

impl ValueSampler {
    fn new(model: &ValueModel, g: usize) -> Result<Self, TraceError> {
        let size = 1usize << g;
        let mut p = vec![0.0; size];
        match model {
            ValueModel::Categorical { top } => {
                let mut listed = vec![false; size];
                let mut mass = 0.0;
                for &(v, q) in top {
                    let v = v as usize;
                    if v >= size {
                        return Err(TraceError::Spec(format!("value {v:#x} wider than {g} bits")));
                    }
                    if listed[v] {
                        return Err(TraceError::Spec(format!("value {v:#x} listed twice")));
                    }
                    if !(0.0..=1.0).contains(&q) {
                        return Err(TraceError::Spec(format!("probability {q} out of range")));
                    }
                    listed[v] = true;
                    p[v] = q;
                    mass += q;
                }
                if mass > 1.0 + 1e-9 {
                    return Err(TraceError::Spec(format!("probabilities sum to {mass} > 1")));
                }
                let rest = (1.0 - mass).max(0.0);
                let unlisted = listed.iter().filter(|&&l| !l).count();
                if unlisted > 0 {
                    for (v, q) in p.iter_mut().enumerate() {
                        if !listed[v] {
                            *q = rest / unlisted as f64;
                        }
                    }
                }
            }
            ValueModel::Zipf { s } => {
                if s.is_nan() || *s <= 0.0 {
                    return Err(TraceError::Spec(format!("zipf exponent must be positive, got {s}")));
                }
                for (v, q) in p.iter_mut().enumerate() {
                    *q = 1.0 / ((v + 1) as f64).powf(*s);
                }
            }
        }
        let total: f64 = p.iter().sum();
        let mut acc = 0.0;
        let cdf = p
            .iter()
            .map(|q| {
                acc += q / total;
                acc
            })
            .collect();
        Ok(Self { cdf })
    }

    fn sample(&self, rng: &mut impl Rng) -> u16 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1) as u16
    }
}

/// Builds a deterministic synthetic trace. The same spec (seed included)
/// always yields the same events.
pub fn generate(spec: &GenSpec) -> Result<Vec<TraceEvent>, TraceError> {
    if !(0.0..=1.0).contains(&spec.read_fraction) {
        return Err(TraceError::Spec(format!(
            "read_fraction {} outside [0, 1]",
            spec.read_fraction
        )));
    }
    if spec.memory_blocks == 0 || spec.block_bytes == 0 {
        return Err(TraceError::Spec(
            "memory_blocks and block_bytes must be positive".into(),
        ));
    }
    let g = spec.granule_bits;
    if !matches!(g, 1 | 2 | 4 | 8) {
        return Err(TraceError::Spec(format!("granule_bits must be 1, 2, 4 or 8, got {g}")));
    }
    let sampler = ValueSampler::new(&spec.values, g)?;
    let zipf = match spec.address {
        AddressModel::Uniform => None,
        AddressModel::Zipf { s } => {
            if s.is_nan() || s <= 0.0 {
                return Err(TraceError::Spec(format!("zipf exponent must be positive, got {s}")));
            }
            Some(Zipf::new(spec.memory_blocks as f64, s).map_err(|e| TraceError::Spec(e.to_string()))?)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per_byte = 8 / g;
    let mut events = Vec::with_capacity(spec.events);
    for _ in 0..spec.events {
        let is_read = rng.random_bool(spec.read_fraction);
        let addr = match &zipf {
            None => rng.random_range(0..spec.memory_blocks),
            Some(z) => (z.sample(&mut rng) as u64).clamp(1, spec.memory_blocks) - 1,
        };
        if is_read {
            events.push(TraceEvent::Read { addr });
            continue;
        }
        let data = (0..spec.block_bytes)
            .map(|_| (0..per_byte).fold(0u16, |acc, _| (acc << g) | sampler.sample(&mut rng)) as u8)
            .collect();
        events.push(TraceEvent::Write { addr, data });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_zero_write() {
        let line = format!("W 0000 {}", "00".repeat(64));
        let evs = parse_trace_str(&line, 64).unwrap();
        assert_eq!(
            evs,
            vec![TraceEvent::Write {
                addr: 0,
                data: vec![0; 64]
            }]
        );
    }

    #[test]
    fn parses_read() {
        assert_eq!(
            parse_trace_str("R 002a\n", 64).unwrap(),
            vec![TraceEvent::Read { addr: 0x2a }]
        );
    }

    #[test]
    fn short_payload_is_rejected() {
        let err = parse_trace_str("W 0 abcd", 64).unwrap_err();
        assert!(matches!(
            err,
            TraceError::PayloadLength {
                line: 1,
                got: 2,
                expected: 64
            }
        ));
        assert!(err.to_string().contains("expected 64 bytes"));
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let text = "# header\n\nR 1 # trailing\n  \nbogus line\n";
        let err = parse_trace_str(text, 64).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 5, .. }), "{err}");
        assert_eq!(parse_trace_str("# header\n\nR 1 # trailing\n", 64).unwrap().len(), 1);
    }

    #[test]
    fn bad_hex_payload() {
        let line = format!("W 1 {}zz", "00".repeat(63));
        assert!(matches!(
            parse_trace_str(&line, 64),
            Err(TraceError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn address_bound() {
        let evs = vec![TraceEvent::Read { addr: 3 }, TraceEvent::Read { addr: 8 }];
        assert!(check_addresses(&evs, 9).is_ok());
        assert!(check_addresses(&evs, 8).is_err());
    }

    #[test]
    fn read_fraction_binomial_bound() {
        let spec = GenSpec {
            events: 30_000,
            read_fraction: 2.0 / 3.0,
            ..Preset::Balanced.spec(30_000, 256, 5)
        };
        let reads = generate(&spec).unwrap().iter().filter(|e| !e.is_write()).count();
        assert!((19_400..=20_600).contains(&reads), "{reads}");
    }

    #[test]
    fn dominant_zero_granules() {
        let spec = GenSpec {
            values: ValueModel::Categorical { top: vec![(0x0, 0.8)] },
            read_fraction: 0.0,
            ..Preset::Balanced.spec(2_000, 64, 9)
        };
        let evs = generate(&spec).unwrap();
        let (mut zeros, mut total) = (0usize, 0usize);
        for ev in &evs {
            if let TraceEvent::Write { data, .. } = ev {
                for b in data {
                    zeros += (b >> 4 == 0) as usize + (b & 0xf == 0) as usize;
                    total += 2;
                }
            }
        }
        let frac = zeros as f64 / total as f64;
        assert!((frac - 0.8).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = Preset::WriteHeavy.spec(500, 32, 77);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        let mut buf_a = Vec::new();
        emit_trace(&mut buf_a, &a).unwrap();
        let mut buf_b = Vec::new();
        emit_trace(&mut buf_b, &generate(&spec).unwrap()).unwrap();
        assert_eq!(buf_a, buf_b);
        assert_ne!(a, generate(&Preset::WriteHeavy.spec(500, 32, 78)).unwrap());
    }

    #[test]
    fn zipf_rejects_nonpositive_exponent() {
        let mut spec = Preset::Balanced.spec(10, 8, 0);
        spec.address = AddressModel::Zipf { s: 0.0 };
        assert!(generate(&spec).is_err());
        spec.address = AddressModel::Uniform;
        spec.values = ValueModel::Zipf { s: -1.0 };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn zipf_addresses_favour_low_blocks() {
        let mut spec = Preset::Balanced.spec(5_000, 100, 2);
        spec.address = AddressModel::Zipf { s: 1.2 };
        let evs = generate(&spec).unwrap();
        assert!(evs.iter().all(|e| e.addr() < 100));
        let hot = evs.iter().filter(|e| e.addr() == 0).count();
        let cold = evs.iter().filter(|e| e.addr() == 99).count();
        assert!(hot > 10 * cold.max(1));
    }

    #[test]
    fn preset_names() {
        assert_eq!("read-heavy".parse::<Preset>().unwrap(), Preset::ReadHeavy);
        assert!("mixed".parse::<Preset>().is_err());
    }

    proptest! {
        #[test]
        fn emit_then_parse_round_trips(seed in any::<u64>(), n in 0usize..60, g in prop_oneof![Just(1usize), Just(2), Just(4), Just(8)]) {
            let spec = GenSpec {
                events: n,
                block_bytes: 16,
                granule_bits: g,
                values: ValueModel::Zipf { s: 1.0 },
                ..Preset::Balanced.spec(n, 1 << 20, seed)
            };
            let evs = generate(&spec).unwrap();
            let mut buf = Vec::new();
            emit_trace(&mut buf, &evs).unwrap();
            prop_assert_eq!(parse_trace(&buf[..], 16).unwrap(), evs);
        }
    }
}
