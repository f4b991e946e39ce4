//! Experiment configuration and the multi-scheme comparison runner.
//!
//! Config files are TOML. Keys are namespaced by section:
//!
//! ```toml
//! schemes = ["diffwrite", "wire"]
//! memory_blocks = 1024
//!
//! [pcm]
//! cell_endurance = 1000
//!
//! [wire]
//! rotation_max = 8
//!
//! [fnw]
//! word_bits = 16
//!
//! [wear]
//! enabled = true
//!
//! [gen]
//! preset = "balanced"
//! events = 100000
//! seed = 1
//! ```

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{FnwConfig, MfvConfig, PcmConfig, SimConfig, WearConfig, WireConfig};
use crate::error::{Result, SimError};
use crate::metrics::{intrav, mfv_coverage, top5_coverage, write_reports_csv, RunReport};
use crate::schemes::SchemeId;
use crate::sim::Simulation;
use crate::trace::{self, AddressModel, GenSpec, Preset, TraceEvent, ValueModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcmSection {
    pub block_bytes: usize,
    pub cell_endurance: u32,
    pub e_set: f64,
    pub e_reset: f64,
    pub write_latency_ns: f64,
    pub page_bytes: usize,
    pub metadata_cache_bytes: usize,
    pub count_metadata_flips: bool,
}

impl Default for PcmSection {
    fn default() -> Self {
        let d = PcmConfig::default();
        Self {
            block_bytes: d.block_bytes,
            cell_endurance: d.cell_endurance,
            e_set: d.e_set,
            e_reset: d.e_reset,
            write_latency_ns: d.write_latency_ns,
            page_bytes: d.page_bytes,
            metadata_cache_bytes: d.metadata_cache_bytes,
            count_metadata_flips: d.count_metadata_flips,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WireSection {
    pub partitions_per_block: usize,
    pub rotation_max: usize,
    pub counter_bits: usize,
    pub granule_bits: usize,
    pub rebuild_interval: u64,
    pub codebook_mfvs: usize,
}

impl Default for WireSection {
    fn default() -> Self {
        let d = PcmConfig::default();
        let w = WireConfig::default();
        Self {
            partitions_per_block: d.partitions_per_block,
            rotation_max: d.rotation_max,
            counter_bits: d.counter_bits,
            granule_bits: d.granule_bits,
            rebuild_interval: w.rebuild_interval,
            codebook_mfvs: w.codebook_mfvs,
        }
    }
}

/// Synthetic trace settings; a preset fills in the read mix and value model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSection {
    pub preset: Option<Preset>,
    pub events: usize,
    pub read_fraction: Option<f64>,
    pub address: AddressModel,
    pub values: Option<ValueModel>,
    pub seed: u64,
}

impl Default for GenSection {
    fn default() -> Self {
        Self {
            preset: Some(Preset::Balanced),
            events: 100_000,
            read_fraction: None,
            address: AddressModel::Uniform,
            values: None,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    /// Replay this trace file instead of generating one.
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "scheme")]
    pub schemes: Vec<SchemeId>,
    pub memory_blocks: u64,
    /// Replay the trace cyclically until half the pages wear out.
    pub lifetime: bool,
    pub max_writes: u64,
    pub pcm: PcmSection,
    pub wire: WireSection,
    pub mfv: MfvConfig,
    pub fnw: FnwConfig,
    pub wear: WearConfig,
    pub gen: GenSection,
    pub trace: TraceSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schemes: SchemeId::ALL.to_vec(),
            memory_blocks: 1024,
            lifetime: false,
            max_writes: 100_000_000,
            pcm: PcmSection::default(),
            wire: WireSection::default(),
            mfv: MfvConfig::default(),
            fnw: FnwConfig::default(),
            wear: WearConfig::default(),
            gen: GenSection::default(),
            trace: TraceSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            pcm: PcmConfig {
                block_bytes: self.pcm.block_bytes,
                partitions_per_block: self.wire.partitions_per_block,
                rotation_max: self.wire.rotation_max,
                counter_bits: self.wire.counter_bits,
                granule_bits: self.wire.granule_bits,
                cell_endurance: self.pcm.cell_endurance,
                e_set: self.pcm.e_set,
                e_reset: self.pcm.e_reset,
                write_latency_ns: self.pcm.write_latency_ns,
                page_bytes: self.pcm.page_bytes,
                metadata_cache_bytes: self.pcm.metadata_cache_bytes,
                count_metadata_flips: self.pcm.count_metadata_flips,
            },
            wear: self.wear.clone(),
            mfv: self.mfv.clone(),
            wire: WireConfig {
                rebuild_interval: self.wire.rebuild_interval,
                codebook_mfvs: self.wire.codebook_mfvs,
            },
            fnw: self.fnw.clone(),
        }
    }

    pub fn gen_spec(&self) -> GenSpec {
        let preset = self.gen.preset.unwrap_or(Preset::Balanced);
        GenSpec {
            events: self.gen.events,
            read_fraction: self.gen.read_fraction.unwrap_or(preset.read_fraction()),
            memory_blocks: self.memory_blocks,
            block_bytes: self.pcm.block_bytes,
            granule_bits: self.wire.granule_bits,
            address: self.gen.address.clone(),
            values: self.gen.values.clone().unwrap_or_else(Preset::value_model),
            seed: self.gen.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(SimError::Config("at least one scheme is required".into()));
        }
        if self.memory_blocks == 0 {
            return Err(SimError::Config("memory_blocks must be positive".into()));
        }
        if self.max_writes == 0 {
            return Err(SimError::Config("max_writes must be positive".into()));
        }
        self.sim_config().validate()
    }

    /// Loads the configured trace file, or generates the synthetic trace.
    pub fn load_trace(&self) -> Result<Vec<TraceEvent>> {
        let events = match &self.trace.path {
            Some(path) => {
                let f = fs::File::open(path)
                    .map_err(|e| SimError::Config(format!("cannot open trace {}: {e}", path.display())))?;
                trace::parse_trace(BufReader::new(f), self.pcm.block_bytes)?
            }
            None => trace::generate(&self.gen_spec())?,
        };
        trace::check_addresses(&events, self.memory_blocks)?;
        Ok(events)
    }
}

/// SHA-256 over the canonical text form of the events, hex encoded.
pub fn trace_digest(events: &[TraceEvent]) -> String {
    let mut h = Sha256::new();
    for ev in events {
        h.update(trace::format_event(ev).as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One scheme's result, plus the digest of the event stream it consumed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeRun {
    pub report: RunReport,
    pub trace_digest: String,
}

/// Builds the report for a simulation that has finished replaying.
pub fn build_report(
    sim: &Simulation,
    mfv_top: [f64; 5],
    lifetime: Option<crate::sim::Lifetime>,
    truncated: bool,
) -> RunReport {
    let cfg = &sim.config().pcm;
    let totals = sim.totals();
    let wear = sim.wear_matrix();
    let mut notes = Vec::new();
    if wear.total() == 0 {
        notes.push("no data cell was programmed; intrav defined as 0".to_string());
    }
    if let Some(l) = lifetime {
        if l.capped {
            notes.push(format!("lifetime cap reached after {} writes", l.writes));
        }
        if l.dropped > 0 {
            notes.push(format!("{} writes to dead blocks dropped", l.dropped));
        }
    }
    if truncated {
        notes.push("run halted on a write to a dead block".to_string());
    }
    RunReport {
        scheme: sim.scheme_id(),
        writes: sim.writes(),
        reads: sim.reads(),
        flips_set: totals.flips_set,
        flips_reset: totals.flips_reset,
        flips_meta: totals.meta_flips(),
        energy_pj: totals.energy_pj(cfg),
        data_energy_pj: totals.data_energy_pj(cfg),
        intrav: intrav(&wear),
        lifetime_writes: lifetime.map(|l| l.writes),
        lifetime_seconds: lifetime.map(|l| l.seconds),
        meta_extra_reads: totals.meta_extra_reads,
        mfv_top,
        overhead_bits: sim.overhead_bits(),
        overhead_ratio: sim.overhead_bits() as f64 / cfg.block_bits() as f64,
        max_cell_writes: wear.max(),
        truncated,
        lifetime_capped: lifetime.is_some_and(|l| l.capped),
        notes,
    }
}

/// Replays `events` under one scheme from a fresh memory image.
pub fn run_scheme(cfg: &ExperimentConfig, id: SchemeId, events: &[TraceEvent], mfv_top: [f64; 5]) -> Result<SchemeRun> {
    let mut sim = Simulation::new(cfg.sim_config(), id, cfg.memory_blocks)?;
    let digest = trace_digest(events);
    let report = if cfg.lifetime {
        let life = sim.run_lifetime(events, cfg.max_writes)?;
        build_report(&sim, mfv_top, Some(life), false)
    } else {
        let truncated = sim.run(events)?.is_some();
        build_report(&sim, mfv_top, None, truncated)
    };
    Ok(SchemeRun {
        report,
        trace_digest: digest,
    })
}

/// Runs every configured scheme on the same trace, each on its own thread
/// with its own memory image. Reports come back in configuration order.
pub fn run_comparison(cfg: &ExperimentConfig, events: &[TraceEvent]) -> Result<Vec<SchemeRun>> {
    cfg.validate()?;
    let top = top5_coverage(&mfv_coverage(events, cfg.wire.granule_bits));
    std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .schemes
            .iter()
            .map(|&id| s.spawn(move || run_scheme(cfg, id, events, top)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scheme thread panicked"))
            .collect()
    })
}

/// Structured report document.
#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument<'a> {
    pub config: &'a ExperimentConfig,
    pub trace_events: usize,
    pub runs: &'a [SchemeRun],
}

pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    trace_events: usize,
    runs: &[SchemeRun],
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("reports.csv");
    let json_path = dir.join("reports.json");
    let reports: Vec<RunReport> = runs.iter().map(|r| r.report.clone()).collect();
    let f = fs::File::create(&csv_path)?;
    write_reports_csv(f, &reports).map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    let doc = ReportDocument {
        config: cfg,
        trace_events,
        runs,
    };
    let mut f = fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, &doc).map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    writeln!(f)?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::reports_csv_string;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            memory_blocks: 64,
            gen: GenSection {
                events: 2_000,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = small();
        cfg.wear.enabled = true;
        cfg.gen.values = Some(ValueModel::Categorical { top: vec![(0, 0.5)] });
        cfg.gen.address = AddressModel::Zipf { s: 0.9 };
        cfg.trace.path = Some("t.trace".into());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn namespaced_keys() {
        let cfg = ExperimentConfig::from_toml(
            "scheme = [\"fnw\"]\n[fnw]\nword_bits = 32\n[wire]\nrotation_max = 4\n[wear]\nenabled = true\nepoch_writes = 8\n",
        )
        .unwrap();
        assert_eq!(cfg.schemes, vec![SchemeId::Fnw]);
        assert_eq!(cfg.fnw.word_bits, 32);
        assert_eq!(cfg.sim_config().pcm.rotation_max, 4);
        assert_eq!(cfg.wear.epoch_writes, 8);
        assert!(ExperimentConfig::from_toml("[wire]\nbogus = 1\n").is_err());
    }

    #[test]
    fn empty_scheme_list_is_rejected() {
        let cfg = ExperimentConfig {
            schemes: vec![],
            ..small()
        };
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
    }

    #[test]
    fn schemes_share_the_trace() {
        let cfg = small();
        let events = cfg.load_trace().unwrap();
        let runs = run_comparison(&cfg, &events).unwrap();
        assert_eq!(runs.len(), 4);
        assert!(runs.windows(2).all(|w| w[0].trace_digest == w[1].trace_digest));
        let ids: Vec<SchemeId> = runs.iter().map(|r| r.report.scheme).collect();
        assert_eq!(ids, SchemeId::ALL.to_vec());
        let wire = &runs[3].report;
        assert_eq!((wire.overhead_bits, wire.overhead_ratio), (48, 0.09375));
        assert_eq!(runs[2].report.overhead_bits, 32);
    }

    #[test]
    fn repeat_runs_are_byte_identical() {
        let cfg = small();
        let csv = || {
            let events = cfg.load_trace().unwrap();
            let runs = run_comparison(&cfg, &events).unwrap();
            reports_csv_string(&runs.into_iter().map(|r| r.report).collect::<Vec<_>>())
        };
        assert_eq!(csv(), csv());
    }

    #[test]
    fn lifetime_mode_reports_lifetime() {
        let mut cfg = small();
        cfg.lifetime = true;
        cfg.schemes = vec![SchemeId::Plain];
        cfg.pcm.cell_endurance = 20;
        cfg.memory_blocks = 128;
        let events = cfg.load_trace().unwrap();
        let runs = run_comparison(&cfg, &events).unwrap();
        let r = &runs[0].report;
        assert!(r.lifetime_writes.unwrap() > 0);
        assert!(!r.lifetime_capped);
        let expect = r.lifetime_writes.unwrap() as f64 * 250e-9;
        assert!((r.lifetime_seconds.unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn trace_addresses_are_checked() {
        let dir = std::env::temp_dir().join(format!("pcmsim-exp-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.trace");
        fs::write(&path, "R 0040\n").unwrap();
        let cfg = ExperimentConfig {
            trace: TraceSection { path: Some(path) },
            ..small()
        };
        assert!(matches!(cfg.load_trace(), Err(SimError::Trace(_))));
        fs::remove_dir_all(&dir).ok();
    }
}
