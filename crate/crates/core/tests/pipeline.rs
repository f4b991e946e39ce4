use std::fs;
use std::io::BufReader;

use pcmsim::experiment::{run_comparison, ExperimentConfig, GenSection, TraceSection};
use pcmsim::mfv::Codebook;
use pcmsim::schemes::SchemeId;
use pcmsim::trace::{self, Preset};

fn cfg(events: usize, blocks: u64) -> ExperimentConfig {
    ExperimentConfig {
        memory_blocks: blocks,
        gen: GenSection {
            preset: Some(Preset::WriteHeavy),
            events,
            seed: 21,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn file_trace_matches_generated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let gen_cfg = cfg(3_000, 64);
    let events = gen_cfg.load_trace().unwrap();
    let path = dir.path().join("w.trace");
    trace::emit_trace(fs::File::create(&path).unwrap(), &events).unwrap();
    let back = trace::parse_trace(BufReader::new(fs::File::open(&path).unwrap()), 64).unwrap();
    assert_eq!(back, events);

    let file_cfg = ExperimentConfig {
        trace: TraceSection { path: Some(path) },
        ..gen_cfg.clone()
    };
    let a = run_comparison(&gen_cfg, &events).unwrap();
    let b = run_comparison(&file_cfg, &file_cfg.load_trace().unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(10, 8);
    c.schemes = vec![SchemeId::Wire];
    c.wear.enabled = true;
    c.wire.rotation_max = 3;
    let path = dir.path().join("exp.toml");
    fs::write(&path, c.to_toml()).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), c);
}

#[test]
fn scheme_orderings_on_write_heavy_mix() {
    let c = cfg(20_000, 128);
    let events = c.load_trace().unwrap();
    let runs = run_comparison(&c, &events).unwrap();
    let flips: Vec<u64> = runs.iter().map(|r| r.report.data_flips()).collect();
    // plain, diffwrite, fnw, wire
    assert!(flips[1] < flips[0]);
    assert!(flips[2] < flips[1]);
    assert!(flips[3] < flips[1]);
    let plain = &runs[0].report;
    assert_eq!(plain.data_flips(), plain.writes * 512);
    assert!(runs.iter().all(|r| r.report.writes == plain.writes));
}

#[test]
fn lifetime_orders_plain_below_diffwrite() {
    let mut c = cfg(2_000, 64);
    c.lifetime = true;
    c.pcm.cell_endurance = 50;
    c.schemes = vec![SchemeId::Plain, SchemeId::DiffWrite];
    let events = c.load_trace().unwrap();
    let runs = run_comparison(&c, &events).unwrap();
    let l: Vec<u64> = runs.iter().map(|r| r.report.lifetime_writes.unwrap()).collect();
    assert!(l[0] < l[1], "{l:?}");
}

#[test]
fn codebook_dump_survives_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cb = Codebook::build(&[0x0, 0xf, 0x1, 0x8, 0x7], 4).unwrap();
    let path = dir.path().join("cb.txt");
    fs::write(&path, cb.dump()).unwrap();
    let back = Codebook::load(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, cb);
    assert!((0..16).all(|v| back.decode(back.encode(v)) == v));
}
