//! Wear and energy metrics, and the per-scheme run report.

use std::io::Write;

use serde::Serialize;

use crate::schemes::SchemeId;
use crate::trace::TraceEvent;

/// Per-cell write counts, one row per block.
#[derive(Clone, Debug, PartialEq)]
pub struct WearMatrix {
    cells: usize,
    counts: Vec<u32>,
}

impl WearMatrix {
    pub fn new(cells: usize) -> Self {
        Self {
            cells,
            counts: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let cells = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(cells);
        for r in rows {
            m.push_block(r);
        }
        m
    }

    pub fn push_block(&mut self, row: &[u32]) {
        assert_eq!(row.len(), self.cells, "every block has the same cell count");
        self.counts.extend_from_slice(row);
    }

    pub fn blocks(&self) -> usize {
        self.counts.len().checked_div(self.cells).unwrap_or(0)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.counts[i * self.cells..(i + 1) * self.cells]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Intra-block wear variation: the mean over blocks of each block's sample
/// standard deviation of per-cell write counts, divided by the mean write
/// count of all cells. Zero when nothing has been written.
pub fn intrav(w: &WearMatrix) -> f64 {
    let n = w.blocks();
    let c = w.cells();
    if n == 0 || c < 2 {
        return 0.0;
    }
    let total = w.total();
    if total == 0 {
        return 0.0;
    }
    let bf_aver = total as f64 / (n * c) as f64;
    let sum_std: f64 = (0..n)
        .map(|i| {
            let row = w.row(i);
            let mean = row.iter().map(|&x| x as f64).sum::<f64>() / c as f64;
            let ss: f64 = row.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
            (ss / (c - 1) as f64).sqrt()
        })
        .sum();
    sum_std / (bf_aver * n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub value: u16,
    pub count: u64,
    pub fraction: f64,
    pub cumulative: f64,
}

/// Histogram of `g`-bit granule values over all write payloads, most frequent
/// first (ties by ascending value), with cumulative coverage.
pub fn mfv_coverage(events: &[TraceEvent], g: usize) -> Vec<CoverageRow> {
    assert!(matches!(g, 1 | 2 | 4 | 8), "granule width must divide a byte");
    let mut hist = vec![0u64; 1 << g];
    let per_byte = 8 / g;
    let mask = ((1u16 << g) - 1) as u8;
    for ev in events {
        if let TraceEvent::Write { data, .. } = ev {
            for &b in data {
                for k in 0..per_byte {
                    hist[((b >> (8 - g * (k + 1))) & mask) as usize] += 1;
                }
            }
        }
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    let mut rows: Vec<(u16, u64)> = hist.into_iter().enumerate().map(|(v, n)| (v as u16, n)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut acc = 0u64;
    rows.into_iter()
        .map(|(value, count)| {
            acc += count;
            CoverageRow {
                value,
                count,
                fraction: count as f64 / total as f64,
                cumulative: acc as f64 / total as f64,
            }
        })
        .collect()
}

/// Cumulative coverage of the top 1..=5 values (0 where the table is shorter).
pub fn top5_coverage(table: &[CoverageRow]) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut last = 0.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if let Some(r) = table.get(k) {
            last = r.cumulative;
        }
        *slot = last;
    }
    out
}

pub fn write_coverage_csv<W: Write>(w: W, table: &[CoverageRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "value", "count", "fraction", "cumulative"])?;
    for (k, r) in table.iter().enumerate() {
        out.write_record([
            (k + 1).to_string(),
            format!("{:x}", r.value),
            r.count.to_string(),
            r.fraction.to_string(),
            r.cumulative.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scheme: SchemeId,
    pub writes: u64,
    pub reads: u64,
    pub flips_set: u64,
    pub flips_reset: u64,
    pub flips_meta: u64,
    pub energy_pj: f64,
    /// Energy of data-cell programs alone.
    pub data_energy_pj: f64,
    pub intrav: f64,
    pub lifetime_writes: Option<u64>,
    pub lifetime_seconds: Option<f64>,
    pub meta_extra_reads: u64,
    pub mfv_top: [f64; 5],
    pub overhead_bits: usize,
    pub overhead_ratio: f64,
    pub max_cell_writes: u32,
    /// The run stopped early on a write to a dead block.
    pub truncated: bool,
    /// The lifetime run hit its write cap before capacity fell below half.
    pub lifetime_capped: bool,
    pub notes: Vec<String>,
}

pub const CSV_COLUMNS: [&str; 17] = [
    "scheme",
    "writes",
    "reads",
    "flips_set",
    "flips_reset",
    "flips_meta",
    "energy_pj",
    "intrav",
    "lifetime_writes",
    "lifetime_seconds",
    "meta_extra_reads",
    "mfv_top1",
    "mfv_top2",
    "mfv_top3",
    "mfv_top4",
    "mfv_top5",
    "overhead_bits",
];

impl RunReport {
    pub fn data_flips(&self) -> u64 {
        self.flips_set + self.flips_reset
    }

    fn csv_record(&self) -> Vec<String> {
        let mut rec = vec![
            self.scheme.to_string(),
            self.writes.to_string(),
            self.reads.to_string(),
            self.flips_set.to_string(),
            self.flips_reset.to_string(),
            self.flips_meta.to_string(),
            self.energy_pj.to_string(),
            self.intrav.to_string(),
            self.lifetime_writes.map(|v| v.to_string()).unwrap_or_default(),
            self.lifetime_seconds.map(|v| v.to_string()).unwrap_or_default(),
            self.meta_extra_reads.to_string(),
        ];
        rec.extend(self.mfv_top.iter().map(f64::to_string));
        rec.push(self.overhead_bits.to_string());
        rec
    }
}

/// Writes reports as CSV in [`CSV_COLUMNS`] order.
pub fn write_reports_csv<W: Write>(w: W, reports: &[RunReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in reports {
        out.write_record(r.csv_record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn reports_csv_string(reports: &[RunReport]) -> String {
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, reports).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}
