//! CSV output and the complexity / performance trade-off table.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::sweep::{PointStats, SweepResult};

pub const CSV_HEADER: &str = "snr_db,frames,block_errors,bler,bler_lo,bler_hi,real_mults_mean";

/// Renders one sweep as CSV: `#` metadata lines, the header, one row per
/// SNR point. Nothing time-dependent is written, so identical runs produce
/// identical bytes.
pub fn csv_string(meta: &[(&str, String)], result: &SweepResult) -> String {
    let mut s = String::new();
    writeln!(s, "# cgsim {}", env!("CARGO_PKG_VERSION")).unwrap();
    for (k, v) in meta {
        writeln!(s, "# {k}={v}").unwrap();
    }
    writeln!(s, "# label={}", result.label).unwrap();
    writeln!(s, "# breakdowns={}", result.breakdowns()).unwrap();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for p in &result.points {
        let (lo, hi) = p.interval();
        writeln!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.1}",
            p.snr_db,
            p.frames,
            p.block_errors,
            p.bler(),
            lo,
            hi,
            p.real_mults_mean()
        )
        .unwrap();
    }
    s
}

pub fn write_csv<W: Write>(mut w: W, meta: &[(&str, String)], result: &SweepResult) -> io::Result<()> {
    w.write_all(csv_string(meta, result).as_bytes())
}

/// SNR (dB) where BLER crosses `target`, interpolating log10(BLER) linearly
/// in dB between the first bracketing pair of points. Falls back to linear
/// BLER when the lower end of the bracket is zero. `None` if no adjacent
/// pair brackets the target.
pub fn snr_at_bler(points: &[PointStats], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.frames == 0 || b.frames == 0 {
            continue;
        }
        let (pa, pb) = (a.bler(), b.bler());
        if pa == target {
            return Some(a.snr_db);
        }
        if !(pa > target && pb <= target) {
            continue;
        }
        let t = if pb > 0.0 {
            (pa.log10() - target.log10()) / (pa.log10() - pb.log10())
        } else {
            (pa - target) / (pa - pb)
        };
        return Some(a.snr_db + t * (b.snr_db - a.snr_db));
    }
    match points.last() {
        Some(p) if p.frames > 0 && p.bler() == target => Some(p.snr_db),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub label: String,
    pub iters: Option<usize>,
    pub mults: u64,
    pub snr_at_target: Option<f64>,
}

pub fn tradeoff_table(rows: &[TradeoffRow], target: f64) -> String {
    let mut s = String::new();
    writeln!(s, "{:<14} {:>4} {:>14} {:>16}", "method", "K", "real_mults", format!("snr@{}%", target * 100.0)).unwrap();
    for r in rows {
        let k = r.iters.map_or("-".to_string(), |k| k.to_string());
        let snr = r.snr_at_target.map_or("n/a".to_string(), |v| format!("{v:.2}"));
        writeln!(s, "{:<14} {:>4} {:>14} {:>16}", r.label, k, r.mults, snr).unwrap();
    }
    s
}
