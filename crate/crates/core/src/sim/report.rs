//! CSV result tables and curve data.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::search::PointResult;

/// Header of the per-point results CSV.
pub const RESULT_HEADER: [&str; 17] = [
    "k_a",
    "rate",
    "nu",
    "channel",
    "preset",
    "ebn0_db",
    "split_ratio",
    "p1",
    "p2",
    "pe",
    "ci_lo",
    "ci_hi",
    "trials",
    "misses",
    "missed_detections",
    "aborted",
    "wall_time_s",
];

/// One operating point of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub k_a: usize,
    pub rate: f64,
    pub nu: String,
    pub channel: String,
    pub preset: String,
    pub ebn0_db: f64,
    pub split_ratio: f64,
    pub p1: f64,
    pub p2: f64,
    pub pe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub misses: u64,
    pub missed_detections: u64,
    pub aborted: bool,
    pub wall_time_s: f64,
}

/// Scheme labels shared by the rows of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeLabel {
    pub k_a: usize,
    pub rate: f64,
    pub nu: String,
    pub channel: String,
    pub preset: String,
}

impl ResultRow {
    pub fn new(label: &SchemeLabel, p: &PointResult) -> Self {
        Self {
            k_a: label.k_a,
            rate: label.rate,
            nu: label.nu.clone(),
            channel: label.channel.clone(),
            preset: label.preset.clone(),
            ebn0_db: p.ebn0_db,
            split_ratio: p.split_ratio,
            p1: p.p1,
            p2: p.p2,
            pe: p.estimate.pe,
            ci_lo: p.estimate.ci_lo,
            ci_hi: p.estimate.ci_hi,
            trials: p.estimate.trials,
            misses: p.estimate.misses,
            missed_detections: p.estimate.missed_detections,
            aborted: p.estimate.aborted,
            wall_time_s: p.wall_time_s,
        }
    }
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// One point of the users-versus-required-Eb/N0 curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub preset: String,
    pub channel: String,
    pub k_a: usize,
    pub rate: f64,
    pub nu: String,
    pub min_ebn0_db: f64,
    pub split_ratio: f64,
    pub feasible: bool,
}

pub const CURVE_HEADER: [&str; 8] = [
    "preset",
    "channel",
    "k_a",
    "rate",
    "nu",
    "min_ebn0_db",
    "split_ratio",
    "feasible",
];

/// Required Eb/N0 per scheme and user count: the smallest point whose upper
/// confidence bound meets `epsilon`.
pub fn curve_from_rows(rows: &[ResultRow], epsilon: f64) -> Vec<CurvePoint> {
    type Key = (String, String, usize, u64, String);
    let mut groups: BTreeMap<Key, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (
            r.preset.clone(),
            r.channel.clone(),
            r.k_a,
            r.rate.to_bits(),
            r.nu.clone(),
        );
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((preset, channel, k_a, rate, nu), rs)| {
            let best = rs
                .iter()
                .filter(|r| !r.aborted && r.ci_hi <= epsilon)
                .min_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
            CurvePoint {
                preset,
                channel,
                k_a,
                rate: f64::from_bits(rate),
                nu,
                min_ebn0_db: best.map_or(f64::INFINITY, |r| r.ebn0_db),
                split_ratio: best.map_or(f64::NAN, |r| r.split_ratio),
                feasible: best.is_some(),
            }
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// False when the required Eb/N0 of some scheme drops as users are added.
/// A sanity flag only.
pub fn curve_is_monotone(curve: &[CurvePoint]) -> bool {
    let mut by_scheme: BTreeMap<(&str, &str), Vec<(usize, f64)>> = BTreeMap::new();
    for p in curve.iter().filter(|p| p.feasible) {
        by_scheme
            .entry((p.preset.as_str(), p.channel.as_str()))
            .or_default()
            .push((p.k_a, p.min_ebn0_db));
    }
    by_scheme.values_mut().all(|pts| {
        pts.sort_by_key(|p| p.0);
        pts.windows(2).all(|w| w[1].1 >= w[0].1)
    })
}

/// Concatenates result tables, dropping exact duplicate rows, sorted by
/// scheme, user count and Eb/N0.
pub fn merge_results(tables: Vec<Vec<ResultRow>>) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = tables.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.preset, &a.channel, a.k_a, &a.nu)
            .cmp(&(&b.preset, &b.channel, b.k_a, &b.nu))
            .then(a.rate.total_cmp(&b.rate))
            .then(a.ebn0_db.total_cmp(&b.ebn0_db))
            .then(a.split_ratio.total_cmp(&b.split_ratio))
    });
    rows.dedup();
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k_a: usize, db: f64, ci_hi: f64) -> ResultRow {
        ResultRow {
            k_a,
            rate: 0.125,
            nu: "x^2".into(),
            channel: "awgn".into(),
            preset: "sparse".into(),
            ebn0_db: db,
            split_ratio: 1.0,
            p1: 0.01,
            p2: 0.01,
            pe: ci_hi / 2.0,
            ci_lo: 0.0,
            ci_hi,
            trials: 200,
            misses: 3,
            missed_detections: 1,
            aborted: false,
            wall_time_s: 1.5,
        }
    }

    #[test]
    fn empty_results_header_only() {
        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn row_round_trip() {
        let r = row(50, 2.25, 0.03);
        let mut buf = Vec::new();
        write_results_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("k_a,rate,nu,channel,preset,ebn0_db"));
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), vec![r]);
    }

    #[test]
    fn curve_picks_smallest_feasible() {
        let rows = vec![
            row(50, 2.0, 0.2),
            row(50, 2.5, 0.04),
            row(50, 3.0, 0.01),
            row(100, 3.0, 0.04),
        ];
        let curve = curve_from_rows(&rows, 0.05);
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].min_ebn0_db, 2.5);
        assert!(curve_is_monotone(&curve));
        let bad = curve_from_rows(&[row(50, 3.0, 0.01), row(100, 2.0, 0.01)], 0.05);
        assert!(!curve_is_monotone(&bad));
    }

    #[test]
    fn merge_sorts_and_dedups() {
        let a = vec![row(100, 3.0, 0.04), row(50, 2.0, 0.2)];
        let b = vec![row(50, 2.0, 0.2)];
        let m = merge_results(vec![a, b]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].k_a, 50);
    }
}
