//! CSV, JSON and gnuplot emitters for sweep results.
//!
//! Floats are written in shortest round-trip form, so every emitter reproduces
//! the computed values exactly when parsed back.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::analysis::{SweepAxis, SweepKind, SweepMetadata, SweepPoint, SweepResult};

/// Rates smaller in magnitude than this are written as 0 and flagged.
pub const CLAMP_BELOW: f64 = 1e-300;

pub const COLUMNS: [&str; 10] = [
    "curve",
    "parameter",
    "k_ps",
    "p_success",
    "mutual_info",
    "holevo",
    "t_ps_used",
    "t_ps_bob",
    "eps_tolerable",
    "clamped",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn clamp_rate(k: f64) -> (f64, bool) {
    if k != 0.0 && k.abs() < CLAMP_BELOW {
        (0.0, true)
    } else {
        (k, false)
    }
}

fn row(curve: &str, p: &SweepPoint, sep: &str) -> String {
    let (k, clamped) = clamp_rate(p.report.k_ps);
    let eps = p.tolerable_eps.map_or_else(|| "nan".to_owned(), fmt_f64);
    [
        curve.to_owned(),
        fmt_f64(p.parameter),
        fmt_f64(k),
        fmt_f64(p.report.p_success),
        fmt_f64(p.report.mutual_info),
        fmt_f64(p.report.holevo),
        fmt_f64(p.t_ps_alice),
        fmt_f64(p.t_ps_bob),
        eps,
        u8::from(clamped).to_string(),
    ]
    .join(sep)
}

pub fn to_csv(results: &[SweepResult]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in results {
        for p in &r.points {
            out.push_str(&row(&r.curve, p, ","));
            out.push('\n');
        }
    }
    out
}

/// One block per curve, separated by two blank lines so `index` selects curves.
pub fn to_gnuplot(results: &[SweepResult]) -> String {
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# curve: {}", r.curve);
        let _ = writeln!(out, "# axis: {}", r.axis.name());
        let _ = writeln!(out, "# {}", COLUMNS[1..].join(" "));
        for p in &r.points {
            let line = row(&r.curve, p, " ");
            // Drop the curve name column; it is in the block header.
            let _ = writeln!(out, "{}", line.split_once(' ').map_or("", |x| x.1));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveHeader {
    pub curve: String,
    pub axis: SweepAxis,
    pub kind: SweepKind,
    pub run: SweepMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub curve: String,
    #[serde(flatten)]
    pub point: SweepPoint,
}

/// JSON document: one metadata entry per curve and a flat list of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDocument {
    pub metadata: Vec<CurveHeader>,
    pub points: Vec<CurvePoint>,
}

impl SweepDocument {
    pub fn from_results(results: &[SweepResult]) -> Self {
        Self {
            metadata: results
                .iter()
                .map(|r| CurveHeader {
                    curve: r.curve.clone(),
                    axis: r.axis,
                    kind: r.kind,
                    run: r.metadata.clone(),
                })
                .collect(),
            points: results
                .iter()
                .flat_map(|r| {
                    r.points.iter().map(|p| CurvePoint {
                        curve: r.curve.clone(),
                        point: p.clone(),
                    })
                })
                .collect(),
        }
    }

    pub fn into_results(self) -> Vec<SweepResult> {
        let mut points = self.points;
        self.metadata
            .into_iter()
            .map(|h| {
                let (mine, rest): (Vec<_>, Vec<_>) = points.drain(..).partition(|p| p.curve == h.curve);
                points = rest;
                SweepResult {
                    curve: h.curve,
                    axis: h.axis,
                    kind: h.kind,
                    points: mine.into_iter().map(|p| p.point).collect(),
                    metadata: h.run,
                }
            })
            .collect()
    }
}

pub fn to_json(results: &[SweepResult]) -> String {
    serde_json::to_string_pretty(&SweepDocument::from_results(results)).expect("sweep results serialise")
}

pub fn render(results: &[SweepResult], format: Format) -> String {
    match format {
        Format::Csv => to_csv(results),
        Format::Json => to_json(results),
        Format::Gnuplot => to_gnuplot(results),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{rate_sweep, OptimizerSettings, SchemeTemplate};

    fn sample() -> Vec<SweepResult> {
        let s = OptimizerSettings {
            grid_points: 6,
            tol: 1e-2,
            ..OptimizerSettings::default()
        };
        let tpl = SchemeTemplate::reference_two_way();
        vec![
            rate_sweep("orig", &tpl, SweepAxis::DistanceKm, &[0.0, 33.3], &s).unwrap(),
            rate_sweep("a1", &tpl.clone().with_alice(1), SweepAxis::DistanceKm, &[0.0, 33.3], &s).unwrap(),
        ]
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-8, 2.5e-310, 1e300, -7.25e-6, f64::MAX, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let r = sample();
        let back = serde_json::from_str::<SweepDocument>(&to_json(&r)).unwrap().into_results();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_agrees_with_json() {
        let r = sample();
        let csv = to_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        assert_eq!(rows.len(), 4);
        let doc = SweepDocument::from_results(&r);
        for (row, p) in rows.iter().zip(&doc.points) {
            assert_eq!(row[0], p.curve);
            let f = |i: usize| row[i].parse::<f64>().unwrap();
            assert_eq!(f(1), p.point.parameter);
            assert_eq!(f(2), p.point.report.k_ps);
            assert_eq!(f(3), p.point.report.p_success);
            assert_eq!(f(4), p.point.report.mutual_info);
            assert_eq!(f(5), p.point.report.holevo);
            assert_eq!(f(6), p.point.t_ps_alice);
        }
    }

    #[test]
    fn tiny_rates_are_clamped_and_flagged() {
        let mut r = sample();
        r[0].points[0].report.k_ps = 1e-310;
        let csv = to_csv(&r);
        let first = csv.lines().nth(1).unwrap();
        assert!(first.ends_with(",1"));
        assert_eq!(first.split(',').nth(2).unwrap(), "0");
    }

    #[test]
    fn gnuplot_blocks_per_curve() {
        let g = to_gnuplot(&sample());
        assert_eq!(g.matches("# curve:").count(), 2);
        assert_eq!(g.split("\n\n\n").count(), 2);
    }
}
