//! CSV and SVG artifacts. Output bytes depend only on the records, so
//! identical runs produce identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdebet::olo::Algorithm;

use crate::error::{HarnessError, Result};
use crate::experiments::{mean_curve, RunRecord, SweepPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    fn svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "svg" | "svg-plot" => Ok(OutputFormat::Svg),
            "both" => Ok(OutputFormat::Both),
            _ => Err(HarnessError::Config(format!("unknown format '{s}'"))),
        }
    }
}

const HEADER: [&str; 8] = ["round", "run", "algorithm", "prediction", "loss", "metric", "bound", "overflow"];

pub fn write_records_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for rec in records {
        for t in 0..rec.rounds() {
            let bound = rec.bound.as_ref().map_or(String::new(), |b| b[t].to_string());
            w.write_record([
                (t + 1).to_string(),
                rec.run.to_string(),
                rec.algorithm.to_string(),
                rec.predictions[t].to_string(),
                rec.losses[t].to_string(),
                rec.metric[t].to_string(),
                bound,
                u8::from(rec.overflow).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records: Vec<RunRecord> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let cell = |j: usize| row.get(j).unwrap_or("");
        let err = |j: usize, m: String| HarnessError::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            column: j + 1,
            message: m,
        };
        let num = |j: usize| -> Result<f64> {
            cell(j).parse().map_err(|_| err(j, format!("not a number: '{}'", cell(j))))
        };
        let run: usize = cell(1).parse().map_err(|_| err(1, "bad run index".into()))?;
        let algorithm: Algorithm = cell(2).parse().map_err(|e: pdebet::Error| err(2, e.to_string()))?;
        let start = records.last().map_or(true, |r| r.run != run || r.algorithm != algorithm);
        if start {
            records.push(RunRecord {
                algorithm,
                run,
                predictions: Vec::new(),
                losses: Vec::new(),
                metric: Vec::new(),
                bound: if cell(6).is_empty() { None } else { Some(Vec::new()) },
                overflow: cell(7) == "1",
            });
        }
        let rec = records.last_mut().expect("pushed above");
        rec.predictions.push(num(3)?);
        rec.losses.push(num(4)?);
        rec.metric.push(num(5)?);
        if let Some(b) = rec.bound.as_mut() {
            b.push(num(6)?);
        }
    }
    Ok(records)
}

pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let algs: Vec<Algorithm> = points
        .first()
        .map_or(Vec::new(), |p| p.regrets.iter().map(|(a, _)| *a).collect());
    let diff = algs.contains(&Algorithm::Kt) && algs.contains(&Algorithm::Erfi);
    let mut header = vec!["u_star".to_string()];
    header.extend(algs.iter().map(|a| format!("regret_{a}")));
    if diff {
        header.push("kt_minus_erfi".into());
    }
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.u_star.to_string()];
        row.extend(p.regrets.iter().map(|(_, r)| r.to_string()));
        if let (true, Some(kt), Some(erfi)) = (diff, p.regret(Algorithm::Kt), p.regret(Algorithm::Erfi)) {
            row.push((kt - erfi).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#d62728"];
const MAX_POINTS: usize = 2000;

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// A self-contained SVG line chart.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let finite = |v: &f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(finite);
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(finite);
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&mut xs.into_iter());
    let (y0, y1) = range(&mut ys.into_iter());
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    for tx in nice_ticks(x0, x1) {
        let x = sx(tx);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#eeeeee"/>"##, top + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 18.0, tick_label(tx));
    }
    for ty in nice_ticks(y0, y1) {
        let y = sy(ty);
        let _ = writeln!(svg, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eeeeee"/>"##, left + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, tick_label(ty));
    }
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
        let pts: Vec<String> = s
            .points
            .iter()
            .enumerate()
            .filter(|(j, p)| (j % stride == 0 || *j + 1 == s.points.len()) && p.0.is_finite() && p.1.is_finite())
            .map(|(_, &(x, y))| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 24.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn metric_label(stem: &str) -> &'static str {
    if stem.starts_with("abs1d") {
        "regret"
    } else if stem.starts_with("stochastic") {
        "negative cumulative loss (mean)"
    } else if stem.starts_with("regression") {
        "total loss (mean)"
    } else {
        "metric"
    }
}

fn algorithms_in(records: &[RunRecord]) -> Vec<Algorithm> {
    let mut algs = Vec::new();
    for r in records {
        if !algs.contains(&r.algorithm) {
            algs.push(r.algorithm);
        }
    }
    algs
}

fn curve(ys: &[f64]) -> Vec<(f64, f64)> {
    ys.iter().enumerate().map(|(t, y)| ((t + 1) as f64, *y)).collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes `<stem>.csv` and/or `<stem>_metric.svg` and `<stem>_predictions.svg`
/// into `dir`, returning the paths written.
pub fn emit_results(records: &[RunRecord], format: OutputFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(HarnessError::Config("no records to emit".into()));
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    if format.csv() {
        let path = dir.join(format!("{stem}.csv"));
        write_records_csv(records, &path)?;
        written.push(path);
    }
    if format.svg() {
        let algs = algorithms_in(records);
        let mut series: Vec<Series> = algs
            .iter()
            .map(|&a| Series {
                name: a.to_string(),
                points: curve(&mean_curve(records, a)),
                dashed: false,
            })
            .collect();
        if let Some(b) = records.iter().find_map(|r| r.bound.as_ref()) {
            series.push(Series {
                name: "conjugate bound".into(),
                points: curve(b),
                dashed: true,
            });
        }
        let label = metric_label(stem);
        let path = dir.join(format!("{stem}_metric.svg"));
        write_file(&path, &line_plot(&format!("{stem}: {label}"), "round", label, &series))?;
        written.push(path);

        let series: Vec<Series> = algs
            .iter()
            .filter_map(|&a| records.iter().find(|r| r.algorithm == a))
            .map(|r| Series {
                name: r.algorithm.to_string(),
                points: curve(&r.predictions),
                dashed: false,
            })
            .collect();
        let path = dir.join(format!("{stem}_predictions.svg"));
        write_file(&path, &line_plot(&format!("{stem}: predictions (run 0)"), "round", "prediction", &series))?;
        written.push(path);
    }
    Ok(written)
}

/// Regret against `u*` at a fixed horizon; the plot shows KT minus erfi on a
/// `log10 u*` axis.
pub fn emit_sweep(points: &[SweepPoint], format: OutputFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    if format.csv() {
        let path = dir.join(format!("{stem}.csv"));
        write_sweep_csv(points, &path)?;
        written.push(path);
    }
    if format.svg() {
        let diff: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| Some((p.u_star.log10(), p.regret(Algorithm::Kt)? - p.regret(Algorithm::Erfi)?)))
            .collect();
        if !diff.is_empty() {
            let path = dir.join(format!("{stem}.svg"));
            let series = [Series {
                name: "kt - erfi".into(),
                points: diff,
                dashed: false,
            }];
            write_file(&path, &line_plot("regret difference at fixed T", "log10 u*", "regret(kt) - regret(erfi)", &series))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, Task};
    use crate::experiments::{abs1d_sweep, run_abs1d};

    fn records() -> Vec<RunRecord> {
        let mut cfg = ExperimentConfig::new(Task::Abs1d);
        cfg.horizon = 60;
        cfg.u_star = 7.5;
        run_abs1d(&cfg).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records();
        let files = emit_results(&recs, OutputFormat::Csv, dir.path(), "abs1d").unwrap();
        assert_eq!(read_records_csv(&files[0]).unwrap(), recs);
    }

    #[test]
    fn output_is_byte_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = emit_results(&records(), OutputFormat::Both, a.path(), "abs1d").unwrap();
        let fb = emit_results(&records(), OutputFormat::Both, b.path(), "abs1d").unwrap();
        assert_eq!(fa.len(), 3);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let svg = fs::read_to_string(&fa[1]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("conjugate bound") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn sweep_outputs() {
        let mut cfg = ExperimentConfig::new(Task::Abs1d);
        cfg.horizon = 50;
        let pts = abs1d_sweep(&cfg, &[1.0, 10.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_sweep(&pts, OutputFormat::Both, dir.path(), "sweep").unwrap();
        let csv = fs::read_to_string(&files[0]).unwrap();
        assert!(csv.starts_with("u_star,regret_erfi,regret_exp,regret_kt,kt_minus_erfi\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn empty_records_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_results(&[], OutputFormat::Csv, dir.path(), "x").is_err());
        assert!("png".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(2.5), "2.5");
    }
}
