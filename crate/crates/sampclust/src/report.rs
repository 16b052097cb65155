//! `results.csv`, `summary.csv` and a grouped bar chart of hits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::ExperimentReport;

pub const RESULTS_HEADER: [&str; 5] = ["sweep_value", "round", "algorithm", "objective", "is_hit"];
pub const SUMMARY_HEADER: [&str; 4] = ["sweep_value", "algorithm", "hits", "rounds"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub chart: PathBuf,
}

/// Writes the three report files into `out_dir`, creating it if needed.
pub fn emit_report(report: &ExperimentReport, out_dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        results: dir.join("results.csv"),
        summary: dir.join("summary.csv"),
        chart: dir.join("chart.svg"),
    };
    write_results(report, &files.results)?;
    write_summary(report, &files.summary)?;
    fs::write(&files.chart, render_chart(report)).map_err(|e| Error::io(&files.chart, e))?;
    Ok(files)
}

fn write_results(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for o in &report.outcomes {
        for ((a, v), hit) in report.algorithms.iter().zip(&o.objectives).zip(o.hits()) {
            w.write_record([
                o.sweep_value.to_string(),
                o.round.to_string(),
                a.name().to_string(),
                v.to_string(),
                (hit as u8).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_summary(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for &value in &report.values {
        for (a, hits) in report.algorithms.iter().zip(report.hit_counts(value)) {
            w.write_record([
                value.to_string(),
                a.name().to_string(),
                hits.to_string(),
                report.rounds.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: usize,
    pub round: usize,
    pub algorithm: String,
    pub objective: f64,
    pub is_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub sweep_value: usize,
    pub algorithm: String,
    pub hits: usize,
    pub rounds: usize,
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    read_rows(path.as_ref(), &RESULTS_HEADER, |f| {
        Some(ResultRow {
            sweep_value: f[0].parse().ok()?,
            round: f[1].parse().ok()?,
            algorithm: f[2].to_string(),
            objective: f[3].parse().ok()?,
            is_hit: match &f[4] {
                "1" => true,
                "0" => false,
                _ => return None,
            },
        })
    })
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    read_rows(path.as_ref(), &SUMMARY_HEADER, |f| {
        Some(SummaryRow {
            sweep_value: f[0].parse().ok()?,
            algorithm: f[1].to_string(),
            hits: f[2].parse().ok()?,
            rounds: f[3].parse().ok()?,
        })
    })
}

fn read_rows<T>(path: &Path, header: &[&str], parse: impl Fn(&csv::StringRecord) -> Option<T>) -> Result<Vec<T>> {
    let format = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()? != header {
        return Err(format(1, format!("expected header {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push(parse(&record).ok_or_else(|| format(line, "malformed row".into()))?);
    }
    Ok(rows)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Grouped bars of hits per sweep value, one bar per algorithm.
pub fn render_chart(report: &ExperimentReport) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_max = report.rounds.max(1) as f64;
    let y = |v: f64| TOP + plot_h * (1.0 - v / y_max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let desc: Vec<String> = report.settings.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    let _ = writeln!(s, "<desc>{}</desc>", escape(&desc.join("; ")));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">Hits per {} ({} rounds, seed {})</text>"#,
        LEFT + plot_w / 2.0,
        escape(&report.parameter),
        report.rounds,
        report.seed
    );

    // Axes and y ticks.
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let step = tick_step(report.rounds.max(1));
    let mut t = 0;
    while t <= report.rounds.max(1) {
        let ty = y(t as f64);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ty}\" x2=\"{LEFT}\" y2=\"{ty}\" stroke=\"black\"/><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{t}</text>",
            LEFT - 5.0,
            LEFT - 8.0,
            ty + 4.0
        );
        t += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&report.parameter)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">hits</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // Bars.
    let groups = report.values.len();
    let algs = report.algorithms.len().max(1);
    if groups > 0 {
        let group_w = plot_w / groups as f64;
        let bar_w = group_w * 0.8 / algs as f64;
        for (g, &value) in report.values.iter().enumerate() {
            let x0 = LEFT + g as f64 * group_w + group_w * 0.1;
            for (a, hits) in report.hit_counts(value).into_iter().enumerate() {
                let top = y(hits as f64);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"><title>{} {}: {hits}</title></rect>"#,
                    x0 + a as f64 * bar_w,
                    TOP + plot_h - top,
                    COLORS[a % COLORS.len()],
                    escape(report.algorithms[a].name()),
                    value
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{value}</text>"#,
                x0 + group_w * 0.4,
                TOP + plot_h + 18.0
            );
        }
    }

    // Legend.
    for (a, alg) in report.algorithms.iter().enumerate() {
        let ly = TOP + 10.0 + a as f64 * 20.0;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            ly - 10.0,
            COLORS[a % COLORS.len()],
            lx + 18.0,
            ly,
            escape(alg.name())
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_step(max: usize) -> usize {
    [1, 2, 5, 10, 20, 25, 50, 100, 200, 500]
        .into_iter()
        .find(|&s| max / s <= 10)
        .unwrap_or(max / 10)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Algorithm, RoundOutcome};

    fn report(values: Vec<usize>, outcomes: Vec<RoundOutcome>) -> ExperimentReport {
        ExperimentReport {
            parameter: "m".into(),
            values,
            rounds: 1,
            seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            settings: vec![("k".into(), "3".into())],
            outcomes,
        }
    }

    #[test]
    fn empty_sweep_gives_headers_and_bare_axes() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report(vec![], vec![]), dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(&files.results).unwrap(),
            "sweep_value,round,algorithm,objective,is_hit\n"
        );
        assert_eq!(
            fs::read_to_string(&files.summary).unwrap(),
            "sweep_value,algorithm,hits,rounds\n"
        );
        let svg = fs::read_to_string(&files.chart).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<title>"));
    }

    #[test]
    fn single_winner_single_hit() {
        let outcome = RoundOutcome {
            sweep_value: 25,
            round: 0,
            objectives: vec![1.5, 2.0, 3.0],
        };
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report(vec![25], vec![outcome]), dir.path()).unwrap();
        let rows = read_results(&files.results).unwrap();
        assert_eq!(rows.iter().filter(|r| r.is_hit).count(), 1);
        assert_eq!(rows[0].algorithm, "RS");
        assert!(rows[0].is_hit);
        assert_eq!(rows[0].objective, 1.5);
        let summary = read_summary(&files.summary).unwrap();
        let hits: Vec<usize> = summary.iter().map(|r| r.hits).collect();
        assert_eq!(hits, vec![1, 0, 0]);
    }

    #[test]
    fn ticks_stay_readable() {
        assert_eq!(tick_step(5), 1);
        assert_eq!(tick_step(30), 5);
        assert_eq!(tick_step(100), 10);
    }

    #[test]
    fn markup_is_escaped() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
