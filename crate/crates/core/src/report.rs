//! Evaluation tables and session plots.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::NetworkTrace;
use crate::qoe::{SessionSummary, SUMMARY_COLUMNS};
use crate::sim::StepOutcome;

/// One (controller, trace) evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub controller: String,
    pub trace: String,
    pub summary: Option<SessionSummary>,
    pub error: Option<String>,
}

pub const SESSION_KEY_COLUMNS: [&str; 3] = ["controller", "trace", "status"];
pub const AGGREGATE_KEY_COLUMNS: [&str; 3] = ["controller", "statistic", "sessions"];

pub fn session_csv_header() -> String {
    SESSION_KEY_COLUMNS
        .iter()
        .chain(SUMMARY_COLUMNS.iter())
        .copied()
        .collect::<Vec<_>>()
        .join(",")
}

pub fn aggregate_csv_header() -> String {
    AGGREGATE_KEY_COLUMNS
        .iter()
        .chain(SUMMARY_COLUMNS.iter())
        .copied()
        .collect::<Vec<_>>()
        .join(",")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn join_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",")
}

pub fn write_sessions_csv<W: Write>(rows: &[EvalRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", session_csv_header())?;
    for r in rows {
        let key = format!("{},{}", csv_field(&r.controller), csv_field(&r.trace));
        match &r.summary {
            Some(s) => writeln!(out, "{key},ok,{}", join_values(&s.columns()))?,
            None => writeln!(out, "{key},error{}", ",".repeat(SUMMARY_COLUMNS.len()))?,
        }
    }
    Ok(())
}

/// Per-controller mean and population standard deviation of every column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub controller: String,
    pub sessions: usize,
    pub failed: usize,
    pub mean: [f64; 10],
    pub std: [f64; 10],
}

impl Aggregate {
    pub fn column(&self, name: &str) -> Option<(f64, f64)> {
        let i = SUMMARY_COLUMNS.iter().position(|c| *c == name)?;
        Some((self.mean[i], self.std[i]))
    }
}

/// Controllers appear in first-seen order.
pub fn aggregate(rows: &[EvalRow]) -> Vec<Aggregate> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.controller.as_str()) {
            names.push(&r.controller);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&EvalRow> = rows.iter().filter(|r| r.controller == name).collect();
            let ok: Vec<[f64; 10]> = mine.iter().filter_map(|r| r.summary.map(|s| s.columns())).collect();
            let n = ok.len();
            let mut mean = [0.0; 10];
            let mut std = [0.0; 10];
            if n > 0 {
                for c in 0..10 {
                    mean[c] = ok.iter().map(|v| v[c]).sum::<f64>() / n as f64;
                    std[c] = (ok.iter().map(|v| (v[c] - mean[c]).powi(2)).sum::<f64>() / n as f64).sqrt();
                }
            }
            Aggregate {
                controller: name.to_string(),
                sessions: n,
                failed: mine.len() - n,
                mean,
                std,
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(aggs: &[Aggregate], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", aggregate_csv_header())?;
    for a in aggs {
        let name = csv_field(&a.controller);
        writeln!(out, "{name},mean,{},{}", a.sessions, join_values(&a.mean))?;
        writeln!(out, "{name},std,{},{}", a.sessions, join_values(&a.std))?;
    }
    Ok(())
}

/// Markdown table of means with standard deviations in parentheses.
pub fn markdown_table(aggs: &[Aggregate]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| controller | n | {} |", SUMMARY_COLUMNS.join(" | "));
    let _ = writeln!(s, "|---|---|{}", "---|".repeat(SUMMARY_COLUMNS.len()));
    for a in aggs {
        let cells: Vec<String> = (0..10)
            .map(|c| format!("{:.3} ({:.3})", a.mean[c], a.std[c]))
            .collect();
        let _ = writeln!(s, "| {} | {} | {} |", a.controller, a.sessions, cells.join(" | "));
    }
    s
}

/// Read back a sessions CSV written by [`write_sessions_csv`].
pub fn read_sessions_csv(text: &str, path: &Path) -> Result<Vec<EvalRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == session_csv_header() => {}
        _ => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: "unexpected header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg: msg.into(),
        };
        let fields = split_csv(line);
        if fields.len() != SESSION_KEY_COLUMNS.len() + SUMMARY_COLUMNS.len() {
            return Err(bad("wrong number of fields"));
        }
        let summary = if fields[2] == "ok" {
            let v: Vec<f64> = fields[3..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad number"))?;
            Some(SessionSummary {
                quality_level: v[0],
                quality_smooth: v[1],
                data_dl_mb: v[2],
                bitrate_mbps: v[3],
                latency_s: v[4],
                speed: v[5],
                freezing_s: v[6],
                freezing_events: 0,
                energy_kj: v[7],
                qoe: v[8],
                energy_efficiency: v[9],
            })
        } else {
            None
        };
        rows.push(EvalRow {
            controller: fields[0].clone(),
            trace: fields[1].clone(),
            error: summary.is_none().then(|| "failed".to_string()),
            summary,
        });
    }
    Ok(rows)
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

struct Panel<'a> {
    title: &'a str,
    unit: &'a str,
    points: Vec<(f64, f64)>,
    step: bool,
}

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 140.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const GAP: f64 = 30.0;

/// Five stacked time-series panels: bandwidth, bitrate, buffer, latency and
/// VMAF against wall-clock time. The SVG has no external references.
pub fn session_svg(outcomes: &[StepOutcome], trace: Option<&NetworkTrace>, title: &str) -> String {
    let t_end = outcomes.last().map(|o| o.wall_clock).unwrap_or(1.0).max(1e-9);
    let mut bw = Vec::new();
    if let Some(tr) = trace {
        let mut t = 0.0;
        while t < t_end {
            let (b, next) = tr.piece_at(t, true).unwrap_or((0.0, t_end));
            bw.push((t, b));
            t = if next > t { next } else { t_end };
        }
        if let Some(&(_, b)) = bw.last() {
            bw.push((t_end, b));
        }
    } else {
        bw = outcomes.iter().map(|o| (o.wall_clock, o.measured_bw)).collect();
    }
    let series = |f: fn(&StepOutcome) -> f64| outcomes.iter().map(|o| (o.wall_clock, f(o))).collect();
    let panels = [
        Panel {
            title: "bandwidth",
            unit: "Mbps",
            points: bw,
            step: true,
        },
        Panel {
            title: "bitrate",
            unit: "Mbps",
            points: series(|o| o.bitrate_kbps as f64 / 1000.0),
            step: true,
        },
        Panel {
            title: "buffer",
            unit: "s",
            points: series(|o| o.buffer),
            step: false,
        },
        Panel {
            title: "latency",
            unit: "s",
            points: series(|o| o.latency),
            step: false,
        },
        Panel {
            title: "vmaf",
            unit: "",
            points: series(|o| o.vmaf),
            step: false,
        },
    ];
    let height = 40.0 + panels.len() as f64 * (PANEL_H + GAP) + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="22" font-size="14">{}</text>"#, xml_escape(title));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    for (i, p) in panels.iter().enumerate() {
        let top = 40.0 + i as f64 * (PANEL_H + GAP);
        let (lo, hi) = value_range(&p.points);
        let x = |t: f64| MARGIN_L + plot_w * (t / t_end).clamp(0.0, 1.0);
        let y = |v: f64| top + PANEL_H - PANEL_H * (v - lo) / (hi - lo);
        let _ = writeln!(
            s,
            r##"<g class="panel" id="{}"><rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#999"/>"##,
            p.title
        );
        let label = if p.unit.is_empty() {
            p.title.to_string()
        } else {
            format!("{} ({})", p.title, p.unit)
        };
        let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="{:.1}">{label}</text>"#, top - 5.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN_L - 5.0, top + 10.0, fmt_tick(hi));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN_L - 5.0, top + PANEL_H, fmt_tick(lo));
        let mut pts = String::new();
        let mut prev: Option<(f64, f64)> = None;
        for &(t, v) in &p.points {
            if p.step {
                if let Some((_, pv)) = prev {
                    let _ = write!(pts, "{:.2},{:.2} ", x(t), y(pv));
                }
            }
            let _ = write!(pts, "{:.2},{:.2} ", x(t), y(v));
            prev = Some((t, v));
        }
        let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{}"/></g>"##, pts.trim_end());
    }
    let axis_y = 40.0 + panels.len() as f64 * (PANEL_H + GAP) - GAP + 15.0;
    let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="{axis_y:.1}">0 s</text>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{axis_y:.1}" text-anchor="end">{} s (wall clock)</text>"#, WIDTH - MARGIN_R, fmt_tick(t_end));
    s.push_str("</svg>\n");
    s
}

fn value_range(points: &[(f64, f64)]) -> (f64, f64) {
    let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0);
    let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() || hi <= lo {
        (lo.min(0.0), lo.min(0.0) + 1.0)
    } else {
        (lo, hi * 1.05)
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
