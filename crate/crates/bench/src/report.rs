//! Leaderboard rendering: a Markdown report plus metric and runtime CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rgbwkit_core::metrics::{SsimMode, METRICS_CSV_HEADER};
use rgbwkit_core::noise::gain_key;
use rgbwkit_core::{Error, Result};

use crate::bench::{BenchmarkReport, Timing};

pub const REPORT_MD: &str = "report.md";
pub const METRICS_CSV: &str = "metrics.csv";
pub const RUNTIME_CSV: &str = "runtime.csv";
pub const RUNTIME_CSV_HEADER: &str = "algo,scene_id,gain_db,width,height,runtime_s,runtime_64m_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Both,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "both" | "all" => Ok(ReportFormat::Both),
            other => Err(Error::InvalidParam(format!("unknown report format {other:?} (md, csv or both)"))),
        }
    }
}

/// Every scored row of every algorithm, prefixed with the algorithm name.
pub fn metrics_csv(report: &BenchmarkReport) -> String {
    let mut out = format!("algo,{METRICS_CSV_HEADER}\n");
    for a in &report.algos {
        for r in &a.rows {
            let _ = writeln!(out, "{},{}", a.name, r.csv_row());
        }
    }
    out
}

pub fn runtime_csv(report: &BenchmarkReport) -> String {
    let mut out = format!("{RUNTIME_CSV_HEADER}\n");
    for a in &report.algos {
        for r in &a.runtimes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.3}",
                a.name,
                r.scene_id,
                gain_key(r.gain_db),
                r.width,
                r.height,
                r.measured_s,
                r.estimated_64m_s
            );
        }
    }
    out
}

fn gains_label(gains: &[f64]) -> String {
    gains.iter().map(|g| gain_key(*g)).collect::<Vec<_>>().join("/")
}

pub fn render_markdown(report: &BenchmarkReport) -> String {
    let mut md = String::new();
    let w = &mut md;
    let lpips_absent = report.lpips_absent();
    let lpips_mark = if lpips_absent { " ¹" } else { "" };

    let _ = writeln!(w, "# Remosaic benchmark\n");
    let _ = writeln!(
        w,
        "Dataset `{}`: {} scene(s), gains {} dB{}.\n",
        report.dataset,
        report.scenes,
        gains_label(&report.gains),
        report.split.map_or(String::new(), |s| format!(", split {s:?}").to_lowercase())
    );

    let _ = writeln!(w, "## Ranking\n");
    let _ = writeln!(w, "| Rank | Algorithm | PSNR | SSIM | LPIPS{lpips_mark} | KLD | M4 | Images |");
    let _ = writeln!(w, "|---:|---|---:|---:|---:|---:|---:|---:|");
    for (i, a) in report.ranking().iter().enumerate() {
        let o = &a.aggregates.as_ref().expect("ranked algorithms are aggregated").overall;
        let _ = writeln!(
            w,
            "| {} | {} | {:.3} | {:.4} | {:.4} | {:.4} | {:.2} | {} |",
            i + 1,
            a.name,
            o.psnr,
            o.ssim,
            o.lpips,
            o.kld,
            o.m4,
            o.count
        );
    }

    let _ = writeln!(w, "\n## Per gain\n");
    let _ = writeln!(w, "| Algorithm | Gain (dB) | PSNR | SSIM | LPIPS | KLD | M4 | Images |");
    let _ = writeln!(w, "|---|---:|---:|---:|---:|---:|---:|---:|");
    for a in report.ranking() {
        let agg = a.aggregates.as_ref().expect("ranked algorithms are aggregated");
        let mut gains: Vec<_> = agg.per_gain.iter().collect();
        gains.sort_by(|x, y| {
            let p = |k: &str| k.parse::<f64>().unwrap_or(f64::INFINITY);
            p(x.0).total_cmp(&p(y.0))
        });
        for (g, s) in gains {
            let _ = writeln!(
                w,
                "| {} | {} | {:.3} | {:.4} | {:.4} | {:.4} | {:.2} | {} |",
                a.name, g, s.psnr, s.ssim, s.lpips, s.kld, s.m4, s.count
            );
        }
    }

    let timed: Vec<_> = report.algos.iter().filter_map(|a| a.runtime_summary().map(|s| (a, s))).collect();
    if !timed.is_empty() {
        let _ = writeln!(w, "\n## Runtime\n");
        let _ = writeln!(w, "| Algorithm | Measured (s) | Resolution | 64M estimate (s) | Timing |");
        let _ = writeln!(w, "|---|---:|---|---:|---|");
        for (a, s) in timed {
            let res = s.resolution.map_or("mixed".to_string(), |(x, y)| format!("{x}×{y}"));
            let timing = match a.timing {
                Timing::Builtin { warmup, repeats } => format!("median of {repeats} after {warmup} warm-up ²"),
                Timing::Plugin => "subprocess wall-clock ³".to_string(),
                Timing::External => "not timed".to_string(),
            };
            let _ = writeln!(w, "| {} | {:.4} | {} | {:.2} | {} |", a.name, s.measured_s, res, s.estimated_64m_s, timing);
        }
        let _ = writeln!(w, "\nRuntimes are reported for reference and never affect the ranking.");
    }

    if !report.failures.is_empty() {
        let _ = writeln!(w, "\n## Failures\n");
        for f in &report.failures {
            let _ = writeln!(w, "- {} on {} at {} dB: {}", f.algo, f.scene_id, gain_key(f.gain_db), f.reason.replace('\n', " "));
        }
    }
    if !report.corrupt.is_empty() {
        let _ = writeln!(w, "\n## Unreadable dataset files\n");
        for c in &report.corrupt {
            let _ = writeln!(w, "- `{}`: {}", c.path.display(), c.reason);
        }
    }
    if !report.notices.is_empty() {
        let _ = writeln!(w, "\n## Notices\n");
        for n in &report.notices {
            let _ = writeln!(w, "- {n}");
        }
    }

    let _ = writeln!(w, "\n## Notes\n");
    if lpips_absent {
        let _ = writeln!(w, "1. LPIPS scores were not supplied for some or all images; those count as 0, so M4 is partial.");
    }
    let _ = writeln!(
        w,
        "2. Builtin timings cover the algorithm only, excluding file I/O.\n3. Plugin timings include process start-up, model loading and file I/O, so they are not directly comparable to builtin timings."
    );
    let ssim = match report.eval.ssim_mode {
        SsimMode::PerChannel => "per RGB channel, averaged",
        SsimMode::Luma => "on BT.601 luma",
    };
    let _ = writeln!(
        w,
        "\nM4 = PSNR·SSIM·2^(1−LPIPS−KLD) per image, clamped to [0, 100], then averaged. PSNR and SSIM ({ssim}) are measured on 8-bit ISP output with PSNR capped at 100 dB. KLD uses {}-bin value histograms of the Bayer output, smoothed by {:e}, as KL(ground truth ‖ prediction) in nats.",
        report.eval.bins, report.eval.eps
    );
    let _ = writeln!(w, "\nEnvironment: {}.", report.environment);
    md
}

/// Writes the requested files into `dir` and returns their paths.
pub fn emit_report(report: &BenchmarkReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if matches!(format, ReportFormat::Markdown | ReportFormat::Both) {
        files.push((REPORT_MD, render_markdown(report)));
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        files.push((METRICS_CSV, metrics_csv(report)));
        files.push((RUNTIME_CSV, runtime_csv(report)));
    }
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
