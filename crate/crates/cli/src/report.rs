//! CSV table, JSON manifest and SVG log–log plot for a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentId;
use crate::experiments::{ExperimentRun, FitSummary, SampleRecord};

pub const CSV_HEADER: [&str; 12] = [
    "experiment", "n", "t", "L", "alpha", "eps", "re", "im", "abs", "ref_abs", "rel_err", "wall_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv(run: &ExperimentRun, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(CSV_HEADER)?;
    let name = run.config.experiment.name();
    for r in &run.records {
        w.write_record([
            name.to_string(),
            r.n.to_string(),
            r.t.to_string(),
            opt(r.l),
            opt(r.alpha),
            opt(r.eps),
            opt(r.value.map(|v| v.0)),
            opt(r.value.map(|v| v.1)),
            opt(r.abs()),
            opt(r.ref_abs),
            opt(r.rel_err),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Flagged<'a> {
    index: usize,
    label: &'a str,
    t: f64,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct Summary<'a> {
    samples: usize,
    passed_samples: usize,
    flagged: Vec<Flagged<'a>>,
    passed: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: ExperimentId,
    config: &'a crate::config::ExperimentConfig,
    summary: Summary<'a>,
    fits: &'a [FitSummary],
    notes: &'a [String],
    environment: &'a crate::experiments::Environment,
    files: Vec<String>,
}

pub fn write_manifest(run: &ExperimentRun, path: &Path, files: &[PathBuf]) -> Result<()> {
    let flagged = run
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.passed)
        .map(|(index, r)| Flagged {
            index,
            label: &r.label,
            t: r.t,
            error: r.error.as_deref(),
        })
        .collect();
    let m = Manifest {
        experiment: run.config.experiment,
        config: &run.config,
        summary: Summary {
            samples: run.records.len(),
            passed_samples: run.records.iter().filter(|r| r.passed).count(),
            flagged,
            passed: run.passed,
        },
        fits: &run.fits,
        notes: &run.notes,
        environment: &run.environment,
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    let text = serde_json::to_string_pretty(&m)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// What the plot shows on the y axis for each experiment.
fn plotted(id: ExperimentId, r: &SampleRecord) -> Option<f64> {
    match id {
        ExperimentId::VerifyTransform
        | ExperimentId::VerifyN2
        | ExperimentId::VerifyN3
        | ExperimentId::EasylemCheck
        | ExperimentId::EnvelopeCheck => r.rel_err,
        ExperimentId::VerifyLemmaAsymptotic => r.rel_err.zip(r.ref_abs).map(|(e, a)| e * a),
        ExperimentId::VerifyNdimRemainder | ExperimentId::CounterexampleGrowth => r.abs(),
    }
}

fn y_label(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::VerifyTransform | ExperimentId::VerifyN2 | ExperimentId::VerifyN3 => "relative error",
        ExperimentId::EasylemCheck => "integral / predicted decay",
        ExperimentId::EnvelopeCheck => "kernel / envelope",
        ExperimentId::VerifyLemmaAsymptotic => "|I_L + leading term|",
        ExperimentId::VerifyNdimRemainder => "|G|",
        ExperimentId::CounterexampleGrowth => "|a1|",
    }
}

fn x_label(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::EasylemCheck => "|x|",
        ExperimentId::EnvelopeCheck => "k r",
        _ => "t",
    }
}

/// Log–log scatter with fitted lines; `None` when nothing is plottable.
pub fn render_svg(run: &ExperimentRun) -> Option<String> {
    let id = run.config.experiment;
    let pts: Vec<(f64, f64)> = run
        .records
        .iter()
        .filter_map(|r| plotted(id, r).map(|y| (r.t, y)))
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, id.name());
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">log10 {}</text>"#, w / 2.0, h - 16.0, x_label(id));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {})">log10 {}</text>"#,
        h / 2.0,
        h / 2.0,
        y_label(id)
    );
    for (v, px, py, anchor) in [
        (x0, sx(x0), h - pad + 18.0, "middle"),
        (x1, sx(x1), h - pad + 18.0, "middle"),
    ] {
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{py:.1}" text-anchor="{anchor}" font-size="11">{v:.2}</text>"#);
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{v:.2}</text>"#, pad - 6.0, sy(v) + 4.0);
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="steelblue"/>"#, sx(x), sy(y));
    }
    for (i, f) in run.fits.iter().filter(|f| f.slope.is_finite()).enumerate() {
        // log10 v = slope·log10 t + intercept / ln 10
        let b = f.intercept / std::f64::consts::LN_10;
        let (ya, yb) = (f.slope * x0 + b, f.slope * x1 + b);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2} L{:.2} {:.2}" stroke="firebrick" stroke-width="1.5" fill="none"/>"#,
            sx(x0),
            sy(ya),
            sx(x1),
            sy(yb)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="firebrick">{}: slope {:.4} (target {:.4})</text>"#,
            pad + 10.0,
            pad + 16.0 * (i as f64 + 1.0),
            f.label,
            f.slope,
            f.target
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Writes samples.csv, plot.svg (when there is data) and manifest.json into `dir`.
pub fn emit_report(run: &ExperimentRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let csv_path = dir.join("samples.csv");
    write_csv(run, &csv_path)?;
    files.push(csv_path);
    if let Some(svg) = render_svg(run) {
        let p = dir.join("plot.svg");
        fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
        files.push(p);
    }
    let manifest = dir.join("manifest.json");
    write_manifest(run, &manifest, &files)?;
    files.push(manifest);
    Ok(files)
}
