use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::ExperimentResults;
use crate::error::{Result, SfwError};

pub const RESULTS_HEADER: [&str; 9] = [
    "method",
    "attack",
    "tpr_at_1pct_fpr",
    "auc",
    "max_acc",
    "ident_acc",
    "bit_acc",
    "n",
    "pool_size",
];

fn csv_error(e: csv::Error) -> SfwError {
    SfwError::Io(std::io::Error::other(e.to_string()))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| SfwError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// One row per attack. `bit_acc` is empty for methods without a payload.
pub fn results_csv(results: &[ExperimentResults]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).map_err(csv_error)?;
    for r in results {
        for a in &r.attacks {
            w.write_record([
                r.method_label.clone(),
                a.attack.label(),
                f6(a.roc.tpr_at_1pct_fpr),
                f6(a.roc.auc),
                f6(a.roc.max_accuracy),
                f6(a.ident_acc),
                a.bit_acc.map(f6).unwrap_or_default(),
                a.n.to_string(),
                r.pool_size.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w)
}

/// Every ROC point as `method,attack,fpr,tpr`.
pub fn roc_csv(results: &[ExperimentResults]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "attack", "fpr", "tpr"]).map_err(csv_error)?;
    for r in results {
        for a in &r.attacks {
            let label = a.attack.label();
            for (f, t) in a.roc.fpr.iter().zip(&a.roc.tpr) {
                w.write_record([r.method_label.as_str(), label.as_str(), &f6(*f), &f6(*t)])
                    .map_err(csv_error)?;
            }
        }
    }
    finish(w)
}

/// Resolved configs and seeds: enough to re-run bit-exactly.
pub fn manifest_json(results: &[ExperimentResults]) -> String {
    let runs: Vec<_> = results
        .iter()
        .map(|r| {
            json!({
                "method_label": r.method_label,
                "seed": r.config.seed,
                "config": r.config,
            })
        })
        .collect();
    let doc = json!({
        "tool": "sfw",
        "version": env!("CARGO_PKG_VERSION"),
        "runs": runs,
    });
    serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n"
}

const SVG_SIZE: f64 = 400.0;
const SVG_MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// ROC curves as SVG polylines on a unit square, one colour per curve.
pub fn roc_svg(results: &[ExperimentResults]) -> String {
    let total = SVG_SIZE + 2.0 * SVG_MARGIN;
    let x = |f: f64| SVG_MARGIN + f * SVG_SIZE;
    let y = |t: f64| SVG_MARGIN + (1.0 - t) * SVG_SIZE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="none" stroke="black"/>"#,
        m = SVG_MARGIN
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4"/>"##,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">FPR</text>"#, x(0.5), total - 10.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="12">TPR</text>"#, y(0.5));
    let mut k = 0;
    for r in results {
        for a in &r.attacks {
            let colour = PALETTE[k % PALETTE.len()];
            let mut pts = String::new();
            for (f, t) in a.roc.fpr.iter().zip(&a.roc.tpr) {
                let _ = write!(pts, "{:.2},{:.2} ", x(*f), y(*t));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"><title>{} {}</title></polyline>"#,
                pts.trim_end(),
                escape(&r.method_label),
                escape(&a.attack.label())
            );
            k += 1;
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `results.csv`, `roc_points.csv`, `manifest.json` and optionally
/// `roc.svg` into `dir`, creating it if needed. Returns the written paths.
pub fn write_outputs(results: &[ExperimentResults], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join("results.csv"), results_csv(results)?),
        (dir.join("roc_points.csv"), roc_csv(results)?),
        (dir.join("manifest.json"), manifest_json(results)),
    ];
    if svg {
        files.push((dir.join("roc.svg"), roc_svg(results)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (path, text) in files {
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AttackSpec;
    use crate::experiment::{run_experiment, ExperimentConfig, Method};

    fn tiny() -> ExperimentResults {
        let mut c = ExperimentConfig::new(Method::Hsqr);
        c.n_samples = 3;
        c.pool_size = 4;
        c.attacks = vec![AttackSpec::Identity, AttackSpec::Regen { t_star: 60, steps_total: 1000 }];
        run_experiment(&c, 1).unwrap()
    }

    #[test]
    fn results_rows_are_unambiguous() {
        let csv = results_csv(&[tiny()]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER.join(","));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].starts_with("hsqr:center_aware:both,identity,"));
        assert!(rows[1].starts_with("hsqr:center_aware:both,regen(t_star=60;steps_total=1000),"));
        for row in rows {
            assert_eq!(row.split(',').count(), 9);
            assert!(row.ends_with(",3,4"));
        }
    }

    #[test]
    fn roc_points_and_svg() {
        let r = tiny();
        let csv = roc_csv(std::slice::from_ref(&r)).unwrap();
        let expected: usize = r.attacks.iter().map(|a| a.roc.fpr.len()).sum();
        assert_eq!(csv.lines().count(), expected + 1);
        let svg = roc_svg(&[r]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn manifest_carries_resolved_config() {
        let m: serde_json::Value = serde_json::from_str(&manifest_json(&[tiny()])).unwrap();
        let cfg = &m["runs"][0]["config"];
        assert_eq!(cfg["region"], "center_aware");
        assert_eq!(cfg["noise_key"], true);
        let back: ExperimentConfig = serde_json::from_value(cfg.clone()).unwrap();
        assert_eq!(back.n_samples, 3);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_outputs(&[tiny()], dir.path(), true).unwrap();
        assert_eq!(paths.len(), 4);
        for p in paths {
            assert!(p.exists());
        }
    }
}
