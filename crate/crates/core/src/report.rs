//! CSV tables and a minimal grouped bar chart in SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_text(path, &csv_string(rows)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

/// Grouped bars: one group per category, one bar per series. Negative
/// values are drawn as zero.
pub fn bar_chart_svg(title: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (w, h, left, top, bottom) = (
        (120 + 40 * categories.len().max(1) * series.len().max(1)) as f64,
        360.0,
        60.0,
        40.0,
        80.0,
    );
    let plot_h = h - top - bottom;
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let group_w = (w - left - 20.0) / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let axis_y = top + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        w - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        left - 4.0,
        top + 4.0,
        max
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">0</text>"#,
        left - 4.0,
        axis_y
    );
    for (c, name) in categories.iter().enumerate() {
        let gx = left + c as f64 * group_w + group_w * 0.1;
        for (k, (_, values)) in series.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0).max(0.0);
            let bh = if v.is_finite() { v / max * plot_h } else { 0.0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}</title></rect>"#,
                gx + k as f64 * bar_w,
                axis_y - bh,
                bar_w,
                bh,
                PALETTE[k % PALETTE.len()],
                v
            );
        }
        let lx = gx + group_w * 0.4;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-40 {lx:.1} {:.1})">{}</text>"#,
            axis_y + 14.0,
            axis_y + 14.0,
            escape(name)
        );
    }
    for (k, (label, _)) in series.iter().enumerate() {
        let y = top + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            w - 110.0,
            y,
            PALETTE[k % PALETTE.len()],
            w - 95.0,
            y + 9.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
    }

    #[test]
    fn csv_has_header_and_rows() {
        let text = csv_string(&[Row { name: "a", value: 1.5 }, Row { name: "b", value: 2.0 }]).unwrap();
        assert_eq!(text, "name,value\na,1.5\nb,2.0\n");
    }

    #[test]
    fn svg_has_one_rect_per_bar_plus_legend() {
        let svg = bar_chart_svg(
            "x < y",
            &["s1".into(), "s2".into()],
            &[("pmbm".into(), vec![1.0, 2.0]), ("sort".into(), vec![0.5, f64::NAN])],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("x &lt; y"));
        assert_eq!(svg.matches("<rect").count(), 4 + 2);
    }
}
