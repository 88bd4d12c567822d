//! One SVG per corruption kind: mean ratio against α for each variant, with
//! sample-standard-deviation error bars over seeds. Every plotted point
//! carries its numbers as `data-*` attributes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use tam_core::instances::CorruptionKind;

use crate::sweep::ResultRow;
use crate::{BenchError, Result};

pub const Y_MIN: f64 = 0.4;
pub const Y_MAX: f64 = 1.02;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 600.0;
const TOP: f64 = 80.0;
const BOTTOM: f64 = 440.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub alpha: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 with a single seed.
    pub sd: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub variant: String,
    pub points: Vec<Point>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-variant statistics for one kind, skipping errored rows. Variants are
/// listed in order of first appearance.
pub fn series(rows: &[ResultRow], kind: CorruptionKind) -> Vec<Series> {
    let mut order: Vec<&str> = Vec::new();
    // Nonnegative floats sort like their bit patterns.
    let mut groups: BTreeMap<(&str, u64), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == kind && !r.is_error()) {
        if !order.contains(&r.variant.as_str()) {
            order.push(&r.variant);
        }
        groups.entry((&r.variant, r.alpha.to_bits())).or_default().push(r.ratio);
    }
    order
        .into_iter()
        .map(|v| {
            let points = groups
                .range((v, 0)..=(v, u64::MAX))
                .map(|(&(_, bits), xs)| {
                    let (mean, sd) = mean_sd(xs);
                    Point { alpha: f64::from_bits(bits), mean, sd, count: xs.len() }
                })
                .collect();
            Series { variant: v.to_string(), points }
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn kind_title(kind: CorruptionKind) -> &'static str {
    match kind {
        CorruptionKind::AddUnion => "corruption: add (type ∪ random type)",
        CorruptionKind::Replace => "corruption: replace (random type)",
    }
}

/// Renders the plot for `kind`. Variants in `expected` without any rows are
/// named in a warning under the title; other variants found in the rows are
/// drawn after the expected ones.
pub fn plot_svg(rows: &[ResultRow], kind: CorruptionKind, expected: &[&str]) -> Result<String> {
    let mut all = series(rows, kind);
    if all.is_empty() {
        return Err(BenchError::Config(format!("no rows for kind {}", kind.name())));
    }
    let rank = |name: &str| expected.iter().position(|e| *e == name).unwrap_or(expected.len());
    all.sort_by_key(|s| rank(&s.variant));
    let missing: Vec<&str> = expected.iter().copied().filter(|e| all.iter().all(|s| s.variant != *e)).collect();

    let (a_lo, a_hi) = all.iter().flat_map(|s| s.points.iter().map(|p| p.alpha)).fold((0.0f64, 1.0f64), |(lo, hi), a| {
        (lo.min(a), hi.max(a))
    });
    let x = |a: f64| LEFT + (a - a_lo) / (a_hi - a_lo) * (RIGHT - LEFT);
    let y = |r: f64| BOTTOM - (r - Y_MIN) / (Y_MAX - Y_MIN) * (BOTTOM - TOP);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<clipPath id="area"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );

    let _ = writeln!(s, r#"<g class="title">"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="28" font-size="16">Competitive ratio, {}</text>"#, escape(kind_title(kind)));
    for (i, m) in missing.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<text class="warning" x="{LEFT}" y="{}" fill="#b00000">warning: no data for variant {}</text>"##,
            46 + 14 * i,
            escape(m)
        );
    }
    let _ = writeln!(s, "</g>");

    // Axes, grid and ticks.
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/>"#, RIGHT - LEFT, BOTTOM - TOP);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for i in 0..=6 {
        let r = Y_MIN + 0.1 * i as f64;
        let yy = y(r);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{RIGHT}" y2="{yy:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{r:.1}</text>"#, LEFT - 6.0, yy + 4.0);
    }
    let mut alphas: Vec<u64> = all.iter().flat_map(|s| s.points.iter().map(|p| p.alpha.to_bits())).collect();
    alphas.sort_unstable();
    alphas.dedup();
    for a in alphas.into_iter().map(f64::from_bits) {
        let xx = x(a);
        let _ = writeln!(s, r#"<line x1="{xx:.2}" y1="{BOTTOM}" x2="{xx:.2}" y2="{}" stroke="black"/>"#, BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{xx:.2}" y="{}" text-anchor="middle">{a}</text>"#, BOTTOM + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">alpha</text>"#, (LEFT + RIGHT) / 2.0, BOTTOM + 40.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">competitive ratio</text>"#,
        (TOP + BOTTOM) / 2.0
    );
    let _ = writeln!(s, "</g>");

    for (i, series) in all.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let name = escape(&series.variant);
        let _ = writeln!(s, r#"<g class="series" data-variant="{name}" stroke="{color}" fill="{color}" clip-path="url(#area)">"#);
        let path: Vec<String> = series.points.iter().map(|p| format!("{:.2},{:.2}", x(p.alpha), y(p.mean))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for p in &series.points {
            let (xx, top, bot) = (x(p.alpha), y(p.mean + p.sd), y(p.mean - p.sd));
            let _ = writeln!(s, r#"<line x1="{xx:.2}" y1="{top:.2}" x2="{xx:.2}" y2="{bot:.2}"/>"#);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{top:.2}" x2="{:.2}" y2="{top:.2}"/>"#, xx - 3.0, xx + 3.0);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{bot:.2}" x2="{:.2}" y2="{bot:.2}"/>"#, xx - 3.0, xx + 3.0);
            let _ = writeln!(
                s,
                r#"<circle cx="{xx:.2}" cy="{:.2}" r="3" data-alpha="{}" data-mean="{}" data-sd="{}" data-count="{}"><title>{name} alpha={}: {:.4} ± {:.4} (n={})</title></circle>"#,
                y(p.mean),
                p.alpha,
                p.mean,
                p.sd,
                p.count,
                p.alpha,
                p.mean,
                p.sd,
                p.count
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, series) in all.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = RIGHT + 20.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&series.variant));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, kind: CorruptionKind, alpha: f64, seed: u64, m: usize) -> ResultRow {
        ResultRow {
            variant: variant.into(),
            kind,
            alpha,
            seed,
            m,
            n_star: 100,
            ratio: m as f64 / 100.0,
            test_verdict: "none".into(),
            l1_hat: None,
            k_consumed: 0,
            wall_time_ms: 0.0,
            instance_hash: None,
        }
    }

    #[test]
    fn single_point_has_zero_error_bar() {
        let rows = [row("Ranking", CorruptionKind::AddUnion, 0.0, 1, 80)];
        let svg = plot_svg(&rows, CorruptionKind::AddUnion, &["Ranking"]).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(r#"data-mean="0.8" data-sd="0""#));
        assert!(!svg.contains("warning"));
    }

    #[test]
    fn sample_stddev_and_missing_warning() {
        let k = CorruptionKind::Replace;
        let rows = [row("Greedy", k, 0.5, 1, 70), row("Greedy", k, 0.5, 2, 90), row("Greedy", CorruptionKind::AddUnion, 0.5, 1, 10)];
        let s = series(&rows, k);
        assert_eq!(s.len(), 1);
        assert!((s[0].points[0].mean - 0.8).abs() < 1e-12);
        assert!((s[0].points[0].sd - 0.02f64.sqrt()).abs() < 1e-12);
        let svg = plot_svg(&rows, k, &["Ranking", "Greedy"]).unwrap();
        assert!(svg.contains("warning: no data for variant Ranking"));
        assert!(plot_svg(&rows[..2], CorruptionKind::AddUnion, &[]).is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let k = CorruptionKind::AddUnion;
        let rows: Vec<ResultRow> =
            (0..4).flat_map(|s| [row("A&B", k, 0.1, s, 60 + s as usize), row("C", k, 0.2, s, 90)]).collect();
        let a = plot_svg(&rows, k, &["C"]).unwrap();
        assert_eq!(a, plot_svg(&rows, k, &["C"]).unwrap());
        assert!(a.contains("A&amp;B"));
        // Expected variants come first in the legend.
        assert!(a.find(r#"data-variant="C""#).unwrap() < a.find(r#"data-variant="A&amp;B""#).unwrap());
    }
}
