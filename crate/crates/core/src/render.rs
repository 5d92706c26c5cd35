//! Static SVG figures.
//!
//! Every datum becomes exactly one marker element with id `pt-<i>`; context
//! points drawn behind a sub-cloud use `bg-<i>`. Coordinates are printed with
//! three decimals so output is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MARGIN: f64 = 50.0;
const DEFAULT_COLOR: &str = "#1f77b4";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
/// Essential classes sit at this multiple of the largest finite death.
pub const ESSENTIAL_CAP_FACTOR: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Scree,
    Scatter,
    Subcloud,
    Diagram,
    Mds2d,
    Mds3d,
}

impl PlotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::Scree => "scree",
            PlotKind::Scatter => "scatter",
            PlotKind::Subcloud => "subcloud",
            PlotKind::Diagram => "diagram",
            PlotKind::Mds2d => "mds2d",
            PlotKind::Mds3d => "mds3d",
        }
    }

    /// `<kind>_<tag>.svg`.
    pub fn file_name(&self, tag: &str) -> String {
        format!("{}_{}.svg", self.name(), crate::io::file_tag(tag))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub width: u32,
    pub height: u32,
    pub show_labels: bool,
    /// Group (or point label) to CSS color.
    pub group_colors: BTreeMap<String, String>,
    /// Diagram markers with persistence above this get class `significant`.
    pub persistence_threshold: Option<f64>,
}

impl PlotSpec {
    pub fn new(kind: PlotKind, title: impl Into<String>) -> Self {
        PlotSpec {
            kind,
            title: title.into(),
            width: 640,
            height: 480,
            show_labels: false,
            group_colors: BTreeMap::new(),
            persistence_threshold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub group: Option<String>,
}

impl LabeledPoint {
    pub fn new(label: impl Into<String>, x: f64, y: f64) -> Self {
        LabeledPoint {
            label: label.into(),
            x,
            y,
            group: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotData {
    /// Variance shares in component order.
    Scree(Vec<f64>),
    Points(Vec<LabeledPoint>),
    Subcloud {
        background: Vec<(f64, f64)>,
        points: Vec<LabeledPoint>,
    },
    /// `(birth, death)`; infinite deaths allowed.
    Diagram(Vec<(f64, f64)>),
    /// Third coordinate rendered as marker size.
    Points3 {
        labels: Vec<String>,
        coords: Vec<[f64; 3]>,
        groups: Vec<Option<String>>,
    },
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_owned()
    } else {
        s
    }
}

/// Affine map from a data box to the plotting area (y up).
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(
        xs: impl Iterator<Item = f64> + Clone,
        ys: impl Iterator<Item = f64> + Clone,
        spec: &PlotSpec,
    ) -> Self {
        let (x0, x1) = padded_range(xs);
        let (y0, y1) = padded_range(ys);
        Frame {
            x0,
            x1,
            y0,
            y1,
            width: spec.width as f64,
            height: spec.height as f64,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (self.width - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.height - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (self.height - 2.0 * MARGIN)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, spec: &PlotSpec) {
    let (w, h) = (spec.width, spec.height);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", esc(&spec.title));
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        num(w as f64 / 2.0),
        num(MARGIN / 2.0),
        esc(&spec.title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (left, right) = (MARGIN, f.width - MARGIN);
    let (top, bottom) = (MARGIN, f.height - MARGIN);
    let _ = writeln!(out, r#"<g id="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(left),
        num(bottom),
        num(right),
        num(bottom)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(left),
        num(bottom),
        num(left),
        num(top)
    );
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<g id="ticks" font-family="sans-serif" font-size="10">"#
    );
    for (x, anchor) in [(f.x0, "start"), (f.x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            num(f.px(x)),
            num(bottom + 14.0),
            num(x)
        );
    }
    for y in [f.y0, f.y1] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(left - 4.0),
            num(f.py(y)),
            num(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(f.width / 2.0),
        num(f.height - 12.0),
        esc(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
        num(f.height / 2.0),
        num(f.height / 2.0),
        esc(ylabel)
    );
    let _ = writeln!(out, "</g>");
}

fn label_text(out: &mut String, x: f64, y: f64, text: &str) {
    let _ = writeln!(
        out,
        r#"<text class="label" x="{}" y="{}" font-family="sans-serif" font-size="9">{}</text>"#,
        num(x + 5.0),
        num(y - 5.0),
        esc(text)
    );
}

/// Colors in `spec.group_colors` first, then a fixed palette over the
/// remaining groups in sorted order.
fn color_table<'a>(
    spec: &'a PlotSpec,
    groups: impl Iterator<Item = &'a str>,
) -> BTreeMap<String, String> {
    let mut table: BTreeMap<String, String> = spec.group_colors.clone();
    let missing: BTreeSet<&str> = groups.filter(|g| !table.contains_key(*g)).collect();
    for (k, g) in missing.into_iter().enumerate() {
        table.insert(g.to_owned(), PALETTE[k % PALETTE.len()].to_owned());
    }
    table
}

fn point_color(table: &BTreeMap<String, String>, label: &str, group: Option<&str>) -> String {
    group
        .and_then(|g| table.get(g))
        .or_else(|| table.get(label))
        .cloned()
        .unwrap_or_else(|| DEFAULT_COLOR.to_owned())
}

fn render_points(
    out: &mut String,
    spec: &PlotSpec,
    points: &[LabeledPoint],
    background: &[(f64, f64)],
    sizes: Option<&[f64]>,
) {
    let xs = points
        .iter()
        .map(|p| p.x)
        .chain(background.iter().map(|b| b.0));
    let ys = points
        .iter()
        .map(|p| p.y)
        .chain(background.iter().map(|b| b.1));
    let f = Frame::new(xs.clone(), ys.clone(), spec);
    axes(out, &f, "dim 1", "dim 2");
    if !background.is_empty() {
        let _ = writeln!(out, r##"<g id="background" fill="#cccccc">"##);
        for (i, &(x, y)) in background.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<circle id="bg-{i}" cx="{}" cy="{}" r="2.500"/>"#,
                num(f.px(x)),
                num(f.py(y))
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let table = color_table(spec, points.iter().filter_map(|p| p.group.as_deref()));
    let _ = writeln!(out, r#"<g id="markers">"#);
    for (i, p) in points.iter().enumerate() {
        let r = sizes.map_or(4.0, |s| s[i]);
        let _ = writeln!(
            out,
            r#"<circle id="pt-{i}" cx="{}" cy="{}" r="{}" fill="{}"><title>{}</title></circle>"#,
            num(f.px(p.x)),
            num(f.py(p.y)),
            num(r),
            point_color(&table, &p.label, p.group.as_deref()),
            esc(&p.label)
        );
    }
    let _ = writeln!(out, "</g>");
    if spec.show_labels {
        let _ = writeln!(out, r#"<g id="labels">"#);
        for p in points {
            label_text(out, f.px(p.x), f.py(p.y), &p.label);
        }
        let _ = writeln!(out, "</g>");
    }
}

fn render_scree(out: &mut String, spec: &PlotSpec, shares: &[f64]) {
    let k = shares.len();
    let f = Frame {
        x0: 0.0,
        x1: k.max(1) as f64,
        y0: 0.0,
        y1: shares.iter().copied().fold(0.0, f64::max).max(1e-12) * 1.05,
        width: spec.width as f64,
        height: spec.height as f64,
    };
    axes(out, &f, "component", "share of adjusted inertia");
    let _ = writeln!(out, r#"<g id="markers" fill="{DEFAULT_COLOR}">"#);
    for (i, &s) in shares.iter().enumerate() {
        let (xa, xb) = (f.px(i as f64 + 0.1), f.px(i as f64 + 0.9));
        let (ya, yb) = (f.py(s), f.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect id="pt-{i}" x="{}" y="{}" width="{}" height="{}"><title>{}</title></rect>"#,
            num(xa),
            num(ya),
            num(xb - xa),
            num(yb - ya),
            num(s)
        );
    }
    let _ = writeln!(out, "</g>");
    if spec.show_labels {
        let _ = writeln!(out, r#"<g id="labels">"#);
        for (i, &s) in shares.iter().enumerate() {
            label_text(
                out,
                f.px(i as f64 + 0.2),
                f.py(s),
                &format!("{:.1}%", 100.0 * s),
            );
        }
        let _ = writeln!(out, "</g>");
    }
}

fn render_diagram(out: &mut String, spec: &PlotSpec, pairs: &[(f64, f64)]) -> Result<()> {
    if pairs
        .iter()
        .any(|&(b, d)| !b.is_finite() || d.is_nan() || d < b)
    {
        return Err(Error::Render(
            "diagram points need finite births and death ≥ birth".into(),
        ));
    }
    let max_finite = pairs
        .iter()
        .flat_map(|&(b, d)| [b, d])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let cap = if max_finite > 0.0 {
        ESSENTIAL_CAP_FACTOR * max_finite
    } else {
        1.0
    };
    let shown: Vec<(f64, f64, bool)> = pairs
        .iter()
        .map(|&(b, d)| {
            if d.is_finite() {
                (b, d, false)
            } else {
                (b, cap, true)
            }
        })
        .collect();
    let lo = shown.iter().map(|p| p.0).fold(0.0f64, f64::min);
    let hi = shown.iter().map(|p| p.1).fold(cap, f64::max);
    let (r0, r1) = padded_range([lo, hi].into_iter());
    let f = Frame {
        x0: r0,
        x1: r1,
        y0: r0,
        y1: r1,
        width: spec.width as f64,
        height: spec.height as f64,
    };
    axes(out, &f, "birth", "death");
    let _ = writeln!(
        out,
        r##"<line id="diagonal" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        num(f.px(r0)),
        num(f.py(r0)),
        num(f.px(r1)),
        num(f.py(r1))
    );
    if pairs.iter().any(|p| p.1.is_infinite()) {
        let _ = writeln!(
            out,
            r##"<line id="essential-cap" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbbbbb"/>"##,
            num(f.px(r0)),
            num(f.py(cap)),
            num(f.px(r1)),
            num(f.py(cap))
        );
    }
    let _ = writeln!(out, r#"<g id="markers">"#);
    for (i, &(b, d, essential)) in shown.iter().enumerate() {
        let significant = spec
            .persistence_threshold
            .is_some_and(|t| pairs[i].1 - pairs[i].0 > t);
        let class = match (essential, significant) {
            (true, true) => "essential significant",
            (true, false) => "essential",
            (false, true) => "finite significant",
            (false, false) => "finite",
        };
        let (x, y) = (f.px(b), f.py(d));
        if essential {
            let _ = writeln!(
                out,
                r##"<polygon id="pt-{i}" class="{class}" points="{},{} {},{} {},{}" fill="#d62728"/>"##,
                num(x),
                num(y - 5.0),
                num(x - 5.0),
                num(y + 4.0),
                num(x + 5.0),
                num(y + 4.0)
            );
        } else {
            let _ = writeln!(
                out,
                r#"<circle id="pt-{i}" class="{class}" cx="{}" cy="{}" r="4.000" fill="{DEFAULT_COLOR}"/>"#,
                num(x),
                num(y)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    Ok(())
}

fn kind_mismatch(spec: &PlotSpec, data: &PlotData) -> Error {
    let got = match data {
        PlotData::Scree(_) => "scree shares",
        PlotData::Points(_) => "2-d points",
        PlotData::Subcloud { .. } => "sub-cloud",
        PlotData::Diagram(_) => "diagram",
        PlotData::Points3 { .. } => "3-d points",
    };
    Error::Render(format!("a {} plot cannot draw {got}", spec.kind.name()))
}

/// Renders one figure as an SVG 1.1 document.
pub fn render_plot(spec: &PlotSpec, data: &PlotData) -> Result<String> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Render("width and height must be positive".into()));
    }
    let mut out = String::new();
    header(&mut out, spec);
    match (spec.kind, data) {
        (PlotKind::Scree, PlotData::Scree(s)) => render_scree(&mut out, spec, s),
        (PlotKind::Scatter | PlotKind::Mds2d, PlotData::Points(p)) => {
            render_points(&mut out, spec, p, &[], None)
        }
        (PlotKind::Subcloud, PlotData::Subcloud { background, points }) => {
            render_points(&mut out, spec, points, background, None)
        }
        (PlotKind::Diagram, PlotData::Diagram(p)) => render_diagram(&mut out, spec, p)?,
        (
            PlotKind::Mds3d,
            PlotData::Points3 {
                labels,
                coords,
                groups,
            },
        ) => {
            if labels.len() != coords.len() || groups.len() != coords.len() {
                return Err(Error::Render(
                    "labels, groups and coordinates differ in length".into(),
                ));
            }
            let (z0, z1) = coords
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
                    (a.min(c[2]), b.max(c[2]))
                });
            let sizes: Vec<f64> = coords
                .iter()
                .map(|c| {
                    if z1 - z0 > 1e-12 {
                        3.0 + 6.0 * (c[2] - z0) / (z1 - z0)
                    } else {
                        6.0
                    }
                })
                .collect();
            let points: Vec<LabeledPoint> = labels
                .iter()
                .zip(coords)
                .zip(groups)
                .map(|((l, c), g)| LabeledPoint {
                    label: l.clone(),
                    x: c[0],
                    y: c[1],
                    group: g.clone(),
                })
                .collect();
            render_points(&mut out, spec, &points, &[], Some(&sizes));
        }
        _ => return Err(kind_mismatch(spec, data)),
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn markers(svg: &str) -> usize {
        svg.matches(r#"id="pt-"#).count()
    }

    #[test]
    fn empty_diagram_has_axes_and_diagonal() {
        let svg = render_plot(
            &PlotSpec::new(PlotKind::Diagram, "empty"),
            &PlotData::Diagram(vec![]),
        )
        .unwrap();
        assert!(svg.contains(r#"id="diagonal""#));
        assert!(svg.contains(r#"id="axes""#));
        assert_eq!(markers(&svg), 0);
    }

    #[test]
    fn scree_bars_in_order() {
        let svg = render_plot(
            &PlotSpec::new(PlotKind::Scree, "scree"),
            &PlotData::Scree(vec![0.5, 0.3, 0.2]),
        )
        .unwrap();
        assert_eq!(markers(&svg), 3);
        let p0 = svg.find(r#"id="pt-0""#).unwrap();
        let p2 = svg.find(r#"id="pt-2""#).unwrap();
        assert!(p0 < p2);
    }

    #[test]
    fn essential_points_are_kept() {
        let mut spec = PlotSpec::new(PlotKind::Diagram, "d0");
        spec.persistence_threshold = Some(0.5);
        let svg = render_plot(
            &spec,
            &PlotData::Diagram(vec![(0.0, 1.0), (0.0, f64::INFINITY), (0.2, 0.3)]),
        )
        .unwrap();
        assert_eq!(markers(&svg), 3);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert_eq!(svg.matches("significant").count(), 2);
        assert!(svg.contains("essential-cap"));
    }

    #[test]
    fn kind_must_match_data() {
        let r = render_plot(
            &PlotSpec::new(PlotKind::Scree, "x"),
            &PlotData::Diagram(vec![]),
        );
        assert!(matches!(r, Err(Error::Render(_))));
        let mut spec = PlotSpec::new(PlotKind::Diagram, "x");
        spec.width = 0;
        assert!(render_plot(&spec, &PlotData::Diagram(vec![])).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let mut spec = PlotSpec::new(PlotKind::Scatter, "a < b & c");
        spec.show_labels = true;
        let svg = render_plot(
            &spec,
            &PlotData::Points(vec![LabeledPoint::new("GB0\"1", 0.0, 1.0)]),
        )
        .unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("GB0&quot;1"));
    }

    #[test]
    fn subcloud_and_mds3d_marker_counts() {
        let svg = render_plot(
            &PlotSpec::new(PlotKind::Subcloud, "s"),
            &PlotData::Subcloud {
                background: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)],
                points: vec![LabeledPoint::new("a", 0.0, 0.0)],
            },
        )
        .unwrap();
        assert_eq!(markers(&svg), 1);
        assert_eq!(svg.matches(r#"id="bg-"#).count(), 3);

        let svg = render_plot(
            &PlotSpec::new(PlotKind::Mds3d, "m"),
            &PlotData::Points3 {
                labels: vec!["a".into(), "b".into()],
                coords: vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
                groups: vec![Some("g1".into()), Some("g2".into())],
            },
        )
        .unwrap();
        assert_eq!(markers(&svg), 2);
        assert!(svg.contains(r#"r="3.000""#) && svg.contains(r#"r="9.000""#));
    }

    #[test]
    fn file_names() {
        assert_eq!(
            PlotKind::Diagram.file_name("apin1244"),
            "diagram_apin1244.svg"
        );
    }
}
