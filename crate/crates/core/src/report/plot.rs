//! Standalone SVG figures: CDF ensembles with their p-box, and histograms.
//!
//! Coordinates are printed with two decimals so the files are byte-stable.

use std::fmt::Write as _;

use crate::propagation::PBox;
use crate::resampling::Histogram;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (64.0, 24.0, 40.0, 52.0); // left, right, top, bottom

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Maps data coordinates into a plot frame.
#[derive(Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xlim: (f64, f64),
    ylim: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xlim.0) / (self.xlim.1 - self.xlim.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ylim.0) / (self.ylim.1 - self.ylim.0) * self.h
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, r, b) = (self.x0, self.y0, self.x0 + self.w, self.y0 + self.h);
        let _ = writeln!(out, r##"<rect class="frame" x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##, self.w, self.h);
        for x in ticks(self.xlim.0, self.xlim.1, 6) {
            let p = self.px(x);
            let _ = writeln!(
                out,
                r##"<line x1="{p:.2}" y1="{b:.2}" x2="{p:.2}" y2="{:.2}" stroke="#444"/><text x="{p:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                b + 4.0,
                b + 17.0,
                label(x)
            );
        }
        for y in ticks(self.ylim.0, self.ylim.1, 5) {
            let p = self.py(y);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{p:.2}" x2="{l:.2}" y2="{p:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                l - 4.0,
                l - 7.0,
                p + 4.0,
                label(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            b + 36.0,
            xml_escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            l - 44.0,
            (t + b) / 2.0,
            l - 44.0,
            (t + b) / 2.0,
            xml_escape(ylabel)
        );
    }
}

fn open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        width / 2.0,
        xml_escape(title)
    );
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { (lo.abs() * 0.05).max(0.5) };
    (lo - pad, hi + pad)
}

fn points(pts: &[(f64, f64)], f: &Frame) -> String {
    let parts: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    parts.join(" ")
}

/// Vertices of a right-continuous step CDF through (x, F) jumps, extended
/// to the frame at F = 0 and F = 1.
fn steps(jumps: impl Iterator<Item = (f64, f64)>, xlim: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = vec![(xlim.0, 0.0)];
    let mut level = 0.0;
    for (x, f) in jumps {
        out.push((x, level));
        out.push((x, f));
        level = f;
    }
    out.push((xlim.1, level));
    out
}

/// Horsetail plot: one step polyline per member (`class="member"`) over the
/// shaded p-box (`class="pbox"`). `members` hold each member's sorted
/// realizations. Returns `None` when there is nothing to draw.
pub fn horsetail_svg(qoi: &str, members: &[Vec<f64>], pbox: &PBox) -> Option<String> {
    if members.iter().all(|m| m.is_empty()) || pbox.grid.is_empty() {
        return None;
    }
    let xlim = padded(pbox.grid[0], *pbox.grid.last().unwrap());
    let (l, r, t, b) = MARGIN;
    let frame = Frame {
        x0: l,
        y0: t,
        w: WIDTH - l - r,
        h: HEIGHT - t - b,
        xlim,
        ylim: (0.0, 1.0),
    };
    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, &format!("CDF ensemble of {qoi} ({} members)", members.len()));

    let upper = steps(pbox.grid.iter().copied().zip(pbox.upper.iter().copied()), xlim);
    let mut lower = steps(pbox.grid.iter().copied().zip(pbox.lower.iter().copied()), xlim);
    lower.reverse();
    let outline: Vec<String> = upper
        .iter()
        .chain(&lower)
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(
        out,
        r##"<path class="pbox" d="M{}Z" fill="#9ecae1" fill-opacity="0.45" stroke="#3182bd" stroke-width="1.5"/>"##,
        outline.join(" L")
    );
    for (m, values) in members.iter().enumerate() {
        let n = values.len() as f64;
        let pts = steps(values.iter().enumerate().map(|(i, &v)| (v, (i + 1) as f64 / n)), xlim);
        let _ = writeln!(
            out,
            r##"<polyline class="member" data-member="{m}" points="{}" fill="none" stroke="#555" stroke-width="0.8"/>"##,
            points(&pts, &frame)
        );
    }
    frame.axes(&mut out, qoi, "cumulative probability");
    out.push_str("</svg>\n");
    Some(out)
}

fn bars(out: &mut String, frame: &Frame, hist: &Histogram) {
    for (k, &c) in hist.counts.iter().enumerate() {
        let (x0, x1) = (frame.px(hist.edges[k]), frame.px(hist.edges[k + 1]));
        let (y0, y1) = (frame.py(c as f64), frame.py(0.0));
        let _ = writeln!(
            out,
            r##"<rect class="bar" data-count="{c}" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#6baed6" stroke="#08519c" stroke-width="0.6"/>"##,
            (x1 - x0).max(1.0),
            y1 - y0
        );
    }
}

fn histogram_frame(hist: &Histogram, x0: f64, y0: f64, w: f64, h: f64) -> Frame {
    let lo = hist.edges[0];
    let hi = *hist.edges.last().unwrap();
    let xlim = if hi > lo { (lo, hi) } else { padded(lo, hi) };
    let top = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    Frame {
        x0,
        y0,
        w,
        h,
        xlim,
        ylim: (0.0, top * 1.08),
    }
}

/// Histogram with one `rect class="bar"` per bin carrying its count.
pub fn histogram_svg(title: &str, xlabel: &str, hist: &Histogram) -> Option<String> {
    if hist.total() == 0 {
        return None;
    }
    let (l, r, t, b) = MARGIN;
    let frame = histogram_frame(hist, l, t, WIDTH - l - r, HEIGHT - t - b);
    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, title);
    bars(&mut out, &frame, hist);
    frame.axes(&mut out, xlabel, "count");
    out.push_str("</svg>\n");
    Some(out)
}

/// Small-multiple histograms, five panels per row. Empty panels are drawn
/// as a labelled blank frame.
pub fn histogram_panels_svg(title: &str, xlabel: &str, panels: &[(String, Histogram)]) -> Option<String> {
    if panels.iter().all(|(_, h)| h.total() == 0) {
        return None;
    }
    let cols = panels.len().min(5);
    let rows = panels.len().div_ceil(cols);
    let (pw, ph) = (300.0, 220.0);
    let (width, height) = (pw * cols as f64, 40.0 + ph * rows as f64);
    let mut out = String::new();
    open(&mut out, width, height, title);
    for (i, (name, hist)) in panels.iter().enumerate() {
        let (cx, cy) = ((i % cols) as f64 * pw, 40.0 + (i / cols) as f64 * ph);
        let _ = writeln!(out, r#"<g class="panel" data-name="{}">"#, xml_escape(name));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            cx + pw / 2.0,
            cy + 14.0,
            xml_escape(name)
        );
        if hist.total() > 0 {
            let frame = histogram_frame(hist, cx + 56.0, cy + 22.0, pw - 72.0, ph - 78.0);
            bars(&mut out, &frame, hist);
            frame.axes(&mut out, xlabel, "count");
        } else {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">no data</text>"#,
                cx + pw / 2.0,
                cy + ph / 2.0
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Some(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::propagation::{pbox, CDFEnsemble, EmpiricalCDF, Member};

    /// Numbers of every `attr="x,y x,y ..."` or path `d` in elements of `class`.
    pub(crate) fn vertices(svg: &str, class: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.contains(&format!(r#"class="{class}""#)))
            .map(|l| {
                let attr = if l.contains(" points=\"") { " points=\"" } else { " d=\"" };
                let start = l.find(attr).unwrap() + attr.len();
                let body = &l[start..start + l[start..].find('"').unwrap()];
                body.split(|c: char| c == ' ' || c == 'M' || c == 'L' || c == 'Z')
                    .filter(|s| !s.is_empty())
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    pub(crate) fn ensemble(members: &[&[f64]]) -> CDFEnsemble {
        CDFEnsemble {
            qoi_name: "q".into(),
            epistemic_names: vec![],
            members: members
                .iter()
                .map(|v| Member {
                    epistemic: vec![],
                    cdf: EmpiricalCDF::new(v).unwrap(),
                    mean: 0.0,
                    variance: None,
                    convergence: None,
                })
                .collect(),
        }
    }

    fn sorted_members(e: &CDFEnsemble) -> Vec<Vec<f64>> {
        e.members.iter().map(|m| m.cdf.values().to_vec()).collect()
    }

    #[test]
    fn single_member_pbox_coincides() {
        let e = ensemble(&[&[1.0, 2.0, 4.0]]);
        let svg = horsetail_svg("q", &sorted_members(&e), &pbox(&e).unwrap()).unwrap();
        let members = vertices(&svg, "member");
        assert_eq!(members.len(), 1);
        let outline = &vertices(&svg, "pbox")[0];
        // the outline is the member traced forward and back
        let half = outline.len() / 2;
        assert_eq!(&outline[..half], &members[0][..]);
        let mut back = outline[half..].to_vec();
        back.reverse();
        assert_eq!(back, members[0]);
    }

    #[test]
    fn members_lie_inside_the_envelope() {
        let data: [&[f64]; 5] = [
            &[1.0, 2.0, 3.0, 4.0],
            &[1.5, 2.5, 3.5, 4.5],
            &[0.5, 3.0, 3.2, 6.0],
            &[2.0, 2.1, 2.2, 2.3],
            &[1.0, 1.0, 5.0, 5.5],
        ];
        let e = ensemble(&data);
        let svg = horsetail_svg("q", &sorted_members(&e), &pbox(&e).unwrap()).unwrap();
        let members = vertices(&svg, "member");
        assert_eq!(members.len(), 5);
        let outline = &vertices(&svg, "pbox")[0];
        let bbox = |pts: &[(f64, f64)]| {
            pts.iter().fold((f64::MAX, f64::MAX, f64::MIN, f64::MIN), |(a, b, c, d), &(x, y)| {
                (a.min(x), b.min(y), c.max(x), d.max(y))
            })
        };
        let (x0, y0, x1, y1) = bbox(outline);
        // at every member vertex the probability lies between the envelope
        // edges found on the same vertical
        let upper_edge = &outline[..outline.len() / 2];
        let lower_edge = &outline[outline.len() / 2..];
        let span_at = |edge: &[(f64, f64)], x: f64| {
            edge.iter()
                .filter(|p| (p.0 - x).abs() < 1e-9)
                .map(|p| p.1)
                .fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(y), b.max(y)))
        };
        for m in &members {
            let (a, b, c, d) = bbox(m);
            assert!(a >= x0 && b >= y0 && c <= x1 && d <= y1);
            for &(x, y) in m {
                // pixel y grows downward: the upper CDF envelope has the
                // smaller pixel y
                let (u_lo, _) = span_at(upper_edge, x);
                let (_, l_hi) = span_at(lower_edge, x);
                assert!(y >= u_lo - 1e-9 && y <= l_hi + 1e-9, "vertex ({x},{y}) outside [{u_lo},{l_hi}]");
            }
        }
    }

    #[test]
    fn histogram_counts_are_conserved() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let h = Histogram::freedman_diaconis(&values);
        let svg = histogram_svg("t", "x", &h).unwrap();
        let total: usize = svg
            .lines()
            .filter(|l| l.contains(r#"class="bar""#))
            .map(|l| {
                let s = l.split("data-count=\"").nth(1).unwrap();
                s[..s.find('"').unwrap()].parse::<usize>().unwrap()
            })
            .sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn empty_data_draws_nothing() {
        let h = Histogram::freedman_diaconis(&[]);
        assert!(histogram_svg("t", "x", &h).is_none());
        assert!(histogram_panels_svg("t", "x", &[("a".into(), h)]).is_none());
        let p = PBox { grid: vec![], lower: vec![], upper: vec![] };
        assert!(horsetail_svg("q", &[], &p).is_none());
    }

    #[test]
    fn tick_choice() {
        assert_eq!(ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(label(0.6000000000000001), "0.6");
        assert_eq!(ticks(3.0, 3.0, 5), vec![3.0]);
    }
}
