//! 2-d projections of flowpipe or trajectory CSV files.

use std::fmt::Write as _;
use std::path::Path;

use crate::Failure;

pub enum Shapes {
    /// Segment boxes: `(x_lo, x_hi, y_lo, y_hi)`.
    Boxes(Vec<[f64; 4]>),
    /// Trajectories: `(run, x, y)` points, grouped by run.
    Paths(Vec<(String, Vec<(f64, f64)>)>),
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, Failure> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Failure::Input(format!("{}: no column `{name}`", path.display())))
}

/// Reads a segments CSV (`<v>_lo`/`<v>_hi` columns) or a trajectory CSV
/// (`<v>` columns, optional `run`).
pub fn read(path: &Path, x: &str, y: &str) -> Result<Shapes, Failure> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let headers = rd
        .headers()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        .clone();
    let boxes = headers.iter().any(|h| h == "time_lo");
    let num = |rec: &csv::StringRecord, i: usize, line: u64| -> Result<f64, Failure> {
        rec[i]
            .parse()
            .map_err(|_| Failure::Input(format!("{}:{line}: `{}` is not a number", path.display(), &rec[i])))
    };
    if boxes {
        let idx = [
            column(&headers, &format!("{x}_lo"), path)?,
            column(&headers, &format!("{x}_hi"), path)?,
            column(&headers, &format!("{y}_lo"), path)?,
            column(&headers, &format!("{y}_hi"), path)?,
        ];
        let mut out = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let line = k as u64 + 2;
            let rec = rec.map_err(|e| Failure::Input(format!("{}:{line}: {e}", path.display())))?;
            let mut b = [0.0; 4];
            for (v, i) in b.iter_mut().zip(idx) {
                *v = num(&rec, i, line)?;
            }
            out.push(b);
        }
        Ok(Shapes::Boxes(out))
    } else {
        let (ix, iy) = (column(&headers, x, path)?, column(&headers, y, path)?);
        let run = headers.iter().position(|h| h == "run");
        let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let line = k as u64 + 2;
            let rec = rec.map_err(|e| Failure::Input(format!("{}:{line}: {e}", path.display())))?;
            let id = run.map_or_else(|| "0".to_string(), |i| rec[i].to_string());
            let p = (num(&rec, ix, line)?, num(&rec, iy, line)?);
            match out.last_mut() {
                Some((r, pts)) if *r == id => pts.push(p),
                _ => out.push((id, vec![p])),
            }
        }
        Ok(Shapes::Paths(out))
    }
}

pub fn to_csv(shapes: &Shapes, x: &str, y: &str) -> String {
    let mut out = String::new();
    match shapes {
        Shapes::Boxes(bs) => {
            let _ = writeln!(out, "{x}_lo,{x}_hi,{y}_lo,{y}_hi");
            for b in bs {
                let _ = writeln!(out, "{},{},{},{}", b[0], b[1], b[2], b[3]);
            }
        }
        Shapes::Paths(ps) => {
            let _ = writeln!(out, "run,{x},{y}");
            for (run, pts) in ps {
                for (a, b) in pts {
                    let _ = writeln!(out, "{run},{a},{b}");
                }
            }
        }
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 50.0;

fn bounds(shapes: &Shapes) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let mut add = |x: f64, y: f64| {
        if x.is_finite() && y.is_finite() {
            b = [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)];
        }
    };
    match shapes {
        Shapes::Boxes(bs) => bs.iter().for_each(|r| {
            add(r[0], r[2]);
            add(r[1], r[3]);
        }),
        Shapes::Paths(ps) => ps.iter().flat_map(|(_, p)| p).for_each(|&(x, y)| add(x, y)),
    }
    if !b[0].is_finite() {
        return [0.0, 1.0, 0.0, 1.0];
    }
    // keep degenerate ranges drawable
    for k in [0, 2] {
        if b[k + 1] - b[k] <= 0.0 {
            let pad = 0.5 * b[k].abs().max(1.0);
            b[k] -= pad;
            b[k + 1] += pad;
        }
    }
    b
}

/// Outlined boxes or polylines on plain axes.
pub fn to_svg(shapes: &Shapes, x: &str, y: &str) -> String {
    let [x0, x1, y0, y1] = bounds(shapes);
    let sx = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(out, r#"<g fill="none" stroke="steelblue" stroke-width="0.8">"#);
    match shapes {
        Shapes::Boxes(bs) => {
            for b in bs {
                let (l, r) = (sx(b[0]), sx(b[1]));
                let (t, btm) = (sy(b[3]), sy(b[2]));
                let _ = writeln!(
                    out,
                    r#"<rect x="{l:.3}" y="{t:.3}" width="{:.3}" height="{:.3}"/>"#,
                    (r - l).max(0.0),
                    (btm - t).max(0.0)
                );
            }
        }
        Shapes::Paths(ps) => {
            for (_, pts) in ps {
                let coords: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.3},{:.3}", sx(a), sy(b))).collect();
                let _ = writeln!(out, r#"<polyline points="{}"/>"#, coords.join(" "));
            }
        }
    }
    let _ = writeln!(out, "</g>");
    let text = |out: &mut String, px: f64, py: f64, anchor: &str, s: &str| {
        let _ = writeln!(
            out,
            r#"<text x="{px:.3}" y="{py:.3}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{s}</text>"#
        );
    };
    text(&mut out, M, H - M + 16.0, "start", &format!("{x0:.4}"));
    text(&mut out, W - M, H - M + 16.0, "end", &format!("{x1:.4}"));
    text(&mut out, W / 2.0, H - 12.0, "middle", x);
    text(&mut out, M - 4.0, H - M, "end", &format!("{y0:.4}"));
    text(&mut out, M - 4.0, M + 4.0, "end", &format!("{y1:.4}"));
    text(&mut out, 14.0, H / 2.0, "middle", y);
    out.push_str("</svg>\n");
    out
}
