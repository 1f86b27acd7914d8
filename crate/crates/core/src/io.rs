//! File formats.
//!
//! A domain is stored as a plain-text mask and an optional JSON sidecar:
//!
//! ```text
//! 4 3 0.25
//! 0110
//! 1111
//! 0110
//! ```
//!
//! The header is `nx ny h`; rows follow top row first, one character per
//! cell (`0`/`1`, whitespace between cells allowed, `#` starts a comment
//! line). The grid is centered on the origin unless the sidecar gives an
//! origin. The sidecar lists cracks as `{"i", "j", "axis"}` objects and
//! pins as `[i, j]` pairs.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::FlowTrace;
use crate::pde::FieldSolution;
use crate::sections::{Axis, Edge, Grid, RasterDomain, SectionedDomain, Vertex};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Reads a mask on a centered grid.
pub fn read_mask<R: BufRead>(reader: R) -> Result<RasterDomain> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(k, l)| l.map(|l| (k + 1, l)))
        .filter(|r| {
            r.as_ref()
                .map(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .unwrap_or(true)
        });

    let (hline, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(1, 1, "missing header 'nx ny h'"))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    for tok in header.split_whitespace() {
        let col = header[pos..].find(tok).unwrap() + pos;
        pos = col + tok.len();
        fields.push((col + 1, tok));
    }
    if fields.len() != 3 {
        return Err(parse_err(
            hline,
            fields.get(3).map_or(header.len() + 1, |f| f.0),
            format!("header must be 'nx ny h', found {} field(s)", fields.len()),
        ));
    }
    let count = |(col, tok): (usize, &str), name: &str| -> Result<usize> {
        match tok.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(parse_err(hline, col, format!("{name} must be a positive integer, got '{tok}'"))),
        }
    };
    let nx = count(fields[0], "nx")?;
    let ny = count(fields[1], "ny")?;
    let h = match fields[2].1.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => h,
        _ => {
            return Err(parse_err(
                hline,
                fields[2].0,
                format!("h must be a positive number, got '{}'", fields[2].1),
            ))
        }
    };
    let grid = Grid::centered(nx, ny, h).map_err(|e| parse_err(hline, 1, e.to_string()))?;
    let mut mask = vec![false; grid.len()];
    let mut last_line = hline;
    for row in 0..ny {
        let (ln, text) = lines.next().transpose()?.ok_or_else(|| {
            parse_err(last_line + 1, 1, format!("expected {ny} rows, found {row}"))
        })?;
        last_line = ln;
        let j = ny - 1 - row;
        let mut i = 0;
        for (col, ch) in text.char_indices() {
            let v = match ch {
                '0' => false,
                '1' => true,
                c if c.is_whitespace() => continue,
                c => return Err(parse_err(ln, col + 1, format!("unexpected character '{c}'"))),
            };
            if i == nx {
                return Err(parse_err(ln, col + 1, format!("row longer than nx = {nx}")));
            }
            mask[grid.index(i, j)] = v;
            i += 1;
        }
        if i != nx {
            return Err(parse_err(ln, text.len() + 1, format!("row has {i} cells, expected {nx}")));
        }
    }
    if let Some((ln, _)) = lines.next().transpose()? {
        return Err(parse_err(ln, 1, format!("more than ny = {ny} rows")));
    }
    RasterDomain::from_mask(grid, mask)
}

pub fn parse_mask(text: &str) -> Result<RasterDomain> {
    read_mask(text.as_bytes())
}

pub fn write_mask<W: Write>(domain: &RasterDomain, mut w: W) -> Result<()> {
    let g = domain.grid();
    writeln!(w, "{} {} {}", g.nx, g.ny, g.h)?;
    let mut row = String::with_capacity(g.nx + 1);
    for j in (0..g.ny).rev() {
        row.clear();
        for i in 0..g.nx {
            row.push(if domain.is_masked(i, j) { '1' } else { '0' });
        }
        row.push('\n');
        w.write_all(row.as_bytes())?;
    }
    Ok(())
}

pub fn mask_to_string(domain: &RasterDomain) -> String {
    let mut buf = Vec::new();
    write_mask(domain, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Grid origin and zero-measure obstructions of a domain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(default)]
    pub cracks: Vec<Edge>,
    #[serde(default)]
    pub pins: Vec<[usize; 2]>,
}

impl Sidecar {
    pub fn of(domain: &RasterDomain) -> Self {
        Self {
            origin: Some(domain.grid().origin),
            cracks: domain.cracks().iter().copied().collect(),
            pins: domain.pins().iter().map(|v| [v.i, v.j]).collect(),
        }
    }

    /// Moves the mask to the sidecar's origin and adds its obstructions.
    pub fn apply(&self, domain: RasterDomain) -> Result<RasterDomain> {
        let mut d = match self.origin {
            Some(o) => {
                let g = domain.grid();
                let grid = Grid::new(g.nx, g.ny, g.h, o)?;
                RasterDomain::from_mask(grid, domain.mask().to_vec())?
            }
            None => domain,
        };
        for &e in &self.cracks {
            d.add_crack(e)?;
        }
        for &[i, j] in &self.pins {
            d.add_pin(Vertex::new(i, j))?;
        }
        Ok(d)
    }
}

/// `shape.pbm` → `shape.pbm.json`.
pub fn sidecar_path(mask_path: &Path) -> PathBuf {
    let mut s = mask_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Loads a mask and, when present, its sidecar.
pub fn load_domain(path: &Path) -> Result<RasterDomain> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let domain = read_mask(std::io::BufReader::new(file))?;
    let side = sidecar_path(path);
    if side.exists() {
        let text = std::fs::read_to_string(&side)?;
        let sc: Sidecar = serde_json::from_str(&text)?;
        sc.apply(domain)
    } else {
        Ok(domain)
    }
}

/// Writes the mask and its sidecar.
pub fn save_domain(path: &Path, domain: &RasterDomain) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mask(domain, &mut f)?;
    f.flush()?;
    let json = serde_json::to_string_pretty(&Sidecar::of(domain))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn sectioned_to_json(d: &SectionedDomain) -> Result<String> {
    Ok(serde_json::to_string_pretty(d)?)
}

/// Parses and validates a sectioned domain.
pub fn sectioned_from_json(text: &str) -> Result<SectionedDomain> {
    let d: SectionedDomain = serde_json::from_str(text)?;
    SectionedDomain::new(d.theta, d.x_lo, d.dx, d.columns)
}

pub const TRACE_HEADER: &str = "tau,measure,lambda,torsion,perimeter,gamma_to_target";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// CSV with one row per sample; absent values are empty fields.
pub fn trace_csv(trace: &FlowTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{},{},{:.17e},{}",
            s.tau,
            s.measure,
            opt(s.lambda),
            opt(s.torsion),
            s.perimeter,
            opt(s.gamma_to_target)
        );
    }
    out
}

pub fn trace_json(trace: &FlowTrace) -> Result<String> {
    Ok(serde_json::to_string_pretty(trace)?)
}

/// `x,y,u` at the masked cell centers.
pub fn field_csv(field: &FieldSolution) -> String {
    let g = field.grid;
    let mut out = String::from("x,y,u\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let [x, y] = g.cell_center(i, j);
            let _ = writeln!(out, "{x},{y},{:e}", field.values[g.index(i, j)]);
        }
    }
    out
}

/// Plain grayscale image scaled to the field maximum, top row first.
pub fn field_pgm(field: &FieldSolution) -> String {
    let g = field.grid;
    let max = field.values.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut out = format!("P2\n{} {}\n255\n", g.nx, g.ny);
    for j in (0..g.ny).rev() {
        let row: Vec<String> = (0..g.nx)
            .map(|i| ((field.values[g.index(i, j)].max(0.0) * scale).round() as u8).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Cells as filled squares and cracks as red segments, one SVG unit per cell.
pub fn domain_svg(domain: &RasterDomain) -> String {
    let g = domain.grid();
    let (w, hgt) = (g.nx, g.ny);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {hgt}\" width=\"{}\" height=\"{}\">\n",
        w * 4,
        hgt * 4
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#555\">\n");
    for j in 0..g.ny {
        // merge runs along the row
        let y = g.ny - 1 - j;
        let mut i = 0;
        while i < g.nx {
            if !domain.is_masked(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < g.nx && domain.is_masked(i, j) {
                i += 1;
            }
            let _ = writeln!(out, "<rect x=\"{start}\" y=\"{y}\" width=\"{}\" height=\"1\"/>", i - start);
        }
    }
    out.push_str("</g>\n<g stroke=\"#d00\" stroke-width=\"0.3\">\n");
    for e in domain.cracks() {
        let (x1, y1, x2, y2) = match e.axis {
            Axis::X => (e.i + 1, g.ny - e.j, e.i + 1, g.ny - e.j - 1),
            Axis::Y => (e.i, g.ny - e.j - 1, e.i + 1, g.ny - e.j - 1),
        };
        let _ = writeln!(out, "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\"/>");
    }
    out.push_str("</g>\n<g fill=\"#00d\">\n");
    for v in domain.pins() {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"0.3\"/>", v.i, g.ny - v.j);
    }
    out.push_str("</g>\n</svg>\n");
    out
}
