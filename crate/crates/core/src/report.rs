//! Heatmap, CSV, JSON and plain-text renderings of analysis results.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{ComparisonMatrix, DeltaReport, TopApi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }

    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
        Rgb(
            mix(self.0, other.0),
            mix(self.1, other.1),
            mix(self.2, other.2),
        )
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix('#').unwrap_or(s);
        if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::validation(format!("invalid colour {s:?}")));
        }
        let byte = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).expect("hex checked");
        Ok(Rgb(byte(0), byte(2), byte(4)))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Ten-stop sequential palette, dark purple to yellow, readable with the
/// common forms of colour blindness.
pub const DEFAULT_PALETTE: [Rgb; 10] = [
    Rgb(0x44, 0x01, 0x54),
    Rgb(0x48, 0x28, 0x78),
    Rgb(0x3E, 0x49, 0x89),
    Rgb(0x31, 0x68, 0x8E),
    Rgb(0x26, 0x82, 0x8E),
    Rgb(0x1F, 0x9E, 0x89),
    Rgb(0x35, 0xB7, 0x79),
    Rgb(0x6D, 0xCD, 0x59),
    Rgb(0xB4, 0xDE, 0x2C),
    Rgb(0xFD, 0xE7, 0x25),
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Scale {
    Linear,
    #[default]
    Log1p,
}

impl Scale {
    pub fn apply(self, value: u64) -> f64 {
        match self {
            Scale::Linear => value as f64,
            Scale::Log1p => (value as f64).ln_1p(),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Scale::Linear),
            "log1p" => Ok(Scale::Log1p),
            _ => Err(Error::validation(format!(
                "unknown scale {s:?} (linear, log1p)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub matrix: ComparisonMatrix,
    pub palette: Vec<Rgb>,
    pub scale: Scale,
    pub cell_size: u32,
    /// Space reserved left of the grid for row labels.
    pub margin_left: u32,
    /// Space reserved above the grid for column labels.
    pub margin_top: u32,
    pub margin: u32,
    pub shuffle_seed: Option<u64>,
}

impl HeatmapSpec {
    pub fn new(matrix: ComparisonMatrix) -> Self {
        HeatmapSpec {
            matrix,
            palette: DEFAULT_PALETTE.to_vec(),
            scale: Scale::default(),
            cell_size: 44,
            margin_left: 240,
            margin_top: 200,
            margin: 16,
            shuffle_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.palette.len() < 2 {
            return Err(Error::validation("palette needs at least two stops"));
        }
        if self.cell_size == 0 {
            return Err(Error::validation("cell size must be positive"));
        }
        let m = &self.matrix;
        if m.cells.len() != m.rows.len() || m.cells.iter().any(|r| r.len() != m.columns.len()) {
            return Err(Error::validation(
                "matrix cells do not match its rows and columns",
            ));
        }
        Ok(())
    }
}

/// Maps a scaled value to [0, 1] against the matrix range. A flat range maps
/// everything to 0.
pub fn palette_position(scaled: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((scaled - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn interpolate(palette: &[Rgb], t: f64) -> Rgb {
    let last = palette.len() - 1;
    let x = t.clamp(0.0, 1.0) * last as f64;
    let i = (x.floor() as usize).min(last - 1);
    palette[i].lerp(palette[i + 1], x - i as f64)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn render_heatmap(spec: &HeatmapSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let matrix = match spec.shuffle_seed {
        Some(seed) => spec.matrix.with_shuffled_columns(seed),
        None => spec.matrix.clone(),
    };
    let (n_rows, n_cols) = (matrix.rows.len() as u32, matrix.columns.len() as u32);
    let cs = spec.cell_size;
    let (x0, y0) = (
        spec.margin + spec.margin_left,
        spec.margin + spec.margin_top,
    );
    let width = x0 + n_cols * cs + spec.margin;
    let height = y0 + n_rows * cs + spec.margin;

    let scaled: Vec<f64> = matrix
        .cells
        .iter()
        .flatten()
        .map(|v| spec.scale.apply(*v))
        .collect();
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&matrix.group_name));
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"#FFFFFF\"/>"
    );
    let _ = writeln!(
        svg,
        "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\"><line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\"/><line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{}\"/></g>",
        x0 + n_cols * cs,
        y0 + n_rows * cs
    );

    svg.push_str("<g class=\"column-labels\">\n");
    for (j, c) in matrix.columns.iter().enumerate() {
        let x = x0 + j as u32 * cs + cs / 2;
        let y = y0 - 6;
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" transform=\"rotate(-60 {x} {y})\">{}</text>",
            escape(c.name())
        );
    }
    svg.push_str("</g>\n<g class=\"row-labels\" text-anchor=\"end\">\n");
    for (i, r) in matrix.rows.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" dominant-baseline=\"middle\">{}</text>",
            x0 - 6,
            y0 + i as u32 * cs + cs / 2,
            escape(&r.to_string())
        );
    }
    svg.push_str("</g>\n<g class=\"cells\">\n");
    for (i, row) in matrix.cells.iter().enumerate() {
        for (j, value) in row.iter().enumerate() {
            let t = palette_position(spec.scale.apply(*value), min, max);
            let fill = interpolate(&spec.palette, t);
            let (x, y) = (x0 + j as u32 * cs, y0 + i as u32 * cs);
            let ink = if t < 0.6 { "#FFFFFF" } else { "#000000" };
            let _ = writeln!(
                svg,
                "<rect class=\"cell\" x=\"{x}\" y=\"{y}\" width=\"{cs}\" height=\"{cs}\" fill=\"{fill}\"/><text class=\"value\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" dominant-baseline=\"middle\" fill=\"{ink}\">{value}</text>",
                x + cs / 2,
                y + cs / 2
            );
        }
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg.into_bytes())
}

fn csv_error(e: impl fmt::Display) -> Error {
    Error::Domain(format!("csv: {e}"))
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer.into_inner().map_err(csv_error)
}

/// Header `package,<columns...>` then one line per row.
pub fn emit_csv(matrix: &ComparisonMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("package").chain(matrix.columns.iter().map(|c| c.name()));
    w.write_record(header).map_err(csv_error)?;
    for (r, cells) in matrix.rows.iter().zip(&matrix.cells) {
        let record = std::iter::once(r.to_string()).chain(cells.iter().map(u64::to_string));
        w.write_record(record).map_err(csv_error)?;
    }
    finish(w)
}

/// One line per subcategory then one per API touched by either version.
pub fn emit_delta_csv(report: &DeltaReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "key", "old", "new", "delta"])
        .map_err(csv_error)?;
    for (s, d) in &report.per_subcategory_delta {
        let (old, new) = (report.old.subcategory(*s), report.new.subcategory(*s));
        w.write_record([
            "subcategory",
            s.name(),
            &old.to_string(),
            &new.to_string(),
            &d.to_string(),
        ])
        .map_err(csv_error)?;
    }
    for (api, d) in &report.per_api_delta {
        let get =
            |p: &crate::metrics::PackageVersionProfile| p.per_api.get(api).copied().unwrap_or(0);
        w.write_record([
            "api",
            &api.to_string(),
            &get(&report.old).to_string(),
            &get(&report.new).to_string(),
            &d.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

pub fn emit_top_csv(top: &[TopApi]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "api", "aggregate", "share"])
        .map_err(csv_error)?;
    for (i, t) in top.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            t.api.display_name(),
            format!("{:.4}", t.aggregate),
            format!("{:.6}", t.share),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

/// Pretty JSON with a trailing newline. Key order follows field order.
pub fn emit_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Domain(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Fixed-width text table of a comparison matrix.
pub fn render_text(matrix: &ComparisonMatrix) -> String {
    let labels: Vec<String> = matrix.rows.iter().map(ToString::to_string).collect();
    let first = labels.iter().map(String::len).chain([7]).max().unwrap_or(7);
    let widths: Vec<usize> = matrix
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let widest = matrix
                .cells
                .iter()
                .map(|r| r[j].to_string().len())
                .max()
                .unwrap_or(0);
            c.name().len().max(widest)
        })
        .collect();
    let mut out = format!("{:<first$}", "package");
    for (c, w) in matrix.columns.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", c.name());
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(&matrix.cells) {
        let _ = write!(out, "{label:<first$}");
        for (v, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    out
}
