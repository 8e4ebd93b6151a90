//! Self-contained SVG line charts for the run's CSV artifacts. The first
//! CSV column is the x axis; every remaining column becomes one series.
//! Hand-rolled on purpose: the charts are tiny and a plotting stack would
//! dwarf the rest of the binary.

use std::path::Path;

use crate::error::{AppError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// A fully numeric CSV table: one header per column, every cell parsed.
struct Table {
    headers: Vec<String>,
    /// Row-major values; every row has `headers.len()` entries.
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let display = path.display();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::validation(format!("chart input {display}: {e}")))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| AppError::validation(format!("chart input {display}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(AppError::validation(format!(
            "chart input {display}: need an x column plus at least one series column"
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| {
            AppError::validation(format!("chart input {display}: data row {row_no}: {e}"))
        })?;
        let mut row = Vec::with_capacity(headers.len());
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                AppError::validation(format!(
                    "chart input {display}: row {row_no}, column \"{}\": not a number: {cell:?}",
                    headers.get(col).map(String::as_str).unwrap_or("?")
                ))
            })?;
            row.push(value);
        }
        if row.len() != headers.len() {
            return Err(AppError::validation(format!(
                "chart input {display}: row {row_no} has {} cells, expected {}",
                row.len(),
                headers.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AppError::validation(format!(
            "chart input {display}: no data rows"
        )));
    }
    Ok(Table { headers, rows })
}

/// Pad a degenerate (zero-width) range so projection never divides by zero.
fn padded(min: f64, max: f64) -> (f64, f64) {
    if max > min {
        (min, max)
    } else {
        let pad = if min == 0.0 { 0.5 } else { min.abs() * 0.05 + 0.5 };
        (min - pad, max + pad)
    }
}

/// Short, stable tick label: four decimals with trailing zeros trimmed.
fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        return format!("{v:.2e}");
    }
    let mut s = format!("{v:.4}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a line chart for a CSV file produced by this tool (or anything
/// with the same shape). Errors out before producing any output if the
/// file is empty, non-numeric, or has fewer than two columns.
pub fn render_csv_chart(csv_path: &Path) -> Result<String> {
    let table = read_table(csv_path)?;
    let n_series = table.headers.len() - 1;

    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let (x_min, x_max) = padded(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for row in &table.rows {
        for &v in &row[1..] {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let (y_min, y_max) = padded(y_min, y_max);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Grid and tick labels.
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let gx = px(xv);
        let gy = py(yv);
        svg.push_str(&format!(
            "  <line x1=\"{gx:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{gx:.2}\" y2=\"{:.2}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{gy:.2}\" x2=\"{:.2}\" y2=\"{gy:.2}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{gx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            xml_escape(&tick_label(xv))
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            gy + 4.0,
            xml_escape(&tick_label(yv))
        ));
    }

    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.2}\" \
         stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));

    // Axis labels from the CSV headers.
    let y_label = table.headers[1..].join(" / ");
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        xml_escape(&table.headers[0])
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&y_label)
    ));

    // One polyline per series.
    for s in 0..n_series {
        let color = PALETTE[s % PALETTE.len()];
        let points: Vec<String> = table
            .rows
            .iter()
            .map(|row| format!("{:.2},{:.2}", px(row[0]), py(row[s + 1])))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }

    // Legend, top-right inside the plot area.
    for (s, name) in table.headers[1..].iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + s as f64 * 18.0;
        let x = MARGIN_LEFT + plot_w - 150.0;
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            x + 24.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            x + 30.0,
            y + 4.0,
            xml_escape(name)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
