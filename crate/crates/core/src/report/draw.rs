use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use plotters::coord::Shift;
use plotters::prelude::*;
use plotters::style::text_anchor::{HPos, Pos, VPos};
use plotters::style::{register_font, FontStyle};

use super::{ImageFormat, Line, Plot};
use crate::io::atomic_write;

const FONT_CANDIDATES: [&str; 5] = [
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
    "/usr/share/fonts/dejavu/DejaVuSans.ttf",
    "/System/Library/Fonts/Supplemental/Arial.ttf",
    "C:\\Windows\\Fonts\\arial.ttf",
];

const NO_DATA: RGBColor = RGBColor(190, 190, 190);
const FAMILY: &str = "sans-serif";

/// Registers a TrueType font for text rendering. `REEFPAM_FONT` overrides the
/// built-in search list.
pub fn ensure_font() -> Result<(), String> {
    static FONT: OnceLock<Result<(), String>> = OnceLock::new();
    FONT.get_or_init(|| {
        let env = std::env::var("REEFPAM_FONT").ok();
        for p in env.iter().map(String::as_str).chain(FONT_CANDIDATES) {
            let Ok(bytes) = std::fs::read(p) else { continue };
            let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
            if register_font(FAMILY, FontStyle::Normal, bytes).is_ok() {
                return Ok(());
            }
        }
        Err("no usable TrueType font found; set REEFPAM_FONT".into())
    })
    .clone()
}

/// Writes `plot` to `path` atomically. Images are 8 x 5 inches at `dpi`.
pub fn render_image(plot: &Plot, path: &Path, format: ImageFormat, dpi: u32) -> Result<(), String> {
    ensure_font()?;
    let size = (8 * dpi, 5 * dpi);
    let scale = dpi as f64 / 100.0;
    match format {
        ImageFormat::Svg => {
            let mut svg = String::new();
            {
                let root = SVGBackend::with_string(&mut svg, size).into_drawing_area();
                draw(&root, plot, scale)?;
                root.present().map_err(|e| e.to_string())?;
            }
            atomic_write(path, |f| f.write_all(svg.as_bytes())).map_err(|e| e.to_string())
        }
        ImageFormat::Png => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = tempfile::Builder::new()
                .prefix(".render")
                .suffix(".png")
                .tempfile_in(dir)
                .map_err(|e| e.to_string())?;
            {
                let root = BitMapBackend::new(tmp.path(), size).into_drawing_area();
                draw(&root, plot, scale)?;
                root.present().map_err(|e| e.to_string())?;
            }
            tmp.persist(path).map_err(|e| e.error.to_string())?;
            Ok(())
        }
    }
}

fn px(v: f64, scale: f64) -> u32 {
    (v * scale).round() as u32
}

/// Splits a line at missing values.
fn runs(points: &[(f64, Option<f64>)]) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new()];
    for (x, y) in points {
        match y {
            Some(y) => out.last_mut().expect("non-empty").push((*x, *y)),
            None if !out.last().expect("non-empty").is_empty() => out.push(Vec::new()),
            None => {}
        }
    }
    out.retain(|r| !r.is_empty());
    out
}

fn draw<DB: DrawingBackend>(root: &DrawingArea<DB, Shift>, plot: &Plot, scale: f64) -> Result<(), String> {
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    match plot {
        Plot::Lines {
            title,
            x_label,
            y_label,
            x_range,
            y_range,
            lines,
        } => draw_lines(root, title, x_label, y_label, *x_range, *y_range, lines, scale),
        Plot::Heatmap {
            title,
            value_label,
            dates,
            cells,
        } => draw_heatmap(root, title, value_label, dates, cells, scale),
        Plot::Bars {
            title,
            y_label,
            labels,
            values,
            marks,
        } => draw_bars(root, title, y_label, labels, values, marks, scale),
    }
    .map_err(|e| e.to_string())
}

type DrawResult<DB> = Result<(), DrawingAreaErrorKind<<DB as DrawingBackend>::ErrorType>>;

#[allow(clippy::too_many_arguments)]
fn draw_lines<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    title: &str,
    x_label: &str,
    y_label: &str,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    lines: &[Line],
    scale: f64,
) -> DrawResult<DB> {
    let mut chart = ChartBuilder::on(root)
        .caption(title, (FAMILY, 18.0 * scale))
        .margin(px(12.0, scale))
        .x_label_area_size(px(45.0, scale))
        .y_label_area_size(px(75.0, scale))
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .label_style((FAMILY, 12.0 * scale))
        .axis_desc_style((FAMILY, 13.0 * scale))
        .draw()?;
    for (i, line) in lines.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let style = ShapeStyle::from(color).stroke_width(px(2.0, scale).max(1));
        let mut labelled = false;
        for run in runs(&line.points) {
            let anno = if line.dashed {
                chart.draw_series(DashedLineSeries::new(run.clone(), px(8.0, scale), px(5.0, scale), style))?
            } else {
                chart.draw_series(LineSeries::new(run.clone(), style))?
            };
            if !labelled {
                labelled = true;
                let legend_style = style;
                let half = px(10.0, scale) as i32;
                anno.label(line.name.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 2 * half, y)], legend_style));
            }
            if line.markers {
                let r = px(3.0, scale).max(1);
                chart.draw_series(run.iter().map(|p| Circle::new(*p, r, color.filled())))?;
            }
        }
    }
    if lines.iter().any(|l| l.points.iter().any(|p| p.1.is_some())) {
        chart
            .configure_series_labels()
            .label_font((FAMILY, 12.0 * scale))
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .position(SeriesLabelPosition::LowerRight)
            .draw()?;
    }
    root.present()
}

fn draw_heatmap<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    title: &str,
    value_label: &str,
    dates: &[chrono::NaiveDate],
    cells: &[[Option<f64>; 24]],
    scale: f64,
) -> DrawResult<DB> {
    let (lo, hi) = cells
        .iter()
        .flatten()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let caption = if lo.is_finite() {
        format!("{title}; {value_label} {lo:.4} (dark) to {hi:.4} (bright); grey = no data")
    } else {
        format!("{title}; no data")
    };
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let n = dates.len().max(1);
    let mut chart = ChartBuilder::on(root)
        .caption(caption, (FAMILY, 14.0 * scale))
        .margin(px(12.0, scale))
        .x_label_area_size(px(45.0, scale))
        .y_label_area_size(px(95.0, scale))
        .build_cartesian_2d(0f64..24f64, 0f64..n as f64)?;
    let date_label = |y: &f64| dates.get(y.floor().max(0.0) as usize).map(|d| d.to_string()).unwrap_or_default();
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("Hour of day")
        .y_desc("Date")
        .x_labels(13)
        .y_labels(n.min(12))
        .y_label_formatter(&date_label)
        .label_style((FAMILY, 11.0 * scale))
        .axis_desc_style((FAMILY, 13.0 * scale))
        .draw()?;
    chart.draw_series(cells.iter().enumerate().flat_map(|(r, row)| {
        row.iter().enumerate().map(move |(h, v)| {
            let color = match v {
                Some(v) => ViridisRGB::get_color_normalized(*v, lo, hi),
                None => NO_DATA,
            };
            Rectangle::new([(h as f64, r as f64), (h as f64 + 1.0, r as f64 + 1.0)], color.filled())
        })
    }))?;
    root.present()
}

fn draw_bars<DB: DrawingBackend>(
    root: &DrawingArea<DB, Shift>,
    title: &str,
    y_label: &str,
    labels: &[String],
    values: &[Option<f64>],
    marks: &[String],
    scale: f64,
) -> DrawResult<DB> {
    let k = labels.len().max(1);
    let mut chart = ChartBuilder::on(root)
        .caption(title, (FAMILY, 16.0 * scale))
        .margin(px(12.0, scale))
        .x_label_area_size(px(60.0, scale))
        .y_label_area_size(px(60.0, scale))
        .build_cartesian_2d(-0.5f64..k as f64 - 0.5, -1.1f64..1.1f64)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(0)
        .y_desc(y_label)
        .label_style((FAMILY, 10.0 * scale))
        .axis_desc_style((FAMILY, 13.0 * scale))
        .draw()?;
    let label_font = TextStyle::from((FAMILY, 10.0 * scale).into_font()).pos(Pos::new(HPos::Center, VPos::Top));
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = chart.backend_coord(&(i as f64, -1.1));
        root.draw(&Text::new(label.replace('_', " "), (x, y + px(8.0, scale) as i32), label_font.clone()))?;
    }
    chart.draw_series(std::iter::once(PathElement::new(vec![(-0.5, 0.0), (k as f64 - 0.5, 0.0)], BLACK)))?;
    chart.draw_series(values.iter().enumerate().filter_map(|(i, v)| {
        v.map(|r| {
            let color = if r >= 0.0 { Palette99::pick(0) } else { Palette99::pick(1) };
            let x = i as f64;
            Rectangle::new([(x - 0.35, 0.0), (x + 0.35, r)], color.filled())
        })
    }))?;
    let font = (FAMILY, 14.0 * scale).into_font();
    chart.draw_series(values.iter().zip(marks).enumerate().filter_map(|(i, (v, m))| {
        v.map(|r| {
            let y = if r >= 0.0 { (r + 0.08).min(1.05) } else { (r - 0.02).max(-1.0) };
            Text::new(m.clone(), (i as f64, y), font.clone())
        })
    }))?;
    root.present()
}
