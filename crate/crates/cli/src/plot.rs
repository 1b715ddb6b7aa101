//! Optional SVG figures. Line plots only; CSV stays the primary output.

use plotters::prelude::*;

use crate::CliError;

pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

#[derive(Clone, Copy)]
pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
}

const PALETTE: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn range(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return if log { (1e-3, 1.0) } else { (0.0, 1.0) };
    }
    if hi > lo {
        if log {
            (lo, hi)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    } else if log {
        (lo / 2.0, lo * 2.0)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn draw<DB: DrawingBackend, X, Y>(
    root: &DrawingArea<DB, plotters::coord::Shift>,
    axes: Axes<'_>,
    series: &[Series<'_>],
    x: X,
    y: Y,
) -> Result<(), String>
where
    X: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    Y: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    X::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
    Y::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
{
    let err = |e: DrawingAreaErrorKind<DB::ErrorType>| e.to_string();
    let mut chart = ChartBuilder::on(root)
        .caption(axes.title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x, y)
        .map_err(err)?;
    chart.configure_mesh().x_desc(axes.x_label).y_desc(axes.y_label).draw().map_err(err)?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = s
            .x
            .iter()
            .zip(s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!axes.log_x || **x > 0.0) && (!axes.log_y || **y > 0.0))
            .map(|(x, y)| (*x, *y));
        chart
            .draw_series(LineSeries::new(pts, &color))
            .map_err(err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(err)?;
    Ok(())
}

/// Renders the series into an SVG document.
pub fn line_plot(axes: Axes<'_>, series: &[Series<'_>]) -> Result<String, CliError> {
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()), axes.log_x);
    let yr = range(series.iter().flat_map(|s| s.y.iter().copied()), axes.log_y);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| CliError::Plot(e.to_string()))?;
        let (x, y) = (xr.0..xr.1, yr.0..yr.1);
        match (axes.log_x, axes.log_y) {
            (true, true) => draw(&root, axes, series, x.log_scale(), y.log_scale()),
            (true, false) => draw(&root, axes, series, x.log_scale(), y),
            (false, true) => draw(&root, axes, series, x, y.log_scale()),
            (false, false) => draw(&root, axes, series, x, y),
        }
        .map_err(CliError::Plot)?;
        root.present().map_err(|e| CliError::Plot(e.to_string()))?;
    }
    Ok(svg)
}
