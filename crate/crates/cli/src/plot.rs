//! SVG figures: outage against SNR on a log axis, and DMT lines.

use plotters::prelude::*;

use dncc_core::DmtCurve;

use crate::CliError;

const SIZE: (u32, u32) = (900, 640);

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesKind {
    Line,
    /// Markers with a vertical bar from `lo` to `hi` at each point.
    Markers {
        bars: Vec<(f64, f64)>,
    },
}

/// One curve in an outage figure; `points` are `(rho_db, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub kind: SeriesKind,
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(format!("plot: {e}"))
}

fn decade_floor(p: f64) -> f64 {
    10f64.powf(p.log10().floor())
}

pub fn outage_svg(title: &str, series: &[Series]) -> Result<String, CliError> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { (x0.min(0.0), x0.max(0.0) + 1.0) };
    let positive = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|&p| p > 0.0);
    let y0 = positive.fold(f64::INFINITY, f64::min);
    let y0 = if y0.is_finite() { decade_floor(y0).max(1e-300) } else { 1e-6 };

    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(internal)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(44)
            .y_label_area_size(72)
            .build_cartesian_2d(x0..x1, (y0..1.0).log_scale())
            .map_err(internal)?;
        chart
            .configure_mesh()
            .x_desc("average SNR (dB)")
            .y_desc("outage probability")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(internal)?;
        for (i, s) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let visible: Vec<(f64, f64)> = s.points.iter().copied().filter(|p| p.1 > 0.0).collect();
            match &s.kind {
                SeriesKind::Line => {
                    chart
                        .draw_series(LineSeries::new(visible, color.stroke_width(2)))
                        .map_err(internal)?
                        .label(&s.label)
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                }
                SeriesKind::Markers { bars } => {
                    let bars: Vec<_> = s
                        .points
                        .iter()
                        .zip(bars)
                        .filter(|((_, p), _)| *p > 0.0)
                        .map(|(&(x, p), &(lo, hi))| ErrorBar::new_vertical(x, lo.max(y0), p, hi.min(1.0), color, 8))
                        .collect();
                    chart.draw_series(bars).map_err(internal)?;
                    chart
                        .draw_series(visible.into_iter().map(|p| Circle::new(p, 4, color.filled())))
                        .map_err(internal)?
                        .label(&s.label)
                        .legend(move |(x, y)| Circle::new((x + 10, y), 4, color.filled()));
                }
            }
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerLeft)
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(internal)?;
        root.present().map_err(internal)?;
    }
    Ok(buf)
}

pub fn dmt_svg(title: &str, curves: &[DmtCurve]) -> Result<String, CliError> {
    let d_max = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)).fold(1.0, f64::max);
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(internal)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(44)
            .y_label_area_size(56)
            .build_cartesian_2d(0.0..1.0, 0.0..d_max.ceil() + 0.5)
            .map_err(internal)?;
        chart.configure_mesh().x_desc("multiplexing gain r").y_desc("diversity d(r)").draw().map_err(internal)?;
        for (i, c) in curves.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(c.points.iter().copied(), color.stroke_width(2)))
                .map_err(internal)?
                .label(format!("{} (N={}, M={})", c.scheme.name().to_uppercase(), c.n, c.m))
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.85)).border_style(BLACK).draw().map_err(internal)?;
        root.present().map_err(internal)?;
    }
    Ok(buf)
}
