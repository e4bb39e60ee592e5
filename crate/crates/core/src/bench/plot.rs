use std::path::Path;

use plotters::prelude::*;

use super::{BenchError, MetricsTable, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Plot(e.to_string())
}

/// Mean best score against generation, one line per cell.
pub fn score_trace(table: &MetricsTable, path: &Path) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let pts: Vec<(f64, f64)> = table
        .cells
        .iter()
        .flat_map(|c| c.trace.iter().map(|p| (p.generation as f64, p.mean_best)))
        .collect();
    let xmax = pts.iter().map(|p| p.0).fold(1.0, f64::max);
    let (mut ymin, mut ymax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if !ymin.is_finite() {
        (ymin, ymax) = (-1.0, 0.0);
    }
    let pad = ((ymax - ymin) * 0.05).max(1e-6);
    let mut chart = ChartBuilder::on(&root)
        .caption("mean best score per generation", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..xmax, (ymin - pad)..(ymax + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("generation")
        .y_desc("score")
        .draw()
        .map_err(plot_err)?;
    for (i, c) in table.cells.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let line: Vec<(f64, f64)> = c
            .trace
            .iter()
            .map(|p| (p.generation as f64, p.mean_best))
            .collect();
        chart
            .draw_series(LineSeries::new(line, color.stroke_width(2)))
            .map_err(plot_err)?
            .label(format!("{} / {}", c.method, c.env))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Success rate per cell with one standard error whiskers.
pub fn msr_bars(table: &MetricsTable, path: &Path) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let n = table.cells.len().max(1);
    let labels: Vec<String> = table
        .cells
        .iter()
        .map(|c| format!("{}/{}", c.method, c.env))
        .collect();
    let mut chart = ChartBuilder::on(&root)
        .caption("manipulation success rate", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(-0.5..n as f64 - 0.5, 0.0..1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n)
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-9 && i >= 0.0 {
                labels.get(i as usize).cloned().unwrap_or_default()
            } else {
                String::new()
            }
        })
        .y_desc("MSR")
        .draw()
        .map_err(plot_err)?;
    for (i, c) in table.cells.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = i as f64;
        chart
            .draw_series(std::iter::once(Rectangle::new(
                [(x - 0.35, 0.0), (x + 0.35, c.msr)],
                color.filled(),
            )))
            .map_err(plot_err)?;
        let (lo, hi) = ((c.msr - c.msr_stderr).max(0.0), (c.msr + c.msr_stderr).min(1.0));
        chart
            .draw_series(std::iter::once(PathElement::new(
                vec![(x, lo), (x, hi)],
                BLACK.stroke_width(1),
            )))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)
}
